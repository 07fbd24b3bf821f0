"""
Command-line entry point.

    circulant-qc apply --spec c.json --state psi.json --report out.json
    circulant-qc verify --suite lcu --L 3 --seed 7
    circulant-qc gatecount --op adder --L 2..10

Exit codes: 0 all checks passed, 1 a check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import classical
from .arith import adder_gate_scaling, bitflip_all, controlled_subtract
from .circulant import (BlockSpec, CirculantSpec, HankelSpec, ToeplitzSpec, apply_block_cb,
                        apply_block_ub, apply_circulant, apply_hankel, apply_toeplitz)
from .cyclic import solve_cyclic
from .errors import CircuitError
from .hamsim import plan_simulation, simulate_evolution
from .hhl import invert_circulant, plan_inversion
from .oracles import build_oracle
from .product import apply_product_circulant
from .sim import GateTally, RegisterLayout, StateVector, random_state, state_distance
from .specio import (SpecError, cyclic_extras, digest, dumps, load_json, parse_spec,
                     parse_state)

TOL = 1e-10
SUITES = ("lcu", "toeplitz", "block", "product", "hamsim", "invert", "arith", "all")


class Report:
    def __init__(self, argv, seed):
        self.data = {"command": list(argv), "seed": seed, "outputs": {}, "checks": {},
                     "counters": {}}

    def output(self, **kw):
        self.data["outputs"].update(kw)

    def check(self, name: str, value: float, threshold: float, ok: bool | None = None):
        passed = bool(value <= threshold) if ok is None else bool(ok)
        self.data["checks"][name] = {"value": value, "threshold": threshold, "passed": passed}

    def count(self, **kw):
        self.data["counters"].update(kw)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.data["checks"].values())


def _args(args) -> dict:
    """Argument values that define the run (the report path does not)."""
    return {k: v for k, v in vars(args).items() if k != "report"}


def parse_L(text: str) -> list[int]:
    """``3`` or an inclusive range ``2..10``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --L value {text!r}") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError(f"bad --L value {text!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circulant-qc",
                                description="LCU circuits for circulant-structured matrices")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec=True, state=True):
        if spec:
            sp.add_argument("--spec", required=True, help="spec JSON file")
        if state:
            sp.add_argument("--state", help="input state JSON file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--backend", choices=("gate", "perm"), default="perm",
                        help="arithmetic backend")
        sp.add_argument("--report", help="write the JSON report here (default: stdout)")

    for name in ("apply", "toeplitz", "hankel", "block", "product"):
        sp = sub.add_parser(name)
        common(sp)
        if name in ("apply", "toeplitz", "hankel"):
            sp.add_argument("--amplify", type=int, default=0,
                            help="amplitude amplification rounds")
    sp = sub.add_parser("hamsim")
    common(sp)
    sp.add_argument("--time", type=float, required=True)
    sp.add_argument("--epsilon", type=float, default=1e-3)
    sp.add_argument("--segment-backend", choices=("contracted", "dense"), default="contracted")
    sp = sub.add_parser("invert")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=1e-3)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--phase-bits", type=int)
    sp.add_argument("--inversion-backend", choices=("exact_diagonal", "taylor"),
                    default="exact_diagonal")
    sp = sub.add_parser("cyclic")
    common(sp, state=False)
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--inversion-backend", choices=("exact_diagonal", "taylor"),
                    default="exact_diagonal")
    sp = sub.add_parser("verify")
    common(sp, spec=False, state=False)
    sp.add_argument("--suite", choices=SUITES, default="all")
    sp.add_argument("--L", type=parse_L, default=[3])
    sp.add_argument("--cases", type=int, default=20)
    sp = sub.add_parser("gatecount")
    common(sp, spec=False, state=False)
    sp.add_argument("--op", choices=("adder",), default="adder")
    sp.add_argument("--L", type=parse_L, default=list(range(2, 11)))
    return p


def _load_spec(args, expect: tuple[str, ...]):
    data = load_json(args.spec)
    kind, spec = parse_spec(data, args.spec)
    if kind not in expect:
        raise SpecError(f"{args.spec}: field 'kind': command {args.command} needs "
                        f"{' or '.join(expect)}, got {kind!r}")
    return data, kind, spec


def _load_state(args, L: int) -> tuple[dict, StateVector]:
    if not args.state:
        data = {"basis": 0, "L": L}
    else:
        data = load_json(args.state)
    psi = parse_state(data, args.state or "<default |0>>")
    if psi.num_qubits != L:
        raise SpecError(f"{args.state}: field 'amplitudes': state has {psi.num_qubits} "
                        f"qubits, spec needs {L}")
    return data, psi


def _lcu_outputs(rep: Report, res, ref: np.ndarray, tally: GateTally):
    rep.output(state=res.output, success_probability=res.success_probability,
               scale=res.scale, operator_output=res.operator_output())
    rep.check("dense_match", float(np.max(np.abs(res.operator_output() - ref))), TOL)
    if not res.diagnostics.get("iterations"):
        rep.check("probability_identity",
                  abs(res.success_probability - float(np.vdot(ref, ref).real) / res.scale ** 2),
                  TOL)
    rep.count(gates=tally.as_dict(), **res.calls)


def cmd_structured(args, rep: Report):
    expect = {"apply": ("circulant",), "toeplitz": ("toeplitz",), "hankel": ("hankel",),
              "block": ("block_ub", "block_cb"), "product": ("product",)}[args.command]
    sdata, kind, spec = _load_spec(args, expect)
    if kind == "product":
        L = spec[0].L
    elif kind in ("block_ub", "block_cb"):
        L = spec.L + spec.block_width
    else:
        L = spec.L
    pdata, psi = _load_state(args, L)
    rep.data["inputs_digest"] = digest(sdata, pdata, _args(args))
    tally = GateTally()
    amplify = getattr(args, "amplify", 0) or None
    psi_oracle = build_oracle(psi.amplitudes) if amplify else None
    v = psi.amplitudes
    if kind == "circulant":
        res = apply_circulant(spec, psi, amplify, psi_oracle, args.backend, tally)
        ref = classical.dense_circulant(spec.c, spec.sign_mode) @ v * spec.scale
    elif kind == "toeplitz":
        res = apply_toeplitz(spec, psi, amplify, psi_oracle, args.backend, tally)
        ref = spec.dense() @ v * spec.scale
    elif kind == "hankel":
        res = apply_hankel(spec, psi, amplify, psi_oracle, args.backend, tally)
        ref = spec.dense() @ v * spec.scale
    elif kind == "block_ub":
        res = apply_block_ub(spec, psi, args.backend, tally)
        ref = spec.dense() @ v * spec.scale
    elif kind == "block_cb":
        res = apply_block_cb(spec, psi, args.backend, tally)
        ref = spec.dense() @ v * spec.scale
    else:
        res = apply_product_circulant(spec, psi, backend=args.backend, tally=tally)
        ref = v
        for f in reversed(spec):
            ref = classical.dense_circulant(f.c) @ ref * f.scale
    if amplify:
        # amplified branch is still proportional to the operator output
        rep.output(state=res.output, success_probability=res.success_probability,
                   diagnostics=res.diagnostics)
        rep.check("dense_match", state_distance(res.output.amplitudes, ref / np.linalg.norm(ref)),
                  TOL)
        rep.count(gates=tally.as_dict(), **res.calls)
    else:
        _lcu_outputs(rep, res, ref, tally)


def cmd_hamsim(args, rep: Report):
    sdata, _, spec = _load_spec(args, ("circulant",))
    pdata, psi = _load_state(args, spec.L)
    rep.data["inputs_digest"] = digest(sdata, pdata, _args(args))
    # normalized spec, time rescaled by the spectral norm
    t = args.time * spec.scale
    out, diag = simulate_evolution(spec, psi, t, args.epsilon, args.segment_backend,
                                   arith_backend=args.backend)
    rep.output(state=out, diagnostics=diag.as_dict())
    rep.check("distance", diag.distance, args.epsilon)
    if diag.plan is not None:
        plan = diag.plan
        rep.check("controlled_oc_calls", diag.controlled_oc_calls, 2 * plan.r * plan.K,
                  ok=diag.controlled_oc_calls == 2 * plan.r * plan.K)
        rep.check("normalization", abs(plan.s - 2), plan.tail)
        rep.check("oaa_residual", max(diag.residual_weights), 10 * args.epsilon / plan.r)
    rep.count(controlled_oc_calls=diag.controlled_oc_calls,
              executed_controlled_oc_calls=diag.executed_controlled_oc_calls,
              gates=diag.tally.as_dict())


def cmd_invert(args, rep: Report):
    sdata, _, spec = _load_spec(args, ("circulant",))
    pdata, psi = _load_state(args, spec.L)
    rep.data["inputs_digest"] = digest(sdata, pdata, _args(args))
    plan = plan_inversion(spec, args.epsilon, args.kappa, args.inversion_backend,
                          args.phase_bits)
    res = invert_circulant(spec, psi, plan)
    ref = classical.oracle_matfun(spec.c, "inverse", psi.amplitudes, sign_mode=spec.sign_mode)
    ref = ref / np.linalg.norm(ref)
    rep.output(state=res.output, success_probability=res.success_probability,
               operator_output=res.operator_output(), diagnostics=res.diagnostics)
    rep.check("distance", state_distance(res.output.amplitudes, ref), args.epsilon)
    rep.check("probability_lower_bound", res.success_probability,
              res.diagnostics["lower_bound"] - 2.0 ** (-plan.T + 2),
              ok=res.diagnostics["lower_bound_ok"])
    rep.count(**res.calls)


def cmd_cyclic(args, rep: Report):
    sdata, _, system = _load_spec(args, ("cyclic",))
    extras = cyclic_extras(sdata, args.spec, Path(args.spec).parent)
    eps = args.epsilon if args.epsilon is not None else extras.get("epsilon", 1e-3)
    rep.data["inputs_digest"] = digest(sdata, _args(args))
    sol = solve_cyclic(system, eps, extras.get("observable"), extras.get("reference"),
                       args.inversion_backend)
    rep.output(state=sol.state, q0=sol.q0, observables=sol.observables)
    rep.check("residual", sol.observables["residual"], eps)
    rep.check("distance", sol.observables["distance_to_classical"], eps)


# verification suites ------------------------------------------------------------

def _random_c(rng, N):
    c = rng.random(N)
    c[rng.random(N) < 0.3] = 0
    c[rng.integers(N)] += 0.1
    return c


def _suite_lcu(rng, Ls, cases, rep):
    dev = 0.0
    for L in Ls:
        for _ in range(cases):
            c = _random_c(rng, 2 ** L)
            mode = "negate_v0" if rng.random() < 0.3 else "plain"
            spec = CirculantSpec.from_raw(c, mode)
            psi = random_state(RegisterLayout.of(("sys", L)), rng)
            ref = classical.dense_circulant(c, mode) @ psi.amplitudes
            res = apply_circulant(spec, psi)
            dev = max(dev, float(np.max(np.abs(res.operator_output() - ref))),
                      abs(res.success_probability - float(np.vdot(ref, ref).real) / spec.scale ** 2))
    return {"lcu_max_deviation": dev}


def _suite_toeplitz(rng, Ls, cases, rep):
    dev = 0.0
    for L in Ls:
        for _ in range(cases):
            t = _random_c(rng, 2 ** (L + 1) - 1)
            psi = random_state(RegisterLayout.of(("sys", L)), rng)
            for spec, fn in ((ToeplitzSpec.from_raw(t), apply_toeplitz),
                             (HankelSpec.from_raw(t), apply_hankel)):
                ref = spec.dense() @ psi.amplitudes * spec.scale
                dev = max(dev, float(np.max(np.abs(fn(spec, psi).operator_output() - ref))))
    return {"toeplitz_hankel_max_deviation": dev}


def _random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _suite_block(rng, Ls, cases, rep):
    dev = 0.0
    for L in Ls:
        Lb = 1
        for _ in range(cases):
            c = _random_c(rng, 2 ** L)
            blocks = [_random_unitary(rng, 2 ** Lb) for _ in range(2 ** L)]
            spec = BlockSpec.ub(c, blocks)
            psi = random_state(RegisterLayout.of(("s", L + Lb)), rng)
            ref = spec.dense() @ psi.amplitudes * spec.scale
            dev = max(dev, float(np.max(np.abs(apply_block_ub(spec, psi).operator_output() - ref))))
            w = rng.random((2 ** L, 2 ** Lb))
            spec = BlockSpec.cb(w)
            ref = spec.dense() @ psi.amplitudes * spec.scale
            dev = max(dev, float(np.max(np.abs(apply_block_cb(spec, psi).operator_output() - ref))))
    return {"block_max_deviation": dev}


def _suite_product(rng, Ls, cases, rep):
    dev = 0.0
    for L in Ls:
        for _ in range(cases):
            fs = [CirculantSpec.from_raw(_random_c(rng, 2 ** L)) for _ in range(2)]
            psi = random_state(RegisterLayout.of(("sys", L)), rng)
            ref = psi.amplitudes
            for f in reversed(fs):
                ref = f.dense() @ ref * f.scale
            res = apply_product_circulant(fs, psi)
            dev = max(dev, float(np.max(np.abs(res.operator_output() - ref))))
    return {"product_max_deviation": dev}


def _hermitian_c(rng, N):
    c = rng.random(N)
    return (c + np.roll(c[::-1], 1)) / 2


def _suite_hamsim(rng, Ls, cases, rep):
    worst = 0.0
    for L in Ls:
        for _ in range(max(1, cases // 4)):
            spec = CirculantSpec.from_raw(_hermitian_c(rng, 2 ** L))
            psi = random_state(RegisterLayout.of(("sys", L)), rng)
            t = float(rng.choice([0.5, 1.0, 2.0]))
            _, diag = simulate_evolution(spec, psi, t, 1e-3)
            worst = max(worst, diag.distance / 1e-3)
    return {"hamsim_worst_distance_over_epsilon": worst}


def _suite_invert(rng, Ls, cases, rep):
    worst = 0.0
    for L in Ls:
        for _ in range(max(1, cases // 4)):
            c = _hermitian_c(rng, 2 ** L)
            c[0] = 0
            c = c / c.sum() * 0.4
            c[0] = 0.6
            spec = CirculantSpec(c / c.sum())
            psi = random_state(RegisterLayout.of(("sys", L)), rng)
            plan = plan_inversion(spec, 1e-2)
            res = invert_circulant(spec, psi, plan)
            ref = classical.oracle_matfun(spec.c, "inverse", psi.amplitudes)
            worst = max(worst, state_distance(res.output.amplitudes, ref / np.linalg.norm(ref)) / 1e-2)
    return {"invert_worst_distance_over_epsilon": worst}


def _suite_arith(rng, Ls, cases, rep):
    dev = 0.0
    for L in Ls:
        if L > 4:
            continue
        for _ in range(cases):
            st = random_state(RegisterLayout.of(("a", L), ("b", L)), rng)
            g = controlled_subtract(st, "a", "b", backend="gate")
            p = controlled_subtract(st, "a", "b", backend="perm")
            dev = max(dev, state_distance(g, p, "exact"))
            g = bitflip_all(st, "b", backend="gate")
            p = bitflip_all(st, "b", backend="perm")
            dev = max(dev, state_distance(g, p, "exact"))
    return {"arith_backend_max_deviation": dev}


SUITE_FUNCS = {"lcu": _suite_lcu, "toeplitz": _suite_toeplitz, "block": _suite_block,
               "product": _suite_product, "hamsim": _suite_hamsim, "invert": _suite_invert,
               "arith": _suite_arith}
# deviation-type suites compare to TOL; ratio suites must stay <= 1
SUITE_LIMITS = {"hamsim": 1.0, "invert": 1.0}


def cmd_verify(args, rep: Report):
    rep.data["inputs_digest"] = digest(_args(args))
    names = list(SUITE_FUNCS) if args.suite == "all" else [args.suite]
    for i, name in enumerate(names):
        rng = np.random.default_rng([args.seed, i])
        result = SUITE_FUNCS[name](rng, args.L, args.cases, rep)
        rep.output(**result)
        for key, value in result.items():
            rep.check(key, value, SUITE_LIMITS.get(name, TOL))


def cmd_gatecount(args, rep: Report):
    rep.data["inputs_digest"] = digest(_args(args))
    table = adder_gate_scaling(args.L)
    rep.output(**table.as_dict())
    if len(args.L) > 1:
        rep.check("fitted_exponent_in_range", table.exponent, 2.2,
                  ok=1.8 <= table.exponent <= 2.2)


COMMANDS = {"apply": cmd_structured, "toeplitz": cmd_structured, "hankel": cmd_structured,
            "block": cmd_structured, "product": cmd_structured, "hamsim": cmd_hamsim,
            "invert": cmd_invert, "cyclic": cmd_cyclic, "verify": cmd_verify,
            "gatecount": cmd_gatecount}


def run_command(argv=None) -> tuple[int, dict | None]:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (2 if exc.code else 0), None
    rep = Report(argv, args.seed)
    try:
        COMMANDS[args.command](args, rep)
    except (CircuitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, None
    rep.data["passed"] = rep.passed
    text = dumps(rep.data)
    if args.report:
        Path(args.report).write_text(text)
        for name, chk in sorted(rep.data["checks"].items()):
            print(f"{'PASS' if chk['passed'] else 'FAIL'} {name}")
    else:
        sys.stdout.write(text)
    return (0 if rep.passed else 1), rep.data


def main(argv=None) -> int:
    code, _ = run_command(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
