"""
JSON spec/state files and report serialization.

Complex numbers are written as [re, im] pairs and may be read either as such
pairs or as plain reals. Reports are dumped with sorted keys and no
timestamps so identical runs produce identical bytes.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np

from .circulant import BlockSpec, CirculantSpec, HankelSpec, ToeplitzSpec
from .cyclic import CyclicSystemSpec
from .errors import CircuitError
from .sim import GateTally, RegisterLayout, StateVector

KINDS = ("circulant", "toeplitz", "hankel", "block_ub", "block_cb", "product", "cyclic")


class SpecError(CircuitError):
    """Malformed input file; the message names the file and field."""


def _fail(source: str, field: str, msg: str):
    raise SpecError(f"{source}: field '{field}': {msg}")


def load_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise SpecError(f"{path}: top level must be an object")
    return data


def parse_complex(value, source: str = "<input>", field: str = "value") -> complex:
    if isinstance(value, bool):
        _fail(source, field, "expected a number or [re, im]")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    _fail(source, field, f"expected a number or [re, im], got {value!r}")


def parse_vector(value, source: str, field: str, real: bool = False) -> np.ndarray:
    if not isinstance(value, list) or not value:
        _fail(source, field, "expected a non-empty array")
    out = np.array([parse_complex(v, source, f"{field}[{i}]") for i, v in enumerate(value)])
    if real:
        if np.any(np.abs(out.imag) > 0):
            _fail(source, field, "expected real entries")
        return out.real.copy()
    return out


def parse_matrix(value, source: str, field: str, real: bool = False) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        _fail(source, field, "expected a non-empty array of rows")
    rows = [parse_vector(r, source, f"{field}[{i}]", real) for i, r in enumerate(value)]
    if len({len(r) for r in rows}) != 1:
        _fail(source, field, "rows have different lengths")
    return np.stack(rows)


def _require(data: dict, key: str, source: str):
    if key not in data:
        _fail(source, key, "missing")
    return data[key]


def _check_L(data: dict, source: str, L: int) -> None:
    if "L" in data and data["L"] != L:
        _fail(source, "L", f"declared {data['L']} but parameters imply {L}")


def _wrap(source: str, field: str, fn, *args):
    try:
        return fn(*args)
    except SpecError:
        raise
    except CircuitError as exc:
        _fail(source, field, str(exc))


def parse_spec(data: dict, source: str = "<spec>"):
    """Return (kind, spec object). Products return a list of CirculantSpec."""
    kind = _require(data, "kind", source)
    if kind not in KINDS:
        _fail(source, "kind", f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    if kind == "circulant":
        c = parse_vector(_require(data, "c", source), source, "c", real=True)
        spec = _wrap(source, "c", CirculantSpec.from_raw, c, data.get("sign_mode", "plain"))
        _check_L(data, source, spec.L)
        return kind, spec
    if kind == "toeplitz":
        t = parse_vector(_require(data, "t", source), source, "t", real=True)
        spec = _wrap(source, "t", ToeplitzSpec.from_raw, t)
        _check_L(data, source, spec.L)
        return kind, spec
    if kind == "hankel":
        h = parse_vector(_require(data, "h", source), source, "h", real=True)
        spec = _wrap(source, "h", HankelSpec.from_raw, h)
        _check_L(data, source, spec.L)
        return kind, spec
    if kind == "block_ub":
        c = parse_vector(_require(data, "c", source), source, "c", real=True)
        if "theta" in data:
            theta = parse_complex(data["theta"], source, "theta").real
            spec = _wrap(source, "theta", BlockSpec.ub_phase, c, theta,
                         int(data.get("block_width", 0)))
        else:
            raw = _require(data, "blocks", source)
            if not isinstance(raw, list):
                _fail(source, "blocks", "expected an array of matrices")
            blocks = [parse_matrix(b, source, f"blocks[{i}]") for i, b in enumerate(raw)]
            spec = _wrap(source, "blocks", BlockSpec.ub, c, blocks)
        return kind, spec
    if kind == "block_cb":
        w = parse_matrix(_require(data, "weights", source), source, "weights", real=True)
        return kind, _wrap(source, "weights", BlockSpec.cb, w)
    if kind == "product":
        raw = _require(data, "factors", source)
        if not isinstance(raw, list) or len(raw) < 2:
            _fail(source, "factors", "expected at least two parameter arrays")
        factors = [_wrap(source, f"factors[{i}]", CirculantSpec.from_raw,
                         parse_vector(f, source, f"factors[{i}]", real=True))
                   for i, f in enumerate(raw)]
        return kind, factors
    # cyclic
    row = parse_vector(_require(data, "stiffness_row", source), source, "stiffness_row", real=True)
    f_amp = parse_complex(data.get("force_amplitude", 1.0), source, "force_amplitude")
    n = data.get("n", 0)
    if not isinstance(n, int) or isinstance(n, bool):
        _fail(source, "n", "expected an integer")
    omega = parse_complex(data.get("Omega", 0.0), source, "Omega").real
    if "N" in data and data["N"] != len(row):
        _fail(source, "N", f"declared {data['N']} but stiffness_row has {len(row)} entries")
    spec = _wrap(source, "stiffness_row", CyclicSystemSpec, row, n, omega, f_amp)
    return kind, spec


def cyclic_extras(data: dict, source: str, base: Path | None = None) -> dict:
    out: dict[str, Any] = {}
    if "epsilon" in data:
        out["epsilon"] = parse_complex(data["epsilon"], source, "epsilon").real
    if "observable" in data:
        obs = data["observable"]
        if isinstance(obs, str):
            path = Path(obs) if base is None else base / obs
            obs = _require(load_json(path), "matrix", str(path))
        out["observable"] = parse_matrix(obs, source, "observable")
    if "reference" in data:
        out["reference"] = parse_vector(data["reference"], source, "reference")
    return out


def parse_state(data: dict, source: str = "<state>") -> StateVector:
    if "basis" in data:
        L = _require(data, "L", source)
        if not isinstance(L, int) or L < 1:
            _fail(source, "L", "expected a positive integer")
        k = data["basis"]
        if not isinstance(k, int) or not 0 <= k < 2 ** L:
            _fail(source, "basis", f"expected an integer in [0, {2 ** L})")
        return StateVector.basis(RegisterLayout.of(("sys", L)), sys=k)
    amps = parse_vector(_require(data, "amplitudes", source), source, "amplitudes")
    n = len(amps)
    L = int(round(np.log2(n)))
    if 2 ** L != n:
        _fail(source, "amplitudes", f"length {n} is not a power of two")
    _check_L(data, source, L)
    return _wrap(source, "amplitudes", StateVector.from_array, amps,
                 RegisterLayout.of(("sys", L)), bool(data.get("normalize", False)))


# reports --------------------------------------------------------------------

def to_jsonable(obj):
    if isinstance(obj, StateVector):
        return to_jsonable(obj.amplitudes)
    if isinstance(obj, GateTally):
        return obj.as_dict()
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [to_jsonable(v) for v in obj]
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dumps(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2) + "\n"


def digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(json.dumps(to_jsonable(p), sort_keys=True).encode())
    return h.hexdigest()
