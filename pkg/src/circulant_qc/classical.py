"""
Exact classical ground truth for every circuit in the package.

Nothing here imports the simulator. The DFT is the direct O(N^2) sum so that
the oracle does not share code paths with anything it checks.
"""
from __future__ import annotations

import numpy as np

from .errors import CircuitError

PLAIN = "plain"
NEGATE_V0 = "negate_v0"


def fourier_matrix(N: int) -> np.ndarray:
    """F_kj = exp(2 pi i jk / N) / sqrt(N)."""
    k = np.arange(N)
    return np.exp(2j * np.pi * np.outer(k, k) / N) / np.sqrt(N)


def shift_matrix(N: int, j: int) -> np.ndarray:
    """V_j = sum_k |(k - j) mod N><k|."""
    V = np.zeros((N, N))
    for k in range(N):
        V[(k - j) % N, k] = 1.0
    return V


def dense_circulant(c, sign_mode: str = PLAIN) -> np.ndarray:
    """Entry (k, m) = c_{(m - k) mod N}; ``negate_v0`` negates the diagonal term."""
    c = np.asarray(c)
    N = len(c)
    if N < 1:
        raise CircuitError("circulant needs at least one parameter")
    C = np.empty((N, N), dtype=np.result_type(c.dtype, float))
    for k in range(N):
        for m in range(N):
            C[k, m] = c[(m - k) % N]
    if sign_mode == NEGATE_V0:
        C[np.diag_indices(N)] = -c[0]
    elif sign_mode != PLAIN:
        raise CircuitError(f"unknown sign mode {sign_mode!r}")
    return C


def signed_parameters(c, sign_mode: str = PLAIN) -> np.ndarray:
    c = np.array(c, dtype=complex if np.iscomplexobj(c) else float)
    if sign_mode == NEGATE_V0:
        c[0] = -c[0]
    return c


def dft_eigenvalues(c, sign_mode: str = PLAIN) -> np.ndarray:
    """Lambda_k = sum_j c_j exp(2 pi i jk / N)."""
    c = signed_parameters(c, sign_mode)
    N = len(c)
    lam = np.zeros(N, dtype=complex)
    for k in range(N):
        for j in range(N):
            lam[k] += c[j] * np.exp(2j * np.pi * j * k / N)
    return lam


def oracle_matfun(c, fun: str, psi, t: float = 0.0, sign_mode: str = PLAIN) -> np.ndarray:
    """``matvec`` C psi, ``expm`` exp(-iCt) psi, or ``inverse`` C^{-1} psi via C = F Lambda F^dag."""
    psi = np.asarray(psi, dtype=complex)
    N = len(psi)
    lam = dft_eigenvalues(c, sign_mode)
    F = fourier_matrix(N)
    phi = F.conj().T @ psi
    if fun == "matvec":
        out = F @ (lam * phi)
    elif fun == "expm":
        out = F @ (np.exp(-1j * lam * t) * phi)
    elif fun == "inverse":
        if np.min(np.abs(lam)) <= 1e-12:
            raise CircuitError("circulant is singular")
        out = F @ (phi / lam)
    else:
        raise CircuitError(f"unknown matrix function {fun!r}")
    return out


def cyclic_convolution(a, b) -> np.ndarray:
    """(a * b)_j = sum over j1 + j2 = j mod N of a_j1 b_j2, by direct double sum."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise CircuitError(f"length mismatch {a.shape} vs {b.shape}")
    N = len(a)
    out = np.zeros(N, dtype=np.result_type(a, b))
    for j1 in range(N):
        for j2 in range(N):
            out[(j1 + j2) % N] += a[j1] * b[j2]
    return out


def condition_number(c, sign_mode: str = PLAIN) -> float:
    """max|Lambda| / min|Lambda|, or +inf for a singular spectrum."""
    mags = np.abs(dft_eigenvalues(c, sign_mode))
    if mags.min() <= 1e-12:
        return float("inf")
    return float(mags.max() / mags.min())


def dense_toeplitz(t) -> np.ndarray:
    """T_ik = t_{i-k}; ``t`` is stored as t_{-(N-1)}, ..., t_0, ..., t_{N-1}."""
    t = np.asarray(t)
    N = (len(t) + 1) // 2
    if 2 * N - 1 != len(t):
        raise CircuitError("Toeplitz parameters must have odd length 2N-1")
    T = np.empty((N, N), dtype=t.dtype)
    for i in range(N):
        for k in range(N):
            T[i, k] = t[(i - k) + N - 1]
    return T


def dense_hankel(h) -> np.ndarray:
    """H_ik = h_{N-1-i-k}; ``h`` stored from index -(N-1) to N-1."""
    h = np.asarray(h)
    N = (len(h) + 1) // 2
    if 2 * N - 1 != len(h):
        raise CircuitError("Hankel parameters must have odd length 2N-1")
    Hm = np.empty((N, N), dtype=h.dtype)
    for i in range(N):
        for k in range(N):
            Hm[i, k] = h[(N - 1 - i - k) + N - 1]
    return Hm


def dense_block_ub(c, blocks) -> np.ndarray:
    """sum_j c_j V_j (x) U_j."""
    c = np.asarray(c)
    N = len(c)
    out = None
    for j in range(N):
        term = c[j] * np.kron(shift_matrix(N, j), np.asarray(blocks[j], dtype=complex))
        out = term if out is None else out + term
    return out


def dense_block_cb(weights) -> np.ndarray:
    """sum_{j,j'} c_jj' V_j (x) V_j'."""
    w = np.asarray(weights)
    N, Np = w.shape
    out = np.zeros((N * Np, N * Np), dtype=w.dtype)
    for j in range(N):
        for jp in range(Np):
            out += w[j, jp] * np.kron(shift_matrix(N, j), shift_matrix(Np, jp))
    return out


def toeplitz_embedding_blocks(t) -> tuple[np.ndarray, np.ndarray]:
    """(T, B_T) with B_T built entrywise from its defining display."""
    t = np.asarray(t)
    N = (len(t) + 1) // 2
    T = dense_toeplitz(t)
    B = np.zeros((N, N), dtype=t.dtype)
    for i in range(N):
        for k in range(N):
            if i == k:
                continue
            # above the diagonal: t_{N-(k-i)}; below: t_{-(N-(i-k))}
            B[i, k] = t[(N - (k - i)) + N - 1] if k > i else t[-(N - (i - k)) + N - 1]
    return T, B
