"""Dense Hermitian eigensolver plus small numeric helpers.

The cyclic Jacobi routine is the reference spectral solver for state
validation and the metric computations.  It is cross-checked against LAPACK
in the test suite.  ``eigvals_of_factored_sum`` is the fast path for
low-rank combinations sum_j c_j v_j v_j^dagger that arise in the protocol
engine: the nonzero eigenvalues of V C V^dagger equal those of the small
Hermitian matrix G^{1/2} C G^{1/2} with G = V^dagger V.
"""

from __future__ import annotations

import math

import numpy as np

from .tolerances import MAX_JACOBI_SWEEPS, OFF_DIAGONAL_TARGET


class NoConvergence(RuntimeError):
    """Jacobi sweep cap was reached before meeting the off-diagonal target."""


def _max_offdiag(a: np.ndarray) -> float:
    n = a.shape[0]
    if n < 2:
        return 0.0
    mask = ~np.eye(n, dtype=bool)
    return float(np.abs(a[mask]).max())


def hermitian_eig(
    matrix,
    *,
    off_target: float = OFF_DIAGONAL_TARGET,
    max_sweeps: int = MAX_JACOBI_SWEEPS,
):
    """Eigendecomposition of a Hermitian matrix via cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and orthonormal
    eigenvectors as the columns of ``v``, so ``v @ diag(w) @ v.conj().T``
    reconstructs the input.  Raises :class:`NoConvergence` if the
    off-diagonal mass has not dropped below the target after ``max_sweeps``
    full sweeps.
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    if n == 1:
        return np.array([a[0, 0].real]), np.ones((1, 1), dtype=complex)

    scale = max(1.0, float(np.abs(a).max()))
    target = off_target * scale
    skip = target / (10.0 * n)
    v = np.eye(n, dtype=complex)

    converged = False
    for _ in range(max_sweeps):
        if _max_offdiag(a) <= target:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = a[p, q]
                if abs(g) <= skip:
                    continue
                _rotate(a, v, p, q, g)
    else:
        converged = _max_offdiag(a) <= target
    if not converged:
        raise NoConvergence(
            f"off-diagonal {_max_offdiag(a):.3e} above target {target:.3e} "
            f"after {max_sweeps} sweeps (dim {n})"
        )

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int, g: complex) -> None:
    # Unitary 2x2 block [[c, sigma], [-conj(sigma), c]] chosen to zero a[p, q].
    absg = abs(g)
    phase = g / absg
    tau = (a[q, q].real - a[p, p].real) / (2.0 * absg)
    sgn = 1.0 if tau >= 0.0 else -1.0
    t = sgn / (abs(tau) + math.hypot(1.0, tau))
    c = 1.0 / math.hypot(1.0, t)
    sigma = (t * c) * phase

    cp = a[:, p].copy()
    cq = a[:, q].copy()
    a[:, p] = c * cp - np.conj(sigma) * cq
    a[:, q] = sigma * cp + c * cq
    rp = a[p, :].copy()
    rq = a[q, :].copy()
    a[p, :] = c * rp - sigma * rq
    a[q, :] = np.conj(sigma) * rp + c * rq
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real

    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = c * vp - np.conj(sigma) * vq
    v[:, q] = sigma * vp + c * vq


def hermitian_eigvals(matrix, **kwargs) -> np.ndarray:
    return hermitian_eig(matrix, **kwargs)[0]


def psd_sqrt(matrix, *, clip: float = 0.0) -> np.ndarray:
    """Hermitian square root of a PSD matrix (tiny negatives clipped)."""
    w, v = hermitian_eig(matrix)
    w = np.clip(w, clip, None)
    return (v * np.sqrt(w)) @ v.conj().T


def psd_factor(matrix, *, cutoff: float | None = None):
    """Factor a PSD matrix as F F^dagger; returns (F, min_eigenvalue).

    Columns of F are sqrt(lambda) * eigenvector.  The default cutoff drops
    eigenvalues below 1e-12 times the largest one: such directions are
    numerical junk whose square roots would otherwise pollute downstream
    trace norms at the sqrt-ulp scale.  The minimum eigenvalue is returned
    so the caller can decide whether mild negativity is within tolerance.
    """
    w, v = hermitian_eig(matrix)
    wmin = float(w.min()) if w.size else 0.0
    wmax = float(w.max()) if w.size else 0.0
    if cutoff is None:
        cutoff = 1e-12 * max(wmax, 0.0)
    keep = w > max(cutoff, 0.0)
    f = v[:, keep] * np.sqrt(w[keep])
    if f.shape[1] == 0:
        f = np.zeros((matrix.shape[0], 1), dtype=complex)
    return f, wmin


def eigvals_of_factored_sum(columns: np.ndarray, coeffs: np.ndarray, *, solver: str = "lapack"):
    """Nonzero eigenvalues of sum_j coeffs[j] * columns[:,j] columns[:,j]^dagger.

    ``columns`` is a (dim, m) array; the result is the full spectrum of the
    m x m matrix G^{1/2} C G^{1/2}, which carries every nonzero eigenvalue of
    the dim x dim combination.  ``solver="lapack"`` uses the batched LAPACK
    path, ``solver="jacobi"`` the in-package Jacobi routine.
    """
    cols = np.asarray(columns, dtype=complex)
    c = np.asarray(coeffs, dtype=float)
    if cols.shape[1] != c.shape[0]:
        raise ValueError("one coefficient required per column")
    if cols.shape[1] == 0:
        return np.zeros(0)
    g = cols.conj().T @ cols
    gh = gram_sqrt(g, solver=solver)
    h = gh @ (c[:, None] * gh)
    h = 0.5 * (h + h.conj().T)
    if solver == "jacobi":
        return hermitian_eig(h)[0]
    return np.linalg.eigvalsh(h)


def gram_sqrt(g: np.ndarray, *, solver: str = "lapack") -> np.ndarray:
    # relative rank cutoff: near-null directions of a Gram matrix are float
    # noise and their square roots would dominate the error budget
    if solver == "jacobi":
        w, v = hermitian_eig(g)
    else:
        w, v = np.linalg.eigh(0.5 * (g + g.conj().T))
    cutoff = 1e-12 * max(float(w.max()), 0.0) if w.size else 0.0
    w = np.where(w > cutoff, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def trace_norm_of_factored_sum(columns, coeffs, *, solver: str = "lapack") -> float:
    return float(np.abs(eigvals_of_factored_sum(columns, coeffs, solver=solver)).sum())


# --- GF(2) helpers -----------------------------------------------------------

def gf2_matvec(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    return (np.asarray(m, dtype=np.uint8) @ np.asarray(x, dtype=np.uint8)) % 2


def gf2_rank(m) -> int:
    a = np.array(m, dtype=np.uint8) % 2
    rank = 0
    rows, cols = a.shape
    for col in range(cols):
        pivot = None
        for r in range(rank, rows):
            if a[r, col]:
                pivot = r
                break
        if pivot is None:
            continue
        a[[rank, pivot]] = a[[pivot, rank]]
        for r in range(rows):
            if r != rank and a[r, col]:
                a[r] ^= a[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Little-endian bit vector: bit i of ``value`` is position i."""
    return np.array([(value >> i) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def popcount(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(v)
    while np.any(v):
        out += v & 1
        v >>= 1
    return out


def coset_leader_table(h: np.ndarray) -> np.ndarray:
    """Minimum-weight error pattern for every syndrome of H.

    Ties break to the numerically smallest pattern (little-endian encoding),
    making nearest-codeword decoding deterministic.
    """
    h = np.asarray(h, dtype=np.uint8) % 2
    rows, width = h.shape
    table = -np.ones(2 ** rows, dtype=np.int64)
    patterns = sorted(range(2 ** width), key=lambda e: (bin(e).count("1"), e))
    for e in patterns:
        syn = bits_to_int(gf2_matvec(h, int_to_bits(e, width)))
        if table[syn] < 0:
            table[syn] = e
    if np.any(table < 0):
        raise ValueError("syndrome map of H is not surjective; H has dependent rows")
    return table
