"""Small dense complex linear algebra: eigenvalues and the matrix exponential.

Both routines target matrices of dimension at most 64. Eigenvalues come from
a Householder reduction to Hessenberg form followed by single-shift complex
QR iteration; every returned eigenvalue is certified by the smallest singular
value of ``A - lambda I``.
"""

from __future__ import annotations

import math

import numpy as np

MAX_DIM = 64
_EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    """QR iteration exhausted its budget, or an eigenvalue failed certification."""


def _as_square(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise ValueError("empty matrix")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds the cap of {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def hessenberg(a) -> np.ndarray:
    """Unitarily similar upper Hessenberg form via Householder reflections."""
    h = _as_square(a).copy()
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        if not np.any(x[1:]):
            continue
        alpha = np.linalg.norm(x)
        v = x.copy()
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h


def _givens(a: complex, b: complex) -> tuple[float, complex]:
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, 1.0
    r = math.hypot(abs(a), abs(b))
    return abs(a) / r, (a / abs(a)) * np.conj(b) / r


def _qr_step(block: np.ndarray, mu: complex) -> None:
    m = block.shape[0]
    block -= mu * np.eye(m)
    rots = []
    for k in range(m - 1):
        c, s = _givens(block[k, k], block[k + 1, k])
        top = block[k, k:].copy()
        bot = block[k + 1, k:].copy()
        block[k, k:] = c * top + s * bot
        block[k + 1, k:] = -np.conj(s) * top + c * bot
        rots.append((c, s))
    for k, (c, s) in enumerate(rots):
        rows = slice(0, min(k + 2, m))
        left = block[rows, k].copy()
        right = block[rows, k + 1].copy()
        block[rows, k] = c * left + np.conj(s) * right
        block[rows, k + 1] = -s * left + c * right
    block += mu * np.eye(m)


def _wilkinson_shift(a: complex, b: complex, c: complex, d: complex) -> complex:
    tr = a + d
    disc = np.sqrt((a - d) ** 2 / 4.0 + b * c)
    mu1 = tr / 2.0 + disc
    mu2 = tr / 2.0 - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def eigenvalues_qr(a, max_sweeps: int = 60) -> np.ndarray:
    """All eigenvalues of ``a`` (with repetition) by shifted QR iteration.

    Raises
    ------
    ConvergenceError
        If some eigenvalue needs more than ``max_sweeps`` QR steps.
    """
    h = hessenberg(a)
    n = h.shape[0]
    scale = max(np.abs(h).max(), np.finfo(float).tiny)
    hi = n - 1
    its = 0
    while hi > 0:
        l = hi
        while l > 0:
            sub = abs(h[l, l - 1])
            if sub <= _EPS * (abs(h[l, l]) + abs(h[l - 1, l - 1])) or sub <= _EPS * scale:
                h[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            hi -= 1
            its = 0
            continue
        if its >= max_sweeps:
            raise ConvergenceError(
                f"QR iteration did not converge for trailing index {hi} after {its} sweeps"
            )
        if its and its % 10 == 0:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * np.exp(1j * its)
        else:
            mu = _wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        block = h[l:hi + 1, l:hi + 1]
        _qr_step(block, mu)
        h[l:hi + 1, l:hi + 1] = block
        its += 1
    return np.diag(h).copy()


def cluster(values, tol: float) -> list[tuple[complex, int]]:
    """Merge values closer than ``tol`` (transitively); return (centroid, count)."""
    vals = [complex(v) for v in values]
    parent = list(range(len(vals)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if abs(vals[i] - vals[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i, v in enumerate(vals):
        groups.setdefault(find(i), []).append(v)
    merged = [(complex(np.mean(g)), len(g)) for g in groups.values()]
    merged.sort(key=lambda p: (round(p[0].real, 12), round(p[0].imag, 12)))
    return merged


def eigen_residual(a, lam: complex) -> float:
    """min over unit v of ||(A - lam I) v||, i.e. the smallest singular value."""
    a = np.asarray(a, dtype=complex)
    return float(np.linalg.svd(a - lam * np.eye(a.shape[0]), compute_uv=False)[-1])


def spectrum(a, cluster_tol: float = 1e-8, certify_tol: float = 1e-8) -> list[tuple[complex, int]]:
    """Eigenvalues with algebraic multiplicities, certified and clustered.

    ``cluster_tol`` and ``certify_tol`` are relative to ``max(1, ||A||_2)``.
    """
    a = _as_square(a)
    norm = max(1.0, float(np.linalg.norm(a, 2)))
    raw = eigenvalues_qr(a)
    for lam in raw:
        r = eigen_residual(a, lam)
        if r > certify_tol * norm:
            raise ConvergenceError(f"eigenvalue {lam} failed certification: residual {r:.3e}")
    return cluster(raw, cluster_tol * norm)


# Pade(13) coefficients and the 1-norm bound below which no scaling is needed.
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Pade approximant.

    Raises
    ------
    OverflowError
        If the result is not finite.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    norm1 = float(np.abs(a).sum(axis=0).max()) if n else 0.0
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA13)))) if norm1 > _THETA13 else 0
    a = a / (2.0 ** s)
    b = _PADE13
    ident = np.eye(n, dtype=complex)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    r = np.linalg.solve(v - u, v + u)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            r = r @ r
    if not np.all(np.isfinite(r)):
        raise OverflowError("matrix exponential overflowed")
    return r
