"""Polynomials and sampled signals on Z and R, with difference and sum calculus.

``Delta_h phi = phi_h - phi`` where ``phi_h(t) = phi(t + h)``. On Z the sum
operator is ``S phi(t) = sum_{k=0}^{t-1} phi(k)`` for ``t >= 0`` and
``S phi(-t) = -sum_{k=-t}^{-1} phi(k)``; on R the primitive is
``P phi(t) = int_0^t phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .weights import INTEGER, REAL, _check_domain

_LATTICE_TOL = 1e-9


def _vec_array(values, dim=None) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.ndim == 1:
        arr = arr[:, None] if dim in (None, 1) else arr.reshape(-1, dim)
    if arr.ndim != 2:
        raise ValueError("expected a list of vectors")
    return arr


class GroupPoly:
    """Polynomial ``p(t) = sum_k c_k t^k`` with complex-vector coefficients.

    ``coeffs`` has shape ``(degree + 1, d)``. Trailing zero coefficients are
    trimmed; the zero polynomial keeps a single zero row and reports degree 0.
    """

    def __init__(self, coeffs, domain: str = INTEGER, dim: int | None = None):
        self.domain = _check_domain(domain)
        c = _vec_array(coeffs, dim)
        if c.shape[0] == 0:
            c = np.zeros((1, dim or 1), dtype=complex)
        nz = np.flatnonzero(np.any(c != 0, axis=1))
        keep = nz[-1] + 1 if nz.size else 1
        self.coeffs = c[:keep].copy()
        self.coeffs.setflags(write=False)

    @classmethod
    def monomial(cls, k: int, vec=1.0, domain: str = INTEGER):
        v = np.atleast_1d(np.asarray(vec, dtype=complex))
        c = np.zeros((k + 1, v.size), dtype=complex)
        c[k] = v
        return cls(c, domain)

    @classmethod
    def zero(cls, dim: int = 1, domain: str = INTEGER):
        return cls(np.zeros((1, dim)), domain)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def __call__(self, t) -> np.ndarray:
        """Evaluate at scalar or array ``t``; result shape ``(*t.shape, d)``."""
        t = np.asarray(t, dtype=complex)
        out = np.zeros(t.shape + (self.dim,), dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * t[..., None] + c
        return out

    def _like(self, coeffs):
        return GroupPoly(coeffs, self.domain, self.dim)

    def __add__(self, other: "GroupPoly") -> "GroupPoly":
        n = max(self.coeffs.shape[0], other.coeffs.shape[0])
        c = np.zeros((n, self.dim), dtype=complex)
        c[:self.coeffs.shape[0]] += self.coeffs
        c[:other.coeffs.shape[0]] += other.coeffs
        return self._like(c)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a) -> "GroupPoly":
        return self._like(a * self.coeffs)

    def apply(self, matrix) -> "GroupPoly":
        """Apply a linear map to every coefficient vector."""
        m = np.asarray(matrix, dtype=complex)
        return GroupPoly(self.coeffs @ m.T, self.domain, m.shape[0])

    def mul_t(self, power: int = 1) -> "GroupPoly":
        c = np.vstack([np.zeros((power, self.dim), dtype=complex), self.coeffs])
        return self._like(c)

    def translate(self, h) -> "GroupPoly":
        """``t -> p(t + h)`` by binomial expansion."""
        n = self.coeffs.shape[0]
        c = np.zeros_like(self.coeffs)
        for k in range(n):
            for j in range(k + 1):
                c[j] += math.comb(k, j) * (h ** (k - j)) * self.coeffs[k]
        return self._like(c)

    def derivative(self) -> "GroupPoly":
        if self.coeffs.shape[0] == 1:
            return GroupPoly.zero(self.dim, self.domain)
        k = np.arange(1, self.coeffs.shape[0])[:, None]
        return self._like(k * self.coeffs[1:])

    def sample(self, start, step, n) -> "Signal":
        t = start + step * np.arange(n)
        return Signal(self.domain, start, step, self(t))

    def allclose(self, other: "GroupPoly", atol: float = 1e-12) -> bool:
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))

    def __repr__(self):
        return f"GroupPoly(domain={self.domain!r}, coeffs={self.coeffs.tolist()})"

    def to_dict(self) -> dict:
        return {"domain": self.domain, "dim": self.dim, "coeffs": encode_vectors(self.coeffs)}

    @classmethod
    def from_dict(cls, d: dict) -> "GroupPoly":
        return cls(decode_vectors(d["coeffs"]), d.get("domain", INTEGER), d.get("dim"))


@dataclass
class Signal:
    """Finite sampled window ``t_i = start + i * step`` of a vector-valued function."""

    domain: str
    start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        _check_domain(self.domain)
        self.values = _vec_array(self.values)
        if self.values.shape[0] == 0:
            raise ValueError("signal has no samples")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.domain == INTEGER:
            if self.step != 1:
                raise ValueError("signals on Z have step 1")
            if self.start != int(self.start):
                raise ValueError("signals on Z start at an integer")
            self.start = int(self.start)

    @classmethod
    def from_function(cls, f, domain: str, start, stop=None, step=1.0, n=None):
        """Sample ``f`` (vectorized over a 1-d time array) on ``start..stop`` or ``n`` points."""
        if n is None:
            n = int(round((stop - start) / step)) + 1
        if domain == INTEGER:
            step = 1
        t = start + step * np.arange(n)
        return cls(domain, start, step, f(t))

    @property
    def times(self) -> np.ndarray:
        return self.start + self.step * np.arange(len(self))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]

    @property
    def stop(self):
        return self.start + self.step * (len(self) - 1)

    def index_of(self, t) -> int:
        k = (t - self.start) / self.step
        if abs(k - round(k)) > _LATTICE_TOL * max(1.0, abs(k)) or not 0 <= round(k) < len(self):
            raise ValueError(f"time {t} is not a sample point of the window")
        return int(round(k))

    def at(self, t) -> np.ndarray:
        return self.values[self.index_of(t)]

    def lattice_shift(self, h) -> int:
        k = h / self.step
        if abs(k - round(k)) > _LATTICE_TOL * max(1.0, abs(k)):
            raise ValueError(f"shift {h} is not on the sample lattice (step {self.step})")
        return int(round(k))

    def with_values(self, values, start=None) -> "Signal":
        return Signal(self.domain, self.start if start is None else start, self.step, values)

    def restrict(self, lo, hi) -> "Signal":
        t = self.times
        mask = (t >= lo - _LATTICE_TOL) & (t <= hi + _LATTICE_TOL)
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            raise ValueError("restriction is empty")
        return Signal(self.domain, t[idx[0]], self.step, self.values[idx])

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)

    def sup(self) -> float:
        return float(self.norms().max())

    def __add__(self, other: "Signal") -> "Signal":
        self._aligned(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Signal") -> "Signal":
        self._aligned(other)
        return self.with_values(self.values - other.values)

    def scale(self, a) -> "Signal":
        return self.with_values(a * self.values)

    def multiply(self, f) -> "Signal":
        """Pointwise product with a scalar function of time."""
        return self.with_values(self.values * np.asarray(f(self.times))[:, None])

    def _aligned(self, other):
        if (other.domain != self.domain or len(other) != len(self)
                or abs(other.start - self.start) > _LATTICE_TOL or other.step != self.step):
            raise ValueError("signals are not on the same window")

    def to_dict(self) -> dict:
        return {"domain": self.domain, "start": self.start, "step": self.step,
                "dim": self.dim, "values": encode_vectors(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "Signal":
        try:
            return cls(d["domain"], d["start"], d.get("step", 1),
                       decode_vectors(d["values"], d.get("dim")))
        except KeyError as exc:
            raise ValueError(f"signal record missing field {exc}") from None


def encode_vectors(arr) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(arr, dtype=complex)]


def decode_vectors(rows, dim=None) -> np.ndarray:
    """Accepts ``[[ [re, im], ... ], ...]``, ``[[x, ...], ...]`` or a flat list of scalars."""
    out = []
    for row in rows:
        if isinstance(row, (int, float)):
            out.append([complex(row)])
            continue
        vec = []
        for z in row:
            if isinstance(z, (list, tuple)):
                if len(z) != 2:
                    raise ValueError("complex entries are encoded as [re, im]")
                vec.append(complex(z[0], z[1]))
            else:
                vec.append(complex(z))
        out.append(vec)
    arr = np.array(out, dtype=complex)
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"declared dim {dim} but vectors have length {arr.shape[1]}")
    return arr


Calc = Union[Signal, GroupPoly]


# ---------------------------------------------------------------------------
# differences


def difference(phi: Calc, h) -> Calc:
    """``Delta_h phi``. Signals lose ``|h|/step`` samples at the end the shift runs off."""
    if isinstance(phi, GroupPoly):
        return phi.translate(h) - phi
    k = phi.lattice_shift(h)
    n = len(phi)
    if abs(k) >= n:
        raise ValueError("window exhausted by differencing")
    if k >= 0:
        return phi.with_values(phi.values[k:] - phi.values[:n - k])
    return phi.with_values(phi.values[:n + k] - phi.values[-k:], start=phi.start - k * phi.step)


def iterated_difference(phi: Calc, t_list) -> Calc:
    for t in t_list:
        phi = difference(phi, t)
    return phi


def degree_test(phi: Signal, h=1, n_max: int = 8, tol: float = 1e-9):
    """Smallest ``n <= n_max`` with ``sup |Delta_h^{n+1} phi| <= tol * sup |phi|``, else ``None``.

    The zero signal is reported as degree 0.
    """
    k = abs(phi.lattice_shift(h))
    if len(phi) <= (n_max + 1) * k:
        raise ValueError("window too short for the requested number of differences")
    scale = phi.sup()
    if scale == 0:
        return 0
    d = phi
    for n in range(n_max + 1):
        d = difference(d, h)
        if d.sup() <= tol * scale:
            return n
    return None


def _exact(z):
    """Python int (or pair of ints) when the complex value is integral, else None."""
    if z.real == int(z.real) and z.imag == int(z.imag):
        return int(z.real) if z.imag == 0 else complex(int(z.real), int(z.imag))
    return None


def extend_from_semigroup(q: Signal, n: int, t: int, u: int | None = None, v: int | None = None):
    """Value at ``t < 0`` of the unique polynomial extension of ``q`` from ``Z_+``.

    Uses ``p(t) = sum_{j=0}^n (-1)^j Delta_v^j q(u)`` with ``t = u - v``; by
    default ``u = 0, v = -t``. Integer-valued samples are combined in exact
    integer arithmetic.
    """
    if q.domain != INTEGER:
        raise ValueError("extension is defined for signals on Z")
    if u is None and v is None:
        u, v = 0, -t
    elif u is None:
        u = t + v
    elif v is None:
        v = u - t
    if u - v != t or u < 0 or v < 0:
        raise ValueError("need t = u - v with u, v >= 0")
    if q.start > u or u + n * v > q.stop:
        raise ValueError("window too short: need samples at u, u+v, ..., u+n*v")
    samples = [q.at(u + i * v) for i in range(n + 1)]
    exact = [[_exact(z) for z in s] for s in samples]
    if all(x is not None for row in exact for x in row):
        samples = [list(row) for row in exact]
    else:
        samples = [list(s) for s in samples]
    dim = q.dim
    total = [0] * dim
    level = samples
    for j in range(n + 1):
        sign = -1 if j % 2 else 1
        total = [a + sign * b for a, b in zip(total, level[0])]
        level = [[b - a for a, b in zip(level[i], level[i + 1])] for i in range(len(level) - 1)]
    return np.array(total, dtype=object if all(isinstance(x, int) for x in total) else complex)


# ---------------------------------------------------------------------------
# sums and primitives


def sum_S(phi: Signal) -> Signal:
    """Discrete indefinite sum normalized by ``S phi(0) = 0``."""
    if phi.domain != INTEGER:
        raise ValueError("sum_S is defined on Z; use primitive_P on R")
    i0 = phi.index_of(0)
    c = np.vstack([np.zeros((1, phi.dim), dtype=complex), np.cumsum(phi.values, axis=0)])[:-1]
    return phi.with_values(c - c[i0])


def primitive_P(phi: Signal) -> Signal:
    """Composite-trapezoid primitive normalized by ``P phi(0) = 0``."""
    if phi.domain != REAL:
        raise ValueError("primitive_P is defined on R; use sum_S on Z")
    i0 = phi.index_of(0)
    v = phi.values
    inc = 0.5 * phi.step * (v[1:] + v[:-1])
    c = np.vstack([np.zeros((1, phi.dim), dtype=complex), np.cumsum(inc, axis=0)])
    return phi.with_values(c - c[i0])


def iterated_sum(phi: Signal, m: int) -> Signal:
    for _ in range(m):
        phi = sum_S(phi)
    return phi


def iterated_primitive(phi: Signal, m: int) -> Signal:
    for _ in range(m):
        phi = primitive_P(phi)
    return phi


# ---------------------------------------------------------------------------
# coefficients of S^m(t^N phi)


def lemma76_a(m: int, j: int, N: int) -> int:
    """``a(m, j) = (-1)^j C(N, j) C(m-1+j, j) j!``."""
    if m < 1 or j < 0 or N < 0:
        raise ValueError("need m >= 1 and j, N >= 0")
    if j > N:
        raise ValueError("j must not exceed N")
    return (-1) ** j * math.comb(N, j) * math.comb(m - 1 + j, j) * math.factorial(j)


def lemma76_identity(m: int, k: int, N: int) -> tuple[Fraction, Fraction, bool]:
    """Both sides of ``sum_j a(m,j)/(j+k)!`` = three-branch closed form, exactly."""
    lhs = sum((Fraction(lemma76_a(m, j, N), math.factorial(j + k)) for j in range(N + 1)),
              Fraction(0))
    denom = math.factorial(N + k)
    if m <= k:
        rhs = Fraction(math.comb(N + k - m, N) * math.factorial(N), denom)
    elif m <= k + N:
        rhs = Fraction(0)
    else:
        rhs = Fraction((-1) ** N * math.comb(m - k - 1, N) * math.factorial(N), denom)
    return lhs, rhs, lhs == rhs


def sum_expansion(m: int, N: int) -> dict[tuple[int, int], int]:
    """Integer coefficients ``e[(p, r)]`` with ``S^m(t^N phi) = sum e[(p, r)] t^p S^r phi``.

    Built from ``S^m(t psi) = t S^m psi - m (S^{m+1} psi)_1`` together with
    ``(S^{m+1} psi)_1 = S^{m+1} psi + S^m psi``, recursing on ``N``. The
    ``(N - j, m + j)`` entries equal ``a(m, j)``; the remaining entries are one
    valid choice of the lower-order ``c(m, k, j)`` terms.
    """
    if m < 0 or N < 0:
        raise ValueError("need m, N >= 0")

    cache: dict = {}

    def rec(n, mm):
        key = (n, mm)
        if key in cache:
            return cache[key]
        if n == 0:
            out = {(0, mm): 1}
        else:
            out: dict = {}
            for (p, r), c in rec(n - 1, mm).items():
                out[(p + 1, r)] = out.get((p + 1, r), 0) + c
                out[(p, r)] = out.get((p, r), 0) - mm * c
            for (p, r), c in rec(n - 1, mm + 1).items():
                out[(p, r)] = out.get((p, r), 0) - mm * c
            out = {kk: v for kk, v in out.items() if v != 0}
        cache[key] = out
        return out

    return dict(sorted(rec(N, m).items()))


def expand_sum_identity(phi: Signal, N: int, m: int) -> tuple[Signal, Signal, float]:
    """``S^m(t^N phi)`` directly and via :func:`sum_expansion`; returns (lhs, rhs, maxerr)."""
    if phi.domain != INTEGER:
        raise ValueError("expand_sum_identity works on Z")
    phi.index_of(0)
    t = phi.times.astype(float)
    lhs = iterated_sum(phi.multiply(lambda s: s ** N), m)
    expansion = sum_expansion(m, N)
    max_r = max(r for _, r in expansion)
    sums = [phi]
    for _ in range(max_r):
        sums.append(sum_S(sums[-1]))
    rhs_vals = np.zeros_like(phi.values)
    for (p, r), c in expansion.items():
        rhs_vals += c * (t ** p)[:, None] * sums[r].values
    rhs = phi.with_values(rhs_vals)
    return lhs, rhs, float(np.abs(lhs.values - rhs.values).max())
