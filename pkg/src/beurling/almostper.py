"""Trigonometric polynomials with polynomial coefficients and almost periodic analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from .polycalc import GroupPoly, Signal, decode_vectors, encode_vectors
from .weights import INTEGER, REAL, _check_domain

FREQ_TOL = 1e-12
NOISE_FLOOR_FACTOR = 5.0
# atoms weaker than this fraction of the strongest one are treated as leakage
RELATIVE_FLOOR = 1e-3
OVERSAMPLE = 4
# Blackman-Harris main lobe half-width, in bins of the segment length
MAIN_LOBE_BINS = 4
# floating-point allowance for the chunked pairwise sums of the series
ROUNDING_ALLOWANCE = 1e-10


def reduce_frequency(s: float, domain: str) -> float:
    """Representative in ``(-pi, pi]`` on Z; unchanged on R."""
    if domain == REAL:
        return float(s)
    r = math.remainder(float(s), 2 * math.pi)
    return math.pi if r == -math.pi else r


class TrigPoly:
    """``sum_j exp(i s_j t) p_j(t)`` with distinct frequencies and nonzero coefficients."""

    def __init__(self, terms=(), domain: str = INTEGER, dim: int | None = None):
        self.domain = _check_domain(domain)
        merged: list[tuple[float, GroupPoly]] = []
        for s, p in terms:
            if not isinstance(p, GroupPoly):
                p = GroupPoly(p, domain, dim)
            if dim is None:
                dim = p.dim
            if p.dim != dim:
                raise ValueError("all coefficient polynomials must share one dimension")
            s = reduce_frequency(s, domain)
            for i, (s0, p0) in enumerate(merged):
                if abs(s0 - s) <= FREQ_TOL:
                    merged[i] = (s0, p0 + p)
                    break
            else:
                merged.append((s, GroupPoly(p.coeffs, domain, dim)))
        self.dim = dim or 1
        self.terms = sorted(((s, p) for s, p in merged if not p.is_zero()), key=lambda x: x[0])

    @property
    def frequencies(self) -> list[float]:
        return [s for s, _ in self.terms]

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.dim,), dtype=complex)
        for s, p in self.terms:
            out += np.exp(1j * s * t)[..., None] * p(t)
        return out

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        return TrigPoly(self.terms + other.terms, self.domain, self.dim)

    def scale(self, a) -> "TrigPoly":
        return TrigPoly([(s, p.scale(a)) for s, p in self.terms], self.domain, self.dim)

    def sample(self, start, step, n) -> Signal:
        if self.domain == INTEGER:
            step = 1
        t = start + step * np.arange(n)
        return Signal(self.domain, start, step, self(t))

    def max_degree(self) -> int:
        return max((p.degree for _, p in self.terms), default=0)

    def to_dict(self) -> dict:
        return {"domain": self.domain, "dim": self.dim,
                "terms": [{"freq": s, "coeffs": encode_vectors(p.coeffs)} for s, p in self.terms]}

    @classmethod
    def from_dict(cls, d: dict) -> "TrigPoly":
        domain = d.get("domain", INTEGER)
        try:
            terms = [(float(x["freq"]), GroupPoly(decode_vectors(x["coeffs"]), domain))
                     for x in d["terms"]]
        except KeyError as exc:
            raise ValueError(f"trig polynomial record missing field {exc}") from None
        return cls(terms, domain, d.get("dim"))

    def __repr__(self):
        return f"TrigPoly(domain={self.domain!r}, frequencies={self.frequencies})"


def eval_trigpoly(tp: TrigPoly, t) -> np.ndarray:
    return tp(t)


def constant_trigpoly(coeffs: dict, domain: str = INTEGER) -> TrigPoly:
    """TrigPoly with degree-0 coefficients from ``{frequency: vector}``."""
    return TrigPoly([(s, GroupPoly([np.atleast_1d(v)], domain)) for s, v in coeffs.items()], domain)


def bohr_coefficient(phi: Signal, s: float, L) -> np.ndarray:
    """Symmetric Cesaro mean of ``exp(-i s t) phi(t)`` over ``|t| <= L``.

    On Z this is ``(1/(2L+1)) sum_{|n|<=L}``; on R the trapezoid mean over
    ``[-L, L]`` on the sample grid.
    """
    i0 = phi.index_of(-L)
    i1 = phi.index_of(L)
    if i1 - i0 < 2:
        raise ValueError("averaging window must hold at least three samples")
    t = phi.times[i0:i1 + 1].astype(float)
    y = np.exp(-1j * s * t)[:, None] * phi.values[i0:i1 + 1]
    if phi.domain == INTEGER:
        return y.mean(axis=0)
    return np.trapezoid(y, t, axis=0) / (t[-1] - t[0])


# ---------------------------------------------------------------------------
# tapered transforms and atom extraction


def blackman_harris(n: int) -> np.ndarray:
    a = (0.35875, 0.48829, 0.14128, 0.01168)
    x = 2 * np.pi * np.arange(n) / max(n - 1, 1)
    return a[0] - a[1] * np.cos(x) + a[2] * np.cos(2 * x) - a[3] * np.cos(3 * x)


class TaperedTransform:
    """Normalized tapered transform ``X(s) = sum_k c_k exp(-i s t_k) y_k / sum_k c_k``.

    Each index segment of the sample window gets its own taper ``c``; samples
    outside the segments are ignored. For ``y = a exp(i s0 t)`` this returns
    exactly ``a`` at ``s = s0``.
    """

    def __init__(self, times: np.ndarray, values: np.ndarray, segments, step: float):
        self.step = float(step)
        self.t0 = float(times[0])
        taper = np.zeros(len(times))
        lengths = []
        for lo, hi in segments:
            if hi - lo < 8:
                raise ValueError("segment too short for a tapered transform")
            taper[lo:hi] = blackman_harris(hi - lo)
            lengths.append(hi - lo)
        self.norm = taper.sum()
        self.k = np.arange(len(times))
        self.x = taper[:, None] * values / self.norm
        self.live = np.flatnonzero(taper > 0)
        self.segment_length = min(lengths)

    @property
    def lobe(self) -> float:
        """Main-lobe half-width in frequency units."""
        return MAIN_LOBE_BINS * 2 * np.pi / (self.segment_length * self.step)

    def __call__(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        k = self.k[self.live]
        x = self.x[self.live]
        out = np.empty((s.size, x.shape[1]), dtype=complex)
        chunk = max(1, 2_000_000 // max(k.size, 1))
        for i in range(0, s.size, chunk):
            ss = s[i:i + chunk]
            e = np.exp(-1j * np.outer(ss, self.t0 + self.step * k))
            out[i:i + chunk] = e @ x
        return out

    def fft_grid(self, oversample: int = OVERSAMPLE) -> tuple[np.ndarray, np.ndarray]:
        """Transform on a uniform grid over the Nyquist band, sorted by frequency."""
        n = self.x.shape[0]
        M = 1 << int(math.ceil(math.log2(oversample * n)))
        X = np.fft.fft(self.x, n=M, axis=0)
        freqs = 2 * np.pi * np.fft.fftfreq(M, d=self.step)
        X = X * np.exp(-1j * freqs * self.t0)[:, None]
        order = np.argsort(freqs, kind="stable")
        return freqs[order], X[order]


@dataclass
class Atom:
    freq: float
    coeff: np.ndarray
    mass: float


def _local_peaks(freqs, mags, radius, threshold):
    order = np.argsort(-mags, kind="stable")
    taken = np.zeros(mags.size, dtype=bool)
    peaks = []
    for j in order:
        if mags[j] < threshold:
            break
        if taken[j]:
            continue
        near = np.abs(freqs - freqs[j]) <= radius
        taken |= near
        peaks.append(j)
    return peaks


def find_atoms(tr: TaperedTransform, freqs=None, threshold=None, domain: str = INTEGER,
               merge_tol=None, min_threshold: float = 0.0) -> tuple[list[Atom], dict]:
    """Spectral atoms of a tapered transform.

    Candidate peaks are taken on ``freqs`` (default: oversampled FFT grid),
    suppressed within one main lobe of a stronger peak, refined by bounded
    scalar maximization, and merged when closer than ``merge_tol``.
    The default threshold is never below ``min_threshold``.
    """
    if freqs is None:
        freqs, X = tr.fft_grid()
    else:
        freqs = np.sort(np.asarray(freqs, dtype=float))
        X = tr(freqs)
    mags = np.linalg.norm(X, axis=1)
    floor = NOISE_FLOOR_FACTOR * float(np.median(mags))
    if threshold is None:
        threshold = max(floor, RELATIVE_FLOOR * float(mags.max()), min_threshold)
    grid_step = float(np.median(np.diff(freqs))) if freqs.size > 1 else tr.lobe
    if merge_tol is None:
        merge_tol = grid_step
    atoms: list[Atom] = []
    if mags.max() > 0:
        for j in _local_peaks(freqs, mags, tr.lobe, threshold):
            lo, hi = freqs[j] - grid_step, freqs[j] + grid_step
            res = minimize_scalar(lambda s: -np.linalg.norm(tr(s)[0]), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-10 * max(1.0, abs(freqs[j]))})
            s = float(res.x) if -res.fun >= mags[j] else float(freqs[j])
            c = tr(s)[0]
            m = float(np.linalg.norm(c))
            if m >= threshold:
                atoms.append(Atom(reduce_frequency(s, domain), c, m))
    atoms.sort(key=lambda a: a.freq)
    merged: list[Atom] = []
    for a in atoms:
        if merged and abs(a.freq - merged[-1].freq) < merge_tol:
            b = merged[-1]
            tot = a.mass + b.mass
            f = (a.freq * a.mass + b.freq * b.mass) / tot
            merged[-1] = Atom(f, tr(f)[0], float(np.linalg.norm(tr(f)[0])))
        else:
            merged.append(a)
    info = {"threshold": float(threshold), "noise_floor": floor, "grid_step": grid_step,
            "grid_min": float(freqs[0]), "grid_max": float(freqs[-1]), "grid_size": int(freqs.size)}
    return merged, info


# ---------------------------------------------------------------------------
# AP_{w_N} decomposition


@dataclass
class APDecomposition:
    N: int
    psi: TrigPoly
    xi_tail_sup: float
    psi_sup: float
    phi_wn_sup: float
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"N": self.N, "psi": self.psi.to_dict(), "xi_tail_sup": self.xi_tail_sup,
                "psi_sup": self.psi_sup, "phi_wn_sup": self.phi_wn_sup, "info": self.info}


def decompose_ap_w(phi: Signal, N: int, freq_grid=None, threshold=None,
                   tail_start: float = 0.5) -> APDecomposition:
    """Split ``phi`` as ``t^N psi + xi`` with ``psi`` almost periodic.

    ``g = phi / t^N`` is analyzed on the two tails ``|t| >= tail_start * T``,
    each with its own taper; the retained atoms form ``psi``.
    ``xi_tail_sup`` is ``sup |phi - t^N psi| / (1+|t|)^N`` over the tails and
    ``phi_wn_sup`` is ``sup |phi| / (1+|t|)^N`` over the whole window.
    The default threshold is at least ``RELATIVE_FLOOR * phi_wn_sup`` so a
    small decaying residual does not produce atoms.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    if not 0 <= tail_start < 1:
        raise ValueError("tail_start must lie in [0, 1)")
    t = phi.times.astype(float)
    T = t[-1]
    if abs(t[0] + T) > 1e-9 * max(1.0, T) or T <= 0:
        raise ValueError("window must be symmetric about 0")
    if N > 0 and tail_start == 0:
        raise ValueError("for N > 0 the tail region must exclude a neighbourhood of 0")
    cut = tail_start * T
    right = np.flatnonzero(t >= cut)
    left = np.flatnonzero(t <= -cut)
    if tail_start == 0:
        segments = [(0, len(t))]
        tail = np.arange(len(t))
    else:
        segments = [(left[0], left[-1] + 1), (right[0], right[-1] + 1)]
        tail = np.concatenate([left, right])
    g = np.zeros_like(phi.values)
    tpow = t[tail] ** N
    g[tail] = phi.values[tail] / tpow[:, None]
    wn = (1.0 + np.abs(t)) ** N
    phi_wn_sup = float((phi.norms() / wn).max())
    tr = TaperedTransform(t, g, segments, phi.step)
    atoms, info = find_atoms(tr, freq_grid, threshold, phi.domain,
                             min_threshold=RELATIVE_FLOOR * phi_wn_sup)
    psi = TrigPoly([(a.freq, GroupPoly([a.coeff], phi.domain)) for a in atoms], phi.domain, phi.dim)
    approx = (t ** N)[:, None] * psi(t) if not psi.is_zero() else np.zeros_like(phi.values)
    xi = np.linalg.norm(phi.values - approx, axis=1) / wn
    psi_sup = float(np.linalg.norm(psi(t), axis=1).max()) if not psi.is_zero() else 0.0
    info["atoms"] = [{"freq": a.freq, "mass": a.mass} for a in atoms]
    return APDecomposition(N, psi, float(xi[tail].max()), psi_sup, phi_wn_sup, info)


# ---------------------------------------------------------------------------
# epsilon-periods


def epsilon_periods(phi: Signal, eps: float, max_shift: int | None = None,
                    probe: int = 1024) -> tuple[list, float]:
    """Lattice translates ``tau >= 0`` moving ``phi`` by at most ``eps`` on the overlap.

    Shifts run over ``0..max_shift`` samples (default half the window). Each
    candidate is first tested on ``probe`` evenly spaced points of the overlap
    and only survivors get the full check. The set is symmetric, so negative
    translates are omitted. ``max_gap`` is ``inf`` when only ``tau = 0`` qualifies.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = len(phi)
    max_shift = n // 2 if max_shift is None else int(max_shift)
    if not 0 <= max_shift < n:
        raise ValueError("max_shift out of range")
    v = phi.values
    found = []
    for k in range(max_shift + 1):
        m = n - k
        idx = np.linspace(0, m - 1, min(probe, m)).astype(int)
        if np.linalg.norm(v[idx + k] - v[idx], axis=1).max() > eps:
            continue
        if np.linalg.norm(v[k:] - v[:m], axis=1).max() <= eps:
            found.append(k)
    periods = [k * phi.step if phi.domain == REAL else k for k in found]
    gaps = np.diff(found) * phi.step
    max_gap = float(gaps.max()) if gaps.size else math.inf
    return periods, max_gap


# ---------------------------------------------------------------------------
# the slowly oscillating series psi(t) = sum k^{-4/3} cos(t k^{-1/3})


def _series(t: np.ndarray, K: int, chunk: int = 20_000):
    """Truncated sums of psi, P psi and P^2 psi over ``k = 1..K`` (ascending chunks)."""
    parts = {"psi": [], "P": [], "P2": []}
    for k0 in range(1, K + 1, chunk):
        k = np.arange(k0, min(k0 + chunk, K + 1), dtype=float)
        x = np.outer(t, k ** (-1.0 / 3.0))
        parts["psi"].append((k ** (-4.0 / 3.0) * np.cos(x)).sum(axis=1))
        parts["P"].append((np.sin(x) / k).sum(axis=1))
        parts["P2"].append((2.0 * k ** (-2.0 / 3.0) * np.sin(x / 2) ** 2).sum(axis=1))
    return {key: np.array([math.fsum(col) for col in np.array(v).T]) for key, v in parts.items()}


def series_tails(t, K: int) -> dict:
    """Rigorous enclosures of the three series tails ``sum_{k > K}``.

    Uses ``x - x^3/6 <= sin x <= x``, ``1 - x^2/2 <= cos x <= 1`` and
    ``y^2 - y^4/3 <= sin^2 y <= y^2`` with Hurwitz zeta sums. ``P psi`` is odd
    so its enclosure is mirrored for ``t < 0``.
    """
    a = np.abs(np.asarray(t, dtype=float))
    z43 = float(zeta(4.0 / 3.0, K + 1))
    z2 = float(zeta(2.0, K + 1))
    psi = (z43 - a ** 2 / 2 * z2, np.full_like(a, z43))
    p_lo, p_hi = a * z43 - a ** 3 / 6 * z2, a * z43
    sgn = np.sign(np.asarray(t, dtype=float))
    P = (np.where(sgn < 0, -p_hi, p_lo), np.where(sgn < 0, -p_lo, p_hi))
    P2 = (a ** 2 / 2 * z43 - a ** 4 / 24 * z2, a ** 2 / 2 * z43)
    return {"psi": psi, "P": P, "P2": P2}


def crude_tail_budget(t, K: int) -> np.ndarray:
    """Single-term integral bound ``1.5 t^2 K^{-1/3}`` for the ``P^2 psi`` tail."""
    return 1.5 * np.asarray(t, dtype=float) ** 2 * K ** (-1.0 / 3.0)


def series_upper_bound(t):
    """Linear majorant ``9 (1 + |t|)`` of the second primitive."""
    return 9.0 * (1.0 + np.abs(t))


def series_lower_bound(t):
    """Minorant ``6 t^2 (pi (|t|^3 + pi^3))^{-1/3}`` of the second primitive."""
    a = np.abs(np.asarray(t, dtype=float))
    return 6.0 * a ** 2 * (np.pi * (a ** 3 + np.pi ** 3)) ** (-1.0 / 3.0)


def example_7_13(T: float = 20.0, K: int = 10**6, grid_step: float = 0.1,
                 lower_from: float = 5.0):
    """Sample the series, its primitive and second primitive on ``[0, T]``.

    Each returned value is the truncated sum plus the midpoint of the rigorous
    tail enclosure; the enclosure half-width plus a rounding allowance is the
    truncation budget used by ``bound_report``.

    Returns
    -------
    psi, P_psi, P2_psi : Signal
    bound_report : dict
    """
    if K < 10**4:
        raise ValueError("K must be at least 1e4")
    if not 0 < T <= (2 * K) ** (1 / 3) * np.pi:
        raise ValueError("T outside the truncation-control region")
    n = int(round(T / grid_step)) + 1
    t = grid_step * np.arange(n)
    trunc = _series(t, K)
    tails = series_tails(t, K)
    out, budgets = {}, {}
    for key in ("psi", "P", "P2"):
        lo, hi = tails[key]
        out[key] = trunc[key] + 0.5 * (lo + hi)
        budgets[key] = 0.5 * (hi - lo) + ROUNDING_ALLOWANCE
    p2, b2 = out["P2"], budgets["P2"]
    upper_margin = series_upper_bound(t) - (p2 + b2)
    lower_margin = (p2 - b2) - series_lower_bound(t)
    in_lower = t >= lower_from - 1e-12
    crude = crude_tail_budget(t, K)
    crude_lower = trunc["P2"] - crude - series_lower_bound(t)
    report = {
        "T": T, "K": K, "grid_step": grid_step, "lower_from": lower_from,
        "t": t.tolist(),
        "budget": b2.tolist(),
        "upper_margin": upper_margin.tolist(),
        "lower_margin": lower_margin.tolist(),
        "upper_ok": bool(np.all(upper_margin >= 0)),
        "lower_ok": bool(np.all(lower_margin[in_lower] >= 0)),
        "min_upper_margin": float(upper_margin.min()),
        "min_lower_margin": float(lower_margin[in_lower].min()),
        "crude_budget": crude.tolist(),
        "crude_upper_ok": bool(np.all(series_upper_bound(t) - (trunc["P2"] + crude) >= 0)),
        "crude_lower_ok": bool(np.all(crude_lower[in_lower] >= 0)),
        "truncated_lower_ok": bool(np.all((trunc["P2"] - series_lower_bound(t))[in_lower] >= 0)),
    }
    report["passed"] = report["upper_ok"] and report["lower_ok"]
    sig = lambda v: Signal(REAL, 0.0, grid_step, v)
    return sig(out["psi"]), sig(out["P"]), sig(out["P2"]), report


def affine_residual_floor(t, values, a_grid, reduce: str = "inf") -> tuple[float, float]:
    """``min_a reduce_t |values(t) - a t| / (1 + |t|)`` over ``a`` in ``a_grid``.

    ``reduce`` is ``"inf"`` or ``"sup"``. Returns the minimum and its minimizer.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float).ravel()
    a = np.asarray(a_grid, dtype=float)
    red = {"inf": np.min, "sup": np.max}[reduce]
    best, best_a = np.inf, float("nan")
    chunk = max(1, 4_000_000 // max(t.size, 1))
    for i in range(0, a.size, chunk):
        aa = a[i:i + chunk]
        r = red(np.abs(v[None, :] - aa[:, None] * t[None, :]) / (1.0 + np.abs(t))[None, :], axis=1)
        j = int(np.argmin(r))
        if r[j] < best:
            best, best_a = float(r[j]), float(aa[j])
    return best, best_a
