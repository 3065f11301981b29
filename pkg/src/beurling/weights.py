"""Weights on the integer and real lines.

A weight is a symmetric function ``w >= 1`` with ``w(s + t) <= w(s) w(t)``.
This module builds the standard parametric families, evaluates them, and
tests the weight axioms and growth conditions on finite grids.

Axiom ids used in :class:`AxiomReport`:

``1.1``  submultiplicativity ``w(s+t) <= w(s) w(t)``
``1.2``  symmetry ``w(-t) = w(t)``
``1.3``  Beurling-Domar ``sum n^-2 log w(nt) < inf`` (dyadic tail-block test)
``2.1``  ``w == 1`` or ``1/w`` vanishes at infinity
``2.2``  ``Delta_h w / w`` vanishes at infinity for each ``h``
``2.3``  ``sup_t |Delta_h w(t)| / w(t) -> 0`` as ``h -> 0``
``2.4``  ``w(mt) / (1 + |m|^(N+1)) -> 0``
``2.5``  ``inf_m w(mt) / |m|^N > 0`` for some ``t``
``2.6``  some compact ``K`` around 0 has ``sup_K w <= inf_{outside K} w``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

INTEGER = "Z"
REAL = "R"
_DOMAINS = (INTEGER, REAL)

AXIOM_IDS = ("1.1", "1.2", "1.3", "2.1", "2.2", "2.3", "2.4", "2.5", "2.6")

# geometric shrink factor for consecutive dyadic blocks of the axiom "1.3" sum
DOMAR_BLOCK_FACTOR = 0.9
DOMAR_TERMS = 10**5
GROWTH_MARGIN = 0.25
GROWTH_CAP = 16


def _check_domain(domain: str) -> str:
    if domain not in _DOMAINS:
        raise ValueError(f"domain must be 'Z' or 'R', got {domain!r}")
    return domain


@dataclass(frozen=True)
class Weight:
    """Base class. Subclasses implement :meth:`log` (natural log of ``w``)."""

    domain: str = INTEGER

    def __post_init__(self):
        _check_domain(self.domain)

    def log(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return np.exp(self.log(t))

    @property
    def growth_order_cache(self) -> Optional[int]:
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PolynomialGrowth(Weight):
    """``w_N(t) = (1 + |t|)^N``."""

    N: int = 0

    def __post_init__(self):
        super().__post_init__()
        if int(self.N) != self.N or self.N < 0:
            raise ValueError("N must be a nonnegative integer")

    def log(self, t):
        return self.N * np.log1p(np.abs(np.asarray(t, dtype=float)))

    def __call__(self, t):
        return (1.0 + np.abs(np.asarray(t, dtype=float))) ** self.N

    @property
    def growth_order_cache(self):
        return int(self.N)

    def to_dict(self):
        return {"form": "poly", "N": int(self.N), "domain": self.domain}


@dataclass(frozen=True)
class SineModulated(Weight):
    """``(1 + |sin t|)(1 + |t|)^N``."""

    N: int = 0

    def __post_init__(self):
        super().__post_init__()
        if int(self.N) != self.N or self.N < 0:
            raise ValueError("N must be a nonnegative integer")

    def log(self, t):
        t = np.asarray(t, dtype=float)
        return np.log1p(np.abs(np.sin(t))) + self.N * np.log1p(np.abs(t))

    @property
    def growth_order_cache(self):
        return int(self.N)

    def to_dict(self):
        return {"form": "sine", "N": int(self.N), "domain": self.domain}


@dataclass(frozen=True)
class StretchedExp(Weight):
    """``exp((1 + |t|)^p)`` with ``0 <= p < 1``."""

    p: float = 0.5

    def __post_init__(self):
        super().__post_init__()
        if not 0.0 <= self.p < 1.0:
            raise ValueError("p must lie in [0, 1)")

    def log(self, t):
        return (1.0 + np.abs(np.asarray(t, dtype=float))) ** self.p

    def to_dict(self):
        return {"form": "stretched_exp", "p": float(self.p), "domain": self.domain}


@dataclass(frozen=True)
class Exponential(Weight):
    """``exp(1 + |t|)``; violates the Beurling-Domar condition."""

    def log(self, t):
        return 1.0 + np.abs(np.asarray(t, dtype=float))

    def to_dict(self):
        return {"form": "exp", "domain": self.domain}


@dataclass(frozen=True)
class Product(Weight):
    left: Weight = field(default_factory=PolynomialGrowth)
    right: Weight = field(default_factory=PolynomialGrowth)

    def __post_init__(self):
        super().__post_init__()
        if self.left.domain != self.domain or self.right.domain != self.domain:
            raise ValueError("product factors must share the product's domain")

    def log(self, t):
        return self.left.log(t) + self.right.log(t)

    @property
    def growth_order_cache(self):
        a, b = self.left.growth_order_cache, self.right.growth_order_cache
        return None if a is None or b is None else a + b

    def to_dict(self):
        return {"form": "product", "left": self.left.to_dict(),
                "right": self.right.to_dict(), "domain": self.domain}


@dataclass(frozen=True, eq=False)
class Tabulated(Weight):
    """Sampled weight, linearly interpolated; evaluation outside the grid hull is rejected."""

    grid: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.size == 0 or g.shape != v.shape:
            raise ValueError("grid and values must be nonempty 1-d sequences of equal length")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.allclose(g, -g[::-1], rtol=0, atol=1e-12 * max(1.0, abs(g).max())):
            raise ValueError("grid must be symmetric about 0")
        if np.any(v < 1.0):
            raise ValueError("tabulated weight values must be >= 1")
        object.__setattr__(self, "grid", tuple(g.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        g = np.asarray(self.grid)
        if np.any(t < g[0]) or np.any(t > g[-1]):
            raise ValueError("tabulated weight evaluated outside its grid hull")
        return np.interp(t, g, np.asarray(self.values))

    def log(self, t):
        return np.log(self(t))

    def to_dict(self):
        return {"form": "tabulated", "grid": list(self.grid),
                "values": list(self.values), "domain": self.domain}


def weight_from_dict(d: dict) -> Weight:
    """Inverse of ``Weight.to_dict``; raises ``ValueError`` on malformed records."""
    if not isinstance(d, dict) or "form" not in d:
        raise ValueError("weight record must be an object with a 'form' key")
    domain = d.get("domain", INTEGER)
    form = d["form"]
    try:
        if form == "poly":
            return PolynomialGrowth(domain=domain, N=int(d["N"]))
        if form == "sine":
            return SineModulated(domain=domain, N=int(d["N"]))
        if form == "stretched_exp":
            return StretchedExp(domain=domain, p=float(d["p"]))
        if form == "exp":
            return Exponential(domain=domain)
        if form == "product":
            return Product(domain=domain, left=weight_from_dict(d["left"]),
                           right=weight_from_dict(d["right"]))
        if form == "tabulated":
            return Tabulated(domain=domain, grid=tuple(d["grid"]), values=tuple(d["values"]))
    except KeyError as exc:
        raise ValueError(f"weight form {form!r} is missing field {exc}") from None
    raise ValueError(f"unknown weight form {form!r}")


def eval_weight(w: Weight, t) -> float:
    return float(w(t))


# ---------------------------------------------------------------------------
# axiom checks


@dataclass
class AxiomEntry:
    axiom: str
    passed: bool
    witness: Optional[dict] = None
    note: str = ""

    def to_dict(self):
        return {"axiom": self.axiom, "passed": bool(self.passed),
                "witness": self.witness, "note": self.note}


@dataclass
class AxiomReport:
    entries: list
    grid: dict
    tolerances: dict

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, axiom: str) -> AxiomEntry:
        for e in self.entries:
            if e.axiom == axiom:
                return e
        raise KeyError(axiom)

    def failed(self) -> list:
        return [e.axiom for e in self.entries if not e.passed]

    def to_dict(self):
        return {"passed": self.passed, "grid": self.grid, "tolerances": self.tolerances,
                "axioms": [e.to_dict() for e in self.entries]}


def _tail_vs_mid(absgrid: np.ndarray, vals: np.ndarray) -> tuple[float, float]:
    """sup of vals over the outer quarter of |t| and over |t| in [T/4, T/2]."""
    T = absgrid.max()
    tail = vals[absgrid >= 0.75 * T]
    mid = vals[(absgrid >= 0.25 * T) & (absgrid <= 0.5 * T)]
    return float(tail.max()), float(mid.max()) if mid.size else float("nan")


def _domar_blocks(w: Weight, t: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(1, M + 1, dtype=float)
    terms = w.log(n * t) / n**2
    edges = [2**k for k in range(int(math.log2(M)) + 1)]
    blocks = np.array([terms[a - 1:min(2 * a, M + 1) - 1].sum() for a in edges if 2 * a <= M + 1])
    partial = np.cumsum(terms)[np.array([2 * a - 2 for a in edges if 2 * a <= M + 1])]
    return blocks, partial


def _grid_index(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Index of each x in sorted grid g, or -1 when x is not a grid point."""
    atol = 1e-9 * max(1.0, float(np.abs(g).max()))
    pos = np.clip(np.searchsorted(g, x), 0, g.size - 1)
    prev = np.clip(pos - 1, 0, g.size - 1)
    best = np.where(np.abs(g[prev] - x) < np.abs(g[pos] - x), prev, pos)
    return np.where(np.abs(g[best] - x) <= atol, best, -1)


def _check_submult(w, g, tol, max_pairs=4_000_000):
    n = g.size
    stride = max(1, int(math.ceil(n * n / max_pairs)))
    s = g[::stride]
    wg = w(g)
    worst = (0.0, None)
    for sv in s:
        ws = w(sv)
        idx = _grid_index(g, sv + g)
        ok = idx >= 0
        if not np.any(ok):
            continue
        lhs = wg[idx[ok]]
        rhs = ws * wg[ok] * (1.0 + tol)
        excess = lhs / rhs
        j = int(np.argmax(excess))
        if excess[j] > worst[0]:
            worst = (float(excess[j]), (float(sv), float(g[ok][j])))
    passed = worst[0] <= 1.0
    witness = None if passed else {"points": worst[1], "ratio": worst[0]}
    return AxiomEntry("1.1", passed, witness, note=f"s-stride {stride}")


def check_axioms(w: Weight, grid, tol: float = 1e-9) -> AxiomReport:
    """Test the weight axioms on a finite symmetric grid.

    Parameters
    ----------
    w : Weight
    grid : array_like
        Finite set of points symmetric about 0.
    tol : float
        Relative tolerance for the algebraic identities "1.1" and "1.2".

    Returns
    -------
    AxiomReport
        One entry per axiom id in :data:`AXIOM_IDS`; failed entries carry a witness.
    """
    g = np.unique(np.asarray(grid, dtype=float))
    if g.size == 0:
        raise ValueError("grid is empty")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.allclose(np.sort(-g), g, rtol=0, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise ValueError("grid is not symmetric about 0")
    pos = g[g > 0]
    if pos.size == 0:
        raise ValueError("grid must contain a positive point")
    wg = w(g)
    absg = np.abs(g)
    entries = []

    entries.append(_check_submult(w, g, tol))

    asym = np.abs(w(-g) - wg) / wg
    j = int(np.argmax(asym))
    floor_ok = bool(np.all(wg >= 1.0 - tol))
    sym_ok = bool(asym[j] <= tol) and floor_ok
    entries.append(AxiomEntry("1.2", sym_ok, None if sym_ok else {
        "points": [float(g[j]), float(-g[j])], "value": float(asym[j]),
        "min_w": float(wg.min())}))

    probes = sorted({float(pos[0]), float(pos[-1])})
    M = DOMAR_TERMS
    if isinstance(w, Tabulated):
        M = int(max(16, np.floor(g[-1] / pos[0])))
        probes = [float(pos[0])]
    domar_ok, domar_wit = True, None
    for t in probes:
        m_here = M if not isinstance(w, Tabulated) else int(np.floor(g[-1] / t))
        blocks, partial = _domar_blocks(w, t, m_here)
        tail = blocks[-4:]
        shrink = all(b1 <= DOMAR_BLOCK_FACTOR * b0 or b1 == 0 for b0, b1 in zip(tail[:-1], tail[1:]))
        if not shrink:
            domar_ok = False
            domar_wit = {"points": [t], "block_sums": tail.tolist(),
                         "partial_sums": partial[-4:].tolist(),
                         "value": float(tail[-1] / tail[-2]) if tail[-2] else float("inf")}
            break
    entries.append(AxiomEntry("1.3", domar_ok, domar_wit,
                              note=f"{M} terms, dyadic factor {DOMAR_BLOCK_FACTOR}"))

    if np.all(np.abs(wg - 1.0) <= tol):
        entries.append(AxiomEntry("2.1", True, note="w == 1"))
    else:
        tail, mid = _tail_vs_mid(absg, 1.0 / wg)
        ok = tail < DOMAR_BLOCK_FACTOR * mid
        entries.append(AxiomEntry("2.1", ok, None if ok else {"tail_sup": tail, "mid_sup": mid}))

    ok22, wit22 = True, None
    for h in sorted({float(pos[0]), float(pos[min(len(pos) - 1, len(pos) // 4)])}):
        tt = g[_grid_index(g, g + h) >= 0]
        r = np.abs(w(tt + h) - w(tt)) / w(tt)
        tail, mid = _tail_vs_mid(np.abs(tt), r)
        if not (tail <= tol or tail < DOMAR_BLOCK_FACTOR * mid):
            ok22, wit22 = False, {"points": [h], "tail_sup": tail, "mid_sup": mid}
            break
    entries.append(AxiomEntry("2.2", ok22, wit22))

    if w.domain == INTEGER:
        entries.append(AxiomEntry("2.3", True, note="discrete group: h -> 0 is eventually h = 0"))
    else:
        hs = 2.0 ** -np.arange(0, 12)
        inner = g[np.abs(g) <= g[-1] - 1.0] if g[-1] > 1.0 else g
        sups = np.array([np.max(np.abs(w(inner + h) - w(inner)) / w(inner)) for h in hs])
        ok = sups[-1] <= max(tol, 0.01 * sups[0]) and np.all(np.diff(sups) <= tol * sups[:-1] + 1e-300)
        entries.append(AxiomEntry("2.3", bool(ok), None if ok else {
            "points": hs.tolist(), "sups": sups.tolist()}))

    base = [float(pos[0])]
    m_max = int(g[-1] / pos[0]) if isinstance(w, Tabulated) else 10**4
    N, det = _growth_order_detail(w, base, max(m_max, 16))
    entries.append(AxiomEntry("2.4", det["order_24"] is not None,
                              None if det["order_24"] is not None else {"points": base, "slope": det["slope"]},
                              note=f"N = {det['order_24']}"))
    entries.append(AxiomEntry("2.5", N is not None,
                              None if N is not None else {"points": base, "slope": det["slope"]}))

    radii = np.unique(absg)
    ok26 = False
    for r in radii[radii >= pos[0]]:
        inside = wg[absg <= r]
        outside = wg[absg > r]
        if outside.size == 0 or inside.max() <= outside.min() * (1 + tol):
            ok26 = outside.size > 0 or np.all(np.abs(wg - 1) <= tol)
            if ok26:
                break
    entries.append(AxiomEntry("2.6", bool(ok26), None if ok26 else {"points": [float(pos[0])]}))

    return AxiomReport(entries, {"size": int(g.size), "min": float(g[0]), "max": float(g[-1]),
                                 "domain": w.domain},
                       {"identity_rel": tol, "domar_block_factor": DOMAR_BLOCK_FACTOR,
                        "growth_margin": GROWTH_MARGIN})


# ---------------------------------------------------------------------------
# growth


def _loglog_slope(w, t, m_lo, m_hi):
    m = np.unique(np.round(np.geomspace(m_lo, m_hi, 64)))
    y = w.log(m * t)
    return float(np.polyfit(np.log(m), y, 1)[0])


def _growth_order_detail(w, probe, m_max, cap=GROWTH_CAP, margin=GROWTH_MARGIN):
    slopes = [_loglog_slope(w, t, m_max / 10, m_max) for t in probe]
    early = [_loglog_slope(w, t, m_max / 100, m_max / 10) for t in probe]
    smax = max(slopes)
    accelerating = any(s1 - s0 > margin for s0, s1 in zip(early, slopes))
    n24 = max(0, int(math.ceil(smax - 1.0 + margin)))
    if accelerating or n24 > cap:
        return None, {"slope": smax, "order_24": None}
    # axiom "2.5": w(mt)/|m|^N bounded below for some probe
    for N in range(n24, cap + 1):
        for t in probe:
            m = np.unique(np.round(np.geomspace(1, m_max, 64)))
            excess = w.log(m * t) - N * np.log(m)
            tail_slope = float(np.polyfit(np.log(m[m >= m_max / 10]), excess[m >= m_max / 10], 1)[0])
            if tail_slope >= -margin:
                return N, {"slope": smax, "order_24": n24}
    return None, {"slope": smax, "order_24": n24}


def growth_order(w: Weight, probe=(1.0,), m_max: int = 10**4) -> Optional[int]:
    """Smallest ``N`` for which the polynomial-growth conditions hold on ``m <= m_max``.

    The log-log slope of ``m -> w(mt)`` over the last decade must sit below
    ``N + 1 - margin`` for every probe, and ``w(mt) / m^N`` must not decay for at
    least one probe. Returns ``None`` when no ``N <= 16`` fits or the slope is
    still accelerating (stretched-exponential growth).
    """
    if m_max < 16:
        raise ValueError("m_max must be at least 16")
    probe = [float(t) for t in probe]
    if not probe:
        raise ValueError("probe set is empty")
    return _growth_order_detail(w, probe, m_max)[0]


def _tail_ratios(w: Weight, s: float, horizon: float, n_samples: int) -> np.ndarray:
    if w.domain == INTEGER:
        t = np.arange(math.ceil(horizon / 2), math.floor(horizon) + 1, dtype=float)
    else:
        t = np.linspace(horizon / 2, horizon, n_samples)
    if t.size < 1000:
        raise ValueError("horizon too small: fewer than 1000 tail samples")
    return np.exp(w.log(t + s) - w.log(t))


def reduced_weight(w: Weight, s: float, horizon: float, n_samples: int = 200_000) -> float:
    """Tail-half surrogate for ``limsup_{t -> inf} w(t+s)/w(t)``."""
    return float(_tail_ratios(w, s, horizon, n_samples).max())


def reduced_weight_inf(w: Weight, s: float, horizon: float, n_samples: int = 200_000) -> float:
    """Tail-half surrogate for the matching ``liminf``."""
    return float(_tail_ratios(w, s, horizon, n_samples).min())


def log_growth_rate(w: Weight, t: float, n: int) -> float:
    """``(1/n) log w(nt)``, which tends to 0 for weights obeying axioms "1.1" to "1.3"."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(w.log(n * t)) / n
