"""Ergodic means of sampled signals.

Maak means are estimated with interval windows ``F = {a, ..., a + L - 1}``
swept over every admissible offset ``a``; the spread of the window averages
across offsets is the uniformity defect. On R the window is the same set of
sample points, so averages are Riemann means with the sampling step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polycalc import GroupPoly, Signal, encode_vectors, iterated_primitive, iterated_sum
from .weights import INTEGER, Weight

DECAY_THRESHOLD = 1e-2
# ratio of outer-half to inner-half weighted sup tolerated by the boundedness detector
BOUNDED_GROWTH_FACTOR = 1.5


@dataclass
class MeanEstimate:
    mean: np.ndarray
    window_length: int
    uniformity_defect: float
    converged: bool
    tol: float
    defects_by_length: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mean": encode_vectors([self.mean])[0],
            "window_length": self.window_length,
            "uniformity_defect": self.uniformity_defect,
            "converged": self.converged,
            "tol": self.tol,
            "defects_by_length": {str(k): v for k, v in self.defects_by_length.items()},
        }


@dataclass
class WMeanEstimate:
    poly: GroupPoly
    residual_defect: float
    converged: bool
    tol: float
    fit_diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "poly": self.poly.to_dict(),
            "residual_defect": self.residual_defect,
            "converged": self.converged,
            "tol": self.tol,
            "fit_diagnostics": self.fit_diagnostics,
        }


def window_averages(values: np.ndarray, L: int) -> np.ndarray:
    """Averages of ``values[a:a+L]`` for every offset ``a``; shape ``(n - L + 1, d)``."""
    c = np.vstack([np.zeros((1, values.shape[1]), dtype=values.dtype), np.cumsum(values, axis=0)])
    return (c[L:] - c[:-L]) / L


def maak_mean(phi: Signal, window_lengths, tol: float = 1e-3) -> MeanEstimate:
    """Estimate the Maak mean of ``phi``.

    Parameters
    ----------
    phi : Signal
    window_lengths : increasing sequence of int
        Window sizes in samples. The signal must hold at least twice the
        largest one so the offset sweep is not trivial.
    tol : float
        Convergence tolerance on the uniformity defect.

    Returns
    -------
    MeanEstimate
        ``mean`` is the offset-averaged window mean at the largest length and
        ``uniformity_defect`` the largest deviation of a single window from it.
    """
    lengths = [int(L) for L in np.atleast_1d(window_lengths)]
    if not lengths or any(L < 1 for L in lengths):
        raise ValueError("window lengths must be positive")
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("window lengths must be increasing")
    if len(phi) < 2 * lengths[-1]:
        raise ValueError(
            f"window of {len(phi)} samples is too short for L={lengths[-1]} with an offset sweep"
        )
    defects = {}
    mean = None
    for L in lengths:
        avgs = window_averages(phi.values, L)
        m = avgs.mean(axis=0)
        defects[L] = float(np.linalg.norm(avgs - m, axis=1).max())
        mean = m
    defect = defects[lengths[-1]]
    return MeanEstimate(mean, lengths[-1], defect, defect <= tol, tol, defects)


def weighted_signal(phi: Signal, w: Weight) -> Signal:
    """``phi / w`` on the same window."""
    return phi.with_values(phi.values / np.asarray(w(phi.times), dtype=float)[:, None])


def zero_mean_defect(phi: Signal, L: int | None = None) -> float:
    """Largest norm of a length-``L`` window average over all offsets (default half the window)."""
    L = len(phi) // 2 if L is None else int(L)
    if L < 1 or L > len(phi):
        raise ValueError("window length out of range")
    return float(np.linalg.norm(window_averages(phi.values, L), axis=1).max())


def w_mean(phi: Signal, w: Weight, N: int, tol: float = 1e-2) -> WMeanEstimate:
    """Fit a polynomial ``p`` of degree ``<= N`` so that ``(phi - p)/w`` has mean zero.

    The fit is ordinary least squares on the monomials ``(t/T)^k`` with
    ``T = max |t|``; residual_defect is :func:`zero_mean_defect` of the
    weighted residual.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    if len(phi) < 10 * (N + 1):
        raise ValueError("window too short for a degree-N fit")
    t = phi.times.astype(float)
    scale = float(np.abs(t).max())
    if scale == 0 or np.unique(t).size <= N:
        raise ValueError("degenerate window for polynomial fit")
    basis = np.vander(t / scale, N + 1, increasing=True)
    sol, _, rank, sv = np.linalg.lstsq(basis, phi.values, rcond=None)
    if rank < N + 1:
        raise ValueError("rank-deficient polynomial fit")
    coeffs = sol / (scale ** np.arange(N + 1))[:, None]
    poly = GroupPoly(coeffs, phi.domain, phi.dim)
    resid = weighted_signal(phi.with_values(phi.values - poly(t)), w)
    defect = zero_mean_defect(resid)
    diag = {"scale": scale, "rank": int(rank), "condition": float(sv[0] / sv[-1]),
            "residual_sup": resid.sup()}
    return WMeanEstimate(poly, defect, defect <= tol, tol, diag)


def is_mean_zero_w_ergodic(phi: Signal, w: Weight, tol: float = 1e-2,
                           L: int | None = None) -> tuple[bool, float]:
    """Whether ``phi / w`` has window averages within ``tol`` of 0 at every offset."""
    defect = zero_mean_defect(weighted_signal(phi, w), L)
    return defect <= tol, defect


def _decay_profile(phi: Signal, w: Weight, m: int) -> tuple[np.ndarray, np.ndarray]:
    if m < 1:
        raise ValueError("m must be positive")
    if len(phi) <= m + 1:
        raise ValueError("window too short for m sums")
    sm = iterated_sum(phi, m) if phi.domain == INTEGER else iterated_primitive(phi, m)
    t = sm.times.astype(float)
    ratio = sm.norms() / (np.asarray(w(t), dtype=float) * (1.0 + np.abs(t)) ** m)
    return np.abs(t), ratio


def iterated_sum_decay(phi: Signal, w: Weight, m: int, tail_fraction: float = 0.2,
                       threshold: float = DECAY_THRESHOLD) -> tuple[float, bool]:
    """Tail sup of ``|S^m phi| / (w (1+|t|)^m)`` and whether it has decayed.

    Passes when the tail sup is at most ``threshold`` and no larger than the
    sup over the middle block ``|t|`` in ``[T/4, T/2]``, i.e. the statistic is
    small and not growing.
    """
    if not 0 < tail_fraction < 1:
        raise ValueError("tail_fraction must lie in (0, 1)")
    abs_t, ratio = _decay_profile(phi, w, m)
    T = abs_t.max()
    tail_sup = float(ratio[abs_t >= (1 - tail_fraction) * T].max())
    mid = (abs_t >= T / 4) & (abs_t <= T / 2)
    mid_sup = float(ratio[mid].max()) if mid.any() else np.inf
    return tail_sup, bool(tail_sup <= threshold and tail_sup <= mid_sup)


def sum_statistic(phi: Signal, b, N: int) -> Signal:
    """``sum_{j=0}^{N} b_j t^{N-j} S^{j+1} phi`` (primitives on R)."""
    b = list(b)
    if len(b) != N + 1:
        raise ValueError("need N + 1 coefficients")
    step = iterated_sum if phi.domain == INTEGER else iterated_primitive
    t = phi.times.astype(float)
    out = np.zeros_like(phi.values)
    cur = phi
    for j, bj in enumerate(b):
        cur = step(cur, 1)
        if bj != 0:
            out += bj * (t ** (N - j))[:, None] * cur.values
    return phi.with_values(out)


def w_bounded(phi: Signal, w: Weight,
              growth_factor: float = BOUNDED_GROWTH_FACTOR) -> tuple[bool, float, float]:
    """Finite-window boundedness of ``phi / w``.

    Compares the sup of ``|phi|/w`` over ``|t| > T/2`` with the sup over
    ``|t| <= T/2``; a bounded ratio cannot grow by more than ``growth_factor``
    between the two halves.

    Returns
    -------
    (bounded, inner_sup, outer_sup)
    """
    t = np.abs(phi.times.astype(float))
    ratio = phi.norms() / np.asarray(w(phi.times), dtype=float)
    half = t.max() / 2
    inner = float(ratio[t <= half].max())
    outer = float(ratio[t > half].max())
    return bool(outer <= growth_factor * max(inner, np.finfo(float).tiny)), inner, outer
