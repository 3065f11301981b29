"""Spectra of trigonometric polynomials, spectral estimates of samples, band-pass kernels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .almostper import TaperedTransform, TrigPoly, find_atoms, reduce_frequency
from .polycalc import GroupPoly, Signal, encode_vectors
from .weights import INTEGER, REAL, Weight

MIN_ESTIMATE_WINDOW = 1000
MAX_KERNEL_POWER = 64


@dataclass
class SmoothingKernel:
    """Finitely supported kernel; ``taps[j]`` sits at ``t = (j - half) * step``.

    The taps act as point masses, so ``phi * f (t) = sum_j taps[j] phi(t - t_j)``
    and the transfer function is ``sum_j taps[j] exp(-i s t_j)``.
    """

    taps: np.ndarray
    step: float
    domain: str
    center: float
    bandwidth: float
    stopband: float
    weight: dict
    l1w_norm: float
    design: dict = field(default_factory=dict)

    @property
    def half(self) -> int:
        return (len(self.taps) - 1) // 2

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(len(self.taps)) - self.half) * self.step

    def transfer(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.exp(-1j * np.outer(s, self.positions)) @ self.taps

    def to_dict(self) -> dict:
        return {"domain": self.domain, "step": self.step, "center": self.center,
                "bandwidth": self.bandwidth, "stopband": self.stopband, "weight": self.weight,
                "l1w_norm": self.l1w_norm, "design": self.design,
                "taps": encode_vectors(self.taps[:, None])}


def _box_power(M: int, power: int) -> np.ndarray:
    """Exact integer coefficients of ``(1 + z + ... + z^{M-1})^power``."""
    out = np.array([1], dtype=object)
    box = np.ones(M, dtype=object)
    for _ in range(power):
        out = np.convolve(out, box)
    return out


def _design(bandwidth: float, step: float, quality: int, max_support):
    # off-band |transfer| <= (M sin(bandwidth step / 4))^{-2q}
    x = math.sin(bandwidth * step / 4)
    best = None
    for q in range(1, MAX_KERNEL_POWER + 1):
        M = max(2, math.floor(10 ** (quality / (2 * q)) / x) + 1)
        support = 2 * q * (M - 1) + 1
        if best is None or support < best[2]:
            best = (M, q, support)
    if max_support is not None and best[2] > max_support:
        raise ValueError(
            f"quality {quality} at bandwidth {bandwidth} needs support {best[2]} > {max_support}"
        )
    return best


def make_bandpass(center: float, bandwidth: float, w: Weight, quality: int = 6,
                  max_support: int | None = None, step: float = 1.0) -> SmoothingKernel:
    """Modulated iterated-box kernel with transfer ``((D_M(s - c)/M))^{2q}``.

    ``D_M`` is the Dirichlet kernel of ``M`` samples. The transfer is real,
    nonnegative, equal to 1 at ``center`` and at most ``10^-quality`` for
    ``bandwidth/2 <= |s - center| <= pi/step``; on R it repeats with period
    ``2 pi / step``. A bandwidth covering the whole band gives the unit impulse.

    Raises
    ------
    ValueError
        If ``bandwidth <= 0`` or the design exceeds ``max_support`` taps.
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if w.domain == INTEGER:
        step = 1.0
    if not step > 0:
        raise ValueError("step must be positive")
    stop = 10.0 ** (-quality)
    if bandwidth * step >= 2 * np.pi:
        taps = np.ones(1, dtype=complex)
        design = {"impulse": True}
    else:
        M, q, _ = _design(bandwidth, step, quality, max_support)
        b = _box_power(M, 2 * q)
        total = M ** (2 * q)
        mag = np.array([v / total for v in b], dtype=float)
        k = np.arange(len(mag)) - (len(mag) - 1) // 2
        taps = np.exp(1j * center * k * step) * mag
        design = {"impulse": False, "box_length": M, "power": 2 * q}
    positions = (np.arange(len(taps)) - (len(taps) - 1) // 2) * step
    l1w = float(np.sum(np.abs(taps) * np.asarray(w(positions), dtype=float)))
    return SmoothingKernel(taps, float(step), w.domain, float(center), float(bandwidth), stop,
                           w.to_dict(), l1w, design)


def convolve(phi: Signal, f: SmoothingKernel) -> Signal:
    """``phi * f`` on the valid interior; the window loses ``half`` samples at each end."""
    if phi.domain != f.domain or abs(phi.step - f.step) > 1e-12 * f.step:
        raise ValueError("kernel and signal live on different lattices")
    h = f.half
    if 2 * h >= len(phi):
        raise ValueError("kernel support exceeds the signal window")
    out = np.stack([np.convolve(phi.values[:, j], f.taps, mode="valid")
                    for j in range(phi.dim)], axis=1)
    return Signal(phi.domain, phi.start + h * phi.step, phi.step, out)


def convolve_trigpoly(tp: TrigPoly, f: SmoothingKernel, drop_below: float | None = None) -> TrigPoly:
    """Exact ``tp * f``.

    A term whose coefficients shrink to at most ``drop_below`` (default the
    kernel stopband level) times their original size is removed.
    """
    if tp.domain != f.domain:
        raise ValueError("kernel and polynomial live on different groups")
    drop = f.stopband if drop_below is None else drop_below
    terms = []
    for s, p in tp.terms:
        acc = GroupPoly.zero(p.dim, tp.domain)
        for tap, x in zip(f.taps, f.positions):
            if tap != 0:
                acc = acc + p.translate(-x).scale(tap * np.exp(-1j * s * x))
        if np.abs(acc.coeffs).max() > drop * np.abs(p.coeffs).max():
            terms.append((s, acc))
    return TrigPoly(terms, tp.domain, tp.dim)


def sp_of_trigpoly(tp: TrigPoly) -> list[float]:
    return list(tp.frequencies)


def modulate(tp: TrigPoly, s: float) -> TrigPoly:
    """``gamma_s * tp``."""
    return TrigPoly([(f + s, p) for f, p in tp.terms], tp.domain, tp.dim)


@dataclass
class SpectrumEstimate:
    atoms: list
    grid: dict
    threshold: float
    window: dict

    @property
    def frequencies(self) -> list[float]:
        return [a[0] for a in self.atoms]

    def to_dict(self) -> dict:
        return {"atoms": [{"freq": s, "mass": m} for s, m in self.atoms], "grid": self.grid,
                "threshold": self.threshold, "window": self.window}


def sp_estimate(phi: Signal, w: Weight, grid=None, threshold=None) -> SpectrumEstimate:
    """Frequency atoms of ``phi / w`` from a tapered transform of the trailing half window.

    Parameters
    ----------
    grid : None, float or array
        Candidate frequencies: ``None`` for an oversampled FFT grid, a float
        for a uniform grid of that step over the Nyquist band, or an explicit
        array.
    threshold : float, optional
        Minimum atom mass; default ``max(5 * median, 1e-3 * max)`` of the
        grid magnitudes.

    Notes
    -----
    A surrogate for the spectrum: consistent on trigonometric polynomials
    with coefficients dominated by ``w`` plus perturbations in ``C_{w,0}``.
    """
    n = len(phi)
    if n < MIN_ESTIMATE_WINDOW:
        raise ValueError(f"window of {n} samples is below the minimum {MIN_ESTIMATE_WINDOW}")
    t = phi.times.astype(float)
    g = phi.values / np.asarray(w(t), dtype=float)[:, None]
    lo = n // 2
    tr = TaperedTransform(t[lo:], g[lo:], [(0, n - lo)], phi.step)
    if grid is not None and np.ndim(grid) == 0:
        nyq = np.pi / phi.step
        grid = np.arange(-nyq, nyq, float(grid))
    atoms, info = find_atoms(tr, grid, threshold, phi.domain)
    window = {"start": float(t[lo]), "stop": float(t[-1]), "samples": n - lo,
              "resolution": 2 * np.pi / ((n - lo) * phi.step)}
    return SpectrumEstimate([(a.freq, a.mass) for a in atoms], info, info["threshold"], window)


def derivative_trigpoly(tp: TrigPoly) -> TrigPoly:
    """Termwise ``(exp(i s t) p)' = exp(i s t)(i s p + p')``."""
    if tp.domain != REAL:
        raise ValueError("differentiation needs the real line")
    return TrigPoly([(s, p.scale(1j * s) + p.derivative()) for s, p in tp.terms], REAL, tp.dim)


def sp_derivative_relation(tp: TrigPoly) -> tuple[list, list, bool]:
    """Spectra of ``phi`` and ``phi'`` and whether sp(phi') <= sp(phi) <= sp(phi') + {0}."""
    sp = sp_of_trigpoly(tp)
    spd = sp_of_trigpoly(derivative_trigpoly(tp))
    first = set(spd) <= set(sp)
    second = set(sp) <= set(spd) | {0.0}
    return sp, spd, first and second


def frequencies_close(a, b, tol: float, domain: str = REAL) -> bool:
    """Whether two frequencies agree within ``tol`` (modulo ``2 pi`` on Z)."""
    d = reduce_frequency(a - b, INTEGER) if domain == INTEGER else a - b
    return abs(d) <= tol
