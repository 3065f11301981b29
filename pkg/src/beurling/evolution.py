"""Evolution equations ``B phi = A phi + psi``: characteristic functions, resonance
sets, a forward recurrence solver, and matrix checks of power-growth theorems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .almostper import TrigPoly, reduce_frequency
from .polycalc import GroupPoly, Signal
from .spectrum import derivative_trigpoly
from .weights import INTEGER, REAL

UNIT_CIRCLE_TOL = 1e-7
ROOT_CLUSTER_TOL = 1e-6
NILPOTENT_TOL = 1e-9
SPECTRUM_TOL = 1e-8
SLOPE_MARGIN = 0.25
RATIO_TOL = 1e-2
GROWTH_FACTOR = 1.5


def _complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError("complex numbers are encoded as [re, im]")
        return complex(float(x[0]), float(x[1]))
    return complex(x)


def _encode(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


@dataclass(frozen=True)
class RecurrenceOp:
    """``(B phi)(n) = sum_j b_j phi(n + n_j)``; ``terms`` is a tuple of ``(b_j, n_j)``."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((complex(b), int(n)) for b, n in self.terms)
        if not terms:
            raise ValueError("a recurrence needs at least one term")
        shifts = [n for _, n in terms]
        if len(set(shifts)) != len(shifts):
            raise ValueError("recurrence shifts must be distinct")
        object.__setattr__(self, "terms", terms)

    @property
    def shifts(self) -> list[int]:
        return [n for _, n in self.terms]

    def to_dict(self) -> dict:
        return {"recurrence": [{"b": _encode(b), "shift": n} for b, n in self.terms]}


@dataclass(frozen=True)
class DiffOp:
    """``B = sum_j b_j (d/dt)^j`` with ``b_m != 0``."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(complex(b) for b in self.coeffs)
        if not c or c[-1] == 0:
            raise ValueError("leading coefficient of a differential operator must be nonzero")
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def to_dict(self) -> dict:
        return {"diff": {"coeffs": [_encode(b) for b in self.coeffs]}}


def operator_from_dict(d: dict):
    """RecurrenceOp or DiffOp from its JSON record."""
    if not isinstance(d, dict):
        raise ValueError("operator record must be an object")
    try:
        if "recurrence" in d:
            return RecurrenceOp(tuple((_complex(x["b"]), int(x["shift"])) for x in d["recurrence"]))
        if "diff" in d:
            return DiffOp(tuple(_complex(b) for b in d["diff"]["coeffs"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed operator record: {exc}") from None
    raise ValueError("operator record needs a 'recurrence' or 'diff' key")


class MatrixOp:
    """Dense complex matrix with its certified spectrum.

    ``spectrum`` is a list of ``(eigenvalue, algebraic multiplicity)``;
    ``spectral_condition_diag`` is the condition number of an eigenvector
    basis, or ``inf`` when the matrix is not diagonalizable.
    """

    def __init__(self, entries):
        self.entries = linalg._as_square(entries)
        self.entries.setflags(write=False)
        self.dim = self.entries.shape[0]
        self.norm = float(np.linalg.norm(self.entries, 2))
        self.spectrum = linalg.spectrum(self.entries, SPECTRUM_TOL, SPECTRUM_TOL)
        self._vectors = {}
        basis = []
        diagonalizable = True
        for lam, mult in self.spectrum:
            vecs = self.eigenvectors(lam)
            if vecs.shape[1] != mult:
                diagonalizable = False
            basis.append(vecs)
        self.diagonalizable = diagonalizable
        if diagonalizable:
            V = np.hstack(basis)
            self.spectral_condition_diag = float(np.linalg.cond(V))
        else:
            self.spectral_condition_diag = math.inf

    def eigenvectors(self, lam, tol: float = SPECTRUM_TOL) -> np.ndarray:
        """Orthonormal basis (columns) of the null space of ``A - lam I``."""
        key = complex(lam)
        if key not in self._vectors:
            m = self.entries - lam * np.eye(self.dim)
            _, sv, vh = np.linalg.svd(m)
            k = int(np.sum(sv <= tol * max(1.0, self.norm)))
            self._vectors[key] = vh[self.dim - k:].conj().T
        return self._vectors[key]

    @property
    def eigenvalues(self) -> list[complex]:
        return [lam for lam, mult in self.spectrum for _ in range(mult)]

    def to_dict(self) -> dict:
        return {"matrix": [[_encode(z) for z in row] for row in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixOp":
        try:
            rows = d["matrix"]
            return cls([[_complex(z) for z in row] for row in rows])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed matrix record: {exc}") from None


@dataclass
class ResonanceSet:
    """``kind`` is ``"unit_circle_angles"`` or ``"real_frequencies"``.

    ``points`` holds ``(point, multiplicity, eigenvalue)`` sorted by point.
    """

    kind: str
    points: list
    residual_tol: float

    @property
    def values(self) -> list[float]:
        return [p for p, _, _ in self.points]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "residual_tol": self.residual_tol,
                "points": [{"point": p, "multiplicity": m, "eigenvalue": _encode(lam)}
                           for p, m, lam in self.points]}


def char_fn_recurrence(B: RecurrenceOp, zeta) -> complex:
    """``p_B(zeta) = sum_j b_j zeta^{n_j}``."""
    zeta = complex(zeta)
    if zeta == 0 and min(B.shifts) < 0:
        raise ValueError("p_B is undefined at 0 when negative shifts are present")
    return complex(sum(b * zeta ** n for b, n in B.terms))


def char_fn_diff(B: DiffOp, s) -> complex:
    """``p_B(s) = sum_j b_j (i s)^j``."""
    x = 1j * complex(s)
    out = 0j
    for b in reversed(B.coeffs):
        out = out * x + b
    return out


def matrix_spectrum(A) -> list[complex]:
    """Eigenvalues with repetition by algebraic multiplicity."""
    op = A if isinstance(A, MatrixOp) else MatrixOp(A)
    return op.eigenvalues


def poly_roots(coeffs) -> np.ndarray:
    """Roots of ``sum_k coeffs[k] z^k`` from companion-matrix eigenvalues, Newton-polished."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if c.size <= 1:
        raise ValueError("constant polynomial has no roots to extract")
    lead = c[-1]
    n = c.size - 1
    # exact zero roots first; the companion matrix of the deflated polynomial handles the rest
    nz = int(np.argmax(c != 0))
    core = c[nz:] / lead
    roots = [0j] * nz
    m = core.size - 1
    if m > 0:
        comp = np.zeros((m, m), dtype=complex)
        comp[1:, :-1] = np.eye(m - 1)
        comp[:, -1] = -core[:-1]
        roots.extend(linalg.eigenvalues_qr(comp))
    dc = c[1:] * np.arange(1, n + 1)
    out = []
    for z in roots:
        for _ in range(3):
            fz = np.polyval(c[::-1], z)
            dz = np.polyval(dc[::-1], z)
            if dz == 0 or fz == 0:
                break
            step = fz / dz
            if abs(step) > 1e-6 * max(1.0, abs(z)):
                break
            z = z - step
        out.append(complex(z))
    return np.array(out)


def _cluster_points(points, tol=ROOT_CLUSTER_TOL):
    merged = []
    for p, lam in sorted(points, key=lambda x: x[0]):
        if merged and abs(p - merged[-1][0]) <= tol and merged[-1][2] == lam:
            q, m, _ = merged[-1]
            merged[-1] = ((q * m + p) / (m + 1), m + 1, lam)
        else:
            merged.append((p, 1, lam))
    return merged


def _recurrence_poly(B: RecurrenceOp, lam: complex) -> tuple[np.ndarray, int]:
    nmin = min(min(B.shifts), 0)
    deg = max(max(B.shifts), 0) - nmin
    c = np.zeros(deg + 1, dtype=complex)
    for b, n in B.terms:
        c[n - nmin] += b
    c[-nmin] -= lam
    return c, nmin


def resonance_set_recurrence(B: RecurrenceOp, A: MatrixOp, tol: float = UNIT_CIRCLE_TOL) -> ResonanceSet:
    """Angles ``theta`` in ``(-pi, pi]`` with ``p_B(exp(i theta))`` an eigenvalue of ``A``."""
    if B.shifts == [0]:
        raise ValueError("p_B is constant; the resonance set is degenerate")
    pts = []
    for lam, _ in A.spectrum:
        c, _ = _recurrence_poly(B, lam)
        for z in poly_roots(c):
            if abs(abs(z) - 1) <= tol:
                pts.append((reduce_frequency(np.angle(z), INTEGER) + 0.0, lam))
    return ResonanceSet("unit_circle_angles", _cluster_points(pts), tol)


def resonance_set_diff(B: DiffOp, A: MatrixOp, tol: float = UNIT_CIRCLE_TOL) -> ResonanceSet:
    """Real ``s`` with ``p_B(s)`` an eigenvalue of ``A``."""
    if B.order == 0:
        raise ValueError("p_B is constant; the resonance set is degenerate")
    pts = []
    for lam, _ in A.spectrum:
        c = np.array([b * (1j) ** j for j, b in enumerate(B.coeffs)], dtype=complex)
        c[0] -= lam
        for s in poly_roots(c):
            if abs(s.imag) <= tol:
                pts.append((float(s.real), lam))
    return ResonanceSet("real_frequencies", _cluster_points(pts), tol)


def resonance_set(B, A: MatrixOp, tol: float = UNIT_CIRCLE_TOL) -> ResonanceSet:
    if isinstance(B, RecurrenceOp):
        return resonance_set_recurrence(B, A, tol)
    return resonance_set_diff(B, A, tol)


# ---------------------------------------------------------------------------
# solutions


def _shift_coefficients(B: RecurrenceOp, A: MatrixOp) -> dict:
    """Matrix coefficient of ``phi(n + k)`` in ``B phi - A phi``."""
    coef = {n: b * np.eye(A.dim, dtype=complex) for b, n in B.terms}
    coef[0] = coef.get(0, np.zeros((A.dim, A.dim), dtype=complex)) - A.entries
    return coef


def solve_recurrence(B: RecurrenceOp, A: MatrixOp, psi: Signal, init) -> Signal:
    """Forward solution of ``sum_j b_j phi(n + n_j) = A phi(n) + psi(n)``.

    With ``lo = min(shifts, 0)`` and ``hi = max(shifts, 0)``, ``init`` holds
    ``phi`` at ``psi.start + lo, ..., psi.start + hi - 1``. The result covers
    ``psi.start + lo`` through ``psi.stop + hi``.
    """
    if psi.domain != INTEGER:
        raise ValueError("recurrences are solved on Z")
    if psi.dim != A.dim:
        raise ValueError("forcing and matrix dimensions differ")
    coef = _shift_coefficients(B, A)
    lo, hi = min(coef), max(coef)
    lead = coef[hi]
    if hi == 0:
        if np.linalg.svd(lead, compute_uv=False)[-1] <= 1e-14 * max(1.0, A.norm):
            raise ValueError("leading coefficient b_0 I - A is singular")
    elif np.all(lead == 0):
        raise ValueError("coefficient of the largest shift is zero")
    init = np.asarray(init, dtype=complex)
    if init.ndim < 2:
        init = init.reshape(-1, A.dim)
    if init.shape != (hi - lo, A.dim):
        raise ValueError(f"init must hold {hi - lo} vectors of dimension {A.dim}")
    n = len(psi)
    phi = np.zeros((n + hi - lo, A.dim), dtype=complex)
    phi[:hi - lo] = init
    others = [(k, c) for k, c in sorted(coef.items()) if k != hi]
    lead_inv = None if hi > 0 else np.linalg.inv(lead)
    for i in range(n):
        rhs = psi.values[i].copy()
        for k, c in others:
            rhs -= c @ phi[i + k - lo]
        phi[i + hi - lo] = rhs / lead[0, 0] if lead_inv is None else lead_inv @ rhs
    return Signal(INTEGER, psi.start + lo, 1, phi)


def recurrence_residual(B: RecurrenceOp, A: MatrixOp, phi: Signal, psi: Signal) -> float:
    """``sup_n |B phi(n) - A phi(n) - psi(n)|`` over ``n`` where all shifts are available."""
    coef = _shift_coefficients(B, A)
    res = 0.0
    for i, t in enumerate(psi.times):
        acc = -psi.values[i].copy()
        try:
            for k, c in coef.items():
                acc += c @ phi.at(t + k)
        except ValueError:
            continue
        res = max(res, float(np.linalg.norm(acc)))
    return res


@dataclass
class HomogeneousSolution:
    solution: TrigPoly
    eigenvalue: complex
    frequency: float
    vector: np.ndarray
    residual: float

    def to_dict(self) -> dict:
        return {"frequency": self.frequency, "eigenvalue": _encode(self.eigenvalue),
                "vector": [_encode(z) for z in self.vector], "residual": self.residual,
                "solution": self.solution.to_dict()}


def _display_vector(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())
    return v / v[nz[-1]]


def homogeneous_solutions(B, A: MatrixOp, tol: float = UNIT_CIRCLE_TOL,
                          check_times=None) -> list[HomogeneousSolution]:
    """Character solutions ``exp(i s t) v`` of ``B phi = A phi``.

    One solution per simple resonance point and eigenvector. Each is
    substituted back on ``check_times`` (default ``-10..10``) and the sup
    residual recorded; eigenvectors are scaled so their last nonzero entry is 1.

    Raises
    ------
    ValueError
        If ``A`` is not diagonalizable or a resonance point is a multiple root.
    """
    if not A.diagonalizable:
        raise ValueError("A is not diagonalizable; polynomial-in-t solutions are not constructed")
    rs = resonance_set(B, A, tol)
    domain = INTEGER if isinstance(B, RecurrenceOp) else REAL
    times = np.arange(-10, 11, dtype=float) if check_times is None else np.asarray(check_times, float)
    out = []
    for s, mult, lam in rs.points:
        if mult > 1:
            raise ValueError(f"resonance point {s} is a multiple root; not a simple character solution")
        for v in A.eigenvectors(lam).T:
            v = _display_vector(v)
            tp = TrigPoly([(s, GroupPoly([v], domain))], domain)
            if isinstance(B, DiffOp):
                lhs = np.zeros((times.size, A.dim), dtype=complex)
                d = tp
                for b in B.coeffs:
                    lhs += b * d(times)
                    d = derivative_trigpoly(d)
            else:
                lhs = sum(b * tp(times + n) for b, n in B.terms)
            res = lhs - tp(times) @ A.entries.T
            out.append(HomogeneousSolution(tp, lam, s, v, float(np.abs(res).max())))
    return out


# ---------------------------------------------------------------------------
# power growth checks


def _power_norms(x: np.ndarray, horizon: int) -> np.ndarray:
    norms = np.empty(horizon + 1)
    p = np.eye(x.shape[0], dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(horizon + 1):
            norms[n] = np.linalg.norm(p, 2) if np.all(np.isfinite(p)) else np.inf
            if not np.isfinite(norms[n]):
                norms[n:] = np.inf
                break
            p = p @ x
    return norms


def _tail_slope(norms: np.ndarray) -> float:
    H = norms.size - 1
    a, b = norms[H // 10], norms[H]
    if not (np.isfinite(a) and np.isfinite(b)) or a <= 0 or b <= 0:
        return math.inf
    return math.log(b / a) / math.log(H / (H // 10))


def gelfand_hille_check(x, N: int, horizon: int = 10**4) -> dict:
    """Check double power domination by ``(1+|n|)^N``, ``sigma(x) = {1}`` and ``(x-e)^{N+1} = 0``.

    Domination means every ``||x^n||``, ``|n| <= horizon``, is finite and the
    log-log slope over the last decade is at most ``N + 0.25`` in both
    directions.
    """
    op = x if isinstance(x, MatrixOp) else MatrixOp(x)
    if horizon < 1000:
        raise ValueError("horizon must be at least 1000")
    a = np.array(op.entries)
    forward = _power_norms(a, horizon)
    if np.linalg.svd(a, compute_uv=False)[-1] <= 1e-14 * max(1.0, op.norm):
        backward = np.full(horizon + 1, np.inf)
    else:
        backward = _power_norms(np.linalg.inv(a), horizon)
    n = np.arange(horizon + 1)
    w = (1.0 + n) ** N
    slope = max(_tail_slope(forward), _tail_slope(backward))
    dominated = bool(np.all(np.isfinite(forward)) and np.all(np.isfinite(backward))
                     and slope <= N + SLOPE_MARGIN)
    spec = op.spectrum
    spectrum_is_one = all(abs(lam - 1) <= SPECTRUM_TOL for lam, _ in spec)
    e = np.eye(op.dim)
    d = a - e
    nil = float(np.linalg.norm(np.linalg.matrix_power(d, N + 1), 2))
    sharp = float(np.linalg.norm(np.linalg.matrix_power(d, N), 2)) if N > 0 else float(np.linalg.norm(e, 2))
    scale = max(1.0, op.norm)
    nilpotent = nil <= NILPOTENT_TOL * scale ** (N + 1)
    with np.errstate(invalid="ignore", over="ignore"):
        sup_ratio = float(max((forward / w).max(), (backward / w).max()))
    return {
        "N": N, "horizon": horizon,
        "dominated": dominated, "tail_slope": slope, "sup_ratio": sup_ratio,
        "spectrum": [{"eigenvalue": _encode(lam), "multiplicity": m} for lam, m in spec],
        "spectrum_is_one": spectrum_is_one,
        "nilpotent_norm": nil, "nilpotent": bool(nilpotent),
        "sharpness_norm": sharp, "sharp": bool(sharp > NILPOTENT_TOL * scale ** N),
        "premises_hold": bool(dominated and spectrum_is_one),
        "consistent": bool(not (dominated and spectrum_is_one) or nilpotent),
        "forward_norms": forward, "backward_norms": backward,
    }


def kt_check(x, a=None, horizon: int = 10**4, decay_tol: float = 1e-6) -> dict:
    """Decay curves for powers of ``x`` against a slowly varying sequence ``a``.

    ``a`` has length ``horizon + 2`` (default all ones). The case is read off
    ``sigma(x)`` on the unit circle: ``"empty"`` asserts ``||x^n||/a(n) -> 0``,
    ``"one"`` asserts ``||x^{n+1} - x^n||/a(n) -> 0``, ``"other"`` only reports.
    An asserted curve has decayed when its final value is at most ``decay_tol``;
    ``decay_index`` is the first ``n`` after which it stays there.

    Raises
    ------
    ValueError
        If ``a(n+1)/a(n)`` deviates from 1 by more than 1e-2 over the last decade.
    """
    op = x if isinstance(x, MatrixOp) else MatrixOp(x)
    a = np.ones(horizon + 2) if a is None else np.asarray(a, dtype=float)
    if a.shape != (horizon + 2,) or np.any(a <= 0):
        raise ValueError("a must be a positive array of length horizon + 2")
    lo = (horizon + 1) - (horizon + 1) // 10
    ratio = a[lo + 1:] / a[lo:-1]
    if np.abs(ratio - 1).max() > RATIO_TOL:
        raise ValueError("a(n+1)/a(n) does not approach 1 within tolerance")
    m = np.array(op.entries)
    powers = np.empty(horizon + 2)
    diffs = np.empty(horizon + 1)
    p = np.eye(op.dim, dtype=complex)
    for n in range(horizon + 2):
        q = p @ m
        powers[n] = np.linalg.norm(p, 2)
        if n <= horizon:
            diffs[n] = np.linalg.norm(q - p, 2)
        p = q
    pc = powers[:horizon + 1] / a[:horizon + 1]
    dc = diffs / a[:horizon + 1]
    on_circle = [lam for lam, _ in op.spectrum if abs(abs(lam) - 1) <= UNIT_CIRCLE_TOL]
    if not on_circle:
        case = "empty"
    elif all(abs(lam - 1) <= UNIT_CIRCLE_TOL for lam in on_circle):
        case = "one"
    else:
        case = "other"
    half = horizon // 2
    dominated = bool(pc[half:].max() <= GROWTH_FACTOR * pc[:half].max())
    curve = {"empty": pc, "one": dc}.get(case)
    if curve is None:
        asserted, decayed, idx = False, None, None
    else:
        asserted = True
        decayed = bool(curve[-1] <= decay_tol)
        above = np.flatnonzero(curve > decay_tol)
        idx = int(above[-1] + 1) if above.size else 0
        if idx > horizon:
            idx = None
    return {"case": case, "dominated": dominated, "asserted": asserted, "decayed": decayed,
            "decay_index": idx, "power_curve": pc, "difference_curve": dc,
            "spectrum": [{"eigenvalue": _encode(lam), "multiplicity": mm} for lam, mm in op.spectrum],
            "passed": bool(dominated and (not asserted or decayed))}


def group_nilpotency_check(A, N: int, s: float, horizon: float = 1e3, samples: int = 2001) -> dict:
    """Check ``||exp(tA)|| <= c (1+|t|)^N``, ``sigma(A) = {is}`` and ``(A - is)^{N+1} = 0``.

    Domination means every sampled exponential is finite and the sup of
    ``||exp(tA)|| / (1+|t|)^N`` over ``|t| > horizon/2`` is within a factor
    1.5 of the sup over ``|t| <= horizon/2``.
    """
    op = A if isinstance(A, MatrixOp) else MatrixOp(A)
    spec = op.spectrum
    scale = max(1.0, op.norm)
    on_axis = all(abs(lam.real) <= SPECTRUM_TOL * scale for lam, _ in spec)
    t = np.linspace(-horizon, horizon, samples)
    norms = np.empty(samples)
    overflow = False
    for i, ti in enumerate(t):
        try:
            norms[i] = np.linalg.norm(linalg.expm(ti * op.entries), 2)
        except OverflowError:
            norms[i] = np.inf
            overflow = True
    w = (1.0 + np.abs(t)) ** N
    ratio = norms / w
    inner = np.abs(t) <= horizon / 2
    dominated = bool(not overflow and np.all(np.isfinite(norms))
                     and ratio[~inner].max() <= GROWTH_FACTOR * ratio[inner].max())
    single = all(abs(lam - 1j * s) <= SPECTRUM_TOL * scale for lam, _ in spec)
    d = np.array(op.entries) - 1j * s * np.eye(op.dim)
    nil = float(np.linalg.norm(np.linalg.matrix_power(d, N + 1), 2))
    nilpotent = nil <= NILPOTENT_TOL * scale ** (N + 1)
    return {
        "N": N, "s": s, "horizon": horizon,
        "spectrum_on_imaginary_axis": on_axis,
        "dominated": dominated, "overflow": overflow, "constant": float(ratio.max()),
        "spectrum_is_single": single,
        "nilpotent_norm": nil, "nilpotent": bool(nilpotent),
        "premises_hold": bool(on_axis and dominated and single),
        "consistent": bool(not (on_axis and dominated and single) or nilpotent),
        "times": t, "norms": norms,
    }
