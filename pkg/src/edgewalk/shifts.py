"""Feasible shifts of the soft edges under a rank-one update ``A -> A + x x^T``.

Lower side (edge ``l`` below the spectrum, gaps ``g_i = lambda_i - l``)::

    q1(d, x) = x^T (A - l - d)^{-1} x
    q2(d, x) = x^T (A - l - d)^{-2} x / tr (A - l - d)^{-2}

Upper side (edge ``u`` above the spectrum, gaps ``g_i = u - lambda_i``)::

    Q1(D, x)  = x^T (u + D - A)^{-1} x
    Q2(D, x)  = x^T (u + D - A)^{-2} x / (m(u) - m(u + D))
    Q2'(D, x) = x^T (u + D - A)^{-2} x / tr (u + D - A)^{-2}

Every form is evaluated as a spectral sum over the eigenbasis of ``A``. The
``*_from_gaps`` helpers take the gaps directly so callers holding a
:class:`~edgewalk.stieltjes.SoftEdgeResult` can keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergenceError, PreconditionError
from .stieltjes import lower_stieltjes, upper_stieltjes
from .symmat import SymMatrix, SymmetricSpectrum, as_vec, eigendecompose, rank_one_add

ROOT_RTOL = 1e-12
MAX_DOUBLINGS = 60
FEASIBILITY_SLACK = 1e-9


@dataclass(frozen=True)
class LowerShiftParams:
    phi: float
    t: float

    def __post_init__(self):
        if not (self.phi > 0 and math.isfinite(self.phi)):
            raise PreconditionError(f"phi must be positive, got {self.phi!r}")
        if not 0.0 < self.t < 1.0:
            raise PreconditionError(f"t must lie in (0, 1), got {self.t!r}")


@dataclass(frozen=True)
class UpperShiftParams:
    phi: float
    tau: float

    def __post_init__(self):
        if not (self.phi > 0 and math.isfinite(self.phi)):
            raise PreconditionError(f"phi must be positive, got {self.phi!r}")
        if not 0.0 < self.tau < 0.5:
            raise PreconditionError(f"tau must lie in (0, 1/2), got {self.tau!r}")


# --------------------------------------------------------------------------- lower side


def lower_forms_from_gaps(c: np.ndarray, g: np.ndarray, delta: float) -> tuple[float, float]:
    h = g - delta
    if np.any(h <= 0.0):
        raise PreconditionError("need A > (ell + delta) I")
    inv = 1.0 / h
    inv2 = inv * inv
    return float(np.sum(c * inv)), float(np.sum(c * inv2) / np.sum(inv2))


def _lower_gaps(spec: SymmetricSpectrum, ell: float) -> np.ndarray:
    g = spec.eigenvalues - ell
    if np.any(g <= 0.0):
        raise PreconditionError(f"need A > ell I (lambda_min = {spec.lambda_min!r}, ell = {ell!r})")
    return g


def lower_forms(spec: SymmetricSpectrum, ell: float, delta: float, x) -> tuple[float, float]:
    """Return ``(q1(delta, x), q2(delta, x))``."""
    if delta < 0:
        raise PreconditionError("delta must be non-negative")
    return lower_forms_from_gaps(spec.coefficients(x), _lower_gaps(spec, ell), float(delta))


def explicit_lower_shift_from_gaps(c: np.ndarray, g: np.ndarray, params: LowerShiftParams) -> tuple[float, float, float]:
    """Return ``(delta, q1(0,x), q2(0,x))`` for the closed-form feasible lower shift."""
    q1, q2 = lower_forms_from_gaps(c, g, 0.0)
    t, phi = params.t, params.phi
    # Boundary values count as satisfied.
    if q1 <= t and q2 <= t / phi:
        return (1.0 - t) ** 3 * q2, q1, q2
    return 0.0, q1, q2


def explicit_lower_shift(spec: SymmetricSpectrum, ell: float, params: LowerShiftParams, x) -> float:
    """Closed-form feasible lower shift ``(1-t)^3 q2(0,x) 1{q1(0,x) <= t} 1{q2(0,x) <= t/phi}``.

    Requires ``A > ell I`` and ``m_A(ell) <= phi``.
    """
    g = _lower_gaps(spec, ell)
    m = float(np.sum(1.0 / g))
    if m > params.phi * (1.0 + 1e-10):
        raise PreconditionError(f"need m_A(ell) <= phi, got {m!r} > {params.phi!r}")
    delta, _, _ = explicit_lower_shift_from_gaps(spec.coefficients(x), g, params)
    return delta


@dataclass(frozen=True)
class LowerFeasibility:
    """Outcome of checking a candidate lower shift.

    ``barrier_condition`` is the sufficient condition ``q2(d,x)/d - q1(d,x) >= 1``
    (``None`` when ``d == 0``, for which feasibility is trivial). ``ordered`` is
    ``A > (l + d) I`` and ``transform_ok`` is the defining inequality
    ``m_{A+xx^T}(l + d) <= m_A(l)``.
    """

    delta: float
    ordered: bool
    barrier_condition: bool | None
    transform_ok: bool
    transform_before: float
    transform_after: float
    reasons: tuple[str, ...] = field(default=())

    @property
    def feasible(self) -> bool:
        return self.ordered and self.transform_ok

    @property
    def implication_ok(self) -> bool:
        return not self.barrier_condition or self.feasible

    @property
    def reason(self) -> str:
        return "; ".join(self.reasons)


def check_lower_feasibility(
    spec: SymmetricSpectrum,
    ell: float,
    delta: float,
    x,
    *,
    updated: SymmetricSpectrum | None = None,
    A: SymMatrix | None = None,
    slack: float = FEASIBILITY_SLACK,
) -> LowerFeasibility:
    """Check both the sufficient barrier condition and the direct definition.

    The direct side needs the spectrum of ``A + x x^T``; pass it as ``updated``,
    or pass ``A`` and it is computed here. Without either, ``A`` is rebuilt from
    ``spec``.
    """
    x = as_vec(x, spec.dim)
    g = _lower_gaps(spec, ell)
    before = float(np.sum(1.0 / g))
    if delta == 0.0:
        return LowerFeasibility(0.0, True, None, True, before, before)
    reasons = []
    ordered = bool(np.all(g - delta > 0.0))
    barrier = None
    if ordered:
        q1, q2 = lower_forms_from_gaps(spec.coefficients(x), g, delta)
        barrier = bool(q2 / delta - q1 >= 1.0)
        if not barrier:
            reasons.append("q2/delta - q1 < 1")
    else:
        reasons.append("A - (ell+delta)I not positive definite")
    if updated is None:
        base = A if A is not None else SymMatrix(spec.reconstruct())
        updated = eigendecompose(rank_one_add(base, x))
    point = ell + delta
    if ordered and updated.lambda_min > point:
        after = lower_stieltjes(updated, point)
        transform_ok = bool(after <= before * (1.0 + slack))
        if not transform_ok:
            reasons.append("m_{A+xx^T}(ell+delta) > m_A(ell)")
    else:
        after = math.inf
        transform_ok = False
    return LowerFeasibility(float(delta), ordered, barrier, transform_ok, before, after, tuple(reasons))


# --------------------------------------------------------------------------- upper side


def _upper_gaps(spec: SymmetricSpectrum, u: float) -> np.ndarray:
    g = u - spec.eigenvalues
    if np.any(g <= 0.0):
        raise PreconditionError(f"need A < u I (lambda_max = {spec.lambda_max!r}, u = {u!r})")
    return g


def q1_upper(c: np.ndarray, g: np.ndarray, D: float) -> float:
    return float(np.sum(c / (g + D)))


def q2_upper(c: np.ndarray, g: np.ndarray, D: float) -> float:
    """``Q2(D, x)``; the denominator ``m(u) - m(u+D)`` is summed as ``sum D/(g(g+D))``."""
    if D <= 0.0:
        return math.inf if np.any(c > 0.0) else 0.0
    h = g + D
    num = float(np.sum(c / (h * h)))
    if num == 0.0:
        return 0.0
    return num / float(np.sum(D / (g * h)))


def q2prime_upper(c: np.ndarray, g: np.ndarray, D: float) -> float:
    h2 = (g + D) ** -2
    return float(np.sum(c * h2) / np.sum(h2))


def upper_forms_from_gaps(c: np.ndarray, g: np.ndarray, D: float) -> tuple[float, float, float]:
    return q1_upper(c, g, D), q2_upper(c, g, D), q2prime_upper(c, g, D)


def upper_forms(spec: SymmetricSpectrum, u: float, delta: float, x) -> tuple[float, float, float]:
    """Return ``(Q1, Q2, Q2')`` at shift ``delta > 0``."""
    if not delta > 0:
        raise PreconditionError("upper forms need delta > 0")
    return upper_forms_from_gaps(spec.coefficients(x), _upper_gaps(spec, u), float(delta))


def _bisect_decreasing(f, level: float, lo: float, hi: float, what: str) -> float:
    """Smallest point in ``[lo, hi]`` with ``f <= level`` for decreasing ``f``.

    Assumes ``f(lo) > level >= f(hi)``; returns the upper end of the final
    bracket so the constraint holds at the returned point.
    """
    for _ in range(400):
        if hi - lo <= ROOT_RTOL * (1.0 + abs(hi)):
            return hi
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi
        if f(mid) <= level:
            hi = mid
        else:
            lo = mid
    raise NonConvergenceError(f"{what}: bisection did not converge on [{lo!r}, {hi!r}]")


def _double_until(f, level: float, start: float, what: str) -> tuple[float, float]:
    """Bracket ``(lo, hi)`` with ``f(lo) > level >= f(hi)`` by doubling from ``start``."""
    lo, hi = 0.0, start
    for _ in range(MAX_DOUBLINGS + 1):
        if f(hi) <= level:
            return lo, hi
        lo, hi = hi, 2.0 * hi
    raise NonConvergenceError(f"{what}: no bracket below 2^{MAX_DOUBLINGS} * {start!r}")


def delta1_from_gaps(c: np.ndarray, g: np.ndarray, tau: float) -> float:
    if q1_upper(c, g, 0.0) <= tau:
        return 0.0
    hi = float(np.sum(c)) / tau
    return _bisect_decreasing(lambda D: q1_upper(c, g, D), tau, 0.0, hi, "delta1")


def delta2_from_gaps(c: np.ndarray, g: np.ndarray, tau: float) -> float:
    if not np.any(c > 0.0):
        return 0.0
    level = 1.0 - tau
    f = lambda D: q2_upper(c, g, D)  # noqa: E731
    lo, hi = _double_until(f, level, 1.0, "delta2")
    return _bisect_decreasing(f, level, lo, hi, "delta2")


def delta1(spec: SymmetricSpectrum, u: float, tau: float, x) -> float:
    """Smallest ``D >= 0`` with ``Q1(D, x) <= tau``."""
    if not tau > 0:
        raise PreconditionError("tau must be positive")
    return delta1_from_gaps(spec.coefficients(x), _upper_gaps(spec, u), float(tau))


def delta2(spec: SymmetricSpectrum, u: float, tau: float, x) -> float:
    """Smallest ``D >= 0`` with ``Q2(D, x) <= 1 - tau``.

    ``Q2`` blows up as ``D -> 0+`` for ``x != 0``, so the result is positive unless
    ``x == 0``.
    """
    if not 0.0 < tau < 1.0:
        raise PreconditionError("tau must lie in (0, 1)")
    return delta2_from_gaps(spec.coefficients(x), _upper_gaps(spec, u), float(tau))


@dataclass(frozen=True)
class UpperFeasibility:
    """Outcome of checking a candidate upper shift ``D``.

    ``certified`` is the sufficient condition ``Q1 + Q2 <= 1``; ``below_edge`` is
    ``A + x x^T < (u + D) I`` and ``transform_ok`` is
    ``m_{A+xx^T}(u + D) <= m_A(u)``.
    """

    delta: float
    q1: float
    q2: float
    certified: bool
    below_edge: bool
    transform_ok: bool
    transform_before: float
    transform_after: float
    reasons: tuple[str, ...] = field(default=())

    @property
    def feasible(self) -> bool:
        return self.below_edge and self.transform_ok

    @property
    def implication_ok(self) -> bool:
        return not self.certified or (self.below_edge and self.transform_ok)

    @property
    def reason(self) -> str:
        return "; ".join(self.reasons)


def check_upper_feasibility(
    spec: SymmetricSpectrum,
    u: float,
    Delta: float,
    x,
    *,
    updated: SymmetricSpectrum | None = None,
    A: SymMatrix | None = None,
    slack: float = FEASIBILITY_SLACK,
) -> UpperFeasibility:
    """Check ``Q1 + Q2 <= 1`` and then both conclusions directly."""
    x = as_vec(x, spec.dim)
    g = _upper_gaps(spec, u)
    c = spec.coefficients(x)
    before = float(np.sum(1.0 / g))
    if not Delta > 0:
        raise PreconditionError("upper feasibility needs Delta > 0")
    q1 = q1_upper(c, g, Delta)
    q2 = q2_upper(c, g, Delta)
    certified = bool(q1 + q2 <= 1.0)
    reasons = [] if certified else ["Q1+Q2 > 1"]
    if updated is None:
        base = A if A is not None else SymMatrix(spec.reconstruct())
        updated = eigendecompose(rank_one_add(base, x))
    point = u + Delta
    below = bool(updated.lambda_max < point)
    if below:
        after = upper_stieltjes(updated, point)
        transform_ok = bool(after <= before * (1.0 + slack))
        if not transform_ok:
            reasons.append("m_{A+xx^T}(u+Delta) > m_A(u)")
    else:
        after = math.inf
        transform_ok = False
        reasons.append("A+xx^T not < (u+Delta)I")
    return UpperFeasibility(float(Delta), q1, q2, certified, below, transform_ok, before, after, tuple(reasons))


# --------------------------------------------------------------------------- minimal mu


def minimal_mu(xi, mu, K: float) -> float:
    """Least ``m >= 0`` with ``sum_i xi_i / (mu_i + m) <= K``."""
    xi = np.asarray(xi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if xi.size == 0 or mu.size == 0:
        raise PreconditionError("minimal_mu needs non-empty sequences")
    if xi.shape != mu.shape or xi.ndim != 1:
        raise PreconditionError("xi and mu must be 1-d sequences of equal length")
    if np.any(mu <= 0.0) or np.any(xi < 0.0):
        raise PreconditionError("mu must be positive and xi non-negative")
    if np.sum(1.0 / mu) > 1.0 + 1e-12:
        raise PreconditionError("need sum 1/mu_i <= 1")
    if not K > 0:
        raise PreconditionError("K must be positive")
    f = lambda m: float(np.sum(xi / (mu + m)))  # noqa: E731
    if f(0.0) <= K:
        return 0.0
    lo, hi = _double_until(f, K, 1.0, "minimal_mu")
    return _bisect_decreasing(f, K, lo, hi, "minimal_mu")
