"""Lower/upper Stieltjes transforms and soft spectral edges.

For a sensitivity ``phi > 0`` the lower soft edge ``l_phi(A)`` solves
``sum_i 1/(lambda_i - l) = phi`` below the spectrum and the upper soft edge
``u_phi(A)`` solves ``sum_i 1/(u - lambda_i) = phi`` above it.

The edges are located in an offset frame: with ``b = n/phi`` we write
``l = w - b`` or ``u = w + b``. The defining equation becomes
``sum_i r_i / (b + r_i) = 0`` with ``r_i = lambda_i - w`` (lower) or
``r_i = w - lambda_i`` (upper), which has no cancellation even when ``b`` dwarfs
the spectrum (``phi`` of order ``1e-13`` gives ``b`` of order ``1e14``). The offset
``w`` always lies between the mean eigenvalue and the relevant extreme one, so
edge increments under rank-one updates are differences of moderate numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NearSingularResolventError, NonConvergenceError, PreconditionError
from .symmat import SymmetricSpectrum

BISECTION_RTOL = 1e-13
NEWTON_STEPS = 5
MAX_BISECTIONS = 400


class Side(str, Enum):
    LOWER = "lower"
    UPPER = "upper"


def _check_phi(phi: float) -> float:
    phi = float(phi)
    if not (math.isfinite(phi) and phi > 0.0):
        raise PreconditionError(f"sensitivity phi must be finite and positive, got {phi!r}")
    return phi


@dataclass(frozen=True)
class SoftEdgeQuery:
    side: Side
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "phi", _check_phi(self.phi))


@dataclass(frozen=True)
class SoftEdgeResult:
    """A located soft edge.

    ``edge`` is the plain floating-point edge. ``base`` (``n/phi``) and ``offset``
    describe it exactly as ``offset - base`` (lower) or ``offset + base`` (upper);
    :meth:`gaps` uses that split to produce the distances to the eigenvalues at
    full relative precision.
    """

    side: Side
    phi: float
    edge: float
    transform_value_at_edge: float
    bracket_width_at_termination: float
    base: float
    offset: float

    def gaps(self, spec: SymmetricSpectrum) -> np.ndarray:
        """Positive distances ``lambda_i - l`` (lower) or ``u - lambda_i`` (upper)."""
        return self.base + _signed_offsets(self.side, spec.eigenvalues, self.offset)


def _signed_offsets(side: Side, lam: np.ndarray, w: float) -> np.ndarray:
    return lam - w if side is Side.LOWER else w - lam


def lower_stieltjes(spec: SymmetricSpectrum, ell: float) -> float:
    """``tr (A - l I)^{-1}`` for ``l`` strictly below the spectrum."""
    if not ell < spec.lambda_min:
        raise PreconditionError(f"lower transform needs ell < lambda_min = {spec.lambda_min!r}, got {ell!r}")
    return float(np.sum(1.0 / (spec.eigenvalues - ell)))


def upper_stieltjes(spec: SymmetricSpectrum, u: float) -> float:
    """``tr (u I - A)^{-1}`` for ``u`` strictly above the spectrum."""
    if not u > spec.lambda_max:
        raise PreconditionError(f"upper transform needs u > lambda_max = {spec.lambda_max!r}, got {u!r}")
    return float(np.sum(1.0 / (u - spec.eigenvalues)))


def stieltjes(spec: SymmetricSpectrum, side: Side | str, point: float) -> float:
    if Side(side) is Side.LOWER:
        return lower_stieltjes(spec, point)
    return upper_stieltjes(spec, point)


def soft_edge(spec: SymmetricSpectrum, q: SoftEdgeQuery) -> SoftEdgeResult:
    """Locate ``l_phi(A)`` or ``u_phi(A)``.

    Bisection on a certified bracket of the offset, then at most five Newton
    steps with the analytic derivative. The bracket endpoints come from
    ``1/(lambda_min - l) <= m(l) <= n/(lambda_min - l)`` (and its mirror) together
    with Jensen's inequality, which places the offset between the mean eigenvalue
    and the extreme eigenvalue on the requested side.
    """
    side, phi = q.side, q.phi
    lam = spec.eigenvalues
    n = lam.size
    b = n / phi
    mean = float(np.mean(lam))
    if side is Side.LOWER:
        lo, hi = spec.lambda_min, min(mean, spec.lambda_min + (n - 1) / phi)
        sign = -1.0  # F decreases in w
    else:
        lo, hi = max(mean, spec.lambda_max - (n - 1) / phi), spec.lambda_max
        sign = 1.0
    lo, hi = min(lo, hi), max(lo, hi)

    def F(w):
        r = _signed_offsets(side, lam, w)
        return float(np.sum(r / (b + r)))

    def dF(w):
        r = _signed_offsets(side, lam, w)
        return sign * float(np.sum(b / (b + r) ** 2))

    # Orient so that g(w) = sign * F(w) is increasing, with g(lo) <= 0 <= g(hi).
    iters = 0
    while True:
        width = hi - lo
        edge_scale = 1.0 + abs(0.5 * (lo + hi)) + b
        if width <= BISECTION_RTOL * edge_scale:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sign * F(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        iters += 1
        if iters > MAX_BISECTIONS:
            raise NonConvergenceError(
                f"soft edge bisection did not converge (side={side.value}, phi={phi!r}, n={n}, "
                f"bracket=[{lo!r}, {hi!r}])"
            )
    width = hi - lo
    w = 0.5 * (lo + hi)
    for _ in range(NEWTON_STEPS):
        f = F(w)
        if f == 0.0:
            break
        d = dF(w)
        if d == 0.0:
            break
        step = f / d
        w_new = w - step
        if not (lo - width <= w_new <= hi + width) or w_new == w:
            break
        w = w_new

    gaps = b + _signed_offsets(side, lam, w)
    if np.any(gaps <= 0.0):
        raise NonConvergenceError(f"soft edge landed inside the spectrum (side={side.value}, phi={phi!r})")
    value = float(np.sum(1.0 / gaps))
    edge = w - b if side is Side.LOWER else w + b
    return SoftEdgeResult(
        side=side,
        phi=phi,
        edge=float(edge),
        transform_value_at_edge=value,
        bracket_width_at_termination=float(width),
        base=float(b),
        offset=float(w),
    )


def lower_edge(spec: SymmetricSpectrum, phi: float) -> SoftEdgeResult:
    return soft_edge(spec, SoftEdgeQuery(Side.LOWER, phi))


def upper_edge(spec: SymmetricSpectrum, phi: float) -> SoftEdgeResult:
    return soft_edge(spec, SoftEdgeQuery(Side.UPPER, phi))


def sherman_morrison_transform(spec: SymmetricSpectrum, x, u: float) -> float:
    """Upper transform of ``A + x x^T`` at ``u`` from the spectrum of ``A`` alone.

    ``m_{A+xx^T}(u) = m_A(u) + x^T(uI-A)^{-2}x / (1 - x^T(uI-A)^{-1}x)``.
    """
    if not u > spec.lambda_max:
        raise PreconditionError(f"need u > lambda_max(A) = {spec.lambda_max!r}, got {u!r}")
    c = spec.coefficients(x)
    g = u - spec.eigenvalues
    r1 = float(np.sum(c / g))
    r2 = float(np.sum(c / g**2))
    denom = 1.0 - r1
    if abs(denom) <= 1e-12:
        raise NearSingularResolventError(f"resolvent pole: 1 - x^T(uI-A)^{{-1}}x = {denom:.3e}")
    return float(np.sum(1.0 / g)) + r2 / denom
