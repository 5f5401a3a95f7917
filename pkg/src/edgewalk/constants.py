"""Closed-form constants of the covariance-estimation theorems.

All quantities depend on the regularity pair ``(C, eta)``; the sensitivity
thresholds additionally depend on the accuracy ``eps`` and the split parameter
``tau`` of the upper shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PreconditionError


def _check_regularity(C: float, eta: float) -> None:
    if not (C > 0 and math.isfinite(C)):
        raise PreconditionError(f"C must be positive, got {C!r}")
    if not (eta > 0 and math.isfinite(eta)):
        raise PreconditionError(f"eta must be positive, got {eta!r}")


def phi1(C: float, eta: float, tau: float, eps: float) -> float:
    """Sensitivity below which the expected first upper shift is at most ``eps``."""
    _check_regularity(C, eta)
    return tau ** (1 + 1 / eta) * eps ** (1 / eta) / ((4 * C) ** (1 + 1 / eta) * (4 + 4 / eta) ** (1 + 3 / eta))


def phi2(C: float, eta: float, tau: float, eps: float) -> float:
    """Sensitivity below which the expected second upper shift is at most ``1 + eps``.

    Positive only for ``tau < eps/4``.
    """
    _check_regularity(C, eta)
    if not 0 < tau < eps / 4:
        raise PreconditionError(f"phi2 needs 0 < tau < eps/4 to be positive (tau={tau!r}, eps={eps!r})")
    return eps ** (2 / eta) * (eps - 4 * tau) / (128 * (2 * C) ** (2 / eta) * (4 + 6 / eta) ** (4 / eta))


def trace_sample_threshold(C: float, eta: float, eps: float) -> float:
    """Sample size beyond which ``E|mean(Z) - 1| <= eps`` for tails ``P{|Z|>t} <= C t^(-1-eta)``."""
    _check_regularity(C, eta)
    return (2 * C) ** (2 / eta) * (1 + 1 / eta) ** (2 / eta) / (eps / 2) ** (2 + 2 / eta)


def fixed_n_constant(C: float, eta: float) -> float:
    """``C1 = 512 (16C)^(1+2/eta) (6+6/eta)^(1+4/eta)``."""
    _check_regularity(C, eta)
    e = 1 / eta
    return 512 * (16 * C) ** (1 + 2 * e) * (6 + 6 * e) ** (1 + 4 * e)


def edge_bounds(C: float, eta: float, y: float) -> tuple[float, float]:
    """``(1 - C1 y^c, 1 + C1 (y + y^c))`` with ``c = eta/(2 eta + 2)``, for aspect ratio ``y = n/N``."""
    if not y > 0:
        raise PreconditionError(f"aspect ratio must be positive, got {y!r}")
    C1 = fixed_n_constant(C, eta)
    yc = y ** (eta / (2 * eta + 2))
    return 1.0 - C1 * yc, 1.0 + C1 * (y + yc)


@dataclass(frozen=True)
class TheoremConstants:
    C: float
    eta: float
    eps: float
    tau: float
    c_main: float
    c_lower: float
    c_upper: float
    c_lowerrankone: float
    c_upperrankone: float
    phi1: float
    phi2: float
    c_exponent: float
    C1: float
    c_trace: float

    @property
    def phi_lower(self) -> float:
        """Largest sensitivity allowed by the random lower shift theorem at ``eps``."""
        return self.c_lowerrankone * self.eps ** (1 + 2 / self.eta)

    @property
    def phi_upper(self) -> float:
        """Largest sensitivity allowed by the random upper shift theorem at ``eps``."""
        return self.c_upperrankone * self.eps ** (1 + 2 / self.eta)

    def phi1_at(self, tau: float, eps: float) -> float:
        return phi1(self.C, self.eta, tau, eps)

    def phi2_at(self, tau: float, eps: float) -> float:
        return phi2(self.C, self.eta, tau, eps)

    def n_main(self, n: int) -> float:
        """Sample size from the main theorem: ``C_main eps^(-2-2/eta) n``."""
        return self.c_main * self.eps ** (-2 - 2 / self.eta) * n

    def n_lower(self, n: int) -> float:
        return self.c_lower * self.eps ** (-2 - 2 / self.eta) * n

    def n_upper(self, n: int) -> float:
        return self.c_upper * self.eps ** (-2 - 2 / self.eta) * n

    def edge_bounds(self, y: float) -> tuple[float, float]:
        return edge_bounds(self.C, self.eta, y)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def compute_constants(C: float, eta: float, eps: float, tau: float | None = None) -> TheoremConstants:
    """Evaluate every theorem constant at ``(C, eta, eps, tau)``.

    ``tau`` defaults to ``eps/16``, the split used for the random upper shift.
    """
    _check_regularity(C, eta)
    if not 0 < eps < 1:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps!r}")
    if tau is None:
        tau = eps / 16
    e = 1 / eta
    return TheoremConstants(
        C=float(C),
        eta=float(eta),
        eps=float(eps),
        tau=float(tau),
        c_main=512 * (48 * C) ** (2 + 2 * e) * (6 + 6 * e) ** (1 + 4 * e),
        c_lower=40 * (10 * C) ** (2 * e),
        c_upper=512 * (16 * C) ** (1 + 2 * e) * (6 + 6 * e) ** (1 + 4 * e),
        c_lowerrankone=1 / (10 * (5 * C) ** (2 * e)),
        c_upperrankone=1 / (256 * (8 * C) ** (1 + 2 * e) * (6 + 6 * e) ** (1 + 4 * e)),
        phi1=phi1(C, eta, tau, eps),
        phi2=phi2(C, eta, tau, eps),
        c_exponent=eta / (2 * eta + 2),
        C1=fixed_n_constant(C, eta),
        c_trace=(4 * C) ** (2 + 2 * e) * (1 + e) ** (2 * e),
    )
