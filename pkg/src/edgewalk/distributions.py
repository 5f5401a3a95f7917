"""Isotropic samplers and empirical checks of the regularity assumptions.

Every sampler has population covariance exactly ``I`` (``Colored`` has ``Sigma``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import PreconditionError
from .symmat import SymMatrix, eigendecompose

DEFAULT_PARETO_ALPHA = 4.5
BATCH_ROWS = 8192


class Kind(str, Enum):
    GAUSSIAN = "gaussian"
    CUBE = "cube"
    SPHERE = "sphere"
    PARETO = "pareto_product"
    AUBRUN = "aubrun"
    COUPON = "basis_coupon"
    COLORED = "colored"


# Nominal strong-regularity pairs (C, eta) where one is used downstream.
KNOWN_PARAMS = {Kind.GAUSSIAN: (3.0, 2.0)}


@dataclass(frozen=True, eq=False)
class SamplerSpec:
    """A named isotropic distribution on ``R^dim``.

    ``alpha`` is the Pareto tail index (``pareto_product`` only). ``base`` and
    ``sigma`` describe a ``colored`` distribution ``Sigma^{1/2} Z`` with ``Z`` drawn
    from ``base``.
    """

    kind: Kind
    dim: int
    alpha: float | None = None
    base: "SamplerSpec | None" = None
    sigma: np.ndarray | None = None
    known_params: tuple[float, float] | None = None
    _sigma_sqrt: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if int(self.dim) != self.dim or self.dim < 1:
            raise PreconditionError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        if kind is Kind.PARETO:
            alpha = DEFAULT_PARETO_ALPHA if self.alpha is None else float(self.alpha)
            if not alpha > 2:
                raise PreconditionError(f"pareto_product needs alpha > 2 for finite variance, got {alpha!r}")
            object.__setattr__(self, "alpha", alpha)
        if kind is Kind.COLORED:
            if self.base is None or self.sigma is None:
                raise PreconditionError("colored sampler needs both base and sigma")
            if self.base.dim != self.dim or self.base.kind is Kind.COLORED:
                raise PreconditionError("colored base must be a non-colored sampler of the same dimension")
            sigma = SymMatrix(np.asarray(self.sigma, dtype=float))
            if sigma.dim != self.dim:
                raise PreconditionError("sigma has the wrong dimension")
            spec = eigendecompose(sigma)
            if spec.lambda_min <= 0:
                raise PreconditionError("sigma must be positive definite")
            q = spec.eigenvectors
            object.__setattr__(self, "sigma", sigma.entries)
            object.__setattr__(self, "_sigma_sqrt", (q * np.sqrt(spec.eigenvalues)) @ q.T)
        if self.known_params is None and kind in KNOWN_PARAMS:
            object.__setattr__(self, "known_params", KNOWN_PARAMS[kind])

    @property
    def sigma_sqrt(self) -> np.ndarray | None:
        return self._sigma_sqrt

    def with_dim(self, dim: int) -> "SamplerSpec":
        """Same distribution family in another dimension (not for ``colored``)."""
        if self.kind is Kind.COLORED:
            raise PreconditionError("cannot change the dimension of a colored sampler")
        return replace(self, dim=dim)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "dim": self.dim}
        if self.kind is Kind.PARETO:
            d["alpha"] = self.alpha
        if self.kind is Kind.COLORED:
            d["base"] = self.base.to_dict()
            d["sigma"] = np.asarray(self.sigma).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerSpec":
        base = d.get("base")
        return cls(
            kind=Kind(d["kind"]),
            dim=d["dim"],
            alpha=d.get("alpha"),
            base=cls.from_dict(base) if base is not None else None,
            sigma=None if d.get("sigma") is None else np.asarray(d["sigma"], dtype=float),
        )


def _sphere(rng: np.random.Generator, size: int, n: int) -> np.ndarray:
    g = rng.standard_normal((size, n))
    return g * (math.sqrt(n) / np.linalg.norm(g, axis=1, keepdims=True))


def draw_batch(spec: SamplerSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent samples as the rows of a ``size x dim`` array."""
    n = spec.dim
    kind = spec.kind
    if kind is Kind.GAUSSIAN:
        return rng.standard_normal((size, n))
    if kind is Kind.CUBE:
        s3 = math.sqrt(3.0)
        return rng.uniform(-s3, s3, (size, n))
    if kind is Kind.SPHERE:
        return _sphere(rng, size, n)
    if kind is Kind.PARETO:
        a = spec.alpha
        w = rng.random((size, n))
        w = (1.0 - w) ** (-1.0 / a)  # Pareto(a), scale 1; 1 - U avoids U = 0
        sign = np.where(rng.random((size, n)) < 0.5, -1.0, 1.0)
        return sign * w / math.sqrt(a / (a - 2.0))
    if kind is Kind.AUBRUN:
        xi = rng.standard_normal((size, 1))
        return xi * _sphere(rng, size, n)
    if kind is Kind.COUPON:
        out = np.zeros((size, n))
        k = rng.integers(0, n, size)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        out[np.arange(size), k] = sign * math.sqrt(n)
        return out
    if kind is Kind.COLORED:
        z = draw_batch(spec.base, rng, size)
        return z @ spec.sigma_sqrt.T
    raise PreconditionError(f"unknown sampler kind {kind!r}")


def draw(spec: SamplerSpec, rng: np.random.Generator) -> np.ndarray:
    """One sample."""
    return draw_batch(spec, rng, 1)[0]


def haar_frame(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """An ``n x k`` orthonormal frame whose span is a Haar-random ``k``-subspace.

    Classical Gram-Schmidt on a Gaussian matrix, run twice for re-orthogonalization.
    """
    if not 1 <= k <= n:
        raise PreconditionError(f"need 1 <= k <= n, got k={k}, n={n}")
    g = rng.standard_normal((n, k))
    q = np.empty_like(g)
    for j in range(k):
        v = g[:, j].copy()
        for _ in range(2):
            if j:
                v -= q[:, :j] @ (q[:, :j].T @ v)
        q[:, j] = v / np.linalg.norm(v)
    return q


def projected_sq_norms(samples: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """``||P x||^2`` for each row ``x``, with ``P`` the projection onto ``span(frame)``."""
    return np.sum((samples @ frame) ** 2, axis=1)


# --------------------------------------------------------------------------- (SR) tails


@dataclass(frozen=True)
class TailEstimate:
    rank_k: int
    thresholds: np.ndarray
    empirical_probs: np.ndarray
    fitted_C: float
    fitted_eta: float
    sample_count: int
    status: str = "ok"


def estimate_sr_tail(
    spec: SamplerSpec,
    rank_k: int,
    sample_count: int,
    thresholds,
    rng: np.random.Generator,
    batch_size: int = 10_000,
) -> TailEstimate:
    """Empirical ``P{||P X||^2 > t}`` over Haar-random rank-``k`` projections.

    A fresh projection is drawn for every batch. The tail is fitted by least
    squares of ``log P`` against ``log t`` over thresholds above ``k`` with a
    non-zero count: the slope is ``-(1 + eta)`` and ``fitted_C`` is the smallest
    level with ``P(t) <= C t^(-1-eta)`` at every fitted threshold.
    """
    if not 1 <= rank_k <= spec.dim:
        raise PreconditionError(f"need 1 <= rank_k <= {spec.dim}, got {rank_k}")
    t = np.sort(np.asarray(thresholds, dtype=float))
    counts = np.zeros(t.size, dtype=np.int64)
    done = 0
    while done < sample_count:
        m = min(batch_size, sample_count - done)
        frame = haar_frame(rng, spec.dim, rank_k)
        r = projected_sq_norms(draw_batch(spec, rng, m), frame)
        counts += np.sum(r[:, None] > t[None, :], axis=0)
        done += m
    probs = counts / float(sample_count)
    use = (t > rank_k) & (counts > 0)
    if np.count_nonzero(use) < 2:
        return TailEstimate(rank_k, t, probs, math.nan, math.nan, sample_count, "tail below resolution")
    lt, lp = np.log(t[use]), np.log(probs[use])
    slope, _ = np.polyfit(lt, lp, 1)
    eta = -slope - 1.0
    C = float(np.max(probs[use] * t[use] ** (1.0 + eta)))
    return TailEstimate(rank_k, t, probs, C, float(eta), sample_count)


# --------------------------------------------------------------------------- (WR) moments


def estimate_wr_moment(
    spec: SamplerSpec,
    eta: float,
    direction_count: int,
    sample_count: int,
    rng: np.random.Generator,
) -> float:
    """``max_x mean |<X, x>|^(2+eta)`` over random unit and coordinate directions.

    ``direction_count`` may be 0, leaving only the coordinate directions.
    """
    if not eta > 0:
        raise PreconditionError("eta must be positive")
    n = spec.dim
    g = rng.standard_normal((n, direction_count))
    dirs = np.hstack([g / np.linalg.norm(g, axis=0, keepdims=True), np.eye(n)])
    total = np.zeros(dirs.shape[1])
    done = 0
    while done < sample_count:
        m = min(BATCH_ROWS, sample_count - done)
        total += np.sum(np.abs(draw_batch(spec, rng, m) @ dirs) ** (2.0 + eta), axis=0)
        done += m
    return float(np.max(total / sample_count))


# --------------------------------------------------------------------------- thin shell

_THIN_SHELL_KINDS = (Kind.CUBE, Kind.PARETO, Kind.GAUSSIAN)


def thin_shell_check(
    spec: SamplerSpec,
    p: float,
    ranks,
    sample_count: int,
    rng: np.random.Generator,
    projection: str = "haar",
) -> np.ndarray:
    """``mean |‖PX‖^2 - k|^p / k^(p/2)`` for one rank-``k`` projection per ``k``.

    ``projection="coordinate"`` projects onto the first ``k`` coordinates instead
    of a Haar-random subspace.
    """
    if spec.kind not in _THIN_SHELL_KINDS:
        raise PreconditionError(f"thin shell check needs a product sampler, got {spec.kind.value}")
    if p < 2:
        raise PreconditionError("p must be at least 2")
    if spec.kind is Kind.PARETO and not spec.alpha > 2 * p:
        raise PreconditionError(f"pareto alpha={spec.alpha} must exceed 2p={2 * p} for a finite 2p-th moment")
    ratios = []
    for k in ranks:
        k = int(k)
        if projection == "haar":
            frame = haar_frame(rng, spec.dim, k)
        elif projection == "coordinate":
            if not 1 <= k <= spec.dim:
                raise PreconditionError(f"need 1 <= k <= {spec.dim}")
            frame = np.eye(spec.dim)[:, :k]
        else:
            raise PreconditionError(f"unknown projection {projection!r}")
        total = 0.0
        done = 0
        while done < sample_count:
            m = min(BATCH_ROWS, sample_count - done)
            r = projected_sq_norms(draw_batch(spec, rng, m), frame)
            total += float(np.sum(np.abs(r - k) ** p))
            done += m
        ratios.append(total / sample_count / k ** (p / 2))
    return np.asarray(ratios)
