"""Barrier walks: soft edges of ``A_k = X_1 X_1^T + ... + X_k X_k^T`` along a sample.

Each step records the exact edge increment next to the explicit feasible shift
for that step, so the walk doubles as a certificate check: on the lower side
the increment must be at least the explicit ``delta``, on the upper side at most
``max(Delta1, Delta2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import SamplerSpec, draw_batch
from .errors import PreconditionError
from .rng import make_stream
from .shifts import (
    LowerShiftParams,
    UpperShiftParams,
    delta1_from_gaps,
    delta2_from_gaps,
    explicit_lower_shift_from_gaps,
    q1_upper,
    q2_upper,
)
from .stieltjes import Side, SoftEdgeQuery, SoftEdgeResult, soft_edge
from .symmat import SymMatrix, SymmetricSpectrum, eigendecompose

CERTIFICATE_SLACK = 1e-9


@dataclass(frozen=True)
class StepRecord:
    """One rank-one step.

    ``increment`` is the exact edge motion ``edge_k - edge_{k-1}`` and
    ``explicit_shift`` the closed-form feasible shift computed before the step.
    On the lower side ``form1``/``form2`` are ``q1(0,x)``/``q2(0,x)`` and
    ``indicators`` holds ``(q1 <= t, q2 <= t/phi)``. On the upper side they are
    ``Q1``/``Q2`` at the explicit shift, ``indicators`` holds
    ``(Delta1 >= Delta2, Q1 + Q2 <= 1)`` and ``delta1``/``delta2`` are set.
    """

    k: int
    edge: float
    increment: float
    explicit_shift: float
    form1: float
    form2: float
    indicators: tuple[bool, bool]
    certificate_ok: bool
    lambda_min: float
    lambda_max: float
    delta1: float | None = None
    delta2: float | None = None


@dataclass
class WalkState:
    step: int
    A: SymMatrix
    spec: SymmetricSpectrum
    edge_result: SoftEdgeResult
    side: Side
    phi: float
    shift_log: list[StepRecord] = field(default_factory=list)

    @property
    def edge(self) -> float:
        return self.edge_result.edge

    def increments(self) -> np.ndarray:
        return np.array([r.increment for r in self.shift_log])

    def explicit_shifts(self) -> np.ndarray:
        return np.array([r.explicit_shift for r in self.shift_log])

    def certificates_ok(self) -> bool:
        return all(r.certificate_ok for r in self.shift_log)


def _start(n: int, side: Side, phi: float) -> WalkState:
    A = SymMatrix.zeros(n)
    spec = eigendecompose(A)
    return WalkState(0, A, spec, soft_edge(spec, SoftEdgeQuery(side, phi)), side, phi)


def _side_of(params) -> Side:
    if isinstance(params, LowerShiftParams):
        return Side.LOWER
    if isinstance(params, UpperShiftParams):
        return Side.UPPER
    raise PreconditionError(f"unknown shift parameters {params!r}")


def walk_samples(samples: np.ndarray, side: Side | str, params, *, eig_method: str = "lapack") -> WalkState:
    """Run the walk over the rows of ``samples`` (an ``N x n`` array, ``N`` may be 0)."""
    side = Side(side)
    if _side_of(params) is not side:
        raise PreconditionError(f"parameters {type(params).__name__} do not match side {side.value}")
    phi = params.phi
    if not 0.0 < phi < 1.0:
        raise PreconditionError(f"walk needs phi in (0, 1), got {phi!r}")
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise PreconditionError("samples must be a 2-d array with one sample per row")
    n = samples.shape[1]
    state = _start(n, side, phi)
    query = SoftEdgeQuery(side, phi)
    entries = np.zeros((n, n))
    for k, x in enumerate(samples, start=1):
        spec, er = state.spec, state.edge_result
        c = spec.coefficients(x)
        g = er.gaps(spec)
        d1 = d2 = None
        if side is Side.LOWER:
            shift, f1, f2 = explicit_lower_shift_from_gaps(c, g, params)
            indicators = (bool(f1 <= params.t), bool(f2 <= params.t / phi))
        else:
            d1 = delta1_from_gaps(c, g, params.tau)
            d2 = delta2_from_gaps(c, g, params.tau)
            shift = max(d1, d2)
            if shift > 0.0:
                f1, f2 = q1_upper(c, g, shift), q2_upper(c, g, shift)
            else:
                f1 = f2 = 0.0
            indicators = (bool(d1 >= d2), bool(f1 + f2 <= 1.0))
        entries = entries + np.outer(x, x)
        A = SymMatrix(entries)
        new_spec = eigendecompose(A, eig_method)
        new_er = soft_edge(new_spec, query)
        increment = new_er.offset - er.offset
        slack = CERTIFICATE_SLACK * (1.0 + abs(shift) + abs(increment))
        if side is Side.LOWER:
            ok = bool(increment >= shift - slack)
        else:
            ok = bool(increment <= shift + slack)
        state.shift_log.append(
            StepRecord(
                k, new_er.edge, float(increment), float(shift), float(f1), float(f2), indicators, ok,
                new_spec.lambda_min, new_spec.lambda_max, d1, d2,
            )
        )
        state.step, state.A, state.spec, state.edge_result = k, A, new_spec, new_er
    return state


def barrier_walk(
    sampler: SamplerSpec,
    N: int,
    side: Side | str,
    params,
    seed: int,
    stream_id: int = 0,
    *,
    eig_method: str = "lapack",
) -> WalkState:
    """Draw ``N`` samples from stream ``(seed, stream_id)`` and walk along them.

    The soft edge is recomputed from a full eigendecomposition at every step.
    """
    if int(N) != N or N < 0:
        raise PreconditionError(f"N must be a non-negative integer, got {N!r}")
    rng = make_stream(seed, stream_id)
    samples = draw_batch(sampler, rng, int(N)) if N else np.zeros((0, sampler.dim))
    return walk_samples(samples, side, params, eig_method=eig_method)
