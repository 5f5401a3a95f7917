"""Soft spectral edges, feasible rank-one shifts and sample covariance experiments."""

__version__ = "0.1.0"

from .constants import TheoremConstants, compute_constants, edge_bounds  # noqa: E402
from .distributions import SamplerSpec, draw, draw_batch  # noqa: E402
from .errors import (  # noqa: E402
    EdgewalkError,
    NearSingularResolventError,
    NonConvergenceError,
    PreconditionError,
)
from .estimator import ExperimentConfig, ExperimentResult, run_experiment, sample_covariance, spectral_error  # noqa: E402
from .rng import make_stream  # noqa: E402
from .shifts import LowerShiftParams, UpperShiftParams  # noqa: E402
from .stieltjes import Side, SoftEdgeQuery, SoftEdgeResult, soft_edge  # noqa: E402
from .symmat import SymMatrix, SymmetricSpectrum, eigendecompose  # noqa: E402
from .walk import WalkState, barrier_walk  # noqa: E402
