import numpy as np
import pytest

from edgewalk.distributions import Kind, SamplerSpec
from edgewalk.errors import PreconditionError
from edgewalk.shifts import LowerShiftParams, UpperShiftParams
from edgewalk.stieltjes import Side
from edgewalk.walk import barrier_walk, walk_samples

GAUSS = SamplerSpec(Kind.GAUSSIAN, 30)


def test_empty_walk_edges():
    lo = barrier_walk(GAUSS, 0, Side.LOWER, LowerShiftParams(0.5, 0.1), seed=1)
    up = barrier_walk(GAUSS, 0, "upper", UpperShiftParams(0.5, 0.1), seed=1)
    assert lo.edge == -60.0 and up.edge == 60.0
    assert lo.shift_log == [] and lo.step == 0


def test_lower_walk_self_consistency():
    st = barrier_walk(GAUSS, 3000, Side.LOWER, LowerShiftParams(0.05, 0.1), seed=11)
    inc, sh = st.increments(), st.explicit_shifts()
    assert np.all(inc >= 0) and np.all(sh >= 0)
    assert inc.mean() >= sh.mean() >= 0
    assert st.certificates_ok()
    assert st.spec.lambda_min / 3000 > st.edge / 3000
    g = st.edge_result.gaps(st.spec)
    assert abs(np.sum(1 / g) - 0.05) <= 1e-10 * 0.05
    assert abs(np.sum(1 / (st.spec.eigenvalues - st.edge)) - 0.05) <= 1e-10 * 0.05


def test_upper_walk_self_consistency():
    st = barrier_walk(GAUSS, 500, Side.UPPER, UpperShiftParams(0.05, 0.05), seed=12)
    inc = st.increments()
    assert np.all(inc >= 0)
    assert st.certificates_ok()
    assert all(r.increment <= r.explicit_shift + 1e-9 for r in st.shift_log)
    assert st.edge > st.spec.lambda_max
    assert all(r.delta1 is not None and r.delta2 is not None for r in st.shift_log)
    assert abs(np.sum(1 / (st.edge - st.spec.eigenvalues)) - 0.05) <= 1e-10 * 0.05


def test_walk_is_deterministic_and_matches_explicit_samples():
    a = barrier_walk(GAUSS, 20, Side.LOWER, LowerShiftParams(0.1, 0.2), seed=3, stream_id=4)
    b = barrier_walk(GAUSS, 20, Side.LOWER, LowerShiftParams(0.1, 0.2), seed=3, stream_id=4)
    assert [r.edge for r in a.shift_log] == [r.edge for r in b.shift_log]
    c = barrier_walk(GAUSS, 20, Side.LOWER, LowerShiftParams(0.1, 0.2), seed=3, stream_id=5)
    assert a.edge != c.edge


def test_jacobi_walk_agrees():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 6))
    a = walk_samples(X, "lower", LowerShiftParams(0.2, 0.2))
    b = walk_samples(X, "lower", LowerShiftParams(0.2, 0.2), eig_method="jacobi")
    assert a.edge == pytest.approx(b.edge, rel=1e-10)


def test_walk_errors():
    with pytest.raises(PreconditionError):
        barrier_walk(GAUSS, 5, Side.UPPER, LowerShiftParams(0.5, 0.1), seed=1)
    with pytest.raises(PreconditionError):
        barrier_walk(GAUSS, 5, Side.LOWER, LowerShiftParams(1.5, 0.1), seed=1)
    with pytest.raises(PreconditionError):
        barrier_walk(GAUSS, -1, Side.LOWER, LowerShiftParams(0.5, 0.1), seed=1)
