import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hconf._projection import lp_mass, project, saturate
from hconf.errors import InfeasibleConstraintError

vectors = st.lists(st.floats(-3.0, 5.0), min_size=2, max_size=12)


@settings(max_examples=60, deadline=None)
@given(vectors, st.sampled_from([3.0, 4.0]), st.floats(0.1, 20.0), st.one_of(st.none(), st.floats(0.5, 4.0)))
def test_projection_feasible_and_optimal(y, p, A, cap):
    y = np.array(y)
    rng = np.random.default_rng(len(y))
    w = rng.uniform(0.2, 2.0, y.size)
    x = project(y, w, p, A, cap)
    assert np.all(x >= 0)
    if cap is not None:
        assert np.all(x <= cap)
    assert lp_mass(x, w, p) <= A * (1 + 1e-10)
    # variational inequality against random feasible points
    for _ in range(10):
        z = rng.uniform(0, 1, y.size) * (cap if cap is not None else 3.0)
        z *= min(1.0, (A / max(lp_mass(z, w, p), 1e-300)) ** (1 / p))
        assert np.dot(w, (y - x) * (z - x)) <= 1e-7 * (1 + np.dot(w, y * y))


def test_projection_identity_inside():
    y = np.array([0.1, 0.2])
    assert np.array_equal(project(y, np.ones(2), 4.0, 10.0), y)


def test_saturate_reaches_area_with_cap():
    w = np.ones(5)
    f = saturate(np.array([1.0, 0.1, 0.1, 0.1, 0.0]), w, 4.0, 3.0, cap=1.0)
    assert lp_mass(f, w, 4.0) == pytest.approx(3.0, rel=1e-12)
    assert np.max(f) <= 1.0


def test_saturate_infeasible():
    with pytest.raises(InfeasibleConstraintError):
        saturate(np.ones(3), np.ones(3), 4.0, 10.0, cap=1.0)
