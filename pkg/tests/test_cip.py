import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from parabolic_qr.cip import (
    CipIterationError, CipProblem, cip_iterate, default_boundary, default_initial, generate_cip_data,
    relative_difference,
)
from parabolic_qr.errors import ConfigurationError, DomainError, PreconditionError
from parabolic_qr.fields import FLUX_RATE, BoundaryFluxSeries, SpatialField, sample
from parabolic_qr.grid import GridSpec
from parabolic_qr.noise import NoiseSpec

SPEC = GridSpec(1.0, 12, 10, 0.2)
ONE = lambda x, y: np.ones(np.broadcast(x, y).shape)
DISK = lambda x, y: 1.0 + 2.0 * ((x**2 + y**2) < 0.3**2)


def test_relative_difference_examples():
    a = np.ones((3, 3))
    assert relative_difference(a, a) == 0.0
    assert relative_difference(2 * a, a) == 1.0
    with pytest.raises(DomainError):
        relative_difference(a, 0 * a)


@given(arrays(float, (4, 4), elements=st.floats(-10, 10)), arrays(float, (4, 4), elements=st.floats(0.5, 10)))
def test_relative_difference_loop_oracle(new, old):
    num = max(abs(new[i, j] - old[i, j]) for i in range(4) for j in range(4))
    den = max(abs(old[i, j]) for i in range(4) for j in range(4))
    assert relative_difference(new, old) == pytest.approx(num / den, rel=1e-15)


def test_fixed_point_at_background():
    F = generate_cip_data(ONE, SPEC, refinement=1)
    st_ = cip_iterate(CipProblem(SPEC, default_initial, default_boundary, F, n_star=3))
    assert np.allclose(st_.c_n.values, 1.0, atol=1e-8)
    assert all(e <= 1e-3 for e in st_.e_history)
    assert all(r == 0.0 for r in st_.residual_norms)


@pytest.mark.parametrize("rule", ["background", "increment", "fixed_residual"])
def test_rules_run_and_record(rule):
    F = generate_cip_data(DISK, SPEC, refinement=2)
    st_ = cip_iterate(CipProblem(SPEC, default_initial, default_boundary, F, n_star=3,
                                 update_rule=rule, keep_history=True))
    assert st_.n == 3 and len(st_.e_history) == 3 and len(st_.c_history) == 4
    assert len(st_.forward_changes) == 3 and len(st_.reports) == 3
    for k in range(1, 4):
        assert st_.e_history[k - 1] == relative_difference(st_.c_history[k], st_.c_history[k - 1])
    assert np.all(st_.u_n.values[:, :, 0] == 1.0)


def test_background_rule_adds_to_c0():
    F = generate_cip_data(DISK, SPEC, refinement=2)
    st_ = cip_iterate(CipProblem(SPEC, default_initial, default_boundary, F, c0=1.0, n_star=1))
    p0 = st_.c_n.values - 1.0
    assert np.max(np.abs(p0)) > 0.1


def test_history_trimmed_by_default():
    F = generate_cip_data(DISK, SPEC, refinement=1)
    st_ = cip_iterate(CipProblem(SPEC, default_initial, default_boundary, F, n_star=3))
    assert len(st_.c_history) == 2 and st_.c_history[-1] is st_.c_n


def test_first_update_points_at_inclusion():
    spec = GridSpec(1.0, 24, 20, 0.2)
    F = generate_cip_data(DISK, spec, refinement=4)
    st_ = cip_iterate(CipProblem(spec, default_initial, default_boundary, F, n_star=1, forward_refinement=2))
    c1 = st_.c_n.values
    X, Y = spec.mesh()
    assert c1[(X**2 + Y**2) < 0.3**2].mean() > c1[(X**2 + Y**2) > 0.6**2].mean() + 0.5


def test_noise_is_deterministic():
    F = generate_cip_data(DISK, SPEC, refinement=1)
    runs = [cip_iterate(CipProblem(SPEC, default_initial, default_boundary, F, n_star=2,
                                   noise=NoiseSpec(0.05, 3))).c_n.values for _ in range(2)]
    assert np.array_equal(*runs)


def test_validation():
    F = generate_cip_data(ONE, SPEC, refinement=1)
    g = sample(default_initial, SPEC)
    with pytest.raises(ConfigurationError):
        CipProblem(SPEC, g, default_boundary, F, update_rule="newton")
    with pytest.raises(ConfigurationError):
        CipProblem(SPEC, g, default_boundary, F, n_star=0)
    with pytest.raises(PreconditionError):
        CipProblem(SPEC, SpatialField(SPEC, np.zeros(SPEC.spatial_shape)), default_boundary, F)
    with pytest.raises(PreconditionError):
        CipProblem(SPEC, g, lambda x, y, t: 2 + 0 * x * y * t, F)
    with pytest.raises(PreconditionError):
        CipProblem(SPEC, g, default_boundary, BoundaryFluxSeries(SPEC, F.values, FLUX_RATE))
    with pytest.raises(ConfigurationError):
        CipProblem(SPEC, g, default_boundary, F, forward_refinement=2)
    with pytest.raises(DomainError):
        CipProblem(SPEC, g, np.ones((3, 3)), F)


def test_failure_carries_iteration():
    F = generate_cip_data(ONE, SPEC, refinement=1)
    with pytest.raises(CipIterationError) as info:
        cip_iterate(CipProblem(SPEC, default_initial, default_boundary, F, c0=1e6))
    assert info.value.iteration == 0 and isinstance(info.value.cause, ConfigurationError)
