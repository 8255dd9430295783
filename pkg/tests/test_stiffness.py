import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import rel_err
from vjmstiff.analysis import stiffness_at_offset
from vjmstiff.chain import ChainModel, passive, rigid_axis, spring1
from vjmstiff.equilibrium import solve_equilibrium, unloaded_state
from vjmstiff.models import (
    AXIAL,
    POSTURES,
    orthoglide_chain,
    pinned_pendulum,
    planar_2r,
    series_springs,
    single_spring,
)
from vjmstiff.stiffness import aggregate_parallel, spring_block_eigs, stiffness_loaded, stiffness_unloaded


def axis_chain(axis: str, k: float = 1000.0) -> ChainModel:
    return ChainModel([spring1(ax, k) for ax in ("Tx", "Ty", "Tz", "Rx", "Ry", "Rz")] if axis == "all" else [spring1(axis, k)])


class TestUnloaded:
    def test_single_spring(self):
        res = stiffness_unloaded(single_spring(1000.0), [])
        assert res.K[0, 0] == pytest.approx(1000.0, rel=1e-12)
        assert res.singular  # the other five directions are rigid

    def test_series(self):
        res = stiffness_unloaded(series_springs(1000.0, 2000.0), [])
        assert res.K[0, 0] == pytest.approx(2000.0 / 3.0, rel=1e-12)

    def test_six_springs_is_diagonal(self):
        res = stiffness_unloaded(axis_chain("all", 50.0), [])
        np.testing.assert_allclose(res.K, 50.0 * np.eye(6), rtol=1e-12)
        assert not res.singular

    @pytest.mark.parametrize("posture", sorted(POSTURES))
    def test_orthoglide_axial_order_of_magnitude(self, posture):
        chain, q0 = orthoglide_chain(posture)
        k = stiffness_unloaded(chain, q0).directional(AXIAL)
        assert 1e5 < k < 1e8  # N/m

    def test_posture_a_near_reference(self):
        # assumed geometry gives about 3.3 kN/mm against a reference of 3.23 kN/mm
        chain, q0 = orthoglide_chain("A")
        k = stiffness_unloaded(chain, q0).directional(AXIAL)
        assert k == pytest.approx(3.228e6, rel=0.25)

    def test_collinear_passive_gives_zero_eigenvalue(self):
        chain = ChainModel([spring1("Tx", 1000.0), passive("Tx"), spring1("Ty", 500.0)])
        res = stiffness_unloaded(chain, [0.0])
        assert res.singular
        assert abs(res.K[0, 0]) < 1e-9


class TestLoaded:
    def test_zero_offset_equals_unloaded(self):
        chain, q0 = orthoglide_chain("A")
        state, loaded = stiffness_at_offset(chain, q0, np.zeros(6))
        assert not state.F.any()
        assert rel_err(loaded.K, stiffness_unloaded(chain, q0).K) < 1e-10

    def test_linear_spring_unchanged_under_load(self):
        chain = single_spring(1000.0)
        state, res = stiffness_at_offset(chain, [], 0.002 * AXIAL)
        assert res.mode == "loaded"
        assert res.K[0, 0] == pytest.approx(1000.0, rel=1e-12)

    @pytest.mark.parametrize("f", [1.0, 4.0, 8.0])
    def test_pinned_pendulum_geometric_softening(self, f):
        # lever of length L on a rotational spring k, tip free to rotate: K_yy = k/L^2 - f/L under compression f
        k, L, ka = 10.0, 1.0, 1000.0
        chain = pinned_pendulum(k=k, length=L, axial_k=ka)
        state, res = stiffness_at_offset(chain, [0.0], -(f / ka) * AXIAL)
        assert state.F[0] == pytest.approx(-f, rel=1e-9)
        assert res.K[1, 1] == pytest.approx(k / L**2 - f / L, rel=1e-9)

    def test_tension_stiffens(self):
        k, L, ka, f = 10.0, 1.0, 1000.0, 4.0
        _, res = stiffness_at_offset(pinned_pendulum(k, L, ka), [0.0], (f / ka) * AXIAL)
        assert res.K[1, 1] == pytest.approx(k / L**2 + f / L, rel=1e-9)

    def test_spring_block_eigs_shift_with_load(self):
        chain = pinned_pendulum(10.0, 1.0, 1000.0)
        state, _ = stiffness_at_offset(chain, [0.0], -0.004 * AXIAL)
        eigs = spring_block_eigs(chain, state)
        np.testing.assert_allclose(np.sort(eigs), [6.0, 1000.0], rtol=1e-9)

    def test_critical_spring_block_flagged(self):
        # compression equal to k/L makes the rotational spring block vanish
        chain = pinned_pendulum(10.0, 1.0, 1000.0)
        start = unloaded_state(chain, [0.0])
        state = solve_equilibrium(chain, start.pose.displaced(-0.01 * AXIAL), start)
        res = stiffness_loaded(chain, state)
        assert res.critical and np.isnan(res.K).all()

    def test_planar_symmetric(self, rng):
        chain = planar_2r()
        state, res = stiffness_at_offset(chain, [0.6, 0.9], [1e-3, -5e-4, 0, 0, 0, 0])
        assert res.asymmetry < 1e-8
        np.testing.assert_array_equal(res.K, res.K.T)


class TestAggregate:
    def test_single_chain_identity(self):
        res = stiffness_unloaded(planar_2r(), [0.6, 0.9])
        np.testing.assert_array_equal(aggregate_parallel([res]).K, res.K)

    def test_two_copies_double(self):
        res = stiffness_unloaded(planar_2r(), [0.6, 0.9])
        np.testing.assert_allclose(aggregate_parallel([res, res]).K, 2 * res.K)

    def test_three_orthogonal_axial_chains(self):
        parts = [stiffness_unloaded(axis_chain(ax, k), []) for ax, k in (("Tx", 100.0), ("Ty", 200.0), ("Tz", 300.0))]
        K = aggregate_parallel(parts).K
        np.testing.assert_allclose(K[:3, :3], np.diag([100.0, 200.0, 300.0]), rtol=1e-12, atol=1e-9)

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_parallel([])

    def test_frame_mismatch(self):
        a = stiffness_unloaded(planar_2r(), [0.6, 0.9])
        b = stiffness_unloaded(planar_2r(), [0.7, 0.9])
        with pytest.raises(ValueError, match="end-effector frame"):
            aggregate_parallel([a, b])

    def test_flags_propagate(self):
        a = stiffness_unloaded(single_spring(), [])
        b = stiffness_unloaded(axis_chain("all"), [])
        agg = aggregate_parallel([a, b])
        assert agg.singular and agg.mode == "unloaded"


@settings(max_examples=25)
@given(st.floats(-2e-3, 2e-3), st.sampled_from(sorted(POSTURES)))
def test_orthoglide_loaded_symmetric(offset, posture):
    chain, q0 = orthoglide_chain(posture)
    _, res = stiffness_at_offset(chain, q0, offset * AXIAL)
    if not res.critical:
        assert res.asymmetry < 1e-8
        np.testing.assert_array_equal(res.K, res.K.T)


@given(st.floats(0.5, 9.0))
def test_compression_softens_pendulum(f):
    chain = pinned_pendulum(10.0, 1.0, 1000.0)
    _, free = stiffness_at_offset(chain, [0.0], np.zeros(6))
    _, res = stiffness_at_offset(chain, [0.0], -(f / 1000.0) * AXIAL)
    assert res.K[1, 1] < free.K[1, 1]
