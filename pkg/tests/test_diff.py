import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_chain, random_state, rel_err
from vjmstiff.chain import ChainModel, passive, rigid, rigid_axis, spring1
from vjmstiff.diff import fd_hessian, fd_jacobian, fd_validate, hessians, jacobians, wrench_jacobian
from vjmstiff.models import orthoglide_chain, planar_2r, single_spring

seeds = st.integers(0, 100_000)


class TestJacobians:
    def test_single_spring(self):
        jp = jacobians(single_spring(), [], [0.37])
        np.testing.assert_array_equal(jp.J_theta, [[1.0], [0], [0], [0], [0], [0]])
        assert jp.J_q.shape == (6, 0)

    def test_unit_lever(self):
        chain = ChainModel([passive("Rz"), rigid_axis("Tx", 1.0)])
        np.testing.assert_allclose(jacobians(chain, [0.0], []).J_q[:, 0], [0, 1, 0, 0, 0, 1], atol=1e-15)

    def test_orthoglide_posture_d(self, rng):
        chain, q0 = orthoglide_chain("D")
        theta = rng.uniform(-1e-3, 1e-3, chain.m)
        jp = jacobians(chain, q0, theta)
        J_fd = fd_jacobian(chain, q0, theta, step=1e-7)
        J = np.hstack([jp.J_q, jp.J_theta])
        for i in range(J.shape[1]):
            scale = max(np.abs(J[:, i]).max(), 1e-12)
            assert np.abs(J[:, i] - J_fd[:, i]).max() / scale < 1e-6

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            jacobians(planar_2r(), [0.0], np.zeros(4))


class TestHessians:
    def test_zero_load(self, rng):
        chain, q0 = orthoglide_chain("B")
        hs = hessians(chain, q0, rng.normal(size=chain.m) * 1e-3, np.zeros(6))
        assert not hs.full().any()

    @pytest.mark.parametrize("f,L", [(1.0, 1.0), (250.0, 0.31), (3.0, 2.5)])
    def test_axial_load_on_lever(self, f, L):
        chain = ChainModel([passive("Rz"), rigid_axis("Tx", L)])
        hs = hessians(chain, [0.0], [], np.array([-f, 0, 0, 0, 0, 0]))
        np.testing.assert_allclose(hs.H_qq, [[f * L]], rtol=1e-14)
        np.testing.assert_allclose(fd_hessian(chain, [0.0], [], [-f, 0, 0, 0, 0, 0]), [[f * L]], rtol=1e-6)

    def test_orthoglide_axial_load(self):
        chain, q0 = orthoglide_chain("A")
        errs = fd_validate(chain, q0, np.zeros(chain.m), np.array([100.0, 0, 0, 0, 0, 0]))
        assert max(errs.values()) < 1e-5

    def test_wrench_dimension(self):
        with pytest.raises(ValueError):
            hessians(single_spring(), [], [0.0], np.zeros(3))

    @given(seeds)
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        chain = random_chain(rng)
        q, theta = random_state(rng, chain)
        H = hessians(chain, q, theta, rng.normal(size=6) * 50).full()
        norm = np.linalg.norm(H)
        assert norm == 0 or np.linalg.norm(H - H.T) / norm < 1e-8

    @given(seeds, st.floats(-3, 3), st.floats(-3, 3))
    def test_linear_in_wrench(self, seed, a, b):
        rng = np.random.default_rng(seed)
        chain = random_chain(rng)
        q, theta = random_state(rng, chain)
        F1, F2 = rng.normal(size=6) * 10, rng.normal(size=6) * 10
        H = hessians(chain, q, theta, a * F1 + b * F2).full()
        ref = a * hessians(chain, q, theta, F1).full() + b * hessians(chain, q, theta, F2).full()
        assert rel_err(H, ref) < 1e-10 or np.abs(H - ref).max() < 1e-12

    @given(seeds)
    def test_symmetric_part_of_wrench_jacobian(self, seed):
        rng = np.random.default_rng(seed)
        chain = random_chain(rng)
        q, theta = random_state(rng, chain)
        F = rng.normal(size=6)
        A = wrench_jacobian(chain, q, theta, F)
        np.testing.assert_allclose(hessians(chain, q, theta, F).full(), 0.5 * (A + A.T), atol=1e-14)

    def test_wrench_jacobian_is_derivative_of_generalized_force(self, rng):
        # A[:, b] is the derivative of J^T F with respect to coordinate b
        chain = random_chain(rng, n_elements=10)
        q, theta = random_state(rng, chain)
        F = rng.normal(size=6) * 5
        A = wrench_jacobian(chain, q, theta, F)
        c0 = np.concatenate([q, theta])
        n, h = chain.n, 1e-6

        def gen_force(c):
            jp = jacobians(chain, c[:n], c[n:])
            return np.hstack([jp.J_q, jp.J_theta]).T @ F

        for b in range(c0.size):
            e = np.zeros_like(c0)
            e[b] = h
            col = (gen_force(c0 + e) - gen_force(c0 - e)) / (2 * h)
            np.testing.assert_allclose(A[:, b], col, atol=1e-7 * (1 + np.abs(col).max()))


class TestFdValidate:
    def test_rigid_only_exact(self):
        T = np.eye(4)
        T[:3, 3] = [0.2, 0.1, 0.0]
        errs = fd_validate(ChainModel([rigid(T)]), [], [], np.ones(6))
        assert all(v == 0.0 for v in errs.values())

    def test_single_spring(self):
        errs = fd_validate(single_spring(), [], [0.01], np.zeros(6))
        assert errs["J_theta"] < 1e-12

    @pytest.mark.parametrize("step", [1e-10, 1e-2])
    def test_step_range(self, step):
        with pytest.raises(ValueError):
            fd_validate(single_spring(), [], [0.0], np.zeros(6), step=step)

    @given(seeds)
    def test_random_chains(self, seed):
        rng = np.random.default_rng(seed)
        chain = random_chain(rng, n_elements=int(rng.integers(2, 10)))
        q, theta = random_state(rng, chain)
        errs = fd_validate(chain, q, theta, rng.normal(size=6) * 20)
        assert max(errs.values()) < 1e-5, errs

    def test_planar_with_passive_and_springs(self):
        chain = ChainModel([passive("Rz"), spring1("Rz", 50.0), rigid_axis("Tx", 0.5), spring1("Tx", 1e3), passive("Ry")])
        errs = fd_validate(chain, [0.3, -0.2], [0.01, 0.002], [3.0, -1.0, 0.5, 0.1, 0.2, -0.3])
        assert max(errs.values()) < 1e-5
