import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import naive_elementary, random_transform
from vjmstiff.se3 import (
    AXES,
    Pose,
    elementary,
    make_transform,
    pose_diff,
    rotation_log,
    rotation_log_batch,
    right_multiply_elementary,
    rotvec_to_matrix,
    spring_transform,
)

finite = st.floats(-3.0, 3.0, allow_nan=False)
small = st.floats(-0.4, 0.4, allow_nan=False)


class TestElementary:
    def test_zero_translation_is_identity(self):
        assert np.array_equal(elementary("Tx", 0.0), np.eye(4))

    def test_quarter_turn(self):
        p = elementary("Rz", np.pi / 2) @ np.array([1.0, 0.0, 0.0, 1.0])
        np.testing.assert_allclose(p[:3], [0.0, 1.0, 0.0], atol=1e-15)

    def test_pure_translation(self):
        p = elementary("Ty", 0.074) @ np.array([0.0, 0.0, 0.0, 1.0])
        np.testing.assert_array_equal(p[:3], [0.0, 0.074, 0.0])

    @pytest.mark.parametrize("kind", AXES)
    @pytest.mark.parametrize("value", [-1.3, 0.2, 2.9])
    def test_matches_longhand(self, kind, value):
        np.testing.assert_allclose(elementary(kind, value), naive_elementary(kind, value), atol=1e-15)

    @pytest.mark.parametrize("value", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, value):
        with pytest.raises(ValueError):
            elementary("Rx", value)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            elementary("Qx", 0.1)


class TestSpringTransform:
    def test_relaxed(self):
        assert np.array_equal(spring_transform(np.zeros(6)), np.eye(4))

    def test_translation_only(self):
        T = spring_transform([1.0, 2.0, 3.0, 0.0, 0.0, 0.0])
        np.testing.assert_array_equal(T[:3, 3], [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(T[:3, :3], np.eye(3))

    def test_product_order(self):
        theta = np.array([0.01, 0.02, 0.03, 0.1, 0.2, 0.3])
        ref = np.eye(4)
        for kind, v in zip(AXES, theta):
            ref = ref @ naive_elementary(kind, v)
        np.testing.assert_allclose(spring_transform(theta), ref, atol=1e-15)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            spring_transform(np.zeros(5))

    @given(st.lists(finite, min_size=3, max_size=3))
    def test_translation_inverse(self, t):
        theta = np.array([*t, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(spring_transform(theta) @ spring_transform(-theta), np.eye(4), atol=1e-14)

    def test_rotations_do_not_commute(self):
        theta = np.array([0.0, 0.0, 0.0, 0.3, 0.4, 0.5])
        assert not np.allclose(spring_transform(theta) @ spring_transform(-theta), np.eye(4))


class TestMakeTransform:
    def test_reorthonormalizes(self, rng):
        T = random_transform(rng)
        noisy = T.copy()
        noisy[:3, :3] += 1e-9 * rng.normal(size=(3, 3))
        R = make_transform(noisy)[:3, :3]
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-14)

    def test_rejects_reflection(self):
        M = np.diag([1.0, 1.0, -1.0, 1.0])
        with pytest.raises(ValueError, match="reflection"):
            make_transform(M)

    def test_rejects_bad_bottom_row(self):
        M = np.eye(4)
        M[3, 0] = 0.5
        with pytest.raises(ValueError, match="bottom row"):
            make_transform(M)

    @given(st.lists(st.tuples(st.sampled_from(AXES), finite), min_size=1, max_size=30))
    def test_composition_closure(self, factors):
        T = np.eye(4)
        for kind, v in factors:
            T = T @ elementary(kind, v)
        R = T[:3, :3]
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-10)
        assert abs(np.linalg.det(R) - 1.0) < 1e-10
        assert np.array_equal(T[3], [0.0, 0.0, 0.0, 1.0])


class TestPoseDiff:
    def test_identical(self, rng):
        p = Pose.from_matrix(random_transform(rng))
        np.testing.assert_allclose(pose_diff(p, p), np.zeros(6), atol=1e-15)

    def test_translation(self, rng):
        T = random_transform(rng)
        p1 = Pose.from_matrix(T)
        p2 = Pose(p1.position + [0.001, 0.0, 0.0], p1.orientation)
        np.testing.assert_allclose(pose_diff(p2, p1), [0.001, 0, 0, 0, 0, 0], atol=1e-15)

    def test_small_rotation(self, rng):
        p1 = Pose.from_matrix(random_transform(rng))
        p2 = Pose(p1.position, elementary("Rz", 1e-3)[:3, :3] @ p1.orientation)
        np.testing.assert_allclose(pose_diff(p2, p1)[3:], [0.0, 0.0, 1e-3], atol=1e-9)

    def test_half_turn_rejected(self):
        p1 = Pose(np.zeros(3), np.eye(3))
        p2 = Pose(np.zeros(3), elementary("Rx", np.pi)[:3, :3])
        with pytest.raises(ValueError, match="rotation too large for twist differencing"):
            pose_diff(p2, p1)

    @given(st.lists(small, min_size=6, max_size=6))
    def test_displaced_round_trip(self, twist):
        base = Pose(np.array([0.1, -0.2, 0.3]), elementary("Ry", 0.7)[:3, :3])
        np.testing.assert_allclose(pose_diff(base.displaced(twist), base), twist, atol=1e-12)

    @given(st.lists(st.floats(-1e-3, 1e-3), min_size=6, max_size=6))
    def test_antisymmetric_to_first_order(self, twist):
        a = Pose(np.zeros(3), elementary("Rz", 0.4)[:3, :3])
        b = a.displaced(twist)
        err = np.abs(pose_diff(a, b) + pose_diff(b, a)).max()
        assert err <= 10 * np.dot(twist, twist) + 1e-15


@given(st.lists(st.floats(-1.7, 1.7), min_size=3, max_size=3))
def test_rotvec_log_inverse(w):
    # angles stay below pi, where the logarithm is single valued
    np.testing.assert_allclose(rotation_log(rotvec_to_matrix(w)), w, atol=1e-9)


@pytest.mark.parametrize("kind", AXES)
def test_in_place_product_matches_matrix_product(kind, rng):
    T = random_transform(rng)
    expected = T @ elementary(kind, 0.37)
    right_multiply_elementary(T, kind, 0.37)
    np.testing.assert_allclose(T, expected, atol=1e-15)


def test_batched_log_matches_single(rng):
    R = np.stack([rotvec_to_matrix(rng.uniform(-1.5, 1.5, 3)) for _ in range(20)] + [np.eye(3)])
    expected = np.stack([rotation_log(r) for r in R])
    np.testing.assert_allclose(rotation_log_batch(R), expected, atol=1e-14)


def test_batched_log_rejects_half_turn():
    with pytest.raises(ValueError, match="rotation too large"):
        rotation_log_batch(elementary("Rx", np.pi)[None, :3, :3])
