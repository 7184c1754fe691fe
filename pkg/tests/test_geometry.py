import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sixdmm.geometry import (
    DegenerateGeometryError,
    ElementLayout,
    RotationAngles,
    axis_rotation,
    combined_rotation,
    direction_angles,
    pairwise_distances,
    rotate_layout,
    wave_vector,
)

angle = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
point = st.lists(st.floats(-50, 50, allow_nan=False), min_size=3, max_size=3)


def explicit_product(yaw, pitch, roll):
    # plain triple loop, independent of numpy's matmul
    A, B, C = axis_rotation("z", yaw), axis_rotation("y", pitch), axis_rotation("x", roll)
    AB = [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)] for i in range(3)]
    return np.array([[sum(AB[i][k] * C[k][j] for k in range(3)) for j in range(3)]
                     for i in range(3)])


class TestAxisRotation:
    def test_zero_is_identity(self):
        assert np.array_equal(axis_rotation("z", 0.0), np.eye(3))

    def test_quarter_turn_about_z(self):
        expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
        np.testing.assert_allclose(axis_rotation("z", np.pi / 2), expected, atol=1e-12)

    def test_half_turn_about_x(self):
        np.testing.assert_allclose(axis_rotation("x", np.pi), np.diag([1.0, -1, -1]), atol=1e-12)

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            axis_rotation("y", bad)

    def test_unknown_axis(self):
        with pytest.raises(ValueError):
            axis_rotation("w", 0.1)


class TestCombinedRotation:
    def test_zero_angles(self):
        np.testing.assert_allclose(combined_rotation(RotationAngles(0, 0, 0)), np.eye(3), atol=0)

    def test_yaw_only_matches_z(self):
        np.testing.assert_allclose(combined_rotation((np.pi / 2, 0, 0)),
                                   axis_rotation("z", np.pi / 2), atol=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(angle, angle, angle)
    def test_matches_explicit_product(self, y, p, r):
        np.testing.assert_allclose(combined_rotation((y, p, r)), explicit_product(y, p, r),
                                   atol=1e-12, rtol=0)

    def test_batched_shape(self, rng):
        a = rng.uniform(-3, 3, (5, 7, 3))
        R = combined_rotation(a)
        assert R.shape == (5, 7, 3, 3)
        np.testing.assert_allclose(R[2, 3], combined_rotation(a[2, 3]), atol=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(angle, angle, angle)
    def test_orthonormal(self, y, p, r):
        R = combined_rotation((y, p, r))
        assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12
        assert abs(np.linalg.det(R) - 1) < 1e-10


class TestWaveVector:
    def test_pole(self):
        np.testing.assert_allclose(wave_vector(0.0, 1.234), [0, 0, 1], atol=1e-15)

    def test_x_axis(self):
        np.testing.assert_allclose(wave_vector(np.pi / 2, 0.0), [1, 0, 0], atol=1e-12)

    def test_y_axis(self):
        np.testing.assert_allclose(wave_vector(np.pi / 2, np.pi / 2), [0, 1, 0], atol=1e-12)

    @given(angle, angle)
    def test_unit_norm(self, t, p):
        assert abs(np.linalg.norm(wave_vector(t, p)) - 1) < 1e-12


class TestDirectionAngles:
    def test_plus_z(self):
        assert direction_angles([0, 0, 0], [0, 0, 5]) == (0.0, 0.0)

    def test_plus_x(self):
        t, p = direction_angles([0, 0, 0], [3, 0, 0])
        assert t == pytest.approx(np.pi / 2, abs=1e-12)
        assert p == pytest.approx(0.0, abs=1e-12)

    def test_minus_z_azimuth_zero(self):
        t, p = direction_angles([1, 2, 3], [1, 2, -4])
        assert t == pytest.approx(np.pi) and p == 0.0

    def test_coincident(self):
        with pytest.raises(DegenerateGeometryError):
            direction_angles([1, 1, 1], [1, 1, 1])

    @settings(max_examples=300)
    @given(point, point)
    def test_round_trip(self, a, b):
        d = np.subtract(b, a)
        if np.linalg.norm(d) < 1e-6:
            return
        u = d / np.linalg.norm(d)
        np.testing.assert_allclose(wave_vector(*direction_angles(a, b)), u, atol=1e-12)


class TestRotateLayout:
    def test_identity(self, rng):
        pos = rng.random((6, 3))
        layout = ElementLayout(pos, np.array([0.5, 0.5, 0.5]))
        np.testing.assert_allclose(rotate_layout(layout, (0, 0, 0)), pos, atol=0)

    def test_center_is_fixed(self):
        c = np.array([0.3, 0.4, 0.5])
        layout = ElementLayout(c[None, :], c)
        np.testing.assert_allclose(rotate_layout(layout, (1.0, -0.4, 2.2)), c[None, :],
                                   atol=1e-15)

    def test_two_elements_quarter_yaw(self):
        pos = np.array([[0.1, 0.2, 0.3], [0.7, 0.1, 0.9]])
        layout = ElementLayout(pos, np.array([0.5, 0.5, 0.5]))
        out = rotate_layout(layout, (np.pi / 2, 0, 0))
        before = np.sqrt(np.sum((pos[0] - pos[1]) ** 2))
        after = np.sqrt(np.sum((out[0] - out[1]) ** 2))
        assert after == pytest.approx(before, abs=1e-12)

    def test_formula(self, rng):
        pos = rng.random((4, 3))
        c = np.array([0.5, 0.5, 0.5])
        a = (0.3, -0.7, 1.9)
        R = explicit_product(*a)
        expected = (pos - c) @ R.T + c
        np.testing.assert_allclose(rotate_layout(ElementLayout(pos, c), a), expected, atol=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(angle, angle, angle)
    def test_isometry(self, y, p, r):
        pos = np.random.default_rng(7).random((8, 3))
        layout = ElementLayout(pos, np.array([0.5, 0.5, 0.5]))
        np.testing.assert_allclose(pairwise_distances(rotate_layout(layout, (y, p, r))),
                                   pairwise_distances(pos), atol=1e-10)
