import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from endowrist_bench.transforms import (RigidTransform, exp_so3, is_rotation, nearest_rotation, rot_x, rot_y,
                                        rot_z, skew)

angles = st.floats(-360, 360, allow_nan=False)
vec = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3)


def test_elementary_rotations():
    assert np.allclose(rot_z(90) @ [1, 0, 0], [0, 1, 0])
    assert np.allclose(rot_x(90) @ [0, 1, 0], [0, 0, 1])
    assert np.allclose(rot_y(90) @ [0, 0, 1], [1, 0, 0])


@given(angles, angles, angles)
def test_products_are_rotations(a, b, c):
    assert is_rotation(rot_z(a) @ rot_x(b) @ rot_y(c))


def test_skew_is_cross_product():
    a, b = np.array([1.0, 2, 3]), np.array([-2.0, 0.5, 4])
    assert np.allclose(skew(a) @ b, np.cross(a, b))


def test_exp_so3_matches_axis_angle():
    assert np.allclose(exp_so3([0, 0, np.pi / 2]), rot_z(90))
    assert np.allclose(exp_so3([0, 0, 0]), np.eye(3))


@given(angles, angles)
def test_nearest_rotation_projects(a, b):
    R = rot_x(a) @ rot_z(b)
    assert np.allclose(nearest_rotation(R + 1e-4 * np.ones((3, 3))), R, atol=1e-3)
    assert is_rotation(nearest_rotation(np.diag([1.0, 2.0, -3.0])))


@settings(max_examples=50)
@given(angles, angles, vec, vec)
def test_rigid_transform_algebra(a, b, t, p):
    g = RigidTransform(rot_z(a) @ rot_x(b), np.array(t))
    h = RigidTransform(rot_y(b), np.array(t)[::-1])
    p = np.array(p)
    assert np.allclose(g.inverse().apply(g.apply(p)), p, atol=1e-9)
    assert np.allclose(g.compose(h).apply(p), g.apply(h.apply(p)), atol=1e-9)
    back = RigidTransform.from_dict(g.to_dict())
    assert np.allclose(back.R, g.R) and np.allclose(back.t, g.t)


def test_rejects_non_rotation():
    with pytest.raises(ValueError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
