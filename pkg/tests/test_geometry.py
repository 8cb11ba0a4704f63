import math

import numpy as np
import pytest

from demokit.geometry import (
    quat_equivalent,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    quat_rotate,
)


def test_rotation_composition_matches_sequential_rotation():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a1 = rng.normal(size=3); a1 /= np.linalg.norm(a1)
        a2 = rng.normal(size=3); a2 /= np.linalg.norm(a2)
        q1 = quat_from_axis_angle(tuple(a1), rng.uniform(0, 2 * math.pi))
        q2 = quat_from_axis_angle(tuple(a2), rng.uniform(0, 2 * math.pi))
        v = tuple(rng.normal(size=3))
        lhs = quat_rotate(quat_mul(q1, q2), v)
        rhs = quat_rotate(q1, quat_rotate(q2, v))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_rotation_preserves_length():
    rng = np.random.default_rng(1)
    axis = rng.normal(size=3); axis /= np.linalg.norm(axis)
    q = quat_from_axis_angle(tuple(axis), 1.234)
    v = tuple(rng.normal(size=3))
    assert np.linalg.norm(quat_rotate(q, v)) == pytest.approx(np.linalg.norm(v))


def test_negated_quaternions_are_equivalent():
    q = quat_normalize((0.3, -0.5, 0.7, 0.1))
    neg = tuple(-c for c in q)
    assert quat_equivalent(q, neg)
    assert quat_equivalent(q, q)
    other = quat_from_axis_angle((0, 0, 1), 0.5)
    assert not quat_equivalent(q, other)


def test_normalize_rejects_zero():
    with pytest.raises(ValueError):
        quat_normalize((0, 0, 0, 0))
