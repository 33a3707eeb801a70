import numpy as np
import pytest
from hypothesis import given, strategies as st

from headctl.errors import NonDiagonal
from headctl.refmodel import (POSE_FROM_R, RefModel, advance, decode_reference, default_Am, encode_reference,
                              forced_response, ref_derivative)

A = 1334.0 / 1705.0
poses = st.lists(st.floats(-100, 100), min_size=3, max_size=3)


def test_default_Am_constants():
    assert np.array_equal(default_Am(), np.diag([-A] * 3))
    assert np.exp(-A * 5.0) == pytest.approx(0.02, abs=1e-3)
    assert np.log(50) / 5 == pytest.approx(A, abs=2e-5)


def test_encoding_roundtrip():
    r = encode_reference([14.0, 1.6, 45.0])
    assert np.array_equal(r, [14.0, 14.0, 1.6, 1.6, 45.0, 45.0])
    assert np.allclose(decode_reference(r), [14.0, 1.6, 45.0])


def test_B_m_definition():
    m = RefModel()
    assert np.allclose(m.B_m, -m.A_m @ POSE_FROM_R)


def test_derivative_examples():
    m = RefModel()
    r = encode_reference([3.0, -1.0, 7.0])
    assert np.allclose(ref_derivative(m, r, POSE_FROM_R @ r), 0.0, atol=1e-15)
    assert np.allclose(ref_derivative(m, np.zeros(6), [1.0, 0, 0]), [-A, 0, 0])
    rng = np.random.default_rng(3)
    y, r = rng.standard_normal(3), rng.standard_normal(6)
    assert np.allclose(ref_derivative(m, r, y), -A * y + A * (POSE_FROM_R @ r), atol=1e-15)


def test_forced_response_examples():
    m = RefModel()
    y0 = np.array([2.5, 0.25, 35.0])
    r = encode_reference([14.0, 1.6, 45.0])
    assert np.array_equal(forced_response(m, y0, r, 0.0), y0)
    p = np.array([14.0, 1.6, 45.0])
    y5 = forced_response(m, np.zeros(3), r, 5.0)
    assert np.all(np.abs(y5 - p) <= 0.02 * np.abs(p) + 1e-12)
    y1 = forced_response(RefModel(A_m=np.diag([-np.log(50) / 5] * 3)), [1.0, 0, 0], np.zeros(6), 1.0)
    assert y1[0] == pytest.approx(np.exp(-np.log(50) / 5), abs=1e-15)
    assert forced_response(m, [1.0, 0, 0], np.zeros(6), 1.0)[0] == pytest.approx(0.45730501031417725, abs=1e-15)


def test_forced_response_errors():
    m = RefModel(A_m=np.array([[-1.0, 0.1, 0], [0, -1.0, 0], [0, 0, -1.0]]))
    with pytest.raises(NonDiagonal):
        forced_response(m, np.zeros(3), np.zeros(6), 1.0)
    with pytest.raises(ValueError):
        forced_response(RefModel(), np.zeros(3), np.zeros(6), -1.0)
    with pytest.raises(ValueError):
        RefModel(A_m=np.diag([-1.0, 0.0, -1.0]))


@given(poses, poses, st.floats(0, 20), st.floats(0, 20))
def test_semigroup(y0, pose, t1, t2):
    m = RefModel()
    r = encode_reference(pose)
    direct = forced_response(m, y0, r, t1 + t2)
    two = forced_response(m, forced_response(m, y0, r, t1), r, t2)
    assert np.allclose(direct, two, rtol=1e-12, atol=1e-12)


@given(poses)
def test_steady_state_is_pose(pose):
    m = RefModel()
    y = forced_response(m, np.zeros(3), encode_reference(pose), 200.0)
    assert np.allclose(y, pose, rtol=1e-12, atol=1e-12)


def test_advance():
    m = RefModel(y_m=np.array([1.0, 2.0, 3.0]))
    m2 = advance(m, encode_reference([0, 0, 0]), 0.1)
    assert m2.t == pytest.approx(0.1)
    assert np.allclose(m2.y_m, np.exp(-0.1 * A) * np.array([1.0, 2.0, 3.0]))
