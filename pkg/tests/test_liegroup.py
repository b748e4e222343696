"""Exponential/log maps checked against an independent matrix-exponential
oracle (scipy scaling-and-squaring), plus group-law and distance properties."""

import numpy as np
import pytest
from scipy.linalg import expm

from ckreg.liegroup import (
    BranchCutError,
    Isometry,
    Twist,
    exp_twist,
    format_pose,
    hat,
    iso_distance,
    log_iso,
    parse_pose,
    rot_distance,
    trans_distance,
    vee,
)


def random_twist(rng, n=3, omega_max=3.0, v_max=2.0):
    if n == 3:
        omega = rng.normal(size=3)
        omega *= rng.uniform(0.0, omega_max) / max(np.linalg.norm(omega), 1e-30)
        v = rng.uniform(-v_max, v_max, 3)
    else:
        omega = rng.uniform(-omega_max, omega_max, 1)
        v = rng.uniform(-v_max, v_max, 2)
    return Twist(omega, v)


def expm_oracle(xi, t):
    """Matrix exponential of the homogeneous twist, independent route."""
    n = xi.n
    m = np.zeros((n + 1, n + 1))
    m[:n, :n] = xi.hat() * t
    m[:n, n] = xi.v * t
    return expm(m)


def test_hat_vee_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(50):
        w = rng.normal(size=3)
        assert np.array_equal(vee(hat(w)), w)
        m = hat(w)
        assert np.allclose(m, -m.T)
    c = np.array([0.3])
    assert np.array_equal(vee(hat(c)), c)


def test_exp_matches_matrix_exponential_oracle():
    rng = np.random.default_rng(11)
    for n in (3, 2):
        for _ in range(300):
            xi = random_twist(rng, n=n)
            t = rng.uniform(0.0, 2.0)
            h = exp_twist(xi, t)
            oracle = expm_oracle(xi, t)
            assert np.max(np.abs(h.matrix() - oracle)) < 1e-10


def test_exp_zero_rotation_limit():
    xi = Twist(np.zeros(3), np.array([1.0, -2.0, 0.5]))
    h = exp_twist(xi, 0.7)
    assert np.array_equal(h.r, np.eye(3))
    assert np.allclose(h.t, 0.7 * xi.v, atol=1e-15)


def test_exp_small_angle_branch_is_continuous():
    axis = np.array([1.0, 2.0, 2.0]) / 3.0
    v = np.array([0.4, -0.1, 0.8])
    below = exp_twist(Twist(axis * 0.999999e-8, v), 1.0)
    above = exp_twist(Twist(axis * 1.000001e-8, v), 1.0)
    assert np.max(np.abs(below.matrix() - above.matrix())) < 1e-12


def test_exp_one_parameter_subgroup():
    rng = np.random.default_rng(3)
    for _ in range(100):
        xi = random_twist(rng)
        t, s = rng.uniform(0.0, 1.0, 2)
        lhs = exp_twist(xi, t) @ exp_twist(xi, s)
        rhs = exp_twist(xi, t + s)
        assert np.max(np.abs(lhs.matrix() - rhs.matrix())) < 1e-12


def test_log_exp_roundtrip():
    rng = np.random.default_rng(5)
    for n in (3, 2):
        for _ in range(300):
            xi = random_twist(rng, n=n)
            back = log_iso(exp_twist(xi, 1.0))
            assert np.max(np.abs(back.omega - xi.omega)) < 1e-9
            assert np.max(np.abs(back.v - xi.v)) < 1e-9


def test_exp_log_roundtrip():
    rng = np.random.default_rng(13)
    for _ in range(200):
        h = exp_twist(random_twist(rng), 1.0)
        again = exp_twist(log_iso(h), 1.0)
        assert np.max(np.abs(h.matrix() - again.matrix())) < 1e-9


def test_log_branch_cut_raises():
    r = np.array(
        [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]
    )  # angle exactly pi about x
    with pytest.raises(BranchCutError):
        log_iso(Isometry(r, np.zeros(3)))


def test_log_near_branch_cut_raises():
    xi = Twist(np.array([np.pi - 1e-7, 0.0, 0.0]), np.zeros(3))
    with pytest.raises(BranchCutError):
        log_iso(exp_twist(xi, 1.0))


def test_compose_inverse_group_laws():
    rng = np.random.default_rng(17)
    for _ in range(100):
        h1 = exp_twist(random_twist(rng), 1.0)
        h2 = exp_twist(random_twist(rng), 1.0)
        e = h1 @ h1.inverse()
        assert np.max(np.abs(e.matrix() - np.eye(4))) < 1e-12
        x = rng.normal(size=3)
        assert np.allclose((h1 @ h2).act(x), h1.act(h2.act(x)), atol=1e-12)


def test_act_shapes_and_inverse_act():
    rng = np.random.default_rng(19)
    h = exp_twist(random_twist(rng), 1.0)
    pts = rng.normal(size=(40, 3))
    assert np.allclose(h.inverse_act(h.act(pts)), pts, atol=1e-12)
    one = h.act(pts[0])
    assert one.shape == (3,)
    assert np.allclose(one, h.act(pts)[0])


def test_rotation_stays_orthonormal_over_long_chains():
    rng = np.random.default_rng(23)
    h = Isometry.identity(3)
    step = exp_twist(random_twist(rng), 0.37)
    for _ in range(3000):
        h = h @ step
    n = h.n
    assert np.max(np.abs(h.r @ h.r.T - np.eye(n))) < 1e-12
    assert abs(np.linalg.det(h.r) - 1.0) < 1e-12


def test_rejects_non_rotation():
    bad = np.eye(3)
    bad[0, 0] = 1.5
    with pytest.raises(ValueError):
        Isometry(bad, np.zeros(3))
    refl = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        Isometry(refl, np.zeros(3))


def test_rot_distance_small_rotation():
    # relative rotation of 0.1 rad -> Frobenius norm sqrt(2) * 0.1
    xi = Twist(np.array([0.0, 0.0, 0.1]), np.zeros(3))
    h = exp_twist(xi, 1.0)
    assert rot_distance(h, Isometry.identity(3)) == pytest.approx(
        np.sqrt(2.0) * 0.1, abs=1e-12
    )


def test_distances_identity_and_symmetry():
    rng = np.random.default_rng(29)
    for _ in range(50):
        h1 = exp_twist(random_twist(rng), 1.0)
        h2 = exp_twist(random_twist(rng), 1.0)
        assert rot_distance(h1, h1) == 0.0
        assert trans_distance(h1, h1) < 1e-12
        assert rot_distance(h1, h2) == pytest.approx(rot_distance(h2, h1), abs=1e-12)
        assert trans_distance(h1, h2) == pytest.approx(
            trans_distance(h2, h1), abs=1e-12
        )


def test_iso_distance_pure_rotation_matches_rot_distance():
    rng = np.random.default_rng(31)
    for _ in range(50):
        w = rng.normal(size=3)
        w *= rng.uniform(0.1, 2.5) / np.linalg.norm(w)
        h = exp_twist(Twist(w, np.zeros(3)), 1.0)
        e = Isometry.identity(3)
        assert iso_distance(h, e) == pytest.approx(rot_distance(h, e), abs=1e-12)


def test_iso_distance_propagates_branch_cut():
    xi = Twist(np.array([np.pi - 1e-8, 0.0, 0.0]), np.array([0.1, 0.0, 0.0]))
    h = exp_twist(xi, 1.0)
    with pytest.raises(BranchCutError):
        iso_distance(h, Isometry.identity(3))


def test_planar_exp_log_against_oracle():
    rng = np.random.default_rng(37)
    for _ in range(100):
        xi = random_twist(rng, n=2)
        t = rng.uniform(0.0, 2.0)
        h = exp_twist(xi, t)
        assert np.max(np.abs(h.matrix() - expm_oracle(xi, t))) < 1e-10


def test_pose_text_roundtrip():
    rng = np.random.default_rng(41)
    for _ in range(50):
        h = exp_twist(random_twist(rng), 1.0)
        back = parse_pose(format_pose(h))
        assert np.max(np.abs(back.r - h.r)) < 1e-12
        assert np.max(np.abs(back.t - h.t)) < 1e-12


def test_pose_text_identity_form():
    line = format_pose(Isometry.identity(3))
    assert line.split() == ["0", "0", "0", "0", "0", "0", "1"]


def test_parse_pose_rejects_bad_lines():
    with pytest.raises(ValueError):
        parse_pose("1 2 3")
    with pytest.raises(ValueError):
        parse_pose("0 0 0 0 0 0 2")  # non-unit quaternion
