"""End-to-end acceptance checks for the registration and odometry stack.

One test per guarantee, each printing a one-line result with the measured
margin next to its bound.  Run with -v for the per-criterion pass/fail list.
The TUM smoke test needs a local copy of the fr1/desk sequence and skips
itself when the TUM_FR1_DESK_DIR environment variable is not set.
"""

import os
import time

import numpy as np
import pytest
import scipy.linalg

from ckreg.flow import (
    RegistrationConfig,
    gradient,
    metric_inner,
    metric_norm,
    register,
    taylor_poly,
)
from ckreg.liegroup import (
    Isometry,
    Twist,
    exp_twist,
    hat,
    rot_distance,
    trans_distance,
)
from ckreg.odometry import read_trajectory, relative_pose_errors, track_sequence
from ckreg.rgbd import TUM_FR1, associate, load_frame, read_image_index
from ckreg.rkhs import KernelParams, LabeledCloud, inner_product
from ckreg.synth import box_surface_cloud, perturbed_pair

TABLE_PARAMS = KernelParams(sigma=0.1, ell=0.15, sparsify_threshold=1e-3, label_scale=1e-4)


def dense_config():
    kernel = KernelParams(sigma=0.1, ell=0.15, sparsify_threshold=0.0, label_scale=1e-4)
    return RegistrationConfig(kernel=kernel)


def random_cloud(rng, n, dim, scale=0.3):
    return LabeledCloud(rng.normal(size=(n, dim)) * scale, rng.uniform(size=(n, 3)))


def random_isometry(rng, dim, angle=0.5, trans=0.3):
    if dim == 3:
        ax = rng.normal(size=3)
        ax /= np.linalg.norm(ax)
        omega = ax * rng.uniform(0, angle)
    else:
        omega = np.array([rng.uniform(-angle, angle)])
    return Isometry(exp_twist(Twist(omega, np.zeros(dim))).r, rng.normal(size=dim) * trans)


def unit_twist(rng, dim, scale=1.0):
    n_rot = 3 if dim == 3 else 1
    xi = Twist(rng.normal(size=n_rot), rng.normal(size=dim))
    nrm = np.sqrt(np.dot(xi.omega, xi.omega) + np.dot(xi.v, xi.v))
    return Twist(xi.omega / nrm * scale, xi.v / nrm * scale)


def test_gradient_matches_finite_differences():
    # 100 random cloud/pose/direction configurations, planar and spatial;
    # directional derivative vs central differences at t = 1e-6, rel < 1e-5
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    cfg = dense_config()
    worst = 0.0
    for trial in range(100):
        dim = 3 if trial % 2 == 0 else 2
        x = random_cloud(rng, int(rng.integers(4, 21)), dim)
        z = random_cloud(rng, int(rng.integers(4, 21)), dim)
        h = random_isometry(rng, dim)
        xi = unit_twist(rng, dim)
        analytic = metric_inner(gradient(x, z, h, cfg), xi, cfg)
        eps = 1e-6
        f_plus = inner_product(x, z, h @ exp_twist(xi, eps), cfg.kernel)
        f_minus = inner_product(x, z, h @ exp_twist(xi, -eps), cfg.kernel)
        fd = (f_plus - f_minus) / (2 * eps)
        rel = abs(fd - analytic) / max(abs(fd), abs(analytic))
        worst = max(worst, rel)
    elapsed = time.perf_counter() - start
    print(f"gradient vs finite differences: worst rel {worst:.2e} (<1e-5), {elapsed:.1f}s (<10s)")
    assert worst < 1e-5
    assert elapsed < 10.0


def test_identity_is_global_maximum():
    # X = Z: F(h) can never exceed F(identity), checked exactly over 1000
    # random poses with rotation up to 180 degrees and translation up to 1 m
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    cloud = box_surface_cloud(5, n=80)
    f_identity = inner_product(cloud, cloud, Isometry.identity(3), TABLE_PARAMS)
    min_margin = np.inf
    for _ in range(1000):
        ax = rng.normal(size=3)
        ax /= np.linalg.norm(ax)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        h = Isometry(
            exp_twist(Twist(ax * rng.uniform(0, np.pi), np.zeros(3))).r,
            direction * rng.uniform(0, 1.0) ** (1 / 3),
        )
        f_h = inner_product(cloud, cloud, h, TABLE_PARAMS)
        assert f_h <= f_identity
        min_margin = min(min_margin, f_identity - f_h)
    elapsed = time.perf_counter() - start
    print(f"identity global max: 1000/1000 below, min margin {min_margin:.2e}, {elapsed:.1f}s (<30s)")
    assert elapsed < 30.0


def test_exponential_matches_series_expm():
    # closed-form exponential vs scipy's dense series on 1000 random twists,
    # max entry error < 1e-10; the small-angle branch must join continuously
    rng = np.random.default_rng(303)
    worst = 0.0
    for trial in range(1000):
        dim = 3 if trial % 2 == 0 else 2
        n_rot = 3 if dim == 3 else 1
        xi = Twist(rng.normal(size=n_rot), rng.normal(size=dim))
        t = float(rng.uniform(-2.0, 2.0))
        g = exp_twist(xi, t)
        m = np.zeros((dim + 1, dim + 1))
        m[:dim, :dim] = hat(xi.omega)
        m[:dim, dim] = xi.v
        e = scipy.linalg.expm(m * t)
        err = max(np.abs(g.r - e[:dim, :dim]).max(), np.abs(g.t - e[:dim, dim]).max())
        worst = max(worst, err)
    assert worst < 1e-10

    ax = np.array([0.3, -0.5, 0.8])
    ax /= np.linalg.norm(ax)
    v = np.array([0.4, 0.1, -0.2])
    below = exp_twist(Twist(ax * 1e-8 * (1 - 1e-6), v), 1.0)
    above = exp_twist(Twist(ax * 1e-8 * (1 + 1e-6), v), 1.0)
    jump = max(np.abs(below.r - above.r).max(), np.abs(below.t - above.t).max())
    print(f"exponential map: worst vs expm {worst:.2e} (<1e-10), branch jump {jump:.2e} (<1e-12)")
    assert jump < 1e-12


def test_quartic_model_is_fourth_order():
    # remainder of the quartic step model must fall at fifth order: at least
    # 4.5 orders of magnitude per decade across t in {1e-2, 1e-3, 1e-4},
    # measured as the log-slope over the span (the t = 1e-4 remainder sits
    # a factor of a few above the eps*|F| rounding floor, so the span slope
    # is the statistic that stays meaningful in doubles) plus a clean first
    # decade; 20 random states
    rng = np.random.default_rng(404)
    cfg = dense_config()
    worst_span = np.inf
    worst_first = np.inf
    for _ in range(20):
        x = random_cloud(rng, 12, 3)
        z = random_cloud(rng, 12, 3)
        h = random_isometry(rng, 3, angle=0.3, trans=0.2)
        xi = unit_twist(rng, 3, scale=10.0)
        coeffs = taylor_poly(x, z, h, xi, cfg)
        f0 = inner_product(x, z, h, cfg.kernel)

        def remainder(t):
            ft = inner_product(x, z, h @ exp_twist(xi, t), cfg.kernel)
            return abs(ft - f0 - float(coeffs.value(t)))

        r2, r3, r4 = remainder(1e-2), remainder(1e-3), remainder(1e-4)
        assert r4 > 0.0
        worst_span = min(worst_span, np.log10(r2 / r4) / 2.0)
        worst_first = min(worst_first, np.log10(r2 / r3))
    print(
        f"quartic remainder: worst span slope {worst_span:.2f}, "
        f"worst first decade {worst_first:.2f} (>=4.5 each)"
    )
    assert worst_span >= 4.5
    assert worst_first >= 4.5


def test_synthetic_recovery_twenty_seeds():
    # 500-point surface cloud, 5 degree / 0.05 m perturbation, evaluation
    # parameters: every seed recovered within 0.01 rad / 0.005 m in < 5 s
    cfg = RegistrationConfig(kernel=TABLE_PARAMS)
    worst_rot = worst_trans = worst_time = 0.0
    for seed in range(20):
        x, z, h_true = perturbed_pair(seed)
        start = time.perf_counter()
        res = register(x, z, cfg)
        elapsed = time.perf_counter() - start
        rot = rot_distance(res.transform, h_true)
        trans = trans_distance(res.transform, h_true)
        assert res.converged, f"seed {seed} did not converge ({res.reason})"
        assert rot < 0.01, f"seed {seed}: rotation error {rot:.5f}"
        assert trans < 0.005, f"seed {seed}: translation error {trans:.6f}"
        assert elapsed < 5.0, f"seed {seed}: {elapsed:.2f}s"
        worst_rot = max(worst_rot, rot)
        worst_trans = max(worst_trans, trans)
        worst_time = max(worst_time, elapsed)
    print(
        f"synthetic recovery: 20/20 seeds, worst rot {worst_rot:.4f} (<0.01), "
        f"worst trans {worst_trans:.5f} (<0.005), worst time {worst_time:.2f}s (<5s)"
    )


def test_sparse_dense_equivalence():
    # functional and gradient with the production sparsification threshold
    # vs the dense evaluation, at the recovered pose of the synthetic case
    x, z, _ = perturbed_pair(0)
    res = register(x, z, RegistrationConfig(kernel=TABLE_PARAMS))
    h_star = res.transform
    dense = KernelParams(sigma=0.1, ell=0.15, sparsify_threshold=0.0, label_scale=1e-4)
    f_sparse = inner_product(x, z, h_star, TABLE_PARAMS)
    f_dense = inner_product(x, z, h_star, dense)
    rel_f = abs(f_sparse - f_dense) / abs(f_dense)
    cfg_sparse = RegistrationConfig(kernel=TABLE_PARAMS)
    cfg_dense = RegistrationConfig(kernel=dense)
    g_sparse = gradient(x, z, h_star, cfg_sparse)
    g_dense = gradient(x, z, h_star, cfg_dense)
    diff = Twist(g_sparse.omega - g_dense.omega, g_sparse.v - g_dense.v)
    rel_g = metric_norm(diff, cfg_dense) / metric_norm(g_dense, cfg_dense)
    print(f"sparse vs dense: F rel {rel_f:.2e}, gradient rel {rel_g:.2e} (<1e-6 each)")
    assert rel_f < 1e-6
    assert rel_g < 1e-6


def test_thread_count_determinism():
    # the deterministic reduction must make worker count invisible in the
    # bits of the result
    x, z, _ = perturbed_pair(0)
    cfg = RegistrationConfig(kernel=TABLE_PARAMS)
    res_1 = register(x, z, cfg, threads=1)
    res_8 = register(x, z, cfg, threads=8)
    np.testing.assert_array_equal(res_1.transform.r, res_8.transform.r)
    np.testing.assert_array_equal(res_1.transform.t, res_8.transform.t)
    assert res_1.final_value == res_8.final_value
    assert res_1.iterations == res_8.iterations
    print(
        f"thread determinism: 1 vs 8 workers bit-identical over "
        f"{res_1.iterations} iterations"
    )


TUM_DIR = os.environ.get("TUM_FR1_DESK_DIR", "")


@pytest.mark.skipif(
    not (TUM_DIR and os.path.isdir(TUM_DIR)),
    reason="set TUM_FR1_DESK_DIR to a local fr1/desk download to enable",
)
def test_tum_fr1_desk_smoke():
    # first 30 frames of fr1/desk at full framerate with the evaluation
    # parameters: every step converges, median RPE under 0.03 rad / 0.03 m
    start = time.perf_counter()
    color_index = read_image_index(os.path.join(TUM_DIR, "rgb.txt"))
    depth_index = read_image_index(os.path.join(TUM_DIR, "depth.txt"))
    pairs = associate(color_index, depth_index)[:30]
    frames = [load_frame(TUM_DIR, p) for p in pairs]
    cfg = RegistrationConfig(kernel=TABLE_PARAMS)
    steps = []
    traj = track_sequence(frames, TUM_FR1, cfg, target_count=3000, steps=steps)
    truth = read_trajectory(os.path.join(TUM_DIR, "groundtruth.txt"))
    report = relative_pose_errors(traj, truth)
    elapsed = time.perf_counter() - start
    not_converged = [s.index for s in steps if not s.converged]
    print(
        f"fr1/desk smoke: {len(steps)} steps, median RPE rot "
        f"{report.median_rot:.4f} / trans {report.median_trans:.4f} m "
        f"(<0.03 each), {elapsed:.0f}s (<300s)"
    )
    assert not_converged == []
    assert report.median_rot < 0.03
    assert report.median_trans < 0.03
    assert elapsed < 300.0
