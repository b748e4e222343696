"""Synthetic scenes with enough structure to make registration observable.

A volume-filling cloud with labels that have no spatial correlation is a
degenerate input for kernel registration: at coarse kernel widths the
correlation value barely changes under rotation, so the rotational part of
the gradient sits orders of magnitude below the translational part and the
solver stops before touching it.  Real scenes do not look like that; their
color varies smoothly across surfaces.  The generators here mimic the
cheapest version of that structure: points on the surface of a box, labels
constant on large regions (one per octant).  That is enough for full pose
recovery at the documented tolerances.
"""

from __future__ import annotations

import os

import numpy as np

from .liegroup import Isometry, Twist, exp_twist
from .rgbd import CameraIntrinsics, RgbdFrame
from .rkhs import LabeledCloud


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def box_surface_cloud(
    seed, n: int = 500, side: float = 0.18, edge_bias: float = 0.35
) -> LabeledCloud:
    """Points on the faces of an axis-aligned cube, labeled by octant.

    edge_bias in [0, 1) pushes samples toward face borders, which sharpens
    the rotational signature (a rotated edge sweeps past more points than a
    rotated face interior).  Labels are the 0/1 octant indicators of each
    point, three columns.
    """
    rng = _rng(seed)
    if not 0.0 <= edge_bias < 1.0:
        raise ValueError("edge_bias must lie in [0, 1)")
    face = rng.integers(0, 6, size=n)
    r = rng.uniform(-1.0, 1.0, size=(n, 2))
    r = np.sign(r) * np.abs(r) ** (1.0 - edge_bias)
    uv = r * side / 2.0
    ax = face // 2
    sgn = np.where(face % 2 == 1, 1.0, -1.0)
    rows = np.arange(n)
    pts = np.zeros((n, 3))
    pts[rows, ax] = sgn * side / 2.0
    rest0 = np.where(ax == 0, 1, 0)
    rest1 = np.where(ax == 2, 1, 2)
    pts[rows, rest0] = uv[:, 0]
    pts[rows, rest1] = uv[:, 1]
    return LabeledCloud(pts, np.where(pts > 0, 1.0, 0.0))


def square_outline_cloud(
    seed, n: int = 200, side: float = 0.18, edge_bias: float = 0.35
) -> LabeledCloud:
    """Planar analog of box_surface_cloud: points on the edges of a square,
    labeled by quadrant."""
    rng = _rng(seed)
    if not 0.0 <= edge_bias < 1.0:
        raise ValueError("edge_bias must lie in [0, 1)")
    edge = rng.integers(0, 4, size=n)
    u = rng.uniform(-1.0, 1.0, size=n)
    u = np.sign(u) * np.abs(u) ** (1.0 - edge_bias)
    ax = edge // 2
    sgn = np.where(edge % 2 == 1, 1.0, -1.0)
    rows = np.arange(n)
    pts = np.zeros((n, 2))
    pts[rows, ax] = sgn * side / 2.0
    pts[rows, 1 - ax] = u * side / 2.0
    return LabeledCloud(pts, np.where(pts > 0, 1.0, 0.0))


def perturbed_pair(
    seed,
    n: int = 500,
    side: float = 0.18,
    edge_bias: float = 0.35,
    angle_deg: float = 5.0,
    offset: float = 0.05,
) -> tuple[LabeledCloud, LabeledCloud, Isometry]:
    """A box-surface cloud and a rigidly moved copy, plus the true motion.

    The rotation axis and translation direction are drawn uniformly on the
    sphere; the magnitudes are fixed by angle_deg (degrees) and offset.
    Returns (fixed, moving, h_true) with moving = h_true applied to fixed,
    so register(fixed, moving) should recover h_true.
    """
    rng = _rng(seed)
    x = box_surface_cloud(rng, n=n, side=side, edge_bias=edge_bias)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    tdir = rng.normal(size=3)
    tdir /= np.linalg.norm(tdir)
    h_true = Isometry(
        exp_twist(Twist(axis * np.deg2rad(angle_deg), np.zeros(3))).r,
        tdir * offset + 0.0,  # offset 0 keeps +0.0, not IEEE -0.0
    )
    z = LabeledCloud(h_true.act(x.points), x.labels.copy())
    return x, z, h_true


# camera profile used by the rendered test scenes: small images keep the
# per-frame clouds and registration runtimes test-sized
RENDER_CAMERA = CameraIntrinsics(fx=70.0, fy=70.0, cx=40.0, cy=30.0, depth_scale=5000.0)
RENDER_SHAPE = (60, 80)


def _checker_plane(x_range, y_range, z_of, palette, square=0.25, step=0.008):
    xs = np.arange(x_range[0], x_range[1], step)
    ys = np.arange(y_range[0], y_range[1], step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    gx = gx.ravel()
    gy = gy.ravel()
    pts = np.column_stack([gx, gy, np.full(gx.shape, float(z_of))])
    parity = (np.floor(gx / square) + np.floor(gy / square)).astype(np.int64) % 2
    rgb = np.where(parity[:, None] == 0, palette[0], palette[1])
    return pts, rgb.astype(np.uint8)


def checkered_scene() -> tuple[np.ndarray, np.ndarray]:
    """Two fronto-parallel checkered walls with a depth step between them.

    World coordinates follow the camera-at-identity convention: +z into
    the scene, +y down.  The far wall spans the whole field of view and
    the near wall covers its right half, so every pixel sees a surface
    for the small camera motions the tests use.  Returns (points, colors)
    with colors as 8-bit RGB rows.
    """
    far_pts, far_rgb = _checker_plane(
        (-3.0, 3.0), (-2.0, 2.0), 2.0,
        (np.array([225, 225, 225]), np.array([180, 40, 40])),
    )
    near_pts, near_rgb = _checker_plane(
        (0.0, 3.0), (-2.0, 2.0), 1.4,
        (np.array([235, 235, 160]), np.array([40, 70, 170])),
    )
    return (
        np.vstack([far_pts, near_pts]),
        np.vstack([far_rgb, near_rgb]),
    )


def render_frame(
    scene_points: np.ndarray,
    scene_colors: np.ndarray,
    pose: Isometry,
    k: CameraIntrinsics = RENDER_CAMERA,
    shape: tuple[int, int] = RENDER_SHAPE,
    timestamp: float = 0.0,
) -> RgbdFrame:
    """Z-buffered point splat of the scene seen from a camera pose.

    pose is camera-to-world; points are pulled into the camera frame,
    projected to the nearest pixel, and the closest surface wins each
    pixel.  Pixels no point lands on keep depth 0 (invalid).
    """
    h, w = shape
    cam = pose.inverse_act(scene_points)
    z = cam[:, 2]
    keep = z > 0.05
    cam = cam[keep]
    rgb = scene_colors[keep]
    z = z[keep]
    us = np.rint(cam[:, 0] * k.fx / z + k.cx).astype(np.int64)
    vs = np.rint(cam[:, 1] * k.fy / z + k.cy).astype(np.int64)
    inside = (us >= 0) & (us < w) & (vs >= 0) & (vs < h)
    us, vs, z, rgb = us[inside], vs[inside], z[inside], rgb[inside]

    # write far-to-near so the nearest surface ends up in each pixel
    order = np.argsort(-z, kind="stable")
    us, vs, z, rgb = us[order], vs[order], z[order], rgb[order]
    color = np.zeros((h, w, 3), dtype=np.uint8)
    depth = np.zeros((h, w), dtype=np.uint16)
    raw = np.clip(np.rint(z * k.depth_scale), 1, np.iinfo(np.uint16).max)
    color[vs, us] = rgb
    depth[vs, us] = raw.astype(np.uint16)
    return RgbdFrame(timestamp, color, depth)


def camera_path(
    n_frames: int,
    step_angle_deg: float = 0.6,
    step_offset: float = 0.008,
    axis=(0.2, 1.0, 0.1),
    direction=(1.0, 0.3, -0.2),
    t0: float = 1000.0,
    dt: float = 1.0 / 30.0,
) -> list[tuple[float, Isometry]]:
    """Timestamps and camera-to-world poses along a constant-twist path."""
    axis = np.asarray(axis, dtype=float)
    axis /= np.linalg.norm(axis)
    direction = np.asarray(direction, dtype=float)
    direction /= np.linalg.norm(direction)
    step = Isometry(
        exp_twist(Twist(axis * np.deg2rad(step_angle_deg), np.zeros(3))).r,
        direction * step_offset,
    )
    out = []
    pose = Isometry.identity(3)
    for i in range(n_frames):
        out.append((t0 + i * dt, pose))
        pose = pose @ step
    return out


def render_sequence(
    n_frames: int, **path_kwargs
) -> tuple[list[RgbdFrame], list[tuple[float, Isometry]]]:
    """Frames of the checkered scene along a constant-twist camera path."""
    pts, rgb = checkered_scene()
    path = camera_path(n_frames, **path_kwargs)
    frames = [
        render_frame(pts, rgb, pose, timestamp=t) for t, pose in path
    ]
    return frames, path


def write_tum_dataset(root: str, frames, truth, camera=RENDER_CAMERA) -> None:
    """Lay frames and ground truth out as a TUM-format dataset directory.

    truth is a list of (timestamp, camera-to-world pose) pairs, written
    to groundtruth.txt in the usual quaternion form.  The camera intrinsics
    land in camera.cfg so a consumer can pick them up with --config.
    """
    from PIL import Image

    os.makedirs(os.path.join(root, "rgb"), exist_ok=True)
    os.makedirs(os.path.join(root, "depth"), exist_ok=True)
    rgb_lines = ["# color images", "# timestamp filename"]
    depth_lines = ["# depth images", "# timestamp filename"]
    for frame in frames:
        name = f"{frame.timestamp:.6f}.png"
        Image.fromarray(frame.color).save(os.path.join(root, "rgb", name))
        Image.fromarray(frame.depth).save(os.path.join(root, "depth", name))
        rgb_lines.append(f"{frame.timestamp:.6f} rgb/{name}")
        depth_lines.append(f"{frame.timestamp:.6f} depth/{name}")
    with open(os.path.join(root, "rgb.txt"), "w") as f:
        f.write("\n".join(rgb_lines) + "\n")
    with open(os.path.join(root, "depth.txt"), "w") as f:
        f.write("\n".join(depth_lines) + "\n")
    from .liegroup import format_pose

    with open(os.path.join(root, "groundtruth.txt"), "w") as f:
        f.write("# timestamp tx ty tz qx qy qz qw\n")
        for t, pose in truth:
            # Same 6-decimal stamps as the image indices.  Full-precision
            # stamps can land a hair before a rounded-up image stamp, which
            # would push the last frame outside ground-truth coverage.
            f.write(f"{t:.6f} {format_pose(pose)}\n")
    with open(os.path.join(root, "camera.cfg"), "w") as f:
        f.write(
            f"focal length x = {camera.fx!r}\n"
            f"focal length y = {camera.fy!r}\n"
            f"principal point x = {camera.cx!r}\n"
            f"principal point y = {camera.cy!r}\n"
            f"depth scale = {camera.depth_scale!r}\n"
        )
