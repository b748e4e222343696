"""TUM RGB-D ingestion: pair association, pinhole geometry, edge selection.

A dataset directory holds `rgb.txt` and `depth.txt` (lines of
"timestamp filename", `#` starts a comment), the referenced 8-bit color
and 16-bit depth rasters, and usually `groundtruth.txt`.  Color and depth
run on separate clocks, so frames are matched greedily by nearest
timestamp first; each matched pair back-projects through the pinhole
model into a labeled cloud of high-gradient pixels.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .rkhs import LabeledCloud


class NoPairsError(ValueError):
    """No color/depth pair lies within the association time window."""


class DegenerateFrameError(ValueError):
    """A frame yields too few valid edge points to register."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole model; depth_scale is raw 16-bit units per meter."""

    fx: float
    fy: float
    cx: float
    cy: float
    depth_scale: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0 and self.depth_scale > 0):
            raise ValueError("fx, fy, depth_scale must be positive")


# published calibration of the TUM freiburg1 Kinect
TUM_FR1 = CameraIntrinsics(fx=517.3, fy=516.5, cx=318.6, cy=255.3, depth_scale=5000.0)


@dataclass(frozen=True)
class RgbdFrame:
    timestamp: float
    color: np.ndarray
    depth: np.ndarray

    def __post_init__(self):
        color = np.asarray(self.color)
        depth = np.asarray(self.depth)
        if color.ndim != 3 or color.shape[2] != 3:
            raise ValueError("color must be H x W x 3")
        if depth.ndim != 2:
            raise ValueError("depth must be a single-channel H x W image")
        if color.shape[:2] != depth.shape:
            raise ValueError("color and depth dimensions differ")
        object.__setattr__(self, "color", color)
        object.__setattr__(self, "depth", depth)


@dataclass(frozen=True)
class AssociatedPair:
    color_stamp: float
    color_path: str
    depth_stamp: float
    depth_path: str


@dataclass(frozen=True)
class FrameAssociation:
    pairs: tuple[AssociatedPair, ...]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]


def read_image_index(path: str) -> list[tuple[float, str]]:
    """Parse an rgb.txt / depth.txt listing into (timestamp, filename)."""
    out = []
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"expected 'timestamp filename': {line!r}")
            out.append((float(parts[0]), parts[1]))
    out.sort(key=lambda e: e[0])
    return out


def associate(
    color_index: list[tuple[float, str]],
    depth_index: list[tuple[float, str]],
    max_offset: float = 0.02,
) -> FrameAssociation:
    """Greedy nearest-timestamp matching of color to depth entries.

    Candidate pairs within max_offset are taken closest-first; an entry
    participates in at most one pair, leftovers are dropped.
    """
    cand = []
    for i, (tc, _) in enumerate(color_index):
        for j, (td, _) in enumerate(depth_index):
            dt = abs(tc - td)
            if dt <= max_offset:
                cand.append((dt, i, j))
    cand.sort()
    used_c: set[int] = set()
    used_d: set[int] = set()
    picked = []
    for _, i, j in cand:
        if i in used_c or j in used_d:
            continue
        used_c.add(i)
        used_d.add(j)
        picked.append((i, j))
    if not picked:
        raise NoPairsError(
            f"no color/depth pairs within {max_offset} s "
            f"({len(color_index)} color, {len(depth_index)} depth entries)"
        )
    picked.sort()
    pairs = tuple(
        AssociatedPair(
            color_index[i][0], color_index[i][1],
            depth_index[j][0], depth_index[j][1],
        )
        for i, j in picked
    )
    for a, b in zip(pairs, pairs[1:]):
        if b.color_stamp <= a.color_stamp:
            raise ValueError("color timestamps are not strictly increasing")
    return FrameAssociation(pairs)


def load_frame(root: str, pair: AssociatedPair) -> RgbdFrame:
    """Read one associated pair from disk; the color stamp names the frame."""
    color = np.asarray(
        Image.open(os.path.join(root, pair.color_path)).convert("RGB"),
        dtype=np.uint8,
    )
    depth = np.asarray(Image.open(os.path.join(root, pair.depth_path)))
    if depth.ndim != 2:
        raise ValueError(f"depth image {pair.depth_path!r} is not single-channel")
    if depth.dtype != np.uint16:
        # 16-bit grayscale PNGs surface as mode I (int32) through some
        # decoder paths; the payload is still 16-bit
        if depth.min() < 0 or depth.max() > np.iinfo(np.uint16).max:
            raise ValueError(f"depth image {pair.depth_path!r} is not 16-bit")
        depth = depth.astype(np.uint16)
    return RgbdFrame(pair.color_stamp, color, depth)


def backproject(frame: RgbdFrame, u: int, v: int, k: CameraIntrinsics):
    """Pixel (u, v) to a camera-frame 3-vector, or None when depth is absent.

    u indexes columns, v rows, matching image convention.
    """
    h, w = frame.depth.shape
    if not (0 <= u < w and 0 <= v < h):
        raise ValueError(f"pixel ({u}, {v}) outside {w} x {h} image")
    raw = frame.depth[v, u]
    if raw == 0:
        return None
    d = float(raw) / k.depth_scale
    return np.array([(u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d])


def project(point: np.ndarray, k: CameraIntrinsics) -> tuple[float, float]:
    """Camera-frame point to sub-pixel image coordinates."""
    x, y, z = np.asarray(point, dtype=float)
    if z <= 0.0:
        raise ValueError("point is behind the camera")
    return (x * k.fx / z + k.cx, y * k.fy / z + k.cy)


def _gradient_magnitude(gray: np.ndarray) -> np.ndarray:
    gx = np.zeros_like(gray)
    gy = np.zeros_like(gray)
    gx[:, 1:-1] = (gray[:, 2:] - gray[:, :-2]) / 2.0
    gy[1:-1, :] = (gray[2:, :] - gray[:-2, :]) / 2.0
    return np.hypot(gx, gy)


def select_points(
    frame: RgbdFrame, k: CameraIntrinsics, target_count: int = 3000
) -> LabeledCloud:
    """Semi-dense labeled cloud of the frame's strongest intensity edges.

    Candidates are pixels with nonzero central-difference gradient and
    valid depth; the magnitude threshold is the one whose selection count
    is nearest target_count (ties resolved toward more points).  Points
    are back-projected through k and labeled with normalized color.
    """
    if target_count <= 0:
        raise ValueError("target_count must be positive")
    gray = frame.color.astype(float) @ np.array([0.299, 0.587, 0.114])
    mag = _gradient_magnitude(gray)
    valid = (frame.depth > 0) & (mag > 0.0)
    mags = mag[valid]

    if mags.size == 0:
        raise DegenerateFrameError("no valid edge pixels in frame")
    if mags.size <= target_count:
        thr = float(mags.min())
    else:
        s = np.sort(mags)[::-1]
        thr_lo = float(s[target_count - 1])
        count_lo = int(np.count_nonzero(mags >= thr_lo))
        above = s[s > thr_lo]
        if above.size:
            thr_hi = float(above[-1])
            count_hi = int(np.count_nonzero(mags >= thr_hi))
            if abs(count_hi - target_count) < abs(count_lo - target_count):
                thr = thr_hi
            else:
                thr = thr_lo
        else:
            thr = thr_lo

    sel = valid & (mag >= thr)
    vs, us = np.nonzero(sel)
    if vs.size < 100:
        raise DegenerateFrameError(
            f"only {vs.size} valid edge points (need at least 100)"
        )
    z = frame.depth[vs, us].astype(float) / k.depth_scale
    pts = np.stack(
        [(us - k.cx) * z / k.fx, (vs - k.cy) * z / k.fy, z], axis=1
    )
    labels = frame.color[vs, us].astype(float) / 255.0
    return LabeledCloud(pts, labels)


def write_cloud_csv(cloud: LabeledCloud, path: str) -> None:
    """Dump a spatial cloud as CSV, columns x,y,z,r,g,b."""
    if cloud.dim != 3 or cloud.labels.shape[1] != 3:
        raise ValueError("cloud CSV format needs 3-d points with 3-channel labels")
    with open(path, "w") as f:
        f.write("x,y,z,r,g,b\n")
        for p, l in zip(cloud.points, cloud.labels):
            f.write(",".join(f"{v:.17g}" for v in (*p, *l)) + "\n")


def read_cloud_csv(path: str) -> LabeledCloud:
    with open(path) as f:
        header = f.readline().strip()
        if header != "x,y,z,r,g,b":
            raise ValueError(f"unexpected cloud CSV header: {header!r}")
        rows = [[float(v) for v in line.split(",")] for line in f if line.strip()]
    if not rows:
        raise ValueError(f"cloud file {path!r} has no points")
    arr = np.asarray(rows)
    if arr.shape[1] != 6:
        raise ValueError("cloud CSV rows must have 6 columns")
    return LabeledCloud(arr[:, :3], arr[:, 3:])
