"""Sequential tracking, trajectory files, and relative-pose evaluation.

Poses are camera-to-world: pose_k maps frame-k camera coordinates into
the coordinate system of frame 0.  Registering frame k+1 against frame k
yields the motion g_k with cloud_k = g_k(cloud_{k+1}), which is exactly
pose_k^-1 pose_{k+1}; accumulation is therefore pose_{k+1} = pose_k g_k.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .flow import RegistrationConfig, register
from .liegroup import (
    Isometry,
    Twist,
    exp_twist,
    format_pose,
    log_iso,
    parse_pose,
    rot_distance,
    trans_distance,
)
from .rgbd import CameraIntrinsics, DegenerateFrameError, RgbdFrame, select_points

log = logging.getLogger(__name__)


class CoverageError(ValueError):
    """Ground truth does not span the estimate's time range."""


@dataclass(frozen=True)
class Trajectory:
    """Timestamped poses with strictly increasing stamps."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((float(t), h) for t, h in self.entries)
        if not entries:
            raise ValueError("a trajectory needs at least one pose")
        for (t0, _), (t1, _) in zip(entries, entries[1:]):
            if t1 <= t0:
                raise ValueError("trajectory timestamps must strictly increase")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def stamps(self) -> np.ndarray:
        return np.array([t for t, _ in self.entries])

    @property
    def poses(self) -> list[Isometry]:
        return [h for _, h in self.entries]


@dataclass(frozen=True)
class StepRecord:
    """Outcome of one frame-to-frame registration step."""

    index: int
    timestamp: float
    converged: bool
    reason: str
    iterations: int
    degenerate: bool


@dataclass(frozen=True)
class RpeReport:
    """Per-step relative-pose errors of an estimate against ground truth."""

    stamps: np.ndarray
    rot_errors: np.ndarray
    trans_errors: np.ndarray

    def __post_init__(self):
        stamps = np.asarray(self.stamps, dtype=float)
        rot = np.asarray(self.rot_errors, dtype=float)
        trans = np.asarray(self.trans_errors, dtype=float)
        if not (stamps.shape == rot.shape == trans.shape):
            raise ValueError("stamps and error arrays must have equal length")
        if (rot < 0).any() or (trans < 0).any():
            raise ValueError("errors cannot be negative")
        object.__setattr__(self, "stamps", stamps)
        object.__setattr__(self, "rot_errors", rot)
        object.__setattr__(self, "trans_errors", trans)

    def quantile(self, q: float) -> tuple[float, float]:
        return (
            float(np.quantile(self.rot_errors, q)),
            float(np.quantile(self.trans_errors, q)),
        )

    @property
    def median_rot(self) -> float:
        return float(np.median(self.rot_errors))

    @property
    def median_trans(self) -> float:
        return float(np.median(self.trans_errors))


def track_sequence(
    frames,
    k: CameraIntrinsics,
    cfg: RegistrationConfig | None = None,
    target_count: int = 3000,
    steps: list | None = None,
    threads: int = 1,
) -> Trajectory:
    """Frame-to-frame odometry over a time-ordered frame sequence.

    Every step starts from the identity (no motion model).  A step whose
    registration does not converge keeps the last iterate and is flagged
    in the step records; a degenerate frame (too few edges) contributes
    identity motion for the steps it touches.
    """
    frames = list(frames)
    if len(frames) < 2:
        raise ValueError("tracking needs at least two frames")
    cfg = cfg or RegistrationConfig()

    def cloud_of(frame: RgbdFrame):
        try:
            return select_points(frame, k, target_count)
        except DegenerateFrameError as err:
            log.warning("frame at %.6f is degenerate: %s", frame.timestamp, err)
            return None

    entries = [(frames[0].timestamp, Isometry.identity(3))]
    pose = Isometry.identity(3)
    prev = cloud_of(frames[0])
    for i in range(1, len(frames)):
        cur = cloud_of(frames[i])
        if prev is None or cur is None:
            motion = Isometry.identity(3)
            if steps is not None:
                steps.append(
                    StepRecord(i - 1, frames[i].timestamp, False, "degenerate", 0, True)
                )
        else:
            res = register(cur, prev, cfg, threads=threads)
            motion = res.transform
            if not res.converged:
                log.warning(
                    "step %d did not converge (%s after %d iterations)",
                    i - 1,
                    res.reason,
                    res.iterations,
                )
            if steps is not None:
                steps.append(
                    StepRecord(
                        i - 1,
                        frames[i].timestamp,
                        res.converged,
                        res.reason,
                        res.iterations,
                        False,
                    )
                )
        pose = pose @ motion
        entries.append((frames[i].timestamp, pose))
        prev = cur
    return Trajectory(tuple(entries))


def interpolate_pose(truth: Trajectory, stamp: float) -> Isometry:
    """Pose at an arbitrary time inside the trajectory's span.

    Translation interpolates linearly, rotation along the geodesic
    between the two bracketing samples.
    """
    stamps = truth.stamps
    if stamp < stamps[0] or stamp > stamps[-1]:
        raise CoverageError(
            f"time {stamp:.6f} outside ground-truth span "
            f"[{stamps[0]:.6f}, {stamps[-1]:.6f}]"
        )
    j = int(np.searchsorted(stamps, stamp))
    if j < len(stamps) and stamps[j] == stamp:
        return truth[j][1]
    h0 = truth[j - 1][1]
    h1 = truth[j][1]
    u = (stamp - stamps[j - 1]) / (stamps[j] - stamps[j - 1])
    rel = Isometry(h0.r.T @ h1.r, np.zeros(3))
    omega = log_iso(rel).omega
    r = h0.r @ exp_twist(Twist(omega, np.zeros(3)), u).r
    t = (1.0 - u) * h0.t + u * h1.t
    return Isometry(r, t)


def relative_pose_errors(estimate: Trajectory, truth: Trajectory) -> RpeReport:
    """Compare per-step relative motions of an estimate against truth.

    Truth is resampled at the estimate's timestamps first; a timestamp
    outside the truth span raises CoverageError.
    """
    if len(estimate) < 2:
        raise ValueError("need at least two poses to form a relative motion")
    ref = [interpolate_pose(truth, t) for t in estimate.stamps]
    stamps, rot_err, trans_err = [], [], []
    for idx in range(len(estimate) - 1):
        t1, e0 = estimate[idx][0], estimate[idx][1]
        t2, e1 = estimate[idx + 1][0], estimate[idx + 1][1]
        rel_e = e0.inverse() @ e1
        rel_t = ref[idx].inverse() @ ref[idx + 1]
        stamps.append(t2)
        rot_err.append(rot_distance(rel_e, rel_t))
        trans_err.append(trans_distance(rel_e, rel_t))
    return RpeReport(np.array(stamps), np.array(rot_err), np.array(trans_err))


def cdf_samples(values: np.ndarray) -> np.ndarray:
    """Empirical CDF as (value, cumulative fraction) rows, one per sample."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.empty((0, 2))
    s = np.sort(values)
    fractions = np.arange(1, s.size + 1) / s.size
    return np.column_stack([s, fractions])


def export_trajectory(traj: Trajectory, path: str) -> None:
    """Write 'timestamp tx ty tz qx qy qz qw' lines, losslessly reloadable."""
    with open(path, "w") as f:
        f.write("# timestamp tx ty tz qx qy qz qw\n")
        for t, h in traj:
            f.write(f"{t:.17g} {format_pose(h)}\n")


def read_trajectory(path: str) -> Trajectory:
    entries = []
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split(maxsplit=1)
            if len(parts) != 2:
                raise ValueError(f"malformed trajectory line: {line!r}")
            entries.append((float(parts[0]), parse_pose(parts[1])))
    if not entries:
        raise ValueError(f"trajectory file {path!r} has no poses")
    return Trajectory(tuple(entries))


def write_rpe_csv(report: RpeReport, path: str) -> None:
    with open(path, "w") as f:
        f.write("step,t,rot_err,trans_err\n")
        for i, (t, r, tr) in enumerate(
            zip(report.stamps, report.rot_errors, report.trans_errors)
        ):
            f.write(f"{i},{t:.17g},{r:.17g},{tr:.17g}\n")


def write_cdf_csv(values: np.ndarray, path: str) -> None:
    with open(path, "w") as f:
        f.write("value,cumulative_fraction\n")
        for v, c in cdf_samples(values):
            f.write(f"{v:.17g},{c:.17g}\n")


def run_summary(report: RpeReport) -> str:
    """Human-readable quantile table for a tracking run."""
    lines = [f"steps: {report.rot_errors.size}"]
    for q in (0.25, 0.5, 0.75, 0.95):
        rot, trans = report.quantile(q)
        lines.append(f"q{int(q * 100):02d}: rot {rot:.6f}  trans {trans:.6f} m")
    return "\n".join(lines) + "\n"
