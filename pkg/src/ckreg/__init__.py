"""Continuous kernel-embedding registration for labeled point clouds.

Clouds are embedded in a reproducing-kernel Hilbert space and aligned by
maximizing the inner product of the two embeddings over the rigid motions,
with an analytic gradient on the group and a quartic line-search model.
Works in 2D and 3D.  The odometry layer chains frame-to-frame registrations
of RGB-D images into a camera trajectory and scores it against ground truth.
"""

from ckreg.flow import (
    DEFAULT_ELL_SCHEDULE,
    IterationRecord,
    RegistrationConfig,
    RegistrationResult,
    gradient,
    metric_inner,
    metric_norm,
    register,
    taylor_poly,
)
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
from ckreg.odometry import (
    CoverageError,
    RpeReport,
    StepRecord,
    Trajectory,
    cdf_samples,
    export_trajectory,
    interpolate_pose,
    read_trajectory,
    relative_pose_errors,
    track_sequence,
)
from ckreg.rgbd import (
    TUM_FR1,
    CameraIntrinsics,
    RgbdFrame,
    associate,
    load_frame,
    read_image_index,
    select_points,
)
from ckreg.rkhs import KernelParams, LabeledCloud, build_kernel_matrix, inner_product

__version__ = "0.1.0"

__all__ = [
    "BranchCutError",
    "CameraIntrinsics",
    "CoverageError",
    "DEFAULT_ELL_SCHEDULE",
    "IterationRecord",
    "Isometry",
    "KernelParams",
    "LabeledCloud",
    "RegistrationConfig",
    "RegistrationResult",
    "RgbdFrame",
    "RpeReport",
    "StepRecord",
    "TUM_FR1",
    "Trajectory",
    "Twist",
    "associate",
    "build_kernel_matrix",
    "cdf_samples",
    "exp_twist",
    "export_trajectory",
    "format_pose",
    "gradient",
    "hat",
    "inner_product",
    "interpolate_pose",
    "iso_distance",
    "load_frame",
    "log_iso",
    "metric_inner",
    "metric_norm",
    "parse_pose",
    "read_image_index",
    "read_trajectory",
    "register",
    "relative_pose_errors",
    "rot_distance",
    "select_points",
    "taylor_poly",
    "track_sequence",
    "trans_distance",
    "vee",
]
