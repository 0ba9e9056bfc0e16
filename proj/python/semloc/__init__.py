"""Python bindings for the semloc C++ library.

Poses are 7-sequences ``(tx, ty, tz, qw, qx, qy, qz)`` (camera to world);
cameras are ``(fx, fy, cx, cy, width, height)``. Point clouds are passed as
an ``(N, 3)`` float array plus an ``(N,)`` array of class ids.
"""

from ._semloc import (
    Error,
    RoadField,
    fuse,
    generate_scene,
    instance_ap,
    kalman_smooth,
    perturb,
    project,
    read_points,
    refine,
    remove_moving,
    render,
    rotation_angle_deg,
    run_pipeline,
    segmentation_scores,
    splat_sizes,
)

DEFAULT_CAMERA = (300.0, 300.0, 152.0, 128.0, 304, 256)

__all__ = [
    "DEFAULT_CAMERA",
    "Error",
    "RoadField",
    "fuse",
    "generate_scene",
    "instance_ap",
    "kalman_smooth",
    "perturb",
    "project",
    "read_points",
    "refine",
    "remove_moving",
    "render",
    "rotation_angle_deg",
    "run_pipeline",
    "segmentation_scores",
    "splat_sizes",
]
