"""Keypoints -> solver -> warp."""

from __future__ import annotations

from ..geometry import Transform, as_points
from ..errors import MismatchedLengths
from ..solvers import Family, SolveDiagnostics, solve
from .core import Volume3D
from .warp import DEFAULT_CHUNK_VOXELS, warp


def register_pairwise(
    moving: Volume3D,
    fixed: Volume3D,
    kp_moving,
    kp_fixed,
    family: Family = "affine",
    lam: float = 0.0,
    w=None,
    interpolation=None,
    chunk_voxels: int = DEFAULT_CHUNK_VOXELS,
) -> tuple[Volume3D, Transform, SolveDiagnostics]:
    """Register ``moving`` onto ``fixed``'s grid from corresponding keypoints.

    The transform is solved from fixed keypoints to moving keypoints and
    used to backward-warp ``moving``.
    """
    kp_moving = as_points(kp_moving, "kp_moving")
    kp_fixed = as_points(kp_fixed, "kp_fixed")
    if kp_moving.shape != kp_fixed.shape:
        raise MismatchedLengths(
            f"{len(kp_moving)} moving keypoints vs {len(kp_fixed)} fixed keypoints"
        )
    T, diag = solve(family, kp_fixed, kp_moving, lam, w)
    out = warp(moving, T, fixed.dims, interpolation, chunk_voxels, fixed.spacing_mm)
    return out, T, diag
