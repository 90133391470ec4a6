"""Backward warping of volumes under any transform."""

from __future__ import annotations

from typing import Literal

import numpy as np

from .._parallel import pmap
from ..errors import InterpolationMismatch
from ..geometry import Transform, apply_transform, grid_points, normalized_to_voxel
from .core import Volume3D

__all__ = ["warp", "sample", "DEFAULT_CHUNK_VOXELS"]

Interpolation = Literal["trilinear", "nearest"]
DEFAULT_CHUNK_VOXELS = 1 << 18


def sample(data: np.ndarray, vox: np.ndarray, interpolation: Interpolation) -> np.ndarray:
    """Sample ``data`` at fractional voxel coordinates ``vox`` (K, 3).

    Voxels outside the grid read as 0.  For trilinear interpolation the
    grid is zero-padded, so values fade to 0 within one voxel of the edge.
    """
    dims = np.array(data.shape)
    if interpolation == "nearest":
        idx = np.floor(vox + 0.5).astype(np.int64)
        ok = np.all((idx >= 0) & (idx < dims), axis=1)
        out = np.zeros(len(vox), dtype=data.dtype)
        good = idx[ok]
        out[ok] = data[good[:, 0], good[:, 1], good[:, 2]]
        return out
    if interpolation != "trilinear":
        raise ValueError(f"unknown interpolation {interpolation!r}")

    base = np.floor(vox)
    frac = vox - base
    base = base.astype(np.int64)
    out = np.zeros(len(vox), dtype=np.float64)
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                idx = base + (dx, dy, dz)
                ok = np.all((idx >= 0) & (idx < dims), axis=1)
                wgt = (
                    (frac[:, 0] if dx else 1.0 - frac[:, 0])
                    * (frac[:, 1] if dy else 1.0 - frac[:, 1])
                    * (frac[:, 2] if dz else 1.0 - frac[:, 2])
                )
                good = idx[ok]
                out[ok] += wgt[ok] * data[good[:, 0], good[:, 1], good[:, 2]]
    return out


def warp(
    moving: Volume3D,
    T: Transform,
    out_dims=None,
    interpolation: Interpolation | None = None,
    chunk_voxels: int = DEFAULT_CHUNK_VOXELS,
    spacing_mm=None,
) -> Volume3D:
    """Resample ``moving`` at ``T(g)`` for every output grid coordinate ``g``.

    Output coordinates are transformed ``chunk_voxels`` at a time, which
    bounds the TPS kernel matrix to ``chunk_voxels x N``.  Label volumes
    default to (and require) nearest-neighbour interpolation; scalar
    volumes default to trilinear.
    """
    if interpolation is None:
        interpolation = "nearest" if moving.is_label else "trilinear"
    if moving.is_label and interpolation != "nearest":
        raise InterpolationMismatch("label volumes must be warped with nearest interpolation")
    chunk_voxels = int(chunk_voxels)
    if chunk_voxels < 1:
        raise ValueError("chunk_voxels must be positive")
    out_dims = moving.dims if out_dims is None else tuple(int(d) for d in out_dims)
    if len(out_dims) != 3 or min(out_dims) < 1:
        raise ValueError(f"bad output dims {out_dims}")

    total = out_dims[0] * out_dims[1] * out_dims[2]
    if interpolation == "nearest":
        out_dtype = moving.data.dtype
    else:
        out_dtype = np.result_type(moving.data.dtype, np.float32)
    flat = np.zeros(total, dtype=out_dtype)
    src = moving.data
    src_dims = moving.dims

    def run(start):
        g = grid_points(out_dims, start, start + chunk_voxels)
        vox = normalized_to_voxel(apply_transform(T, g), src_dims)
        flat[start : start + len(g)] = sample(src, vox, interpolation)

    # chunks write disjoint slices, so execution order cannot change the result
    starts = range(0, total, chunk_voxels)
    if len(starts) > 4096:
        for s in starts:
            run(s)
    else:
        pmap(run, starts)
    spacing = moving.spacing_mm if spacing_mm is None else spacing_mm
    return Volume3D(flat.reshape(out_dims), spacing)
