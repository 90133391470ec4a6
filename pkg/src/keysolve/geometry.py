"""Coordinates, transform types and point-level application.

Keypoint sets are plain ``(N, 3)`` float64 arrays; index ``i`` in one set
corresponds to index ``i`` in any paired set.  All coordinates are
normalized: voxel index ``i`` on an axis of size ``X`` maps to
``2 i / (X - 1) - 1`` so that voxel centers span ``[-1, 1]``.

Every transform maps *fixed*-space coordinates to *moving*-space
coordinates, i.e. it is what a backward warp needs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "RigidTransform",
    "AffineTransform",
    "TpsTransform",
    "Transform",
    "as_points",
    "voxel_to_normalized",
    "normalized_to_voxel",
    "grid_points",
    "tps_kernel",
    "apply_rigid",
    "apply_affine",
    "apply_tps",
    "apply_transform",
    "compose_with_rigid",
    "rot_x",
    "rot_y",
    "rot_z",
    "rotation_xyz",
    "identity_rigid",
    "identity_affine",
    "transform_to_dict",
    "transform_from_dict",
    "save_transform",
    "load_transform",
]

ROTATION_TOL = 1e-9


def _frozen(a, shape=None, name="array"):
    arr = np.array(a, dtype=np.float64, copy=True)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


def as_points(points, name: str = "points") -> np.ndarray:
    """Validate and return a keypoint set as an ``(N, 3)`` float64 array.

    A single point of shape ``(3,)`` is promoted to ``(1, 3)``.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} must contain at least one point")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr


def voxel_to_normalized(index, size):
    """Map voxel indices to normalized coordinates (per axis)."""
    size = np.asarray(size, dtype=np.float64)
    return 2.0 * np.asarray(index, dtype=np.float64) / (size - 1.0) - 1.0


def normalized_to_voxel(coord, size):
    """Inverse of :func:`voxel_to_normalized`."""
    size = np.asarray(size, dtype=np.float64)
    return (np.asarray(coord, dtype=np.float64) + 1.0) * (size - 1.0) / 2.0


def grid_points(dims, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Normalized coordinates of voxels ``start:stop`` of a grid in C order.

    The flat index runs over ``numpy.ndindex(dims)``, so the result lines up
    with ``volume.reshape(-1)`` for a C-contiguous ``(X, Y, Z)`` array.
    """
    dims = tuple(int(d) for d in dims)
    total = dims[0] * dims[1] * dims[2]
    stop = total if stop is None else min(stop, total)
    flat = np.arange(start, stop, dtype=np.int64)
    idx = np.stack(np.unravel_index(flat, dims), axis=1)
    return voxel_to_normalized(idx, dims)


def tps_kernel(r):
    """Thin-plate radial basis ``U(r) = r^2 ln r`` with ``U(0) = 0``."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    nz = r > 0
    rn = r[nz]
    out[nz] = rn * rn * np.log(rn)
    return out


# ---------------------------------------------------------------------------
# transform types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """``p -> R p + t`` with ``R`` a proper rotation."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = _frozen(self.R, (3, 3), "R")
        t = _frozen(self.t, (3,), "t")
        if np.abs(R.T @ R - np.eye(3)).max() > ROTATION_TOL:
            raise ValueError("R is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ROTATION_TOL:
            raise ValueError("R is not a proper rotation (det != +1)")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    def __call__(self, points):
        return apply_rigid(self, points)

    def inverse(self) -> RigidTransform:
        return RigidTransform(self.R.T, -self.R.T @ self.t)

    def to_affine(self) -> AffineTransform:
        return AffineTransform(np.hstack([self.R, self.t[:, None]]))

    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix."""
        M = np.eye(4)
        M[:3, :3] = self.R
        M[:3, 3] = self.t
        return M


@dataclass(frozen=True, eq=False)
class AffineTransform:
    """``p -> A [p; 1]`` with ``A`` of shape ``(3, 4)``."""

    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(self.A, (3, 4), "A"))

    def __call__(self, points):
        return apply_affine(self, points)

    @property
    def linear(self) -> np.ndarray:
        return self.A[:, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.A[:, 3]

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.linear))

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :] = self.A
        return M

    def inverse(self) -> AffineTransform:
        return AffineTransform(np.linalg.inv(self.matrix())[:3, :])

    def compose(self, inner: AffineTransform | RigidTransform) -> AffineTransform:
        """Return ``self o inner`` (apply ``inner`` first)."""
        return AffineTransform((self.matrix() @ inner.matrix())[:3, :])


@dataclass(frozen=True, eq=False)
class TpsTransform:
    """Thin-plate spline ``p -> A^T [p; 1] + sum_i V_i U(|c_i - p|)``.

    ``A`` is the ``(4, 3)`` affine coefficient block (one column per output
    dimension) and ``V`` the ``(N, 3)`` kernel coefficients attached to the
    control points ``c_i``.
    """

    control_points: np.ndarray
    A: np.ndarray
    V: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        cp = as_points(self.control_points, "control_points").copy()
        cp.setflags(write=False)
        n = cp.shape[0]
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "A", _frozen(self.A, (4, 3), "A"))
        object.__setattr__(self, "V", _frozen(self.V, (n, 3), "V"))
        lam = float(self.lam)
        if not np.isfinite(lam) or lam < 0:
            raise ValueError("lambda must be a finite nonnegative number")
        object.__setattr__(self, "lam", lam)

    def __call__(self, points):
        return apply_tps(self, points)

    def affine_part(self) -> AffineTransform:
        return AffineTransform(self.A.T)

    def side_condition_residual(self) -> float:
        """Max violation of ``sum_i V_i = 0`` and ``sum_i V_i p_i = 0``."""
        L = np.hstack([self.control_points, np.ones((len(self.V), 1))])
        return float(np.abs(L.T @ self.V).max())


Transform = Union[RigidTransform, AffineTransform, TpsTransform]


def identity_rigid() -> RigidTransform:
    return RigidTransform(np.eye(3), np.zeros(3))


def identity_affine() -> AffineTransform:
    return AffineTransform(np.hstack([np.eye(3), np.zeros((3, 1))]))


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------


def _prep(points):
    p = np.asarray(points, dtype=np.float64)
    single = p.ndim == 1
    return np.atleast_2d(p), single


def apply_rigid(T: RigidTransform, points) -> np.ndarray:
    p, single = _prep(points)
    out = p @ T.R.T + T.t
    return out[0] if single else out


def apply_affine(T: AffineTransform, points) -> np.ndarray:
    p, single = _prep(points)
    out = p @ T.A[:, :3].T + T.A[:, 3]
    return out[0] if single else out


def apply_tps(T: TpsTransform, points, chunk: int = 65536) -> np.ndarray:
    """Evaluate a TPS at ``points``; kernel distances are built ``chunk`` rows at a time."""
    p, single = _prep(points)
    out = np.empty_like(p)
    lin = T.A[:3]
    off = T.A[3]
    for s in range(0, len(p), chunk):
        blk = p[s : s + chunk]
        K = tps_kernel(cdist(blk, T.control_points))
        out[s : s + chunk] = blk @ lin + off + K @ T.V
    return out[0] if single else out


def apply_transform(T: Transform, points) -> np.ndarray:
    if isinstance(T, RigidTransform):
        return apply_rigid(T, points)
    if isinstance(T, AffineTransform):
        return apply_affine(T, points)
    if isinstance(T, TpsTransform):
        return apply_tps(T, points)
    raise TypeError(f"not a transform: {type(T).__name__}")


def compose_with_rigid(outer: RigidTransform, inner: RigidTransform) -> RigidTransform:
    """Rigid transform equal to ``outer o inner``."""
    R = outer.R @ inner.R
    # re-orthonormalize so long composition chains keep the rotation invariant
    U, _, Vt = np.linalg.svd(R)
    R = U @ Vt
    return RigidTransform(R, outer.R @ inner.t + outer.t)


def rot_x(deg: float) -> np.ndarray:
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(deg: float) -> np.ndarray:
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(deg: float) -> np.ndarray:
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_xyz(ax: float, ay: float, az: float) -> np.ndarray:
    """``Rz(az) @ Ry(ay) @ Rx(ax)``, angles in degrees."""
    return rot_z(az) @ rot_y(ay) @ rot_x(ax)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def transform_to_dict(T: Transform) -> dict:
    if isinstance(T, RigidTransform):
        return {"type": "rigid", "R": T.R.tolist(), "t": T.t.tolist()}
    if isinstance(T, AffineTransform):
        return {"type": "affine", "A": T.A.tolist()}
    if isinstance(T, TpsTransform):
        return {
            "type": "tps",
            "lambda": T.lam,
            "control_points": T.control_points.tolist(),
            "A": T.A.tolist(),
            "V": T.V.tolist(),
        }
    raise TypeError(f"not a transform: {type(T).__name__}")


def transform_from_dict(d: dict) -> Transform:
    kind = d.get("type")
    if kind == "rigid":
        return RigidTransform(np.array(d["R"]), np.array(d["t"]))
    if kind == "affine":
        return AffineTransform(np.array(d["A"]))
    if kind == "tps":
        return TpsTransform(
            np.array(d["control_points"]),
            np.array(d["A"]),
            np.array(d["V"]),
            float(d["lambda"]),
        )
    raise ValueError(f"unknown transform type {kind!r}")


def save_transform(path, T: Transform) -> None:
    Path(path).write_text(json.dumps(transform_to_dict(T), indent=1) + "\n")


def load_transform(path) -> Transform:
    return transform_from_dict(json.loads(Path(path).read_text()))
