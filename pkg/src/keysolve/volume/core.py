"""Dense 3D volumes and the raw+sidecar file format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Volume3D", "read_volume", "write_volume", "header_path"]

_DTYPES = {"f32le": "<f4", "u16le": "<u2"}


@dataclass(frozen=True, eq=False)
class Volume3D:
    """Scalar (float) or label (nonnegative integer) grid indexed ``[x, y, z]``."""

    data: np.ndarray
    spacing_mm: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        data = np.array(self.data, copy=True)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ValueError(f"volume data must be a nonempty 3D array, got shape {data.shape}")
        if data.dtype == bool:
            data = data.astype(np.uint16)
        if np.issubdtype(data.dtype, np.integer):
            if data.size and data.min() < 0:
                raise ValueError("label volumes must be nonnegative")
        elif np.issubdtype(data.dtype, np.floating):
            if not np.all(np.isfinite(data)):
                raise ValueError("scalar volume contains non-finite values")
        else:
            raise TypeError(f"unsupported volume dtype {data.dtype}")
        spacing = tuple(float(s) for s in self.spacing_mm)
        if len(spacing) != 3 or min(spacing) <= 0:
            raise ValueError("spacing_mm must be three positive numbers")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing_mm", spacing)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.data.shape)

    @property
    def is_label(self) -> bool:
        return bool(np.issubdtype(self.data.dtype, np.integer))


def header_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_volume(path, vol: Volume3D) -> None:
    """Write raw voxels (x-fastest) to ``path`` and the header to ``path.with_suffix('.json')``."""
    dtype = "u16le" if vol.is_label else "f32le"
    if vol.is_label and vol.data.size and vol.data.max() > np.iinfo(np.uint16).max:
        raise ValueError("label values exceed the u16 range")
    header = {
        "dims": list(vol.dims),
        "spacing_mm": list(vol.spacing_mm),
        "dtype": dtype,
        "order": "x-fastest",
    }
    raw = np.asarray(vol.data, dtype=_DTYPES[dtype])
    Path(path).write_bytes(raw.tobytes(order="F"))
    header_path(path).write_text(json.dumps(header) + "\n")


def read_volume(path) -> Volume3D:
    header = json.loads(header_path(path).read_text())
    dtype = header.get("dtype")
    if dtype not in _DTYPES:
        raise ValueError(f"unsupported volume dtype {dtype!r}")
    if header.get("order", "x-fastest") != "x-fastest":
        raise ValueError(f"unsupported voxel order {header.get('order')!r}")
    dims = tuple(int(d) for d in header["dims"])
    flat = np.frombuffer(Path(path).read_bytes(), dtype=_DTYPES[dtype])
    if flat.size != dims[0] * dims[1] * dims[2]:
        raise ValueError(f"{path}: expected {np.prod(dims)} voxels, found {flat.size}")
    data = flat.reshape(dims, order="F")
    data = data.astype(np.uint16 if dtype == "u16le" else np.float32)
    return Volume3D(data, tuple(header.get("spacing_mm", (1.0, 1.0, 1.0))))
