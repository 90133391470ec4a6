"""Center-of-mass keypoint extraction and correspondence weights.

An activation stack is an ``(N, X, Y, Z)`` array of nonnegative values, one
map per keypoint.  Keypoint ``i`` is the activation-weighted mean of the
normalized voxel coordinates of map ``i``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import AllZeroMap, MismatchedLengths
from .geometry import as_points, voxel_to_normalized

__all__ = [
    "validate_activations",
    "extract_keypoints",
    "activation_energies",
    "correspondence_weights",
    "softmax",
    "read_activations",
    "write_activations",
    "read_keypoints",
    "write_keypoints",
]


def validate_activations(acts) -> np.ndarray:
    acts = np.asarray(acts)
    if acts.ndim != 4:
        raise ValueError(f"activation stack must be (N, X, Y, Z), got shape {acts.shape}")
    if acts.shape[0] < 1:
        raise ValueError("activation stack has no maps")
    if not np.all(np.isfinite(acts)):
        raise ValueError("activation stack contains non-finite values")
    if np.any(acts < 0):
        raise ValueError("activations must be nonnegative (apply a ReLU first)")
    return acts


def extract_keypoints(acts) -> np.ndarray:
    """Center of mass of every activation map, in normalized coordinates.

    Each axis is reduced separately: the normalized marginal mass profile
    along the axis is dotted with that axis' coordinates.  A map whose
    total mass is zero raises :class:`AllZeroMap`.
    """
    acts = validate_activations(acts)
    n, X, Y, Z = acts.shape
    out = np.empty((n, 3))
    axes_coords = [voxel_to_normalized(np.arange(s), s) for s in (X, Y, Z)]
    for i in range(n):
        m = np.asarray(acts[i], dtype=np.float64)
        total = m.sum()
        if not total > 0:
            raise AllZeroMap(f"activation map {i} has no positive value")
        for a in range(3):
            other = tuple(b for b in range(3) if b != a)
            profile = m.sum(axis=other)
            # normalize before the dot product: a delta map then yields its coordinate bit-exactly
            out[i, a] = np.dot(profile / profile.sum(), axes_coords[a])
    return out


def activation_energies(acts) -> np.ndarray:
    """Sum of every activation map, accumulated in float64."""
    acts = validate_activations(acts)
    return acts.reshape(acts.shape[0], -1).sum(axis=1, dtype=np.float64)


def softmax(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max())
    return e / e.sum()


def correspondence_weights(energies_fixed, energies_moving, temperature: float = 1.0) -> np.ndarray:
    """``softmax(e_fixed * e_moving / temperature)``.

    Energies are raw map sums, so with the default unit temperature the
    weights of large volumes are very peaked.
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    ef = np.asarray(energies_fixed, dtype=np.float64).reshape(-1)
    em = np.asarray(energies_moving, dtype=np.float64).reshape(-1)
    if ef.shape != em.shape:
        raise MismatchedLengths(f"{ef.size} fixed energies vs {em.size} moving energies")
    if ef.size == 0:
        raise ValueError("no energies given")
    prod = ef * em
    if not np.all(np.isfinite(prod)) or np.any(ef < 0) or np.any(em < 0):
        raise ValueError("energies must be finite and nonnegative")
    return softmax(prod / temperature)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _header_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_activations(path, acts) -> None:
    """Write ``path`` (raw f32le, x-fastest, maps concatenated) plus a ``.json`` header."""
    acts = validate_activations(acts)
    n, X, Y, Z = acts.shape
    header = {"n_maps": n, "dims": [X, Y, Z], "dtype": "f32le"}
    raw = np.asarray(acts, dtype="<f4")
    # x-fastest: Fortran order within each map, maps one after another
    blob = b"".join(np.asfortranarray(raw[i]).tobytes(order="F") for i in range(n))
    Path(path).write_bytes(blob)
    _header_path(path).write_text(json.dumps(header) + "\n")


def read_activations(path) -> np.ndarray:
    header = json.loads(_header_path(path).read_text())
    if header.get("dtype") != "f32le":
        raise ValueError(f"unsupported activation dtype {header.get('dtype')!r}")
    n = int(header["n_maps"])
    X, Y, Z = (int(d) for d in header["dims"])
    flat = np.frombuffer(Path(path).read_bytes(), dtype="<f4")
    if flat.size != n * X * Y * Z:
        raise ValueError(f"{path}: expected {n * X * Y * Z} values, found {flat.size}")
    maps = flat.reshape(n, X * Y * Z)
    return np.stack([m.reshape((X, Y, Z), order="F") for m in maps]).astype(np.float64)


def write_keypoints(path, points, weights=None) -> None:
    """CSV with header ``index,x,y,z[,weight]``; floats written at full precision."""
    pts = as_points(points)
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if weights.shape != (len(pts),):
            raise MismatchedLengths("one weight per keypoint required")
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["index", "x", "y", "z"] + (["weight"] if weights is not None else []))
        for i, p in enumerate(pts):
            row = [i] + [repr(float(v)) for v in p]
            if weights is not None:
                row.append(repr(float(weights[i])))
            wr.writerow(row)


def read_keypoints(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Return ``(points, weights)``; ``weights`` is ``None`` without a weight column."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no keypoints")
    rows.sort(key=lambda r: int(r["index"]))
    if [int(r["index"]) for r in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: keypoint indices must be 0..N-1")
    pts = as_points([[float(r["x"]), float(r["y"]), float(r["z"])] for r in rows])
    weights = None
    if "weight" in rows[0] and rows[0]["weight"] not in (None, ""):
        weights = np.array([float(r["weight"]) for r in rows])
    return pts, weights
