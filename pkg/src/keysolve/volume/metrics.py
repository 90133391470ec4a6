"""Label overlap (Dice) and boundary distance (Hausdorff)."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DimMismatch, EmptyLabel
from .core import Volume3D

__all__ = ["dice", "hausdorff", "boundary_mask", "label_values"]


def _labels_of(v) -> tuple[np.ndarray, tuple[float, float, float]]:
    if isinstance(v, Volume3D):
        return v.data, v.spacing_mm
    arr = np.asarray(v)
    return arr, (1.0, 1.0, 1.0)


def label_values(*volumes) -> list[int]:
    """Sorted nonzero labels present in any of ``volumes``."""
    found = set()
    for v in volumes:
        found.update(int(x) for x in np.unique(_labels_of(v)[0]))
    found.discard(0)
    return sorted(found)


def dice(a, b, labels=None) -> tuple[dict[int, float], float]:
    """Per-label Dice ``2|A&B| / (|A|+|B|)`` and the mean over labels.

    By default every nonzero label present in either volume is scored.
    Requested labels absent from both volumes are left out of the result
    and of the mean.  The mean is ``nan`` when nothing is scored.
    """
    A, _ = _labels_of(a)
    B, _ = _labels_of(b)
    if A.shape != B.shape:
        raise DimMismatch(f"dims differ: {A.shape} vs {B.shape}")
    labels = label_values(A, B) if labels is None else [int(x) for x in labels]
    per = {}
    for lab in labels:
        ma = A == lab
        mb = B == lab
        na, nb = int(ma.sum()), int(mb.sum())
        if na + nb == 0:
            continue
        per[lab] = 2.0 * int(np.logical_and(ma, mb).sum()) / (na + nb)
    mean = float(np.mean(list(per.values()))) if per else float("nan")
    return per, mean


def boundary_mask(mask: np.ndarray) -> np.ndarray:
    """Foreground voxels with a 6-neighbour outside the mask or on the volume edge."""
    m = np.asarray(mask, dtype=bool)
    p = np.pad(m, 1, constant_values=False)
    interior = (
        p[2:, 1:-1, 1:-1]
        & p[:-2, 1:-1, 1:-1]
        & p[1:-1, 2:, 1:-1]
        & p[1:-1, :-2, 1:-1]
        & p[1:-1, 1:-1, 2:]
        & p[1:-1, 1:-1, :-2]
    )
    return m & ~interior


def hausdorff(a, b, label: int, percentile: float | None = None) -> float:
    """Symmetric Hausdorff distance in mm between the boundaries of ``label``.

    Distances are exact nearest-neighbour distances (KD-tree), using the
    voxel spacing of ``a``.  With ``percentile`` (e.g. 95) the larger of the
    two directed percentiles is returned instead of the maximum.
    """
    A, spacing = _labels_of(a)
    B, _ = _labels_of(b)
    if A.shape != B.shape:
        raise DimMismatch(f"dims differ: {A.shape} vs {B.shape}")
    ba = np.argwhere(boundary_mask(A == label)) * np.asarray(spacing)
    bb = np.argwhere(boundary_mask(B == label)) * np.asarray(spacing)
    if len(ba) == 0 or len(bb) == 0:
        raise EmptyLabel(f"label {label} is missing from one of the volumes")
    d_ab, _ = cKDTree(bb).query(ba)
    d_ba, _ = cKDTree(ba).query(bb)
    if percentile is None:
        return float(max(d_ab.max(), d_ba.max()))
    return float(max(np.percentile(d_ab, percentile), np.percentile(d_ba, percentile)))
