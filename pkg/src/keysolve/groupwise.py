"""Keypoint-only groupwise registration.

Coordinate ascent on the mean configuration: average the current subject
keypoints, register every subject's current keypoints onto that average,
repeat.  Only ``(M, N, 3)`` keypoint arrays are ever held in memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._parallel import pmap
from .errors import MismatchedLengths, SolverError
from .geometry import Transform, apply_transform, as_points
from .solvers import Family, SolveDiagnostics, solve

__all__ = [
    "GroupwiseState",
    "GroupwiseResult",
    "mean_keypoints",
    "group_spread",
    "groupwise_step",
    "groupwise_register",
]

DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITERS = 20


def _stack(sets, min_sets: int = 2) -> np.ndarray:
    arrs = [as_points(s, f"subject {i}") for i, s in enumerate(sets)]
    if len(arrs) < min_sets:
        raise ValueError(f"need at least {min_sets} keypoint sets, got {len(arrs)}")
    n = arrs[0].shape[0]
    for i, a in enumerate(arrs):
        if a.shape[0] != n:
            raise MismatchedLengths(f"subject {i} has {a.shape[0]} keypoints, expected {n}")
    return np.stack(arrs)


def mean_keypoints(sets) -> np.ndarray:
    """Pointwise arithmetic mean over subjects (fixed subject order)."""
    return _stack(sets).mean(axis=0)


def group_spread(sets, mean=None) -> float:
    """Sum over subjects and keypoints of squared distance to the mean."""
    S = _stack(sets)
    m = S.mean(axis=0) if mean is None else np.asarray(mean)
    return float(np.sum((S - m) ** 2))


@dataclass(frozen=True)
class GroupwiseState:
    subjects: np.ndarray  # (M, N, 3) current iterate
    originals: np.ndarray  # (M, N, 3)
    mean: np.ndarray  # (N, 3)
    iteration: int = 0
    displacement_trace: tuple[float, ...] = ()
    spread_trace: tuple[float, ...] = ()

    @classmethod
    def start(cls, sets) -> GroupwiseState:
        S = _stack(sets)
        return cls(subjects=S, originals=S.copy(), mean=S.mean(axis=0))


@dataclass
class GroupwiseResult:
    transforms: list[Transform]
    atlas_keypoints: np.ndarray
    iterations_run: int
    converged: bool
    displacement_trace: list[float]
    spread_trace: list[float] = field(default_factory=list)
    aligned_keypoints: np.ndarray | None = None
    diagnostics: list[SolveDiagnostics] = field(default_factory=list)


def _solve_subject(i, family, P, Q, lam, w):
    try:
        return solve(family, P, Q, lam, w)
    except SolverError as exc:
        err = type(exc)(f"subject {i}: {exc}")
        err.subject = i
        raise err from exc


def groupwise_step(
    state: GroupwiseState, family: Family, lam: float = 0.0, weights=None
) -> GroupwiseState:
    """One mean-then-register sweep."""
    mean = state.subjects.mean(axis=0)
    spread = float(np.sum((state.subjects - mean) ** 2))
    M = len(state.subjects)
    ws = [None] * M if weights is None else list(weights)

    def register(i):
        T, _ = _solve_subject(i, family, state.subjects[i], mean, lam, ws[i])
        return apply_transform(T, state.subjects[i])

    moved = np.stack(pmap(register, range(M)))
    disp = float(np.max(np.linalg.norm(moved - state.subjects, axis=2)))
    return replace(
        state,
        subjects=moved,
        mean=mean,
        iteration=state.iteration + 1,
        displacement_trace=state.displacement_trace + (disp,),
        spread_trace=state.spread_trace + (spread,),
    )


def groupwise_register(
    sets,
    family: Family = "rigid",
    lam: float = 0.0,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    weights=None,
) -> GroupwiseResult:
    """Jointly align ``M`` keypoint sets into their mean (atlas) space.

    Iterates :func:`groupwise_step` until the largest keypoint displacement
    of a sweep drops below ``tol`` or ``max_iters`` sweeps have run.  The
    returned transform for subject ``i`` is a fresh solve from the atlas
    keypoints to that subject's original keypoints, so it maps atlas space
    into the subject's image space (ready for backward warping).

    ``weights`` (one weight vector per subject, or ``None``) only affects
    the per-subject solves; the mean is always unweighted.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    state = GroupwiseState.start(sets)
    M = len(state.subjects)
    if weights is not None and len(weights) != M:
        raise MismatchedLengths(f"{len(weights)} weight vectors for {M} subjects")

    converged = False
    while state.iteration < max_iters:
        state = groupwise_step(state, family, lam, weights)
        if state.displacement_trace[-1] < tol:
            converged = True
            break

    atlas = state.subjects.mean(axis=0)
    ws = [None] * M if weights is None else list(weights)
    solved = pmap(
        lambda i: _solve_subject(i, family, atlas, state.originals[i], lam, ws[i]), range(M)
    )
    return GroupwiseResult(
        transforms=[T for T, _ in solved],
        atlas_keypoints=atlas,
        iterations_run=state.iteration,
        converged=converged,
        displacement_trace=list(state.displacement_trace),
        spread_trace=list(state.spread_trace),
        aligned_keypoints=state.subjects,
        diagnostics=[d for _, d in solved],
    )
