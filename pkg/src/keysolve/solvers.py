"""Closed-form keypoint solvers.

Each solver takes a source set ``P`` (fixed-space keypoints) and a target
set ``Q`` (moving-space keypoints) and returns the transform ``T`` with
``T(P) ~ Q`` in (weighted) least squares, together with
:class:`SolveDiagnostics`.

All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg
from scipy.linalg import lapack
from scipy.spatial.distance import cdist, pdist

from .errors import (
    DegenerateConfiguration,
    InvalidWeights,
    MismatchedLengths,
    SingularSystem,
)
from .geometry import (
    AffineTransform,
    RigidTransform,
    TpsTransform,
    Transform,
    apply_transform,
    as_points,
    grid_points,
    tps_kernel,
)

__all__ = [
    "SolveDiagnostics",
    "TpsSystem",
    "solve_rigid",
    "solve_affine",
    "solve_tps",
    "solve",
    "tps_system",
    "bending_energy",
    "residual_rms",
]

Family = Literal["rigid", "affine", "tps"]

AFFINE_MAX_COND = 1e12
TPS_WEIGHT_FLOOR = 1e-8
# relative singular-value floor below which the cross-covariance counts as rank deficient
RIGID_RANK_TOL = 1e-10


@dataclass(frozen=True)
class SolveDiagnostics:
    residual_rms: float
    condition_estimate: float
    reflection_corrected: bool = False
    weights_clamped: bool = False


def _check_pair(P, Q, min_points: int):
    P = as_points(P, "P")
    Q = as_points(Q, "Q")
    if P.shape != Q.shape:
        raise MismatchedLengths(f"P has {len(P)} points, Q has {len(Q)}")
    if len(P) < min_points:
        raise DegenerateConfiguration(
            f"need at least {min_points} correspondences, got {len(P)}"
        )
    return P, Q


def _check_weights(w, n: int) -> np.ndarray | None:
    if w is None:
        return None
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape != (n,):
        raise MismatchedLengths(f"expected {n} weights, got {w.size}")
    if not np.all(np.isfinite(w)):
        raise InvalidWeights("weights must be finite")
    if np.any(w < 0):
        raise InvalidWeights("weights must be nonnegative")
    if w.sum() <= 0:
        raise InvalidWeights("weights must not all be zero")
    return w


def residual_rms(T: Transform, P, Q, w=None) -> float:
    """RMS of ``|T(p_i) - q_i|``, weight-averaged when ``w`` is given."""
    r2 = np.sum((apply_transform(T, P) - Q) ** 2, axis=1)
    if w is None:
        return float(np.sqrt(r2.mean()))
    return float(np.sqrt(np.dot(w, r2) / w.sum()))


def _homogeneous(P):
    return np.hstack([P, np.ones((len(P), 1))])


# ---------------------------------------------------------------------------
# rigid
# ---------------------------------------------------------------------------


def solve_rigid(P, Q, w=None) -> tuple[RigidTransform, SolveDiagnostics]:
    """Weighted orthogonal Procrustes.

    Centroids are weight-averaged, the rotation comes from the SVD of the
    weighted cross-covariance ``sum_i w_i (p_i - p_bar)(q_i - q_bar)^T``,
    and the translation makes ``T(p_bar) = q_bar``.
    """
    P, Q = _check_pair(P, Q, 3)
    w = _check_weights(w, len(P))
    wn = np.full(len(P), 1.0 / len(P)) if w is None else w / w.sum()

    p_bar = wn @ P
    q_bar = wn @ Q
    Pc = P - p_bar
    Qc = Q - q_bar
    H = Pc.T @ (wn[:, None] * Qc)

    U, S, Vt = np.linalg.svd(H)
    if S[0] <= 0 or S[1] <= RIGID_RANK_TOL * S[0]:
        raise DegenerateConfiguration(
            "cross-covariance has rank < 2; rotation is not determined"
        )
    V = Vt.T
    d = np.linalg.det(V @ U.T)
    corrected = bool(d < 0)
    if corrected:
        V[:, -1] = -V[:, -1]
    R = V @ U.T
    t = q_bar - R @ p_bar

    T = RigidTransform(R, t)
    diag = SolveDiagnostics(
        residual_rms=residual_rms(T, P, Q, w),
        condition_estimate=float(S[0] / S[1]),
        reflection_corrected=corrected,
    )
    return T, diag


# ---------------------------------------------------------------------------
# affine
# ---------------------------------------------------------------------------


def solve_affine(P, Q, w=None) -> tuple[AffineTransform, SolveDiagnostics]:
    """Least-squares affine map ``A = Q W P~^T (P~ W P~^T)^-1``.

    The 4x4 normal matrix is inverted through its SVD; a condition number
    above ``1e12`` raises :class:`SingularSystem` instead of regularizing.
    """
    P, Q = _check_pair(P, Q, 4)
    w = _check_weights(w, len(P))
    Pt = _homogeneous(P)
    Pw = Pt if w is None else Pt * w[:, None]

    M = Pw.T @ Pt  # P~ W P~^T, 4x4
    B = Q.T @ Pw  # Q W P~^T, 3x4
    U, S, Vt = np.linalg.svd(M)
    cond = float(S[0] / S[-1]) if S[-1] > 0 else np.inf
    if cond > AFFINE_MAX_COND:
        raise SingularSystem(
            f"affine normal matrix is singular (condition {cond:.3g}); "
            "points are coplanar or weights vanish on too many points"
        )
    # M is symmetric, so M^-1 = V S^-1 U^T
    A = ((B @ Vt.T) / S) @ U.T

    T = AffineTransform(A)
    return T, SolveDiagnostics(residual_rms=residual_rms(T, P, Q, w), condition_estimate=cond)


# ---------------------------------------------------------------------------
# thin-plate spline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TpsSystem:
    """Assembled block system ``Psi [V; A] = Z``."""

    K: np.ndarray
    L: np.ndarray
    Psi: np.ndarray
    Z: np.ndarray
    weights_clamped: bool = False


def tps_system(P, Q, lam: float = 0.0, w=None) -> TpsSystem:
    """Build ``[[K + lam W^-1, L], [L^T, 0]]`` and ``[Q; 0]``.

    Without weights the regularizer is ``lam I``.  Weights below ``1e-8``
    are clamped before inversion.
    """
    P, Q = _check_pair(P, Q, 4)
    w = _check_weights(w, len(P))
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError("lambda must be a finite nonnegative number")
    n = len(P)

    K = tps_kernel(cdist(P, P))
    L = _homogeneous(P)
    clamped = False
    K_eff = K.copy()
    if lam > 0:
        if w is None:
            K_eff[np.diag_indices(n)] += lam
        else:
            clamped = bool(np.any(w < TPS_WEIGHT_FLOOR))
            K_eff[np.diag_indices(n)] += lam / np.maximum(w, TPS_WEIGHT_FLOOR)

    Psi = np.zeros((n + 4, n + 4))
    Psi[:n, :n] = K_eff
    Psi[:n, n:] = L
    Psi[n:, :n] = L.T
    Z = np.zeros((n + 4, 3))
    Z[:n] = Q
    return TpsSystem(K=K, L=L, Psi=Psi, Z=Z, weights_clamped=clamped)


def solve_tps(P, Q, lam: float = 0.0, w=None) -> tuple[TpsTransform, SolveDiagnostics]:
    """Solve the TPS block system with a pivoted LU of the full matrix."""
    P, Q = _check_pair(P, Q, 4)
    w = _check_weights(w, len(P))
    n = len(P)

    Ls = np.linalg.svd(_homogeneous(P), compute_uv=False)
    if Ls[-1] <= Ls[0] / AFFINE_MAX_COND:
        raise SingularSystem("control points are coplanar; TPS system is singular")
    if lam == 0 and n > 1 and pdist(P).min() == 0.0:
        raise SingularSystem("duplicate control points with lambda = 0")

    sysm = tps_system(P, Q, lam, w)
    try:
        lu, piv = scipy.linalg.lu_factor(sysm.Psi, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover
        raise SingularSystem(str(exc)) from exc
    if np.any(np.diag(lu) == 0):
        raise SingularSystem("TPS block matrix is exactly singular")
    theta = scipy.linalg.lu_solve((lu, piv), sysm.Z, check_finite=False)
    if not np.all(np.isfinite(theta)):
        raise SingularSystem("TPS solve produced non-finite coefficients")

    anorm = np.abs(sysm.Psi).sum(axis=0).max()
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    cond = float(1.0 / rcond) if rcond > 0 else np.inf

    T = TpsTransform(P, theta[n:], theta[:n], lam)
    diag = SolveDiagnostics(
        residual_rms=residual_rms(T, P, Q, w),
        condition_estimate=cond,
        weights_clamped=sysm.weights_clamped,
    )
    return T, diag


def solve(
    family: Family, P, Q, lam: float = 0.0, w=None
) -> tuple[Transform, SolveDiagnostics]:
    """Dispatch to the solver for ``family``; ``lam`` is ignored unless TPS."""
    if family == "rigid":
        return solve_rigid(P, Q, w)
    if family == "affine":
        return solve_affine(P, Q, w)
    if family == "tps":
        return solve_tps(P, Q, lam, w)
    raise ValueError(f"unknown transform family {family!r}")


# ---------------------------------------------------------------------------
# bending energy
# ---------------------------------------------------------------------------


def bending_energy(T: TpsTransform, grid_resolution: int = 32) -> float:
    """Finite-difference estimate of ``int ||Hessian T||_F^2`` over ``[-1, 1]^3``.

    Second derivatives use central differences at interior nodes of a
    ``grid_resolution^3`` lattice; each interior node contributes with the
    cell volume ``h^3``.
    """
    n = int(grid_resolution)
    if n < 8:
        raise ValueError("grid_resolution must be >= 8")
    h = 2.0 / (n - 1)
    F = np.asarray(T(grid_points((n, n, n)))).reshape(n, n, n, 3)

    c = (slice(1, -1),) * 3
    total = 0.0
    for a in range(3):
        fwd = [slice(1, -1)] * 3
        bwd = [slice(1, -1)] * 3
        fwd[a] = slice(2, None)
        bwd[a] = slice(None, -2)
        d2 = (F[tuple(fwd)] - 2.0 * F[c] + F[tuple(bwd)]) / h**2
        total += np.sum(d2**2)
        for b in range(a + 1, 3):
            sl = {}
            for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                idx = [slice(1, -1)] * 3
                idx[a] = slice(2, None) if sa > 0 else slice(None, -2)
                idx[b] = slice(2, None) if sb > 0 else slice(None, -2)
                sl[sa, sb] = F[tuple(idx)]
            dab = (sl[1, 1] - sl[1, -1] - sl[-1, 1] + sl[-1, -1]) / (4.0 * h**2)
            # mixed partials appear twice in the Frobenius norm
            total += 2.0 * np.sum(dab**2)
    return float(total * h**3)
