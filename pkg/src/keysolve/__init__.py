"""Keypoint-driven 3D registration.

Closed-form rigid / affine / thin-plate-spline solvers over corresponding
keypoints, center-of-mass keypoint extraction, keypoint-only groupwise
registration, and backward warping with Dice / Hausdorff evaluation.
"""

from .errors import (
    AllZeroMap,
    DegenerateConfiguration,
    DimMismatch,
    EmptyLabel,
    InfeasibleSpec,
    InterpolationMismatch,
    InvalidWeights,
    KeysolveError,
    MismatchedLengths,
    SingularSystem,
    SolverError,
)
from .geometry import (
    AffineTransform,
    RigidTransform,
    TpsTransform,
    apply_affine,
    apply_rigid,
    apply_tps,
    apply_transform,
    compose_with_rigid,
    load_transform,
    save_transform,
)
from .groupwise import GroupwiseResult, groupwise_register, mean_keypoints
from .keypoints import activation_energies, correspondence_weights, extract_keypoints
from .solvers import (
    SolveDiagnostics,
    bending_energy,
    solve,
    solve_affine,
    solve_rigid,
    solve_tps,
)
from .volume import Volume3D, dice, generate_phantom, hausdorff, register_pairwise, warp

__version__ = "0.1.0"
