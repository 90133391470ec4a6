"""Synthetic phantoms with known landmarks, plus augmentation and lambda sampling.

A phantom is defined analytically in its own normalized coordinate frame:
Gaussian blobs at landmarks on a smooth ellipsoidal background, with labels
given by the Voronoi cells of the first ``n_labels`` landmarks clipped to
the ellipsoid.  Rendering under a transform ``S`` produces the volume whose
grid coordinate ``g`` shows the phantom at ``S(g)``; landmarks in that
volume's frame are ``S^-1(landmark)``, which is what makes them oracle
keypoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InfeasibleSpec
from ..geometry import (
    AffineTransform,
    RigidTransform,
    apply_transform,
    identity_affine,
    rotation_xyz,
    voxel_to_normalized,
    grid_points,
)
from .core import Volume3D

__all__ = [
    "PhantomSpec",
    "PhantomModel",
    "Phantom",
    "AugmentationRanges",
    "make_phantom_model",
    "render_phantom",
    "generate_phantom",
    "gaussian_activations",
    "sample_augmentation_params",
    "augmentation_from_params",
    "sample_augmentation",
    "lambda_from_unit",
    "sample_lambda",
]

ELLIPSOID_AXES = (0.8, 0.7, 0.6)
# landmarks live in this fraction of the ellipsoid so blobs stay inside the grid
LANDMARK_SHRINK = 0.75
MAX_ATTEMPTS = 1000


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int] = (64, 64, 64)
    n_landmarks: int = 16
    n_labels: int = 4
    seed: int = 0
    blob_sigma: float = 0.03
    spacing_mm: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.n_landmarks < 4:
            raise ValueError("n_landmarks must be >= 4")
        if self.n_labels < 2:
            raise ValueError("n_labels must be >= 2")
        if self.n_labels > self.n_landmarks:
            raise ValueError("n_labels cannot exceed n_landmarks")
        if self.blob_sigma <= 0:
            raise ValueError("blob_sigma must be positive")
        if len(self.dims) != 3 or min(self.dims) < 2:
            raise ValueError("dims must be three sizes >= 2")


@dataclass(frozen=True)
class PhantomModel:
    landmarks: np.ndarray  # (N, 3) in phantom frame
    amplitudes: np.ndarray  # (N,)
    n_labels: int
    blob_sigma: float
    axes: tuple[float, float, float] = ELLIPSOID_AXES


@dataclass
class Phantom:
    image: Volume3D
    labels: Volume3D
    landmarks: np.ndarray
    activations: np.ndarray
    model: PhantomModel = field(repr=False)


def _sample_in_ellipsoid(rng, axes):
    while True:
        u = rng.uniform(-1.0, 1.0, 3)
        if u @ u <= 1.0:
            return u * np.asarray(axes)


def make_phantom_model(spec: PhantomSpec) -> PhantomModel:
    """Draw landmarks (separated by >= 2 sigma, non-coplanar) and blob amplitudes."""
    rng = np.random.default_rng(spec.seed)
    axes = tuple(a * LANDMARK_SHRINK for a in ELLIPSOID_AXES)
    min_sep = 2.0 * spec.blob_sigma
    voxel_diag = float(np.linalg.norm(2.0 / (np.asarray(spec.dims) - 1.0)))
    for _ in range(MAX_ATTEMPTS):
        pts = []
        for _i in range(spec.n_landmarks):
            for _try in range(MAX_ATTEMPTS):
                cand = _sample_in_ellipsoid(rng, axes)
                if all(np.linalg.norm(cand - p) >= min_sep for p in pts):
                    pts.append(cand)
                    break
            else:
                raise InfeasibleSpec(
                    f"could not place {spec.n_landmarks} landmarks {min_sep:g} apart "
                    f"in {MAX_ATTEMPTS} attempts"
                )
        pts = np.array(pts)
        sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
        if sv[-1] < 1e-3 * sv[0]:
            continue
        # every label cell needs room for at least one voxel of its own
        sites = pts[: spec.n_labels]
        if spec.n_labels > 1:
            d = np.linalg.norm(sites[:, None] - sites[None], axis=2)
            np.fill_diagonal(d, np.inf)
            if d.min() < 2.0 * voxel_diag:
                continue
        amps = rng.uniform(0.5, 1.0, spec.n_landmarks)
        return PhantomModel(pts, amps, spec.n_labels, spec.blob_sigma)
    raise InfeasibleSpec(f"no valid landmark configuration in {MAX_ATTEMPTS} attempts")


def _evaluate(model: PhantomModel, coords: np.ndarray):
    """Scalar intensity and label of the phantom at phantom-frame ``coords`` (K, 3)."""
    axes = np.asarray(model.axes)
    rho = np.sqrt(np.sum((coords / axes) ** 2, axis=1))
    inside = rho <= 1.0
    background = 0.3 * (1.0 + 0.25 * coords[:, 0]) / (1.0 + np.exp(-(1.0 - rho) / 0.05))

    sig = 2.0 * model.blob_sigma
    blobs = np.zeros(len(coords))
    for lm, amp in zip(model.landmarks, model.amplitudes):
        d2 = np.sum((coords - lm) ** 2, axis=1)
        blobs += amp * np.exp(-d2 / (2.0 * sig * sig))

    sites = model.landmarks[: model.n_labels]
    nearest = np.argmin(
        np.sum((coords[:, None, :] - sites[None, :, :]) ** 2, axis=2), axis=1
    )
    labels = np.where(inside, nearest + 1, 0).astype(np.uint16)
    return background + blobs, labels


def gaussian_activations(centers, dims, sigma: float) -> np.ndarray:
    """One isotropic Gaussian map per center, shape ``(N, X, Y, Z)``.

    Separable: each map is the outer product of three 1D profiles.
    """
    centers = np.asarray(centers, dtype=np.float64)
    ax = [voxel_to_normalized(np.arange(d), d) for d in dims]
    out = np.empty((len(centers),) + tuple(dims))
    for i, c in enumerate(centers):
        gx, gy, gz = (np.exp(-((ax[a] - c[a]) ** 2) / (2.0 * sigma * sigma)) for a in range(3))
        out[i] = gx[:, None, None] * gy[None, :, None] * gz[None, None, :]
    return out


def render_phantom(
    model: PhantomModel,
    dims,
    transform: AffineTransform | RigidTransform | None = None,
    spacing_mm=(1.0, 1.0, 1.0),
    chunk: int = 1 << 16,
) -> Phantom:
    """Render ``model`` on a grid whose coordinate ``g`` shows the phantom at ``transform(g)``."""
    dims = tuple(int(d) for d in dims)
    T = identity_affine() if transform is None else transform
    total = dims[0] * dims[1] * dims[2]
    img = np.empty(total)
    lab = np.empty(total, dtype=np.uint16)
    for s in range(0, total, chunk):
        g = grid_points(dims, s, s + chunk)
        img[s : s + len(g)], lab[s : s + len(g)] = _evaluate(model, apply_transform(T, g))
    inv = T.inverse()
    landmarks = np.asarray(apply_transform(inv, model.landmarks))
    acts = gaussian_activations(landmarks, dims, model.blob_sigma)
    return Phantom(
        image=Volume3D(img.reshape(dims), spacing_mm),
        labels=Volume3D(lab.reshape(dims), spacing_mm),
        landmarks=landmarks,
        activations=acts,
        model=model,
    )


def generate_phantom(spec: PhantomSpec, transform=None) -> Phantom:
    """Deterministic phantom for ``spec``; see :func:`render_phantom` for ``transform``."""
    model = make_phantom_model(spec)
    return render_phantom(model, spec.dims, transform, spec.spacing_mm)


# ---------------------------------------------------------------------------
# augmentation
# ---------------------------------------------------------------------------


def _interval(v, name):
    lo, hi = (float(x) for x in v)
    if not lo <= hi:
        raise ValueError(f"{name}: empty interval ({lo}, {hi})")
    return lo, hi


@dataclass(frozen=True)
class AugmentationRanges:
    """Uniform sampling intervals; rotation is given per axis (x, y, z)."""

    rotation_deg: tuple = ((-180.0, 180.0),) * 3
    translation_vox: tuple[float, float] = (-30.0, 30.0)
    scale: tuple[float, float] = (0.8, 1.2)
    shear: tuple[float, float] = (-0.1, 0.1)

    def __post_init__(self):
        rot = self.rotation_deg
        if len(rot) == 2 and np.isscalar(rot[0]):
            rot = (rot,) * 3
        rot = tuple(_interval(r, "rotation_deg") for r in rot)
        if len(rot) != 3:
            raise ValueError("rotation_deg needs one interval per axis")
        object.__setattr__(self, "rotation_deg", rot)
        object.__setattr__(self, "translation_vox", _interval(self.translation_vox, "translation_vox"))
        object.__setattr__(self, "scale", _interval(self.scale, "scale"))
        object.__setattr__(self, "shear", _interval(self.shear, "shear"))
        if self.scale[0] <= 0:
            raise ValueError("scale must be positive")


def sample_augmentation_params(ranges: AugmentationRanges, rng_seed) -> dict:
    rng = np.random.default_rng(rng_seed)
    return {
        "rotation_deg": np.array([rng.uniform(*r) for r in ranges.rotation_deg]),
        "scale": rng.uniform(*ranges.scale, size=3),
        # off-diagonal entries xy, xz, yx, yz, zx, zy
        "shear": rng.uniform(*ranges.shear, size=6),
        "translation_vox": rng.uniform(*ranges.translation_vox, size=3),
    }


def augmentation_from_params(params: dict, dims=(256, 256, 256)) -> AffineTransform:
    """Homogeneous product ``rotation @ scale @ shear @ translation``."""
    rot = np.eye(4)
    rot[:3, :3] = rotation_xyz(*params["rotation_deg"])
    scl = np.diag(np.append(params["scale"], 1.0))
    shr = np.eye(4)
    shr[[0, 0, 1, 1, 2, 2], [1, 2, 0, 2, 0, 1]] = params["shear"]
    trn = np.eye(4)
    trn[:3, 3] = params["translation_vox"] * 2.0 / (np.asarray(dims, dtype=np.float64) - 1.0)
    return AffineTransform((rot @ scl @ shr @ trn)[:3])


def sample_augmentation(
    ranges: AugmentationRanges, rng_seed, dims=(256, 256, 256)
) -> AffineTransform:
    """Random affine in normalized coordinates; translations are voxels on a ``dims`` grid."""
    return augmentation_from_params(sample_augmentation_params(ranges, rng_seed), dims)


def lambda_from_unit(u, exponent_range=(0.0, 1.0)):
    """Map ``u`` in [0, 1] to ``10 ** (lo + u (hi - lo))``."""
    lo, hi = exponent_range
    return 10.0 ** (lo + np.asarray(u, dtype=np.float64) * (hi - lo))


def sample_lambda(rng_seed, exponent_range=(0.0, 1.0), size=None):
    """Log-uniform TPS regularization draw; the default support is [1, 10]."""
    rng = np.random.default_rng(rng_seed)
    u = rng.uniform(0.0, 1.0, size=size)
    lam = lambda_from_unit(u, exponent_range)
    return float(lam) if size is None else lam
