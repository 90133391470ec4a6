import numpy as np
import pytest

from keysolve.errors import MismatchedLengths
from keysolve.geometry import AffineTransform, RigidTransform, rotation_xyz
from keysolve.keypoints import extract_keypoints
from keysolve.volume import (
    AugmentationRanges,
    PhantomSpec,
    dice,
    hausdorff,
    make_phantom_model,
    register_pairwise,
    render_phantom,
    sample_augmentation,
)

SPEC = PhantomSpec(dims=(64, 64, 64), seed=2)


@pytest.fixture(scope="module")
def model():
    return make_phantom_model(SPEC)


@pytest.fixture(scope="module")
def fixed(model):
    return render_phantom(model, SPEC.dims)


def test_self_registration_is_identity(fixed):
    kp = extract_keypoints(fixed.activations)
    for family in ("rigid", "affine", "tps"):
        out, T, d = register_pairwise(fixed.image, fixed.image, kp, kp, family)
        np.testing.assert_allclose(T(kp), kp, atol=1e-9)
        assert np.abs(out.data - fixed.image.data).max() < 1e-6
        lab, _, _ = register_pairwise(fixed.labels, fixed.labels, kp, kp, family)
        np.testing.assert_array_equal(lab.data, fixed.labels.data)


def test_rigid_recovers_ground_truth(model, fixed):
    S = RigidTransform(rotation_xyz(25, -40, 70), [0.05, -0.03, 0.02])
    moving = render_phantom(model, SPEC.dims, S)
    kpm = extract_keypoints(moving.activations)
    kpf = extract_keypoints(fixed.activations)
    _, T, _ = register_pairwise(moving.image, fixed.image, kpm, kpf, "rigid")
    inv = S.inverse()
    assert np.abs(T.R - inv.R).max() < 1e-6
    assert np.abs(T.t - inv.t).max() < 1e-6


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_affine_augmentation_recovered(model, fixed, seed):
    S = sample_augmentation(AugmentationRanges(translation_vox=(-3, 3)), seed, SPEC.dims)
    moving = render_phantom(model, SPEC.dims, S)
    kpm = extract_keypoints(moving.activations)
    kpf = extract_keypoints(fixed.activations)
    out, T, _ = register_pairwise(moving.labels, fixed.labels, kpm, kpf, "affine")
    assert isinstance(T, AffineTransform)
    # only voxels that stay inside the rendered field of view can be recovered
    X = np.indices(SPEC.dims).reshape(3, -1).T * 2.0 / (np.array(SPEC.dims) - 1) - 1
    inside = np.all(np.abs(T(X)) <= 1.0, axis=1).reshape(SPEC.dims)
    per, _ = dice(np.where(inside, out.data, 0), np.where(inside, fixed.labels.data, 0))
    assert min(per.values()) >= 0.9
    np.testing.assert_allclose(T.A, S.inverse().A, atol=1e-6)


def test_large_rotation_dice(model, fixed):
    S = RigidTransform(rotation_xyz(135, 135, 135), np.zeros(3))
    moving = render_phantom(model, SPEC.dims, S)
    kpm = extract_keypoints(moving.activations)
    kpf = extract_keypoints(fixed.activations)
    for family in ("rigid", "affine"):
        out, _, _ = register_pairwise(moving.labels, fixed.labels, kpm, kpf, family)
        _, mean = dice(out, fixed.labels)
        assert mean >= 0.95
        for lab in range(1, SPEC.n_labels + 1):
            assert hausdorff(out, fixed.labels, lab) <= 2.0


def test_mismatched_keypoints(fixed):
    kp = extract_keypoints(fixed.activations)
    with pytest.raises(MismatchedLengths):
        register_pairwise(fixed.image, fixed.image, kp, kp[:-1])
