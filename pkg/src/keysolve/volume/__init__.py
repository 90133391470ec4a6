from .core import Volume3D, read_volume, write_volume
from .metrics import boundary_mask, dice, hausdorff, label_values
from .pairwise import register_pairwise
from .phantom import (
    AugmentationRanges,
    Phantom,
    PhantomModel,
    PhantomSpec,
    augmentation_from_params,
    gaussian_activations,
    generate_phantom,
    lambda_from_unit,
    make_phantom_model,
    render_phantom,
    sample_augmentation,
    sample_augmentation_params,
    sample_lambda,
)
from .warp import DEFAULT_CHUNK_VOXELS, sample, warp

__all__ = [
    "Volume3D",
    "read_volume",
    "write_volume",
    "dice",
    "hausdorff",
    "boundary_mask",
    "label_values",
    "register_pairwise",
    "AugmentationRanges",
    "Phantom",
    "PhantomModel",
    "PhantomSpec",
    "augmentation_from_params",
    "gaussian_activations",
    "generate_phantom",
    "lambda_from_unit",
    "make_phantom_model",
    "render_phantom",
    "sample_augmentation",
    "sample_augmentation_params",
    "sample_lambda",
    "DEFAULT_CHUNK_VOXELS",
    "sample",
    "warp",
]
