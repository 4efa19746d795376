"""Detector building blocks on (C, H, W) float arrays."""
from .attention import TripletParams, rotate_dims, triplet_attention, zpool
from .conv import conv2d_unit_stride, max_pool2d_same
from .gradcheck import finite_diff_gradient
from .losses import (
    LossParams,
    cross_entropy,
    cross_entropy_grad,
    focal_loss,
    focal_loss_grad,
    quality_focal_loss,
    quality_focal_loss_grad,
)
from .spd import SpdParams, inverse_spd, spd_conv, spd_transform
from .sppfcspc import SppfcspcParams, pool_pyramid, sppfcspc_forward
from .tensor import as_tensor

__all__ = [
    "LossParams",
    "SpdParams",
    "SppfcspcParams",
    "TripletParams",
    "as_tensor",
    "conv2d_unit_stride",
    "cross_entropy",
    "cross_entropy_grad",
    "finite_diff_gradient",
    "focal_loss",
    "focal_loss_grad",
    "inverse_spd",
    "max_pool2d_same",
    "pool_pyramid",
    "quality_focal_loss",
    "quality_focal_loss_grad",
    "rotate_dims",
    "spd_conv",
    "spd_transform",
    "sppfcspc_forward",
    "triplet_attention",
    "zpool",
]
