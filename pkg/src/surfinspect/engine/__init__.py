"""Numeric kernels for the layers used by the inspection networks."""
from .batchnorm import EVAL, TRAIN, batchnorm_backward, batchnorm_forward
from .conv import conv2d_backward, conv2d_forward
from .elementwise import (
    concat_channels,
    concat_channels_backward,
    prelu_backward,
    prelu_forward,
    residual_add,
    residual_add_backward,
)
from .init import PRELU_INIT, he_init, he_std
from .linear import fc_backward, fc_forward
from .loss import log_softmax, logsoftmax_nll
from .pooling import maxpool2_backward, maxpool2_forward
from .tensor import (
    DTYPE,
    BatchNormParams,
    ConvParams,
    FCParams,
    PReLUParams,
    ShapeError,
    Tensor,
    output_size,
)

__all__ = [
    "DTYPE", "EVAL", "TRAIN", "BatchNormParams", "ConvParams", "FCParams", "PReLUParams",
    "ShapeError", "Tensor", "batchnorm_backward", "batchnorm_forward", "concat_channels",
    "concat_channels_backward", "conv2d_backward", "conv2d_forward", "fc_backward",
    "fc_forward", "he_init", "he_std", "log_softmax", "logsoftmax_nll", "maxpool2_backward",
    "maxpool2_forward", "output_size", "PRELU_INIT", "prelu_backward", "prelu_forward",
    "residual_add", "residual_add_backward",
]
