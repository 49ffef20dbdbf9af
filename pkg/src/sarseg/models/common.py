"""Shared helpers for the model zoo."""

import numpy as np


def scaled(channels, width_scale, minimum=4):
    """Channel width under a width multiplier, floored for numeric stability."""
    return max(minimum, int(round(channels * width_scale)))


def scaled_depth(count, depth_scale):
    """Repeat count under a depth multiplier; at least one unit survives."""
    return max(1, int(round(count * depth_scale)))


def normalize_input(batch_nhwc, mean, std, dtype):
    """Map [0, 255] NHWC input to standardized NCHW."""
    x = np.asarray(batch_nhwc, dtype=dtype)
    x = x / dtype(255.0)
    x = (x - dtype(mean)) / dtype(std)
    return np.ascontiguousarray(x.transpose(0, 3, 1, 2))
