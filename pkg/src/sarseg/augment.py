"""Online geometric augmentation: right-angle rotations and axis flips.

The op set is the identity, three 90-degree rotations, the two axis flips
and their combination. The combined flip coincides with the 180-degree
rotation (the set generates a 6-element subgroup of the square's dihedral
group); it is still listed and sampled as its own kind, so the 180-degree
effect is drawn twice as often as the other non-identity effects.

Inputs and labels are transformed by the same coordinate map; no
photometric augmentation of any kind is applied.
"""

import enum

import numpy as np

from .errors import InputError


class AugmentOp(enum.Enum):
    IDENTITY = "IDENTITY"
    ROT90 = "ROT90"
    ROT180 = "ROT180"
    ROT270 = "ROT270"
    FLIP_H = "FLIP_H"
    FLIP_V = "FLIP_V"
    FLIP_HV = "FLIP_HV"


ALL_OPS = tuple(AugmentOp)


def _transform(arr, op):
    # spatial axes are (0, 1) for both (H, W) labels and (H, W, C) inputs
    if op is AugmentOp.IDENTITY:
        return arr.copy()
    if op is AugmentOp.ROT90:
        return np.ascontiguousarray(np.rot90(arr, 1, axes=(0, 1)))
    if op is AugmentOp.ROT180:
        return np.ascontiguousarray(np.rot90(arr, 2, axes=(0, 1)))
    if op is AugmentOp.ROT270:
        return np.ascontiguousarray(np.rot90(arr, 3, axes=(0, 1)))
    if op is AugmentOp.FLIP_H:
        return np.ascontiguousarray(np.flip(arr, axis=1))
    if op is AugmentOp.FLIP_V:
        return np.ascontiguousarray(np.flip(arr, axis=0))
    if op is AugmentOp.FLIP_HV:
        return np.ascontiguousarray(np.flip(np.flip(arr, axis=0), axis=1))
    raise InputError(f"unknown augmentation op {op!r}")


def apply(op, image, label=None):
    """Apply one op to an image (and, identically, to its label mask).

    Requires square spatial dimensions so shapes are preserved.
    """
    if image.shape[0] != image.shape[1]:
        raise InputError(f"augmentation requires square inputs, got {image.shape[:2]}")
    if label is not None and label.shape[:2] != image.shape[:2]:
        raise InputError("label geometry differs from image")
    out_img = _transform(image, op)
    if label is None:
        return out_img
    return out_img, _transform(label, op)


def coordinate_map(op, size):
    """Destination (row, col) of source pixel (r, c) under ``op`` on a size² array."""
    n = size - 1

    def t(r, c):
        if op is AugmentOp.IDENTITY:
            return r, c
        if op is AugmentOp.ROT90:
            return n - c, r
        if op is AugmentOp.ROT180:
            return n - r, n - c
        if op is AugmentOp.ROT270:
            return c, n - r
        if op is AugmentOp.FLIP_H:
            return r, n - c
        if op is AugmentOp.FLIP_V:
            return n - r, c
        if op is AugmentOp.FLIP_HV:
            return n - r, n - c
        raise InputError(f"unknown augmentation op {op!r}")

    return t


def sample_op(rng):
    """Draw one op uniformly over the 7 kinds from a seeded Generator."""
    return ALL_OPS[int(rng.integers(len(ALL_OPS)))]
