"""Full-resolution residual network (the deeper "B" variant by default).

Two parallel streams: a full-resolution residual stream carrying pixel-level
detail and a pooled stream for recognition. Each full-resolution residual
unit (FRRU) consumes both, refines the pooled stream and sends a residual
correction back to the full-resolution stream.
"""

from ..nn import functional as F
from ..nn.layers import ConvBN, Conv2d, Module, Sequential
from .common import scaled, scaled_depth

# (units, channels, pooled scale) per stage
DOWN_STAGES = ((3, 96, 2), (4, 192, 4), (2, 384, 8), (2, 384, 16), (2, 384, 32))
UP_STAGES = ((2, 192, 16), (2, 192, 8), (2, 192, 4), (2, 96, 2))
BASE_CHANNELS = 48
RESIDUAL_CHANNELS = 32


class ResidualUnit(Module):
    def __init__(self, channels, rng, dtype=None):
        self.conv1 = ConvBN(channels, channels, 3, rng, dtype=dtype)
        self.conv2 = ConvBN(channels, channels, 3, rng, relu=False, dtype=dtype)

    def __call__(self, x, training=False):
        y = self.conv2(self.conv1(x, training), training)
        return F.relu(F.add(y, x))


class FRRU(Module):
    """One full-resolution residual unit operating on (pooled, residual)."""

    def __init__(self, y_in, channels, res_channels, scale, rng, dtype=None):
        self.scale = scale
        self.conv1 = ConvBN(y_in + res_channels, channels, 3, rng, dtype=dtype)
        self.conv2 = ConvBN(channels, channels, 3, rng, dtype=dtype)
        self.res_conv = Conv2d(channels, res_channels, 1, rng, dtype=dtype)

    def __call__(self, y, z, training=False):
        zp, _ = F.max_pool2d(z, self.scale, self.scale, 0)
        y = self.conv1(F.concat([y, zp], axis=1), training)
        y = self.conv2(y, training)
        dz = F.upsample_nearest(self.res_conv(y, training), z.data.shape[2:])
        return y, F.add(z, dz)


class _FRRUStage(Module):
    def __init__(self, units):
        self.units = units

    def __call__(self, y, z, training=False):
        for unit in self.units:
            y, z = unit(y, z, training)
        return y, z


class FRRN(Module):
    def __init__(self, in_channels, num_classes, rng, width_scale=1.0,
                 depth_scale=1.0, dtype=None):
        ws = width_scale
        base = scaled(BASE_CHANNELS, ws)
        res_ch = scaled(RESIDUAL_CHANNELS, ws)
        self.entry_conv = ConvBN(in_channels, base, 5, rng, dtype=dtype)
        self.entry_units = Sequential(*[ResidualUnit(base, rng, dtype=dtype) for _ in range(3)])
        self.split_conv = Conv2d(base, res_ch, 1, rng, dtype=dtype)

        self.down_stages = []
        y_ch = base
        for units, channels, scale in DOWN_STAGES:
            c = scaled(channels, ws)
            stage = [FRRU(y_ch if i == 0 else c, c, res_ch, scale, rng, dtype=dtype)
                     for i in range(scaled_depth(units, depth_scale))]
            self.down_stages.append(_FRRUStage(stage))
            y_ch = c
        self.up_stages = []
        for units, channels, scale in UP_STAGES:
            c = scaled(channels, ws)
            stage = [FRRU(y_ch if i == 0 else c, c, res_ch, scale, rng, dtype=dtype)
                     for i in range(scaled_depth(units, depth_scale))]
            self.up_stages.append(_FRRUStage(stage))
            y_ch = c
        self.merge_conv = Conv2d(y_ch + res_ch, base, 1, rng, dtype=dtype)
        self.exit_units = Sequential(*[ResidualUnit(base, rng, dtype=dtype) for _ in range(3)])
        self.classifier = Conv2d(base, num_classes, 1, rng, dtype=dtype)
        self.has_full_resolution_stream = True

    def __call__(self, x, training=False):
        y = self.entry_units(self.entry_conv(x, training), training)
        z = self.split_conv(y, training)
        for stage in self.down_stages:
            y, _ = F.max_pool2d(y, 2, 2, 0)
            y, z = stage(y, z, training)
        for stage in self.up_stages:
            y = F.upsample_nearest(y, (y.data.shape[2] * 2, y.data.shape[3] * 2))
            y, z = stage(y, z, training)
        y = F.upsample_nearest(y, z.data.shape[2:])
        y = self.merge_conv(F.concat([y, z], axis=1), training)
        y = self.exit_units(y, training)
        return self.classifier(y, training)
