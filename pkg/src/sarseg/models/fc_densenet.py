"""Fully convolutional DenseNet (103-layer configuration by default).

Dense blocks concatenate every layer's features; transitions down are
1x1 conv + max pool, transitions up are 3x3 transposed convolutions applied
to the block's newly produced features only, then concatenated with the
matching down-path skip.
"""

from ..nn import functional as F
from ..nn.autodiff import Param
from ..nn.layers import BatchNorm2d, Conv2d, ConvTranspose2d, Module, Sequential
from .common import scaled, scaled_depth

DOWN_BLOCKS = (4, 5, 7, 10, 12)
BOTTLENECK_LAYERS = 15
UP_BLOCKS = (12, 10, 7, 5, 4)
GROWTH = 16
FIRST_CONV = 48


class DenseLayer(Module):
    def __init__(self, cin, growth, rng, dtype=None):
        self.bn = BatchNorm2d(cin, dtype=dtype)
        self.conv = Conv2d(cin, growth, 3, rng, bias=True, dtype=dtype)

    def __call__(self, x, training=False):
        return self.conv(F.relu(self.bn(x, training)), training)


class DenseBlock(Module):
    def __init__(self, cin, growth, nlayers, rng, dtype=None):
        self.layers = [DenseLayer(cin + i * growth, growth, rng, dtype=dtype)
                       for i in range(nlayers)]
        self.out_channels = cin + nlayers * growth
        self.new_channels = nlayers * growth

    def __call__(self, x, training=False):
        feats = [x]
        for layer in self.layers:
            cur = feats[0] if len(feats) == 1 else F.concat(feats, axis=1)
            feats.append(layer(cur, training))
        return F.concat(feats, axis=1), F.concat(feats[1:], axis=1)


class TransitionDown(Module):
    def __init__(self, channels, rng, dtype=None):
        self.bn = BatchNorm2d(channels, dtype=dtype)
        self.conv = Conv2d(channels, channels, 1, rng, bias=True, dtype=dtype)

    def __call__(self, x, training=False):
        y = self.conv(F.relu(self.bn(x, training)), training)
        y, _ = F.max_pool2d(y, 2, 2, 0)
        return y


class FCDenseNet(Module):
    def __init__(self, in_channels, num_classes, rng, width_scale=1.0,
                 depth_scale=1.0, dtype=None):
        growth = scaled(GROWTH, width_scale, minimum=2)
        first = scaled(FIRST_CONV, width_scale)
        down_layers = [scaled_depth(n, depth_scale) for n in DOWN_BLOCKS]
        up_layers = [scaled_depth(n, depth_scale) for n in UP_BLOCKS]
        mid_layers = scaled_depth(BOTTLENECK_LAYERS, depth_scale)

        self.first_conv = Conv2d(in_channels, first, 3, rng, bias=True, dtype=dtype)
        self.down_blocks = []
        self.down_transitions = []
        c = first
        skip_channels = []
        for n in down_layers:
            block = DenseBlock(c, growth, n, rng, dtype=dtype)
            self.down_blocks.append(block)
            c = block.out_channels
            skip_channels.append(c)
            self.down_transitions.append(TransitionDown(c, rng, dtype=dtype))
        self.bottleneck = DenseBlock(c, growth, mid_layers, rng, dtype=dtype)
        new_c = self.bottleneck.new_channels

        self.up_transitions = []
        self.up_blocks = []
        for i, n in enumerate(up_layers):
            self.up_transitions.append(
                ConvTranspose2d(new_c, new_c, 3, rng, stride=2, bias=True, dtype=dtype))
            cin = new_c + skip_channels[-(i + 1)]
            block = DenseBlock(cin, growth, n, rng, dtype=dtype)
            self.up_blocks.append(block)
            new_c = block.new_channels
        self.classifier = Conv2d(self.up_blocks[-1].out_channels, num_classes, 1,
                                 rng, bias=True, dtype=dtype)
        self.has_dense_skip_concat = True

    def __call__(self, x, training=False):
        y = self.first_conv(x, training)
        skips = []
        for block, trans in zip(self.down_blocks, self.down_transitions):
            full, _ = block(y, training)
            skips.append(full)
            y = trans(full, training)
        _, new = self.bottleneck(y, training)
        for i, (up, block) in enumerate(zip(self.up_transitions, self.up_blocks)):
            upped = up(new, training)
            y = F.concat([upped, skips[-(i + 1)]], axis=1)
            full, new = block(y, training)
        return self.classifier(full, training)
