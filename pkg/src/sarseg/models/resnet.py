"""Bottleneck residual encoder shared by the ResNet-backed architectures.

Stage layout follows the classic 4-stage bottleneck design (expansion 4).
``output_stride`` turns trailing stages into dilated ones so dense heads can
keep spatial resolution without extra parameters. ``stage_blocks`` picks the
depth variant; width/depth multipliers produce the desk-scale models.
"""

from ..nn import functional as F
from ..nn.layers import ConvBN, Module, Sequential
from .common import scaled, scaled_depth

RESNET101_BLOCKS = (3, 4, 23, 3)
RESNET50_BLOCKS = (3, 4, 6, 3)


class Bottleneck(Module):
    def __init__(self, cin, mid, cout, rng, stride=1, dilation=1, dtype=None):
        self.conv1 = ConvBN(cin, mid, 1, rng, dtype=dtype)
        self.conv2 = ConvBN(mid, mid, 3, rng, stride=stride, dilation=dilation, dtype=dtype)
        self.conv3 = ConvBN(mid, cout, 1, rng, relu=False, dtype=dtype)
        if stride != 1 or cin != cout:
            self.shortcut = ConvBN(cin, cout, 1, rng, stride=stride, relu=False, dtype=dtype)
        else:
            self.shortcut = None

    def __call__(self, x, training=False):
        identity = x if self.shortcut is None else self.shortcut(x, training)
        y = self.conv1(x, training)
        y = self.conv2(y, training)
        y = self.conv3(y, training)
        return F.relu(F.add(y, identity))


class ResNetEncoder(Module):
    """Returns the four stage outputs c2..c5 plus the stem feature map."""

    def __init__(self, in_channels, rng, width_scale=1.0, depth_scale=1.0,
                 output_stride=32, stage_blocks=RESNET101_BLOCKS, dtype=None):
        if output_stride not in (8, 16, 32):
            raise ValueError("output_stride must be 8, 16 or 32")
        ws = width_scale
        self.stem_channels = scaled(64, ws)
        self.stem = ConvBN(in_channels, self.stem_channels, 7, rng, stride=2, dtype=dtype)
        mids = [scaled(64 * 2 ** i, ws) for i in range(4)]
        self.stage_channels = [m * 4 for m in mids]
        strides = [1, 2, 2, 2]
        dilations = [1, 1, 1, 1]
        if output_stride == 16:
            strides[3], dilations[3] = 1, 2
        elif output_stride == 8:
            strides[2], dilations[2] = 1, 2
            strides[3], dilations[3] = 1, 4
        self.stages = []
        cin = self.stem_channels
        for i, nblocks in enumerate(stage_blocks):
            blocks = []
            for b in range(scaled_depth(nblocks, depth_scale)):
                blocks.append(Bottleneck(
                    cin, mids[i], self.stage_channels[i], rng,
                    stride=strides[i] if b == 0 else 1,
                    dilation=dilations[i], dtype=dtype))
                cin = self.stage_channels[i]
            self.stages.append(Sequential(*blocks))
        self.output_stride = output_stride

    def __call__(self, x, training=False):
        stem = self.stem(x, training)
        y, _ = F.max_pool2d(stem, 3, 2, 1)
        feats = {"stem": stem}
        for i, stage in enumerate(self.stages):
            y = stage(y, training)
            feats[f"c{i + 2}"] = y
        return feats
