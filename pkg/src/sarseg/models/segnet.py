"""Encoder-decoder segmentation network with pooling indices and skips.

VGG16-style encoder (13 conv layers in 5 stages). Each decoder stage
upsamples with the max-unpooling indices memorized by its twin encoder
pool, concatenates the encoder stage's pre-pool feature map, and applies
the mirrored convolution stack.
"""

from ..nn import functional as F
from ..nn.layers import ConvBN, Conv2d, Module, Sequential
from .common import scaled

ENCODER_PLAN = ((64, 2), (128, 2), (256, 3), (512, 3), (512, 3))


class SegNet(Module):
    def __init__(self, in_channels, num_classes, rng, width_scale=1.0, dtype=None):
        ws = width_scale
        widths = [scaled(c, ws) for c, _ in ENCODER_PLAN]
        self.encoder = []
        cin = in_channels
        for w, nconv in zip(widths, (n for _, n in ENCODER_PLAN)):
            stage = [ConvBN(cin if i == 0 else w, w, 3, rng, dtype=dtype) for i in range(nconv)]
            self.encoder.append(Sequential(*stage))
            cin = w
        self.decoder = []
        # mirrored stacks; first conv of each stage sees unpooled + skip concat
        prev = widths[4]
        for stage_idx in range(4, -1, -1):
            w = widths[stage_idx]
            nconv = ENCODER_PLAN[stage_idx][1]
            out_w = widths[stage_idx - 1] if stage_idx > 0 else widths[0]
            convs = []
            for i in range(nconv):
                ci = prev + w if i == 0 else w
                co = w if i < nconv - 1 else out_w
                convs.append(ConvBN(ci, co, 3, rng, dtype=dtype))
            self.decoder.append(Sequential(*convs))
            prev = out_w
        self.classifier = Conv2d(widths[0], num_classes, 1, rng, dtype=dtype)
        self.uses_pool_indices = True

    def __call__(self, x, training=False):
        skips = []
        pool_meta = []
        y = x
        for stage in self.encoder:
            y = stage(y, training)
            skips.append(y)
            pre_pool_hw = y.data.shape[2:]
            y, idx = F.max_pool2d(y, 2, 2, 0)
            pool_meta.append((idx, pre_pool_hw))
        for i, stage in enumerate(self.decoder):
            idx, hw = pool_meta[4 - i]
            y = F.max_unpool2d(y, idx, hw)
            y = F.concat([y, skips[4 - i]], axis=1)
            y = stage(y, training)
        return self.classifier(y, training)
