"""U-shaped network built from depthwise separable convolutions.

VGG-shaped separable encoder, transposed-convolution upsampling and
additive skip connections between mirrored stages.
"""

from ..nn import functional as F
from ..nn.layers import ConvBN, Conv2d, ConvTranspose2d, Module, SeparableConvBN, Sequential
from .common import scaled

STAGE_PLAN = ((64, 2), (128, 2), (256, 3), (512, 3), (512, 3))


class MobileUNet(Module):
    def __init__(self, in_channels, num_classes, rng, width_scale=1.0, dtype=None):
        ws = width_scale
        widths = [scaled(c, ws) for c, _ in STAGE_PLAN]
        self.encoder = []
        cin = in_channels
        for s, (w, nconv) in enumerate(zip(widths, (n for _, n in STAGE_PLAN))):
            convs = []
            for i in range(nconv):
                ci = cin if i == 0 else w
                if s == 0 and i == 0:
                    convs.append(ConvBN(ci, w, 3, rng, dtype=dtype))  # stem stays dense
                else:
                    convs.append(SeparableConvBN(ci, w, 3, rng, dtype=dtype))
            self.encoder.append(Sequential(*convs))
            cin = w
        self.up = []
        self.decoder = []
        prev = widths[4]
        for stage_idx in range(4, -1, -1):
            w = widths[stage_idx]
            nconv = STAGE_PLAN[stage_idx][1]
            out_w = widths[stage_idx - 1] if stage_idx > 0 else widths[0]
            self.up.append(ConvTranspose2d(prev, w, 3, rng, stride=2, dtype=dtype))
            convs = []
            for i in range(nconv):
                co = w if i < nconv - 1 else out_w
                convs.append(SeparableConvBN(w if i == 0 else w, co, 3, rng, dtype=dtype))
            self.decoder.append(Sequential(*convs))
            prev = out_w
        self.classifier = Conv2d(widths[0], num_classes, 1, rng, dtype=dtype)
        self.uses_depthwise_separable = True

    def __call__(self, x, training=False):
        skips = []
        y = x
        for stage in self.encoder:
            y = stage(y, training)
            skips.append(y)
            y, _ = F.max_pool2d(y, 2, 2, 0)
        for i, (up, stage) in enumerate(zip(self.up, self.decoder)):
            y = up(y, training)
            y = F.add(y, skips[4 - i])
            y = stage(y, training)
        return self.classifier(y, training)
