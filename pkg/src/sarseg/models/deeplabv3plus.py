"""Encoder-decoder with atrous spatial pyramid pooling.

Dilated residual encoder at output stride 16; the ASPP head mixes a 1x1
projection, three separable atrous branches and pooled image-level context.
A light decoder refines the upsampled head output with low-level stride-4
features before the final 4x upsampling.
"""

from ..nn import functional as F
from ..nn.layers import ConvBN, Conv2d, Module, SeparableConvBN
from .common import scaled
from .resnet import ResNetEncoder

ASPP_RATES = (6, 12, 18)


class ASPP(Module):
    def __init__(self, cin, out, rng, rates=ASPP_RATES, dtype=None):
        self.branch0 = ConvBN(cin, out, 1, rng, dtype=dtype)
        self.atrous = [SeparableConvBN(cin, out, 3, rng, dilation=r, dtype=dtype)
                       for r in rates]
        self.image_pool = ConvBN(cin, out, 1, rng, dtype=dtype)
        self.project = ConvBN(out * (len(rates) + 2), out, 1, rng, dtype=dtype)
        self.rates = tuple(rates)

    def __call__(self, x, training=False):
        hw = x.data.shape[2:]
        feats = [self.branch0(x, training)]
        feats.extend(b(x, training) for b in self.atrous)
        pooled = self.image_pool(F.global_avg_pool(x), training)
        feats.append(F.upsample_bilinear(pooled, hw))
        return self.project(F.concat(feats, axis=1), training)


class DeepLabV3Plus(Module):
    def __init__(self, in_channels, num_classes, rng, width_scale=1.0,
                 depth_scale=1.0, dtype=None):
        self.backbone = ResNetEncoder(in_channels, rng, width_scale, depth_scale,
                                      output_stride=16, dtype=dtype)
        c2 = self.backbone.stage_channels[0]
        c5 = self.backbone.stage_channels[3]
        head = scaled(256, width_scale)
        low = scaled(48, width_scale)
        self.aspp = ASPP(c5, head, rng, dtype=dtype)
        self.low_level = ConvBN(c2, low, 1, rng, dtype=dtype)
        self.refine1 = ConvBN(head + low, head, 3, rng, dtype=dtype)
        self.refine2 = ConvBN(head, head, 3, rng, dtype=dtype)
        self.classifier = Conv2d(head, num_classes, 1, rng, dtype=dtype)
        self.uses_atrous = True
        self.aspp_rates = self.aspp.rates

    def __call__(self, x, training=False):
        hw = x.data.shape[2:]
        feats = self.backbone(x, training)
        y = self.aspp(feats["c5"], training)
        low = self.low_level(feats["c2"], training)
        y = F.upsample_bilinear(y, low.data.shape[2:])
        y = self.refine1(F.concat([y, low], axis=1), training)
        y = self.refine2(y, training)
        y = self.classifier(y, training)
        return F.upsample_bilinear(y, hw)
