"""Pyramid scene parsing network on a dilated residual encoder.

The encoder runs at output stride 8; the pyramid module pools its feature
map to four grid sizes, projects each, upsamples back and fuses everything
with the original map before the per-pixel classifier.
"""

from ..nn import functional as F
from ..nn.layers import ConvBN, Conv2d, Module
from .common import scaled
from .resnet import ResNetEncoder

POOL_BINS = (1, 2, 3, 6)


class PyramidPooling(Module):
    def __init__(self, cin, branch_channels, rng, dtype=None):
        self.bins = POOL_BINS
        self.branches = [ConvBN(cin, branch_channels, 1, rng, dtype=dtype)
                         for _ in self.bins]
        self.out_channels = cin + branch_channels * len(self.bins)

    def __call__(self, x, training=False):
        hw = x.data.shape[2:]
        feats = [x]
        for nbins, branch in zip(self.bins, self.branches):
            y = F.adaptive_avg_pool2d(x, (nbins, nbins))
            y = branch(y, training)
            feats.append(F.upsample_bilinear(y, hw))
        return F.concat(feats, axis=1)


class PSPNet(Module):
    def __init__(self, in_channels, num_classes, rng, width_scale=1.0,
                 depth_scale=1.0, dtype=None):
        self.backbone = ResNetEncoder(in_channels, rng, width_scale, depth_scale,
                                      output_stride=8, dtype=dtype)
        c5 = self.backbone.stage_channels[3]
        branch = scaled(512, width_scale)
        fuse = scaled(256, width_scale)
        self.pyramid = PyramidPooling(c5, branch, rng, dtype=dtype)
        self.fuse = ConvBN(self.pyramid.out_channels, fuse, 3, rng, dtype=dtype)
        self.classifier = Conv2d(fuse, num_classes, 1, rng, dtype=dtype)
        self.pyramid_levels = len(self.pyramid.branches)

    def __call__(self, x, training=False):
        hw = x.data.shape[2:]
        feats = self.backbone(x, training)
        y = self.pyramid(feats["c5"], training)
        y = self.fuse(y, training)
        y = self.classifier(y, training)
        return F.upsample_bilinear(y, hw)
