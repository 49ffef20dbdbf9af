"""Bilateral segmentation network: spatial path + context path.

The spatial path keeps a rich stride-8 representation via three strided
convolutions. The context path is a residual trunk whose stride-16/32
features pass through attention refinement and global context; the feature
fusion module merges both paths with channel attention.

The trunk at full scale uses the (3, 4, 6, 3) bottleneck depth variant: the
combination of this head with a 23-block conv4 trunk would roughly double
the reference parameter budget for this architecture, so the shallower
member of the same family is used and the residual deviation is reported by
the parameter audit.
"""

from ..nn import functional as F
from ..nn.layers import BatchNorm2d, ConvBN, Conv2d, Module, Sequential
from .common import scaled
from .resnet import RESNET50_BLOCKS, ResNetEncoder


class AttentionRefinement(Module):
    def __init__(self, cin, out, rng, dtype=None):
        self.reduce = ConvBN(cin, out, 1, rng, dtype=dtype)
        self.attn_conv = Conv2d(out, out, 1, rng, bias=False, dtype=dtype)
        self.attn_bn = BatchNorm2d(out, dtype=dtype)

    def __call__(self, x, training=False):
        y = self.reduce(x, training)
        a = F.global_avg_pool(y)
        a = F.sigmoid(self.attn_bn(self.attn_conv(a, training), training))
        return F.mul(y, a)


class FeatureFusion(Module):
    def __init__(self, cin, out, mid, rng, dtype=None):
        self.fuse = ConvBN(cin, out, 1, rng, dtype=dtype)
        self.attn1 = Conv2d(out, mid, 1, rng, dtype=dtype)
        self.attn2 = Conv2d(mid, out, 1, rng, dtype=dtype)

    def __call__(self, sp, cp, training=False):
        y = self.fuse(F.concat([sp, cp], axis=1), training)
        a = F.global_avg_pool(y)
        a = F.sigmoid(self.attn2(F.relu(self.attn1(a, training)), training))
        return F.add(y, F.mul(y, a))


class BiSeNet(Module):
    def __init__(self, in_channels, num_classes, rng, width_scale=1.0,
                 depth_scale=1.0, dtype=None):
        ws = width_scale
        sp_ch = scaled(64, ws)
        ctx = scaled(128, ws)
        sp_out = scaled(128, ws)
        self.spatial_path = Sequential(
            ConvBN(in_channels, sp_ch, 7, rng, stride=2, dtype=dtype),
            ConvBN(sp_ch, sp_ch, 3, rng, stride=2, dtype=dtype),
            ConvBN(sp_ch, sp_ch, 3, rng, stride=2, dtype=dtype),
            ConvBN(sp_ch, sp_out, 1, rng, dtype=dtype),
        )
        self.backbone = ResNetEncoder(in_channels, rng, ws, depth_scale,
                                      output_stride=32, stage_blocks=RESNET50_BLOCKS,
                                      dtype=dtype)
        c4 = self.backbone.stage_channels[2]
        c5 = self.backbone.stage_channels[3]
        self.arm16 = AttentionRefinement(c4, ctx, rng, dtype=dtype)
        self.arm32 = AttentionRefinement(c5, ctx, rng, dtype=dtype)
        self.global_context = ConvBN(c5, ctx, 1, rng, dtype=dtype)
        self.head32 = ConvBN(ctx, ctx, 3, rng, dtype=dtype)
        self.head16 = ConvBN(ctx, ctx, 3, rng, dtype=dtype)
        fuse_ch = scaled(256, ws)
        self.ffm = FeatureFusion(sp_out + ctx, fuse_ch, scaled(64, ws), rng, dtype=dtype)
        self.seg_head = ConvBN(fuse_ch, fuse_ch, 3, rng, dtype=dtype)
        self.classifier = Conv2d(fuse_ch, num_classes, 1, rng, dtype=dtype)
        self.has_spatial_and_context_paths = True

    def __call__(self, x, training=False):
        hw = x.data.shape[2:]
        sp = self.spatial_path(x, training)
        feats = self.backbone(x, training)
        c4, c5 = feats["c4"], feats["c5"]
        g = self.global_context(F.global_avg_pool(c5), training)
        f32 = F.add(self.arm32(c5, training), F.upsample_nearest(g, c5.data.shape[2:]))
        f32 = self.head32(f32, training)
        f32 = F.upsample_bilinear(f32, c4.data.shape[2:])
        f16 = F.add(self.arm16(c4, training), f32)
        f16 = self.head16(f16, training)
        cp = F.upsample_bilinear(f16, sp.data.shape[2:])
        y = self.ffm(sp, cp, training)
        y = self.seg_head(y, training)
        y = self.classifier(y, training)
        return F.upsample_bilinear(y, hw)
