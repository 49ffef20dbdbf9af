"""Channel composition: cross-pol ratio, percentile stretch, 3-channel stacks.

The two dataset variants stack stretched VH, VV and either the VH/VV
amplitude ratio or a DEM as the third channel. Each channel is stretched
independently to [0, 255] using nearest-rank percentiles over non-nodata
pixels; the default (0.5, 99.5) window clips at most 1% of pixels.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptyBandError, InputError
from .raster import BAND_DEM, BAND_VH, BAND_VV

RATIO_EPS = 1e-6  # keeps the ratio finite when VV amplitude is zero


class Variant(enum.Enum):
    RGB_SAR_RATIO = "RGB_SAR_RATIO"
    RGB_SAR_DEM = "RGB_SAR_DEM"


@dataclass(frozen=True)
class StretchSpec:
    lower_pct: float = 0.5
    upper_pct: float = 99.5
    out_min: float = 0.0
    out_max: float = 255.0

    def __post_init__(self):
        if not 0.0 <= self.lower_pct < self.upper_pct <= 100.0:
            raise InputError("require 0 <= lower_pct < upper_pct <= 100")

    def clip_budget(self):
        """Upper bound on the fraction of pixels outside the stretch window."""
        return (100.0 - self.upper_pct + self.lower_pct) / 100.0


@dataclass
class ChannelStack:
    variant: Variant
    channels: np.ndarray  # (3, H, W) float32 in [0, 255]
    nodata_mask: np.ndarray

    def __post_init__(self):
        if self.channels.shape[0] != 3:
            raise InputError("a channel stack has exactly 3 channels")


def cross_pol_ratio(vh, vv):
    """Per-pixel VH/VV amplitude ratio with an epsilon-guarded denominator.

    The returned band is finite everywhere; nodata propagates via the scene
    mask that accompanies the bands.
    """
    if vh.shape != vv.shape:
        raise InputError(f"band geometry mismatch: {vh.shape} vs {vv.shape}")
    ratio = vh / (vv + np.float32(RATIO_EPS))
    return ratio.astype(np.float32, copy=False)


def nearest_rank_percentile(sorted_values, pct):
    """Nearest-rank percentile of an ascending 1D array."""
    n = sorted_values.size
    rank = max(1, int(np.ceil(pct / 100.0 * n)))
    return sorted_values[min(rank, n) - 1]


def percentile_stretch(band, spec=StretchSpec(), nodata_mask=None):
    """Affine-map a band into [out_min, out_max] between its spec percentiles.

    Percentiles are computed over non-nodata pixels only. A constant band
    maps to all out_min. Output at nodata pixels is out_min; callers keep the
    mask alongside.
    """
    if nodata_mask is None:
        values = band.ravel()
    else:
        values = band[~nodata_mask]
    if values.size == 0:
        raise EmptyBandError("band has no valid pixels to stretch")
    values = np.sort(values, kind="stable")
    lo = float(nearest_rank_percentile(values, spec.lower_pct))
    hi = float(nearest_rank_percentile(values, spec.upper_pct))
    out = np.zeros(band.shape, dtype=np.float32)
    if hi > lo:
        span = np.float32(spec.out_max - spec.out_min)
        scaled = (band - np.float32(lo)) / np.float32(hi - lo)
        np.clip(scaled, 0.0, 1.0, out=scaled)
        out = (scaled * span + np.float32(spec.out_min)).astype(np.float32)
    else:
        out += np.float32(spec.out_min)
    if nodata_mask is not None:
        out[nodata_mask] = np.float32(spec.out_min)
    return out


def clipped_fraction(band, spec=StretchSpec(), nodata_mask=None):
    """Fraction of valid pixels strictly outside the stretch window."""
    if nodata_mask is None:
        values = band.ravel()
    else:
        values = band[~nodata_mask]
    if values.size == 0:
        raise EmptyBandError("band has no valid pixels")
    svals = np.sort(values, kind="stable")
    lo = nearest_rank_percentile(svals, spec.lower_pct)
    hi = nearest_rank_percentile(svals, spec.upper_pct)
    return float(((values < lo) | (values > hi)).mean())


def compose_stack(scene, variant, spec=StretchSpec()):
    """Build the 3-channel input stack for a scene under the given variant.

    Channel 0 is stretched VH, channel 1 stretched VV; channel 2 is the
    stretched cross-pol ratio (RGB_SAR_RATIO) or the stretched DEM
    (RGB_SAR_DEM). Channels are stretched independently.
    """
    variant = Variant(variant)
    vh = scene.bands[BAND_VH]
    vv = scene.bands[BAND_VV]
    mask = scene.nodata_mask
    if variant is Variant.RGB_SAR_DEM:
        if not scene.has_dem:
            raise InputError(
                f"scene {scene.scene_id!r} has no {BAND_DEM} band but variant {variant.value} needs one")
        third = scene.bands[BAND_DEM]
    else:
        third = cross_pol_ratio(vh, vv)
    channels = np.stack([
        percentile_stretch(vh, spec, mask),
        percentile_stretch(vv, spec, mask),
        percentile_stretch(third, spec, mask),
    ])
    return ChannelStack(variant=variant, channels=channels, nodata_mask=mask)
