"""Imagelet sampling, geographic split assignment and the dataset manifest.

Each mosaic contributes a fixed number of 512x512 windows placed by seeded
rejection sampling with no pairwise overlap. Windows whose full longitude
extent lies inside the held-out band become TEST candidates; windows fully
outside become TRAIN/DEV candidates; windows straddling a band boundary are
rejected outright so the two regions can never share a pixel. TRAIN vs DEV
is a per-record pseudorandom draw keyed by (seed, scene, row, col).
"""

import enum
import json
import logging
import zlib
from dataclasses import dataclass

import numpy as np

from . import geo
from .errors import CapacityError, InputError
from .preprocess import StretchSpec, Variant, compose_stack
from .raster import NODATA_CODE, RasterScene, validate_pair

log = logging.getLogger("sarseg.sampler")

_MANIFEST_MAGIC = "# sarseg-manifest v1"


class Split(enum.Enum):
    TRAIN = "TRAIN"
    DEV = "DEV"
    TEST = "TEST"


@dataclass(frozen=True)
class SamplingSpec:
    imagelet_px: int = 512
    per_mosaic_total: int = 1000
    per_mosaic_test: int = 400
    per_mosaic_traindev: int = 600
    test_lon_min: float = 25.0
    test_lon_max: float = 29.0
    train_fraction_of_traindev: float = 0.6
    rng_seed: int = 0
    max_nodata_fraction: float = 0.5
    attempt_budget_factor: int = 100

    def __post_init__(self):
        if self.per_mosaic_test + self.per_mosaic_traindev != self.per_mosaic_total:
            raise InputError("per-mosaic test + traindev counts must equal the total")
        if not 0.0 < self.train_fraction_of_traindev < 1.0:
            raise InputError("train fraction must lie strictly between 0 and 1")
        if self.imagelet_px <= 0:
            raise InputError("imagelet_px must be positive")


@dataclass(frozen=True)
class ImageletRecord:
    scene_id: str
    row_offset: int
    col_offset: int
    split: Split
    centroid_lon: float
    centroid_lat: float


@dataclass
class DatasetManifest:
    spec: SamplingSpec
    records: list
    variant: Variant = Variant.RGB_SAR_RATIO

    def split_records(self, split):
        return [r for r in self.records if r.split is split]

    def validate(self):
        """Assert the structural invariants; raises InputError on violation."""
        px = self.spec.imagelet_px
        by_scene = {}
        for rec in self.records:
            by_scene.setdefault(rec.scene_id, []).append(rec)
        for scene_id, recs in by_scene.items():
            rows = np.array([r.row_offset for r in recs])
            cols = np.array([r.col_offset for r in recs])
            dr = np.abs(rows[:, None] - rows[None, :])
            dc = np.abs(cols[:, None] - cols[None, :])
            overlap = (dr < px) & (dc < px)
            np.fill_diagonal(overlap, False)
            if overlap.any():
                raise InputError(f"overlapping windows in scene {scene_id!r}")
        lo, hi = self.spec.test_lon_min, self.spec.test_lon_max
        for rec in self.records:
            inside = lo <= rec.centroid_lon <= hi
            if rec.split is Split.TEST and not inside:
                raise InputError(f"TEST record outside longitude band: {rec}")
            if rec.split is not Split.TEST and inside:
                raise InputError(f"TRAIN/DEV record inside longitude band: {rec}")
        return self


def _scene_rng(seed, scene_id, *extra):
    key = (seed, zlib.crc32(scene_id.encode("utf-8")), *extra)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def _round7(x):
    return float(f"{float(x):.7f}")


def _window_lon_extent(scene, row, col, px):
    rows = np.array([row, row, row + px, row + px], dtype=np.float64)
    cols = np.array([col, col + px, col, col + px], dtype=np.float64)
    lon, _ = geo.lonlat_of_pixels(scene.geo_transform, scene.crs_id, rows, cols)
    return float(lon.min()), float(lon.max())


def _centroid_lonlat(scene, row, col, px):
    lon, lat = geo.lonlat_of_pixels(scene.geo_transform, scene.crs_id,
                                    row + px / 2.0, col + px / 2.0)
    return _round7(lon), _round7(lat)


def _traindev_split(spec, scene_id, row, col):
    rng = _scene_rng(spec.rng_seed, scene_id, int(row), int(col), 0xA55)
    return Split.TRAIN if rng.random() < spec.train_fraction_of_traindev else Split.DEV


def assign_split(record, spec):
    """Split of a record: TEST inside the longitude band, else seeded TRAIN/DEV."""
    if spec.test_lon_min <= record.centroid_lon <= spec.test_lon_max:
        return Split.TEST
    return _traindev_split(spec, record.scene_id, record.row_offset, record.col_offset)


def sample_imagelets(scene, labels, spec):
    """Sample disjoint imagelet windows from one mosaic per the spec quotas.

    Deterministic for a given (rng_seed, scene_id). Raises CapacityError with
    the achieved counts when the attempt budget runs out before both quotas
    are met.
    """
    validate_pair(scene, labels)
    px = spec.imagelet_px
    if scene.height < px or scene.width < px:
        raise CapacityError(
            f"scene {scene.scene_id!r} is smaller than one {px}px imagelet",
            achieved={"TEST": 0, "TRAINDEV": 0})
    rows_corner = np.array([0, 0, scene.height, scene.height], dtype=np.float64)
    cols_corner = np.array([0, scene.width, 0, scene.width], dtype=np.float64)
    lon_c, _ = geo.lonlat_of_pixels(scene.geo_transform, scene.crs_id, rows_corner, cols_corner)
    scene_lo, scene_hi = float(lon_c.min()), float(lon_c.max())
    band_lo, band_hi = spec.test_lon_min, spec.test_lon_max

    quotas = {"TEST": spec.per_mosaic_test, "TRAINDEV": spec.per_mosaic_traindev}
    achieved = {"TEST": 0, "TRAINDEV": 0}
    if quotas["TRAINDEV"] > 0 and band_lo <= scene_lo and scene_hi <= band_hi:
        raise CapacityError(
            f"scene {scene.scene_id!r} lies entirely inside the test longitude band "
            f"[{band_lo}, {band_hi}]; the TRAIN/DEV quota is unreachable",
            achieved=achieved)
    if quotas["TEST"] > 0 and (scene_hi < band_lo or scene_lo > band_hi):
        raise CapacityError(
            f"scene {scene.scene_id!r} does not intersect the test longitude band "
            f"[{band_lo}, {band_hi}]; the TEST quota is unreachable",
            achieved=achieved)

    rng = _scene_rng(spec.rng_seed, scene.scene_id)
    max_row = scene.height - px
    max_col = scene.width - px
    budget = spec.attempt_budget_factor * spec.per_mosaic_total
    taken_rows = np.empty(spec.per_mosaic_total, dtype=np.int64)
    taken_cols = np.empty(spec.per_mosaic_total, dtype=np.int64)
    n_taken = 0
    records = []
    mask = scene.nodata_mask
    window_px = px * px

    for _ in range(budget):
        if achieved["TEST"] >= quotas["TEST"] and achieved["TRAINDEV"] >= quotas["TRAINDEV"]:
            break
        row = int(rng.integers(0, max_row + 1))
        col = int(rng.integers(0, max_col + 1))
        w_lo, w_hi = _window_lon_extent(scene, row, col, px)
        if band_lo <= w_lo and w_hi <= band_hi:
            region = "TEST"
        elif w_hi < band_lo or w_lo > band_hi:
            region = "TRAINDEV"
        else:
            continue  # straddles a band boundary; would leak across regions
        if achieved[region] >= quotas[region]:
            continue
        if n_taken:
            dr = np.abs(taken_rows[:n_taken] - row)
            dc = np.abs(taken_cols[:n_taken] - col)
            if bool(((dr < px) & (dc < px)).any()):
                continue
        frac = mask[row:row + px, col:col + px].sum() / window_px
        if frac > spec.max_nodata_fraction:
            continue
        lon, lat = _centroid_lonlat(scene, row, col, px)
        if region == "TEST":
            split = Split.TEST
        else:
            split = _traindev_split(spec, scene.scene_id, row, col)
        records.append(ImageletRecord(scene.scene_id, row, col, split, lon, lat))
        taken_rows[n_taken] = row
        taken_cols[n_taken] = col
        n_taken += 1
        achieved[region] += 1

    if achieved["TEST"] < quotas["TEST"] or achieved["TRAINDEV"] < quotas["TRAINDEV"]:
        raise CapacityError(
            f"scene {scene.scene_id!r}: sampling budget ({budget} attempts) exhausted at "
            f"TEST {achieved['TEST']}/{quotas['TEST']}, "
            f"TRAIN/DEV {achieved['TRAINDEV']}/{quotas['TRAINDEV']}",
            achieved=achieved)
    return records


def sample_manifest(pairs, spec, variant=Variant.RGB_SAR_RATIO):
    """Sample every (scene, labels) pair and assemble a validated manifest."""
    records = []
    for scene, labels in pairs:
        recs = sample_imagelets(scene, labels, spec)
        log.info("scene %s: sampled %d imagelets", scene.scene_id, len(recs))
        records.extend(recs)
    return DatasetManifest(spec=spec, records=records, variant=Variant(variant)).validate()


def extract(scene_or_stack, labels, record, px=512, variant=None, stretch=None):
    """Cut the co-registered (input, label) windows for one record.

    Accepts a prepared ChannelStack or a RasterScene (composed on the fly;
    ``variant`` is then required). Returns (imagelet HWC float32 in [0,255],
    label window uint8); label pixels under the scene nodata mask come back
    as the nodata code.
    """
    if isinstance(scene_or_stack, RasterScene):
        if record.scene_id and scene_or_stack.scene_id != record.scene_id:
            raise InputError(
                f"record belongs to scene {record.scene_id!r}, got {scene_or_stack.scene_id!r}")
        if variant is None:
            raise InputError("variant is required when extracting from a raw scene")
        stack = compose_stack(scene_or_stack, variant, stretch or StretchSpec())
    else:
        stack = scene_or_stack
    h, w = stack.channels.shape[1:]
    r0, c0 = record.row_offset, record.col_offset
    if r0 < 0 or c0 < 0 or r0 + px > h or c0 + px > w:
        raise InputError(f"window ({r0},{c0})+{px} out of bounds for scene of {h}x{w}")
    img = stack.channels[:, r0:r0 + px, c0:c0 + px].transpose(1, 2, 0)
    lab = labels.codes[r0:r0 + px, c0:c0 + px].copy()
    lab[stack.nodata_mask[r0:r0 + px, c0:c0 + px]] = NODATA_CODE
    return np.ascontiguousarray(img), lab


def write_manifest(manifest, path):
    """Persist a manifest as reproducible line-delimited text."""
    spec_json = json.dumps(vars(manifest.spec), sort_keys=True, separators=(",", ":"))
    lines = [_MANIFEST_MAGIC,
             f"# spec {spec_json}",
             f"# variant {manifest.variant.value}",
             "# scene_id\trow\tcol\tsplit\tlon\tlat"]
    for r in manifest.records:
        lines.append(f"{r.scene_id}\t{r.row_offset}\t{r.col_offset}\t"
                     f"{r.split.value}\t{r.centroid_lon:.7f}\t{r.centroid_lat:.7f}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_manifest(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MANIFEST_MAGIC:
        raise InputError(f"{path} is not a sarseg manifest")
    spec = None
    variant = Variant.RGB_SAR_RATIO
    records = []
    for line in lines[1:]:
        if line.startswith("# spec "):
            spec = SamplingSpec(**json.loads(line[len("# spec "):]))
        elif line.startswith("# variant "):
            variant = Variant(line[len("# variant "):].strip())
        elif line.startswith("#") or not line.strip():
            continue
        else:
            scene_id, row, col, split, lon, lat = line.split("\t")
            records.append(ImageletRecord(scene_id, int(row), int(col),
                                          Split(split), float(lon), float(lat)))
    if spec is None:
        raise InputError(f"{path} has no spec header line")
    return DatasetManifest(spec=spec, records=records, variant=variant)
