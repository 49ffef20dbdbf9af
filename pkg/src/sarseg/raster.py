"""Raster ingestion, label masks, class codebook and map rendering.

Scene container: a flat band-sequential binary file (``.bsq``) plus a JSON
text header (``<file>.hdr``) carrying width, height, dtype, band names,
geo_transform, CRS, nodata value and pixel size. GeoTIFF files are accepted
too when ``rasterio`` happens to be installed; it is not a dependency.

The land cover codebook is the 5-superclass scheme derived from CLC
Level-1: urban, agriculture, forest, peatland, water, with 255 reserved as
the nodata sentinel.
"""

import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, PairingError

log = logging.getLogger("sarseg.raster")

NODATA_CODE = 255
BAND_VH = "VH"
BAND_VV = "VV"
BAND_DEM = "DEM"

HEADER_SUFFIX = ".hdr"
_FORMAT_TAG = "sarseg-raster-v1"


@dataclass
class ClassEntry:
    id: int
    name: str
    rgb: tuple
    description: str


@dataclass
class ClassCodebook:
    entries: list

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(self.entries) != 5 or ids != list(range(5)):
            raise InputError("codebook must have exactly 5 entries with contiguous ids 0..4")

    @property
    def num_classes(self):
        return len(self.entries)

    def names(self):
        return [e.name for e in self.entries]

    def rgb_array(self):
        return np.array([e.rgb for e in self.entries], dtype=np.uint8)


def default_codebook():
    return ClassCodebook([
        ClassEntry(0, "urban", (128, 0, 0),
                   "urban fabric, industrial and commercial units, construction and dump sites"),
        ClassEntry(1, "agriculture", (222, 184, 135),
                   "agricultural and agro-forestry areas, plantations, pastures"),
        ClassEntry(2, "forest", (127, 255, 0),
                   "broad-leaved, coniferous and mixed forest, transitional woodland/shrub"),
        ClassEntry(3, "peatland", (173, 216, 230),
                   "peatland, bogs, inland and salt marshes"),
        ClassEntry(4, "water", (0, 191, 255), "rivers, lakes, sea"),
    ])


@dataclass
class RasterScene:
    scene_id: str
    bands: dict
    pixel_size: float
    geo_transform: tuple
    crs_id: str
    nodata_mask: np.ndarray

    def __post_init__(self):
        if BAND_VH not in self.bands or BAND_VV not in self.bands:
            raise InputError(f"scene {self.scene_id!r} must contain bands {BAND_VH} and {BAND_VV}")
        shapes = {name: b.shape for name, b in self.bands.items()}
        if len(set(shapes.values())) != 1:
            raise InputError(f"scene {self.scene_id!r} band geometry mismatch: {shapes}")
        if self.nodata_mask.shape != next(iter(shapes.values())):
            raise InputError(f"scene {self.scene_id!r} nodata mask geometry mismatch")
        if not self.pixel_size > 0:
            raise InputError("pixel_size must be positive")

    @property
    def height(self):
        return self.bands[BAND_VH].shape[0]

    @property
    def width(self):
        return self.bands[BAND_VH].shape[1]

    @property
    def has_dem(self):
        return BAND_DEM in self.bands


@dataclass
class LabelMask:
    codes: np.ndarray
    pixel_size: float
    geo_transform: tuple
    crs_id: str
    scene_id: str = ""
    out_of_range_count: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.codes.dtype.kind not in "ui":
            raise InputError("label codes must be an integer array")

    @property
    def height(self):
        return self.codes.shape[0]

    @property
    def width(self):
        return self.codes.shape[1]


def validate_pair(scene, labels):
    """Check a scene/label pairing; raises ``PairingError`` on any mismatch."""
    if (scene.height, scene.width) != (labels.height, labels.width):
        raise PairingError(
            f"label geometry {labels.codes.shape} != scene geometry "
            f"{(scene.height, scene.width)} for scene {scene.scene_id!r}")
    if tuple(scene.geo_transform) != tuple(labels.geo_transform) or scene.crs_id != labels.crs_id:
        raise PairingError(f"label georeferencing differs from scene {scene.scene_id!r}")


def _header_path(path):
    return str(path) + HEADER_SUFFIX


def _read_header(path):
    hp = _header_path(path)
    if not os.path.exists(hp):
        raise InputError(f"missing raster header {hp}")
    with open(hp, "r", encoding="utf-8") as fh:
        try:
            hdr = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"unparseable raster header {hp}: {exc}") from exc
    for key in ("width", "height", "dtype", "bands", "geo_transform", "crs"):
        if key not in hdr:
            raise InputError(f"raster header {hp} missing field {key!r}")
    return hdr


def _read_raw(path, hdr):
    dtype = np.dtype(hdr["dtype"])
    w, h = int(hdr["width"]), int(hdr["height"])
    nbands = len(hdr["bands"])
    data = np.fromfile(path, dtype=dtype)
    if data.size != w * h * nbands:
        raise InputError(
            f"{path}: file holds {data.size} values, header implies {w * h * nbands}")
    return data.reshape(nbands, h, w)


def _load_tiff(path):
    try:
        import rasterio
    except ImportError as exc:
        raise InputError(
            f"{path}: GeoTIFF input requires the optional 'rasterio' package") from exc
    with rasterio.open(path) as src:
        arr = src.read()
        gt = src.transform
        hdr = {
            "width": src.width,
            "height": src.height,
            "dtype": str(arr.dtype),
            "bands": [src.descriptions[i] or f"B{i + 1}" for i in range(src.count)],
            "geo_transform": [gt.c, gt.a, gt.b, gt.f, gt.d, gt.e],
            "crs": str(src.crs),
            "nodata": src.nodata,
            "pixel_size_m": abs(gt.a),
        }
    return arr, hdr


def _load_container(path):
    if not os.path.exists(path):
        raise InputError(f"raster file not found: {path}")
    if str(path).lower().endswith((".tif", ".tiff")):
        return _load_tiff(path)
    hdr = _read_header(path)
    return _read_raw(path, hdr), hdr


def load_scene(path, scene_id=None):
    """Load and validate a multiband scene raster."""
    arr, hdr = _load_container(path)
    names = list(hdr["bands"])
    bands = {name: np.ascontiguousarray(arr[i].astype(np.float32)) for i, name in enumerate(names)}
    nodata = hdr.get("nodata")
    mask = np.zeros(arr.shape[1:], dtype=bool)
    for b in bands.values():
        mask |= ~np.isfinite(b)
        if nodata is not None:
            mask |= b == np.float32(nodata)
    return RasterScene(
        scene_id=scene_id or os.path.splitext(os.path.basename(str(path)))[0],
        bands=bands,
        pixel_size=float(hdr.get("pixel_size_m", 20.0)),
        geo_transform=tuple(float(v) for v in hdr["geo_transform"]),
        crs_id=hdr["crs"],
        nodata_mask=mask,
    )


def load_labels(path, codebook=None, scene_id=None):
    """Load a single-band label raster; out-of-range codes become nodata."""
    codebook = codebook or default_codebook()
    arr, hdr = _load_container(path)
    if len(hdr["bands"]) != 1:
        raise InputError(f"{path}: label raster must have exactly 1 band")
    band = arr[0]
    if band.dtype.kind not in "ui":
        raise InputError(f"{path}: label band must be integer, got {band.dtype}")
    codes = band.astype(np.uint8) if band.dtype != np.uint8 else band.copy()
    # values that do not survive the uint8 cast are out of range by definition
    bad = (band.astype(np.int64) != codes) | ((codes >= codebook.num_classes) & (codes != NODATA_CODE))
    n_bad = int(bad.sum())
    if n_bad:
        codes[bad] = NODATA_CODE
        log.warning("%s: %d label pixels outside codebook mapped to nodata", path, n_bad)
    return LabelMask(
        codes=np.ascontiguousarray(codes),
        pixel_size=float(hdr.get("pixel_size_m", 20.0)),
        geo_transform=tuple(float(v) for v in hdr["geo_transform"]),
        crs_id=hdr["crs"],
        scene_id=scene_id or os.path.splitext(os.path.basename(str(path)))[0],
        out_of_range_count=n_bad,
    )


def _write_container(path, arr, band_names, geo_transform, crs_id, pixel_size,
                     nodata=None):
    arr = np.ascontiguousarray(arr)
    hdr = {
        "format": _FORMAT_TAG,
        "width": int(arr.shape[2]),
        "height": int(arr.shape[1]),
        "dtype": str(arr.dtype),
        "bands": list(band_names),
        "geo_transform": [float(v) for v in geo_transform],
        "crs": crs_id,
        "nodata": nodata,
        "pixel_size_m": float(pixel_size),
    }
    arr.tofile(path)
    with open(_header_path(path), "w", encoding="utf-8") as fh:
        json.dump(hdr, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_scene(path, scene, nodata=None):
    names = list(scene.bands)
    stack = np.stack([scene.bands[n] for n in names])
    if nodata is not None:
        stack = stack.copy()
        stack[:, scene.nodata_mask] = nodata
    _write_container(path, stack, names, scene.geo_transform, scene.crs_id,
                     scene.pixel_size, nodata)


def write_labels(path, labels):
    _write_container(path, labels.codes[None], ["LABELS"], labels.geo_transform,
                     labels.crs_id, labels.pixel_size)


def render_map(mask, codebook=None):
    """Colorize a label mask; nodata pixels render black. Pure function."""
    codebook = codebook or default_codebook()
    lut = np.zeros((256, 3), dtype=np.uint8)
    lut[:codebook.num_classes] = codebook.rgb_array()
    return lut[mask.codes]


def save_png(rgb, path):
    from PIL import Image

    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")


# Best-effort aggregation from CLC level-3 class codes (111..523) to the 5
# superclasses. Green urban areas (141) count as forest; users may edit the
# JSON copy written by `write_default_aggregation`.
DEFAULT_CLC_AGGREGATION = {}
for _code in (111, 112, 121, 122, 123, 124, 131, 132, 133):
    DEFAULT_CLC_AGGREGATION[_code] = 0
DEFAULT_CLC_AGGREGATION[141] = 2
DEFAULT_CLC_AGGREGATION[142] = 0
for _code in (211, 212, 213, 221, 222, 223, 231, 241, 242, 243, 244):
    DEFAULT_CLC_AGGREGATION[_code] = 1
for _code in (311, 312, 313, 321, 322, 323, 324, 331, 332, 333, 334, 335):
    DEFAULT_CLC_AGGREGATION[_code] = 2
for _code in (411, 412, 421, 422, 423):
    DEFAULT_CLC_AGGREGATION[_code] = 3
for _code in (511, 512, 521, 522, 523):
    DEFAULT_CLC_AGGREGATION[_code] = 4


def write_default_aggregation(path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({str(k): v for k, v in sorted(DEFAULT_CLC_AGGREGATION.items())},
                  fh, indent=1)
        fh.write("\n")


def load_aggregation(path):
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return {int(k): int(v) for k, v in raw.items()}


def aggregate_codes(raw_codes, mapping=None):
    """Map raw land-cover class codes to the 5 superclasses (else nodata)."""
    mapping = mapping or DEFAULT_CLC_AGGREGATION
    out = np.full(raw_codes.shape, NODATA_CODE, dtype=np.uint8)
    for src, dst in mapping.items():
        out[raw_codes == src] = dst
    return out
