"""Pixel -> geographic coordinate handling.

Scenes carry a GDAL-style affine geo_transform ``(x0, dx, rxy, y0, ryx, dy)``
mapping pixel (row, col) to projected coordinates:

    x = x0 + col * dx + row * rxy
    y = y0 + col * ryx + row * dy

Two CRSs are supported natively: ``EPSG:4326`` (projected coordinates are
already lon/lat degrees) and ``EPSG:3067`` (ETRS-TM35FIN, the national
Finnish transverse Mercator grid), inverted with the classic series
expansion on the GRS80 ellipsoid (sub-meter accuracy in zone).
"""

import numpy as np

from .errors import InputError

# GRS80 / ETRS-TM35FIN constants
_A = 6378137.0
_F = 1.0 / 298.257222101
_E2 = _F * (2.0 - _F)
_EP2 = _E2 / (1.0 - _E2)
_K0 = 0.9996
_LON0 = 27.0
_FALSE_E = 500000.0
_FALSE_N = 0.0

SUPPORTED_CRS = ("EPSG:4326", "EPSG:3067")


def apply_geo_transform(gt, rows, cols):
    """Map pixel (row, col) arrays to projected (x, y)."""
    x0, dx, rxy, y0, ryx, dy = gt
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    x = x0 + cols * dx + rows * rxy
    y = y0 + cols * ryx + rows * dy
    return x, y


def tm35fin_to_lonlat(easting, northing):
    """Inverse transverse Mercator for ETRS-TM35FIN -> lon/lat degrees."""
    e = np.asarray(easting, dtype=np.float64)
    n = np.asarray(northing, dtype=np.float64)
    m = (n - _FALSE_N) / _K0
    mu = m / (_A * (1 - _E2 / 4 - 3 * _E2 ** 2 / 64 - 5 * _E2 ** 3 / 256))
    e1 = (1 - np.sqrt(1 - _E2)) / (1 + np.sqrt(1 - _E2))
    phi1 = (mu
            + (3 * e1 / 2 - 27 * e1 ** 3 / 32) * np.sin(2 * mu)
            + (21 * e1 ** 2 / 16 - 55 * e1 ** 4 / 32) * np.sin(4 * mu)
            + (151 * e1 ** 3 / 96) * np.sin(6 * mu)
            + (1097 * e1 ** 4 / 512) * np.sin(8 * mu))
    sin1, cos1, tan1 = np.sin(phi1), np.cos(phi1), np.tan(phi1)
    c1 = _EP2 * cos1 ** 2
    t1 = tan1 ** 2
    n1 = _A / np.sqrt(1 - _E2 * sin1 ** 2)
    r1 = _A * (1 - _E2) / (1 - _E2 * sin1 ** 2) ** 1.5
    d = (e - _FALSE_E) / (n1 * _K0)
    phi = phi1 - (n1 * tan1 / r1) * (
        d ** 2 / 2
        - (5 + 3 * t1 + 10 * c1 - 4 * c1 ** 2 - 9 * _EP2) * d ** 4 / 24
        + (61 + 90 * t1 + 298 * c1 + 45 * t1 ** 2 - 252 * _EP2 - 3 * c1 ** 2) * d ** 6 / 720)
    lam = (d
           - (1 + 2 * t1 + c1) * d ** 3 / 6
           + (5 - 2 * c1 + 28 * t1 - 3 * c1 ** 2 + 8 * _EP2 + 24 * t1 ** 2) * d ** 5 / 120) / cos1
    lon = _LON0 + np.degrees(lam)
    lat = np.degrees(phi)
    return lon, lat


def lonlat_to_tm35fin(lon, lat):
    """Forward transverse Mercator for ETRS-TM35FIN (used for round-trip tests)."""
    lon = np.asarray(lon, dtype=np.float64)
    lat = np.asarray(lat, dtype=np.float64)
    phi = np.radians(lat)
    lam = np.radians(lon - _LON0)
    sinp, cosp, tanp = np.sin(phi), np.cos(phi), np.tan(phi)
    n = _A / np.sqrt(1 - _E2 * sinp ** 2)
    t = tanp ** 2
    c = _EP2 * cosp ** 2
    a_ = cosp * lam
    m = _A * ((1 - _E2 / 4 - 3 * _E2 ** 2 / 64 - 5 * _E2 ** 3 / 256) * phi
              - (3 * _E2 / 8 + 3 * _E2 ** 2 / 32 + 45 * _E2 ** 3 / 1024) * np.sin(2 * phi)
              + (15 * _E2 ** 2 / 256 + 45 * _E2 ** 3 / 1024) * np.sin(4 * phi)
              - (35 * _E2 ** 3 / 3072) * np.sin(6 * phi))
    easting = _FALSE_E + _K0 * n * (
        a_ + (1 - t + c) * a_ ** 3 / 6
        + (5 - 18 * t + t ** 2 + 72 * c - 58 * _EP2) * a_ ** 5 / 120)
    northing = _FALSE_N + _K0 * (
        m + n * tanp * (a_ ** 2 / 2
                        + (5 - t + 9 * c + 4 * c ** 2) * a_ ** 4 / 24
                        + (61 - 58 * t + t ** 2 + 600 * c - 330 * _EP2) * a_ ** 6 / 720))
    return easting, northing


def lonlat_of_pixels(gt, crs_id, rows, cols):
    """Longitude/latitude (degrees) of pixel positions under the given CRS."""
    x, y = apply_geo_transform(gt, rows, cols)
    if crs_id == "EPSG:4326":
        return x, y
    if crs_id == "EPSG:3067":
        return tm35fin_to_lonlat(x, y)
    raise InputError(f"unsupported CRS {crs_id!r}; supported: {SUPPORTED_CRS}")
