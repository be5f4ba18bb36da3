"""Link geometry and satellite-image crop mathematics.

Distances and bearings use the haversine great-circle model; within a crop
(a few hundred metres) a flat-earth equirectangular projection scaled by
cos(latitude) maps metres to pixels. Crops are rotated rectangles aligned so
the Tx-Rx link runs horizontally, left to right, in the output image.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from PIL import Image

from .core import ConfigError, ShapeError, ValidationError

EARTH_RADIUS_M = 6_371_000.0

GLOBAL_CROP_MIN_WIDTH_M = 256.0
GLOBAL_CROP_HEIGHT_M = 128.0
GLOBAL_CROP_OUT_PX = (512, 256)
LOCAL_CROP_SIDE_M = 256.0
LOCAL_CROP_OUT_PX = (224, 224)


@dataclass(frozen=True)
class GeoPoint:
    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValidationError(f"latitude {self.lat_deg} outside [-90, 90]")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValidationError(f"longitude {self.lon_deg} outside [-180, 180]")


@dataclass(frozen=True)
class LinkGeometry:
    """Tx-Rx great-circle distance and initial bearing (Tx toward Rx)."""

    distance_m: float
    azimuth_deg: float
    coincident: bool = False

    def __post_init__(self):
        if self.distance_m < 0:
            raise ValidationError("distance must be non-negative")
        if not 0.0 <= self.azimuth_deg < 360.0:
            raise ValidationError("azimuth must lie in [0, 360)")


@dataclass(frozen=True)
class CropSpec:
    """A rotated rectangle to cut from georeferenced imagery.

    ``rotation_deg`` is the compass bearing of the output image's +x axis,
    so a crop built from a link maps that link horizontal (Tx left, Rx
    right). A bearing of 90 (east) leaves an axis-aligned, north-up image
    unrotated.
    """

    width_m: float
    height_m: float
    out_width_px: int
    out_height_px: int
    center: GeoPoint
    rotation_deg: float

    def __post_init__(self):
        if self.width_m <= 0 or self.height_m <= 0:
            raise ConfigError("crop dimensions must be positive")
        if self.out_width_px < 1 or self.out_height_px < 1:
            raise ConfigError("output pixel dimensions must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["center"] = {"lat_deg": self.center.lat_deg, "lon_deg": self.center.lon_deg}
        return d


@dataclass(frozen=True, eq=False)
class Raster:
    """8-bit grayscale or RGB pixel grid with a flat-earth georeference.

    ``origin`` is the top-left corner; rows advance south, columns east.
    """

    pixels: np.ndarray
    meters_per_pixel: float
    origin: GeoPoint

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.uint8)
        if arr.ndim == 2:
            pass
        elif arr.ndim == 3 and arr.shape[2] == 3:
            pass
        else:
            raise ShapeError("raster must be (h, w) gray or (h, w, 3) RGB")
        if not self.meters_per_pixel > 0:
            raise ConfigError("meters_per_pixel must be positive")
        object.__setattr__(self, "pixels", arr)

    @property
    def width_px(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height_px(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else int(self.pixels.shape[2])


def link_geometry(tx: GeoPoint, rx: GeoPoint) -> LinkGeometry:
    """Haversine distance and initial bearing from Tx to Rx.

    Coincident endpoints return distance 0 and azimuth 0, flagged.
    """
    if tx.lat_deg == rx.lat_deg and tx.lon_deg == rx.lon_deg:
        return LinkGeometry(distance_m=0.0, azimuth_deg=0.0, coincident=True)
    lat1, lon1, lat2, lon2 = map(math.radians,
                                 (tx.lat_deg, tx.lon_deg, rx.lat_deg, rx.lon_deg))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    a = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    distance = 2.0 * EARTH_RADIUS_M * math.atan2(math.sqrt(a), math.sqrt(1.0 - a))
    bearing = math.atan2(math.sin(dlon) * math.cos(lat2),
                         math.cos(lat1) * math.sin(lat2)
                         - math.sin(lat1) * math.cos(lat2) * math.cos(dlon))
    return LinkGeometry(distance_m=distance,
                        azimuth_deg=math.degrees(bearing) % 360.0)


def link_midpoint(tx: GeoPoint, rx: GeoPoint) -> GeoPoint:
    """Flat-earth midpoint; adequate at crop scales, no antimeridian handling."""
    return GeoPoint(lat_deg=(tx.lat_deg + rx.lat_deg) / 2.0,
                    lon_deg=(tx.lon_deg + rx.lon_deg) / 2.0)


def global_crop_spec(geom: LinkGeometry, midpoint: GeoPoint) -> CropSpec:
    """Link-spanning crop: width max(1.1 * distance, 256 m), fixed 128 m height."""
    return CropSpec(
        width_m=max(1.1 * geom.distance_m, GLOBAL_CROP_MIN_WIDTH_M),
        height_m=GLOBAL_CROP_HEIGHT_M,
        out_width_px=GLOBAL_CROP_OUT_PX[0],
        out_height_px=GLOBAL_CROP_OUT_PX[1],
        center=midpoint,
        rotation_deg=geom.azimuth_deg,
    )


def local_crop_spec(rx: GeoPoint, geom: LinkGeometry) -> CropSpec:
    """Receiver-centered square crop, 256 m a side, aligned like the global crop."""
    return CropSpec(
        width_m=LOCAL_CROP_SIDE_M,
        height_m=LOCAL_CROP_SIDE_M,
        out_width_px=LOCAL_CROP_OUT_PX[0],
        out_height_px=LOCAL_CROP_OUT_PX[1],
        center=rx,
        rotation_deg=geom.azimuth_deg,
    )


def _point_to_meters(origin: GeoPoint, pt: GeoPoint) -> tuple[float, float]:
    """East/north metres of ``pt`` relative to ``origin`` (flat-earth)."""
    scale = EARTH_RADIUS_M * math.pi / 180.0
    east = (pt.lon_deg - origin.lon_deg) * scale * math.cos(math.radians(origin.lat_deg))
    north = (pt.lat_deg - origin.lat_deg) * scale
    return east, north


def rotate_crop_resize(src: Raster, spec: CropSpec) -> tuple[Raster, bool]:
    """Resample the rotated crop rectangle to the requested pixel grid.

    Bilinear interpolation at pixel centers; samples falling outside the
    source contribute 0 and raise the returned out-of-bounds flag. A crop
    with no in-bounds sample at all is a range error.
    """
    w_out, h_out = spec.out_width_px, spec.out_height_px
    u = (np.arange(w_out) + 0.5) / w_out - 0.5
    v = (np.arange(h_out) + 0.5) / h_out - 0.5
    a, b = np.meshgrid(u * spec.width_m, v * spec.height_m)

    rot = math.radians(spec.rotation_deg)
    east = a * math.sin(rot) + b * math.cos(rot)
    north = a * math.cos(rot) - b * math.sin(rot)

    ce, cn = _point_to_meters(src.origin, spec.center)
    px = (ce + east) / src.meters_per_pixel
    py = (-(cn + north)) / src.meters_per_pixel

    gx = px - 0.5
    gy = py - 0.5
    x0 = np.floor(gx).astype(int)
    y0 = np.floor(gy).astype(int)
    fx = gx - x0
    fy = gy - y0

    h_src, w_src = src.pixels.shape[:2]
    plane = src.pixels if src.pixels.ndim == 3 else src.pixels[:, :, np.newaxis]
    out = np.zeros((h_out, w_out, plane.shape[2]))
    any_valid = np.zeros((h_out, w_out), dtype=bool)
    oob = False
    for dy in (0, 1):
        for dx in (0, 1):
            xs = x0 + dx
            ys = y0 + dy
            valid = (xs >= 0) & (xs < w_src) & (ys >= 0) & (ys < h_src)
            weight = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            # zero-weight phantom corners at exact pixel centers are not OOB
            oob = oob or bool(np.any(~valid & (weight > 1e-9)))
            vals = plane[np.clip(ys, 0, h_src - 1), np.clip(xs, 0, w_src - 1), :]
            out += np.where(valid, weight, 0.0)[:, :, np.newaxis] * vals
            any_valid |= valid
    if not np.any(any_valid):
        raise ValueError("crop rectangle lies entirely outside the source raster")

    pixels = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    if src.pixels.ndim == 2:
        pixels = pixels[:, :, 0]
    # georeference of the output: top-left of the *unrotated* bounding frame
    scale = EARTH_RADIUS_M * math.pi / 180.0
    origin = GeoPoint(
        lat_deg=spec.center.lat_deg + (spec.height_m / 2.0) / scale,
        lon_deg=spec.center.lon_deg - (spec.width_m / 2.0)
        / (scale * math.cos(math.radians(spec.center.lat_deg))),
    )
    return Raster(pixels=pixels, meters_per_pixel=spec.width_m / w_out,
                  origin=origin), oob


def ingest_mask(src: Raster) -> tuple[Raster, float]:
    """Binarize an externally produced mask at 128; report the set fraction."""
    if src.channels != 1:
        raise ShapeError("masks must be single-channel")
    binary = np.where(src.pixels >= 128, 255, 0).astype(np.uint8)
    fraction = float(np.mean(binary == 255))
    return Raster(pixels=binary, meters_per_pixel=src.meters_per_pixel,
                  origin=src.origin), fraction


def annotate_link(raster: Raster, tx_px: tuple[float, float], rx_px: tuple[float, float],
                  marker_radius_px: int = 4, marker_value=255,
                  line_value=255) -> Raster:
    """Draw endpoint discs and a 1-px line between them (optional overlay)."""
    px = raster.pixels.copy()
    h, w = px.shape[:2]

    def put(x: int, y: int, value):
        if 0 <= x < w and 0 <= y < h:
            px[y, x] = value

    n = int(max(abs(rx_px[0] - tx_px[0]), abs(rx_px[1] - tx_px[1]))) + 1
    for t in np.linspace(0.0, 1.0, max(n, 2)):
        put(int(round(tx_px[0] + t * (rx_px[0] - tx_px[0]))),
            int(round(tx_px[1] + t * (rx_px[1] - tx_px[1]))), line_value)
    for cx, cy in (tx_px, rx_px):
        r = marker_radius_px
        for y in range(int(cy) - r, int(cy) + r + 1):
            for x in range(int(cx) - r, int(cx) + r + 1):
                if (x - cx) ** 2 + (y - cy) ** 2 <= r * r:
                    put(x, y, marker_value)
    return Raster(pixels=px, meters_per_pixel=raster.meters_per_pixel,
                  origin=raster.origin)


def save_raster(raster: Raster, png_path, georef_path=None) -> None:
    """Write a raster as PNG, with an optional sidecar georeference JSON."""
    Image.fromarray(raster.pixels).save(png_path)
    if georef_path is not None:
        Path(georef_path).write_text(json.dumps({
            "origin_lat_deg": raster.origin.lat_deg,
            "origin_lon_deg": raster.origin.lon_deg,
            "meters_per_pixel": raster.meters_per_pixel,
        }, indent=2) + "\n")


def load_raster(png_path, georef_path) -> Raster:
    """Read a PNG plus its georeference sidecar."""
    img = Image.open(png_path)
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB") if img.mode in ("RGBA", "P") else img.convert("L")
    try:
        meta = json.loads(Path(georef_path).read_text())
        origin = GeoPoint(lat_deg=float(meta["origin_lat_deg"]),
                          lon_deg=float(meta["origin_lon_deg"]))
        mpp = float(meta["meters_per_pixel"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"bad georeference file {georef_path}: {exc}") from exc
    return Raster(pixels=np.asarray(img), meters_per_pixel=mpp, origin=origin)
