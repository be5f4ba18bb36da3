import math

import numpy as np
import pytest

from tdlforge.core import ShapeError, ValidationError
from tdlforge.geo import (
    EARTH_RADIUS_M,
    CropSpec,
    GeoPoint,
    Raster,
    annotate_link,
    global_crop_spec,
    ingest_mask,
    link_geometry,
    link_midpoint,
    load_raster,
    local_crop_spec,
    rotate_crop_resize,
    save_raster,
)

DEG_TO_M = EARTH_RADIUS_M * math.pi / 180.0


class TestLinkGeometry:
    def test_coincident_points(self):
        g = link_geometry(GeoPoint(10.0, 20.0), GeoPoint(10.0, 20.0))
        assert g.distance_m == 0.0
        assert g.azimuth_deg == 0.0
        assert g.coincident

    def test_equator_east_step(self):
        g = link_geometry(GeoPoint(0.0, 0.0), GeoPoint(0.0, 0.001))
        assert g.azimuth_deg == pytest.approx(90.0, abs=1e-9)
        assert g.distance_m == pytest.approx(111.195, rel=1e-3)

    def test_due_north(self):
        g = link_geometry(GeoPoint(0.0, 0.0), GeoPoint(0.001, 0.0))
        assert g.azimuth_deg == pytest.approx(0.0, abs=1e-9)

    def test_reverse_flips_bearing(self):
        tx, rx = GeoPoint(40.0, 116.0), GeoPoint(40.001, 116.001)
        fwd = link_geometry(tx, rx)
        back = link_geometry(rx, tx)
        assert (back.azimuth_deg - fwd.azimuth_deg) % 360.0 \
            == pytest.approx(180.0, abs=0.01)

    def test_distance_symmetric(self):
        tx, rx = GeoPoint(39.9, 116.3), GeoPoint(39.95, 116.42)
        assert link_geometry(tx, rx).distance_m \
            == pytest.approx(link_geometry(rx, tx).distance_m, rel=1e-9)

    def test_geopoint_range_validation(self):
        with pytest.raises(ValidationError):
            GeoPoint(91.0, 0.0)
        with pytest.raises(ValidationError):
            GeoPoint(0.0, 181.0)


class TestCropSpecs:
    def geom(self, d):
        return link_geometry(GeoPoint(0.0, 0.0),
                             GeoPoint(0.0, d / (DEG_TO_M)))

    def test_short_link_hits_width_floor(self):
        spec = global_crop_spec(self.geom(100.0), GeoPoint(0.0, 0.0))
        assert spec.width_m == 256.0
        assert spec.height_m == 128.0
        assert (spec.out_width_px, spec.out_height_px) == (512, 256)

    def test_long_link_uses_ratio(self):
        spec = global_crop_spec(self.geom(400.0), GeoPoint(0.0, 0.0))
        assert spec.width_m == pytest.approx(1.1 * 400.0, rel=1e-9)

    def test_floor_boundary_both_sides(self):
        boundary = 256.0 / 1.1
        below = global_crop_spec(self.geom(boundary - 0.01), GeoPoint(0.0, 0.0))
        above = global_crop_spec(self.geom(boundary + 0.01), GeoPoint(0.0, 0.0))
        assert below.width_m == 256.0
        assert above.width_m > 256.0
        assert above.width_m == pytest.approx(1.1 * (boundary + 0.01), rel=1e-6)

    def test_rotation_follows_azimuth(self):
        geom = self.geom(300.0)
        g = global_crop_spec(geom, GeoPoint(0.0, 0.0))
        l = local_crop_spec(GeoPoint(0.0, 0.0), geom)
        assert g.rotation_deg == geom.azimuth_deg
        assert l.rotation_deg == geom.azimuth_deg

    def test_local_crop_is_fixed_square(self):
        spec = local_crop_spec(GeoPoint(1.0, 2.0), self.geom(50.0))
        assert spec.width_m == spec.height_m == 256.0
        assert (spec.out_width_px, spec.out_height_px) == (224, 224)
        assert spec.center == GeoPoint(1.0, 2.0)


def make_raster(w=64, h=48, mpp=1.0, pattern="gradient"):
    if pattern == "gradient":
        px = np.clip(np.add.outer(np.arange(h), np.arange(w)) * 2, 0, 255)
    elif pattern == "two_tone":
        px = np.where(np.arange(w)[np.newaxis, :] >= w // 2, 200, 50)
        px = np.broadcast_to(px, (h, w)).copy()
    else:
        raise ValueError(pattern)
    return Raster(pixels=px.astype(np.uint8), meters_per_pixel=mpp,
                  origin=GeoPoint(0.0, 0.0))


def center_of(raster):
    """Geographic point at the raster's pixel-grid center."""
    east = raster.width_px / 2.0 * raster.meters_per_pixel
    south = raster.height_px / 2.0 * raster.meters_per_pixel
    return GeoPoint(lat_deg=-south / DEG_TO_M, lon_deg=east / DEG_TO_M)


def identity_spec(raster):
    return CropSpec(
        width_m=raster.width_px * raster.meters_per_pixel,
        height_m=raster.height_px * raster.meters_per_pixel,
        out_width_px=raster.width_px,
        out_height_px=raster.height_px,
        center=center_of(raster),
        rotation_deg=90.0,  # +x axis pointing east = no rotation
    )


class TestRotateCropResize:
    def test_identity_round_trip(self):
        src = make_raster()
        out, oob = rotate_crop_resize(src, identity_spec(src))
        assert not oob
        np.testing.assert_array_equal(out.pixels, src.pixels)

    def test_full_turn_matches_identity(self):
        src = make_raster()
        spec = identity_spec(src)
        spec361 = CropSpec(**{**spec.__dict__, "rotation_deg": 90.0 + 360.0})
        a, _ = rotate_crop_resize(src, spec)
        b, _ = rotate_crop_resize(src, spec361)
        assert np.max(np.abs(a.pixels.astype(int) - b.pixels.astype(int))) <= 1

    def test_quarter_turn_transposes_tone_boundary(self):
        src = make_raster(w=64, h=64, pattern="two_tone")
        base = identity_spec(src)
        quarter = CropSpec(**{**base.__dict__, "width_m": 32.0, "height_m": 32.0,
                              "out_width_px": 32, "out_height_px": 32,
                              "rotation_deg": 0.0})
        out, _ = rotate_crop_resize(src, quarter)
        # vertical world boundary becomes horizontal: rows uniform, columns split
        assert np.all(out.pixels[0, :] == out.pixels[0, 0])
        assert np.all(out.pixels[-1, :] == out.pixels[-1, 0])
        assert out.pixels[0, 0] != out.pixels[-1, 0]

    def test_mean_preserved_on_smooth_image(self):
        src = make_raster(w=96, h=96)
        spec = CropSpec(width_m=30.0, height_m=30.0, out_width_px=50,
                        out_height_px=50, center=center_of(src), rotation_deg=37.0)
        out, oob = rotate_crop_resize(src, spec)
        assert not oob
        center_px = src.pixels[48, 48]
        assert abs(float(out.pixels.mean()) - float(center_px)) \
            <= 0.02 * max(float(center_px), 1.0) + 1.0

    def test_out_of_bounds_flag(self):
        src = make_raster(w=32, h=32)
        spec = CropSpec(width_m=100.0, height_m=100.0, out_width_px=16,
                        out_height_px=16, center=center_of(src), rotation_deg=90.0)
        out, oob = rotate_crop_resize(src, spec)
        assert oob

    def test_fully_outside_raises(self):
        src = make_raster(w=16, h=16)
        spec = CropSpec(width_m=4.0, height_m=4.0, out_width_px=4, out_height_px=4,
                        center=GeoPoint(1.0, 1.0), rotation_deg=90.0)
        with pytest.raises(ValueError):
            rotate_crop_resize(src, spec)

    def test_rgb_passthrough(self):
        gray = make_raster(w=24, h=24)
        rgb = Raster(pixels=np.stack([gray.pixels] * 3, axis=-1),
                     meters_per_pixel=1.0, origin=gray.origin)
        out, _ = rotate_crop_resize(rgb, identity_spec(rgb))
        np.testing.assert_array_equal(out.pixels, rgb.pixels)


class TestIngestMask:
    def test_all_zero(self):
        mask, frac = ingest_mask(make_raster(pattern="gradient").__class__(
            pixels=np.zeros((8, 8), dtype=np.uint8), meters_per_pixel=1.0,
            origin=GeoPoint(0.0, 0.0)))
        assert frac == 0.0
        assert np.all(mask.pixels == 0)

    def test_all_set(self):
        r = Raster(pixels=np.full((8, 8), 255, np.uint8), meters_per_pixel=1.0,
                   origin=GeoPoint(0.0, 0.0))
        mask, frac = ingest_mask(r)
        assert frac == 1.0

    def test_half_split(self):
        px = np.zeros((8, 8), np.uint8)
        px[:, 4:] = 200
        r = Raster(pixels=px, meters_per_pixel=1.0, origin=GeoPoint(0.0, 0.0))
        mask, frac = ingest_mask(r)
        assert frac == 0.5
        assert set(np.unique(mask.pixels)) == {0, 255}

    def test_multichannel_rejected(self):
        rgb = Raster(pixels=np.zeros((4, 4, 3), np.uint8), meters_per_pixel=1.0,
                     origin=GeoPoint(0.0, 0.0))
        with pytest.raises(ShapeError):
            ingest_mask(rgb)


def test_annotate_link_draws_markers_and_line():
    r = Raster(pixels=np.zeros((32, 32), np.uint8), meters_per_pixel=1.0,
               origin=GeoPoint(0.0, 0.0))
    out = annotate_link(r, (4.0, 16.0), (28.0, 16.0), marker_radius_px=2,
                        marker_value=255, line_value=128)
    assert out.pixels[16, 16] == 128
    assert out.pixels[16, 4] == 255
    assert out.pixels[16, 28] == 255
    assert np.all(r.pixels == 0)  # input untouched


def test_png_round_trip(tmp_path):
    src = make_raster(w=20, h=12)
    save_raster(src, tmp_path / "img.png", tmp_path / "img_georef.json")
    back = load_raster(tmp_path / "img.png", tmp_path / "img_georef.json")
    np.testing.assert_array_equal(back.pixels, src.pixels)
    assert back.meters_per_pixel == src.meters_per_pixel
    assert back.origin == src.origin


def test_link_midpoint_is_average():
    mid = link_midpoint(GeoPoint(0.0, 0.0), GeoPoint(0.002, 0.004))
    assert mid == GeoPoint(0.001, 0.002)
