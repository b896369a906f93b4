import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dermapipe.features import (
    DegenerateMaskError,
    LesionFeatures,
    asymmetry,
    build_technical_report,
    circularity,
    color_variability,
    compute_features,
    parse_technical_report,
    principal_axes,
    render_overlays,
)
from dermapipe.imaging import BinaryMask, RasterImage
from dermapipe.segmentation import extract_contours, largest_contour

from conftest import disk_mask, ellipse_mask, noisy_blob_image


class TestCircularity:
    def test_circle_analytic(self):
        r = 7.3
        assert circularity(np.pi * r * r, 2 * np.pi * r) == pytest.approx(1.0, abs=1e-12)

    def test_square_analytic(self):
        s = 5.0
        assert circularity(s * s, 4 * s) == pytest.approx(np.pi / 4, abs=1e-9)

    def test_rasterized_disk_in_band(self):
        # Measured through the feature pipeline (corner-rounded contour): the
        # raw staircase chain alone is ~5% long, which would land at ~0.89.
        mask = disk_mask(101, 101, 50, 50, 40)
        contour = largest_contour(extract_contours(mask))
        pixels = np.full((101, 101, 3), 100, dtype=np.uint8)
        features = compute_features(RasterImage(pixels), mask, contour)
        assert 0.90 <= features.circularity <= 1.05

    def test_clamped_at_overshoot(self):
        # tiny perimeter relative to area -> clamp
        assert circularity(100.0, 1.0) == 1.05

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            circularity(0.0, 10.0)
        with pytest.raises(ValueError):
            circularity(10.0, 0.0)


class TestPrincipalAxes:
    def test_axis_aligned_ellipse(self):
        mask = ellipse_mask(64, 64, 32, 32, 20, 8)
        axes = principal_axes(mask)
        assert axes.centroid == pytest.approx((32.0, 32.0), abs=0.1)
        assert axes.major_axis == pytest.approx((1.0, 0.0), abs=1e-6)
        assert abs(axes.minor_axis[0]) < 1e-6 and abs(axes.minor_axis[1]) == pytest.approx(1.0)

    def test_rotated_ellipse_axis_tracks_rotation(self):
        theta = 0.5
        mask = ellipse_mask(128, 128, 64, 64, 30, 12, theta)
        axes = principal_axes(mask)
        angle = np.arctan2(axes.major_axis[1], axes.major_axis[0])
        assert angle == pytest.approx(theta, abs=0.02)

    def test_axes_orthogonal_unit(self):
        mask = ellipse_mask(64, 64, 30, 34, 15, 9, 1.1)
        axes = principal_axes(mask)
        mj, mn = np.array(axes.major_axis), np.array(axes.minor_axis)
        assert np.linalg.norm(mj) == pytest.approx(1.0)
        assert np.linalg.norm(mn) == pytest.approx(1.0)
        assert abs(mj @ mn) < 1e-9

    def test_sign_normalized(self):
        mask = ellipse_mask(64, 64, 32, 32, 18, 7, 2.5)  # points into -x half-plane
        axes = principal_axes(mask)
        assert axes.major_axis[0] > 0 or (axes.major_axis[0] == 0 and axes.major_axis[1] > 0)

    def test_degenerate_masks(self):
        bits = np.zeros((8, 8), dtype=bool)
        bits[2, 2] = True
        with pytest.raises(DegenerateMaskError):
            principal_axes(BinaryMask(bits))
        bits[2, 3] = bits[2, 4] = True  # collinear
        with pytest.raises(DegenerateMaskError):
            principal_axes(BinaryMask(bits))


class TestAsymmetry:
    def test_pixel_symmetric_mask_is_zero(self):
        bits = np.zeros((21, 21), dtype=bool)
        bits[5:16, 8:13] = True  # rectangle, exactly mirror-symmetric
        assert asymmetry(BinaryMask(bits), "major") == 0.0
        assert asymmetry(BinaryMask(bits), "minor") == 0.0

    def test_axis_aligned_ellipse_is_zero(self):
        mask = ellipse_mask(64, 64, 32, 32, 20, 9)
        assert asymmetry(mask, "major") == 0.0
        assert asymmetry(mask, "minor") == 0.0

    def test_rotated_ellipse_small(self):
        for theta in (0.3, 0.6, 1.0, 1.4):
            mask = ellipse_mask(256, 256, 128, 128, 60, 35, theta)
            assert asymmetry(mask, "major") <= 0.02
            assert asymmetry(mask, "minor") <= 0.02

    def test_lopsided_shape_positive(self):
        mask = ellipse_mask(96, 96, 48, 48, 25, 14)
        bits = mask.bits.copy()
        bits[30:48, 60:70] = True  # bolt a lump onto one quadrant
        assert asymmetry(BinaryMask(bits), "major") > 0.1

    def test_ninety_degree_rotation_robustness(self):
        mask = ellipse_mask(128, 128, 64, 64, 30, 14, 0.4)
        bits = mask.bits.copy()
        bits[40:60, 80:95] = True
        mask = BinaryMask(bits)
        rotated = BinaryMask(np.rot90(mask.bits))
        avg = (asymmetry(mask, "major") + asymmetry(mask, "minor")) / 2
        avg_rot = (asymmetry(rotated, "major") + asymmetry(rotated, "minor")) / 2
        assert abs(avg - avg_rot) <= 0.03

    def test_scale_robustness(self):
        small = ellipse_mask(200, 200, 100, 100, 42, 25, 0.5)
        large = ellipse_mask(400, 400, 200, 200, 84, 50, 0.5)
        a_small = (asymmetry(small, "major") + asymmetry(small, "minor")) / 2
        a_large = (asymmetry(large, "major") + asymmetry(large, "minor")) / 2
        assert abs(a_small - a_large) <= 0.02

        def circ(mask):
            c = largest_contour(extract_contours(mask))
            img = RasterImage(np.full((*mask.bits.shape, 3), 90, dtype=np.uint8))
            return compute_features(img, mask, c).circularity

        assert abs(circ(small) - circ(large)) <= 0.05

    def test_bad_axis_name(self):
        with pytest.raises(ValueError):
            asymmetry(disk_mask(16, 16, 8, 8, 5), "diagonal")


class TestColorVariability:
    def test_uniform_patch_is_zero(self):
        pixels = np.full((10, 10, 3), 123, dtype=np.uint8)
        mask = BinaryMask(np.ones((10, 10), dtype=bool))
        assert color_variability(RasterImage(pixels), mask) == (0.0, 0.0, 0.0)

    def test_two_pixel_case_exact(self):
        # channel values {10,20}, {30,50}, {40,70}: population stds 5, 10, 15
        pixels = np.zeros((1, 2, 3), dtype=np.uint8)
        pixels[0, 0] = (10, 30, 40)
        pixels[0, 1] = (20, 50, 70)
        mask = BinaryMask(np.ones((1, 2), dtype=bool))
        assert color_variability(RasterImage(pixels), mask) == (5.0, 10.0, 15.0)

    def test_background_never_contributes(self):
        rng = np.random.default_rng(5)
        mask = disk_mask(32, 32, 16, 16, 9)
        image = noisy_blob_image(rng, mask)
        base = color_variability(image, mask)
        repainted = image.pixels.copy()
        repainted[~mask.bits] = (0, 255, 0)
        assert color_variability(RasterImage(repainted), mask) == base

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            color_variability(
                RasterImage(np.zeros((4, 4, 3), dtype=np.uint8)),
                BinaryMask(np.ones((5, 5), dtype=bool)),
            )


class TestComputeFeatures:
    def _features(self, seed=9):
        rng = np.random.default_rng(seed)
        mask = ellipse_mask(128, 128, 64, 64, 30, 18, 0.3)
        image = noisy_blob_image(rng, mask)
        contour = largest_contour(extract_contours(mask))
        return compute_features(image, mask, contour)

    def test_avg_is_exact_mean(self):
        f = self._features()
        assert f.asymmetry_avg == (f.asymmetry_major + f.asymmetry_minor) / 2.0

    def test_fields_consistent(self):
        f = self._features()
        assert f.circularity == circularity(f.area, f.perimeter)
        assert 0.0 < f.circularity <= 1.05
        assert all(s >= 0 for s in f.color_std)


class TestTechnicalReport:
    REFERENCE_FEATURES = LesionFeatures(
        area=5000.0,
        perimeter=304.0,
        circularity=0.68,
        asymmetry_major=0.00823,
        asymmetry_minor=0.1062,
        asymmetry_avg=0.05722464257917816,
        color_std=(19.21, 20.647, 19.261),
    )

    def test_known_values_verbatim(self):
        text = build_technical_report(self.REFERENCE_FEATURES).text
        assert "Circularity Index: 0.68" in text
        assert "Standard Deviation in the Red Channel: 19.21" in text
        assert "Standard Deviation in the Green Channel: 20.647" in text
        assert "Standard Deviation in the Blue Channel: 19.261" in text
        assert "Asymmetry (major axis): 0.00823" in text
        assert "Asymmetry (minor axis): 0.1062" in text
        assert "Average Asymmetry: 0.05722464257917816" in text

    def test_round_trip_exact(self):
        report = build_technical_report(self.REFERENCE_FEATURES)
        recovered = parse_technical_report(report.text)
        assert recovered == self.REFERENCE_FEATURES

    @settings(deadline=None, max_examples=50)
    @given(
        area=st.floats(1.0, 1e6, allow_nan=False),
        perimeter=st.floats(1.0, 1e4, allow_nan=False),
        am=st.floats(0.0, 1.0),
        an=st.floats(0.0, 1.0),
        r=st.floats(0.0, 128.0),
        g=st.floats(0.0, 128.0),
        b=st.floats(0.0, 128.0),
    )
    def test_round_trip_property(self, area, perimeter, am, an, r, g, b):
        features = LesionFeatures(
            area=area,
            perimeter=perimeter,
            circularity=circularity(area, perimeter),
            asymmetry_major=am,
            asymmetry_minor=an,
            asymmetry_avg=(am + an) / 2.0,
            color_std=(r, g, b),
        )
        assert parse_technical_report(build_technical_report(features).text) == features

    def test_parse_rejects_missing_field(self):
        text = build_technical_report(self.REFERENCE_FEATURES).text
        broken = text.replace("Average Asymmetry", "Averag Asymmetry")
        with pytest.raises(ValueError):
            parse_technical_report(broken)


class TestRenderOverlays:
    def test_emits_png_artifacts(self):
        rng = np.random.default_rng(1)
        mask = ellipse_mask(64, 64, 32, 32, 18, 10, 0.4)
        image = noisy_blob_image(rng, mask)
        contour = largest_contour(extract_contours(mask))
        plots = render_overlays(image, mask, contour)
        assert set(plots) == {"outline", "asymmetry_major", "asymmetry_minor", "color_distribution"}
        for data in plots.values():
            assert data[:8] == b"\x89PNG\r\n\x1a\n"
