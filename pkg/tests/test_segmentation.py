import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dermapipe.imaging import BinaryMask, Contour, GrayImage, RasterImage, mask_area, to_grayscale
from dermapipe.segmentation import (
    DegenerateHistogramError,
    GrabCutParams,
    NoLesionError,
    TrimapError,
    contour_area,
    contour_perimeter,
    extract_contours,
    grabcut_refine,
    largest_contour,
    otsu_threshold,
    segment_lesion,
)

from conftest import disk_mask, ellipse_mask, noisy_blob_image


def otsu_sweep_oracle(intensities: np.ndarray) -> int:
    """Exhaustive between-class-variance sweep; first maximizer wins."""
    hist = np.bincount(intensities.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    best_t, best_var = 0, -1.0
    for t in range(255):
        w0 = hist[: t + 1].sum()
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        mu0 = (hist[: t + 1] * np.arange(t + 1)).sum() / w0
        mu1 = (hist[t + 1:] * np.arange(t + 1, 256)).sum() / w1
        var = w0 * w1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_t, best_var = t, var
    return best_t


class TestOtsu:
    def test_clean_bimodal(self):
        intensities = np.full((20, 20), 200, dtype=np.uint8)
        intensities[5:15, 5:15] = 50
        result = otsu_threshold(GrayImage(intensities))
        assert result.threshold == otsu_sweep_oracle(intensities)
        # darker region becomes foreground
        assert result.mask.bits[10, 10]
        assert not result.mask.bits[0, 0]
        assert mask_area(result.mask) == 100

    def test_constant_image_raises(self):
        with pytest.raises(DegenerateHistogramError):
            otsu_threshold(GrayImage(np.full((8, 8), 77, dtype=np.uint8)))

    def test_two_level_tie_break(self):
        intensities = np.zeros((2, 2), dtype=np.uint8)
        intensities[0, 0] = 255
        result = otsu_threshold(GrayImage(intensities))
        assert result.threshold == otsu_sweep_oracle(intensities)

    @settings(deadline=None, max_examples=30)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_sweep_oracle(self, seed):
        rng = np.random.default_rng(seed)
        mode = seed % 3
        if mode == 0:  # bimodal
            vals = np.concatenate([
                rng.normal(60, 15, 500), rng.normal(190, 20, 500)])
        elif mode == 1:  # trimodal
            vals = np.concatenate([
                rng.normal(40, 10, 300), rng.normal(128, 12, 400), rng.normal(220, 8, 300)])
        else:  # broad noise
            vals = rng.uniform(0, 255, 1000)
        intensities = np.clip(np.round(vals), 0, 255).astype(np.uint8).reshape(25, 40)
        if len(np.unique(intensities)) < 2:
            return
        assert otsu_threshold(GrayImage(intensities)).threshold == otsu_sweep_oracle(intensities)


class TestGrabCut:
    def test_refines_degraded_init(self):
        rng = np.random.default_rng(7)
        truth = ellipse_mask(128, 128, 64, 60, 34, 22, 0.4)
        image = noisy_blob_image(rng, truth)
        # Degrade the init: erode and poke a hole.
        from scipy import ndimage

        init = ndimage.binary_erosion(truth.bits, iterations=4)
        init[55:65, 60:70] = False
        log: list[float] = []
        refined = grabcut_refine(image, BinaryMask(init), GrabCutParams(), energy_log=log)
        inter = np.count_nonzero(refined.bits & truth.bits)
        union = np.count_nonzero(refined.bits | truth.bits)
        assert inter / union >= 0.95
        assert all(b <= a + 1e-9 for a, b in zip(log, log[1:]))

    def test_energy_monotone_on_clean_input(self):
        rng = np.random.default_rng(11)
        truth = disk_mask(96, 96, 48, 48, 25)
        image = noisy_blob_image(rng, truth, sigma=5)
        log: list[float] = []
        grabcut_refine(image, truth, GrabCutParams(), energy_log=log)
        assert log, "at least one iteration recorded"
        assert all(b <= a + 1e-9 for a, b in zip(log, log[1:]))

    def test_never_grows_past_trimap_margin(self):
        rng = np.random.default_rng(3)
        truth = disk_mask(96, 96, 48, 48, 18)
        image = noisy_blob_image(rng, truth)
        params = GrabCutParams()
        refined = grabcut_refine(image, truth, params)
        from scipy import ndimage

        allowed = ndimage.binary_dilation(
            truth.bits, structure=np.ones((3, 3), dtype=bool), iterations=params.fg_dilate_px)
        assert not (refined.bits & ~allowed).any()

    def test_empty_init_raises(self):
        image = RasterImage(np.zeros((8, 8, 3), dtype=np.uint8))
        with pytest.raises(TrimapError):
            grabcut_refine(image, BinaryMask(np.zeros((8, 8), dtype=bool)))
        with pytest.raises(TrimapError):
            grabcut_refine(image, BinaryMask(np.ones((8, 8), dtype=bool)))

    def test_bad_params_rejected(self):
        with pytest.raises(ValueError):
            GrabCutParams(connectivity=6)
        with pytest.raises(ValueError):
            GrabCutParams(iterations=0)


class TestContours:
    def test_square_contour(self):
        bits = np.zeros((9, 9), dtype=bool)
        bits[2:7, 2:7] = True  # 5x5 square
        contours = extract_contours(BinaryMask(bits))
        assert len(contours) == 1
        c = contours[0]
        assert len(c) == 16  # boundary pixel centers of a 5x5 square
        assert contour_area(c) == pytest.approx(16.0)  # shoelace over centers: 4x4
        assert contour_perimeter(c) == pytest.approx(16.0)

    def test_single_pixel(self):
        bits = np.zeros((3, 3), dtype=bool)
        bits[1, 1] = True
        contours = extract_contours(BinaryMask(bits))
        assert len(contours) == 1
        assert len(contours[0]) == 1

    def test_two_components_row_major_order(self):
        bits = np.zeros((10, 10), dtype=bool)
        bits[1:3, 6:9] = True   # upper-right
        bits[6:9, 1:4] = True   # lower-left
        contours = extract_contours(BinaryMask(bits))
        assert len(contours) == 2
        # row-major: the component whose top-left pixel comes first leads
        assert contours[0].points[0].tolist() == [6, 1]  # (x, y)
        assert contours[1].points[0].tolist() == [1, 6]

    def test_disk_conventions(self):
        mask = disk_mask(101, 101, 50, 50, 40)
        contours = extract_contours(mask)
        c = largest_contour(contours)
        area = contour_area(c)
        perim = contour_perimeter(c)
        assert area / mask_area(mask) >= 0.9
        assert abs(perim - 2 * np.pi * 40) / (2 * np.pi * 40) < 0.05

    def test_contour_area_covers_mask(self):
        # Sum of contour areas >= 0.9 * mask area. The shoelace polygon runs
        # through boundary pixel centers, so it undercounts by ~half the
        # boundary; the 0.9 bound is reachable only once the boundary is under
        # ~20% of the area (~350 px for a disk — an exact 100-px disk gives
        # 0.83), so the blobs here are sized accordingly.
        for seed in range(8):
            rng = np.random.default_rng(seed)
            mask = ellipse_mask(64, 64, 32, 32, 12 + 10 * rng.random(), 10 + 8 * rng.random(),
                                rng.random() * np.pi)
            assert mask_area(mask) >= 350
            total = sum(contour_area(c) for c in extract_contours(mask) if len(c) >= 3)
            assert total >= 0.9 * mask_area(mask)

    def test_largest_contour_permutation_invariant(self):
        big = disk_mask(64, 64, 32, 32, 20)
        small = disk_mask(64, 64, 10, 10, 4)
        cb = extract_contours(big)[0]
        cs = extract_contours(small)[0]
        assert largest_contour([cb, cs]) is cb
        assert largest_contour([cs, cb]) is cb

    def test_largest_contour_tie_break_first(self):
        c1 = Contour(np.array([[0, 0], [4, 0], [4, 4], [0, 4]]))
        c2 = Contour(np.array([[10, 10], [14, 10], [14, 14], [10, 14]]))
        assert largest_contour([c1, c2]) is c1
        assert largest_contour([c2, c1]) is c2

    def test_empty_list_raises(self):
        with pytest.raises(NoLesionError):
            largest_contour([])

    def test_short_contour_measures_rejected(self):
        c = Contour(np.array([[0, 0], [1, 1]]))
        with pytest.raises(ValueError):
            contour_area(c)
        with pytest.raises(ValueError):
            contour_perimeter(c)


class TestSegmentLesion:
    def test_end_to_end_on_synthetic_lesion(self):
        rng = np.random.default_rng(42)
        truth = ellipse_mask(256, 256, 128, 120, 60, 40, 0.3)
        image = noisy_blob_image(rng, truth)
        mask, contours = segment_lesion(image)
        assert contours
        inter = np.count_nonzero(mask.bits & truth.bits)
        union = np.count_nonzero(mask.bits | truth.bits)
        assert inter / union >= 0.95
