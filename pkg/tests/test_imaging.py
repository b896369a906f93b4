import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dermapipe.imaging import (
    BinaryMask,
    BoundingBox,
    Contour,
    EmptyMaskError,
    GrayImage,
    ImageDecodeError,
    RasterImage,
    decode_image,
    mask_area,
    mask_centroid,
    reflect_mask,
    symmetric_difference_ratio,
    to_grayscale,
)

from conftest import disk_mask, ellipse_mask, png_bytes


class TestDecodeImage:
    def test_png_round_trip(self):
        pixels = np.arange(48, dtype=np.uint8).reshape(4, 4, 3)
        image = decode_image(png_bytes(pixels))
        assert image.width == 4 and image.height == 4
        np.testing.assert_array_equal(image.pixels, pixels)

    def test_jpeg_accepted(self):
        import io

        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(np.full((8, 8, 3), 128, dtype=np.uint8), "RGB").save(buf, format="JPEG")
        image = decode_image(buf.getvalue())
        assert image.pixels.shape == (8, 8, 3)

    def test_garbage_rejected(self):
        with pytest.raises(ImageDecodeError):
            decode_image(b"not an image at all")

    def test_other_format_rejected(self):
        import io

        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8), "RGB").save(buf, format="BMP")
        with pytest.raises(ImageDecodeError):
            decode_image(buf.getvalue())


class TestTypes:
    def test_raster_image_validates_shape(self):
        with pytest.raises(ValueError):
            RasterImage(np.zeros((4, 4), dtype=np.uint8))

    def test_gray_image_validates_shape(self):
        with pytest.raises(ValueError):
            GrayImage(np.zeros((4, 4, 3), dtype=np.uint8))

    def test_contour_validates_shape(self):
        with pytest.raises(ValueError):
            Contour(np.zeros((0, 2)))
        with pytest.raises(ValueError):
            Contour(np.zeros((3, 3)))

    def test_bounding_box_order(self):
        BoundingBox(0, 0, 5, 5)
        with pytest.raises(ValueError):
            BoundingBox(5, 0, 0, 5)


class TestGrayscale:
    def test_pure_channels(self):
        # round(0.299*255)=76, round(0.587*255)=150, round(0.114*255)=29
        pixels = np.zeros((1, 3, 3), dtype=np.uint8)
        pixels[0, 0, 0] = 255
        pixels[0, 1, 1] = 255
        pixels[0, 2, 2] = 255
        gray = to_grayscale(RasterImage(pixels))
        assert list(gray.intensities[0]) == [76, 150, 29]

    def test_gray_input_is_identity(self):
        values = np.arange(256, dtype=np.uint8).reshape(16, 16)
        pixels = np.stack([values] * 3, axis=-1)
        gray = to_grayscale(RasterImage(pixels))
        np.testing.assert_array_equal(gray.intensities, values)

    @given(hnp.arrays(np.uint8, (5, 7, 3)))
    def test_bounded(self, pixels):
        gray = to_grayscale(RasterImage(pixels))
        assert gray.intensities.dtype == np.uint8
        assert gray.intensities.min() >= 0 and gray.intensities.max() <= 255


class TestMaskGeometry:
    def test_area_and_centroid(self):
        bits = np.zeros((5, 5), dtype=bool)
        bits[1:4, 2] = True
        mask = BinaryMask(bits)
        assert mask_area(mask) == 3
        assert mask_centroid(mask) == (2.0, 2.0)

    def test_empty_centroid_raises(self):
        with pytest.raises(EmptyMaskError):
            mask_centroid(BinaryMask(np.zeros((3, 3), dtype=bool)))

    @given(
        hnp.arrays(bool, (9, 9)),
        hnp.arrays(bool, (9, 9)),
    )
    def test_xor_area_identity(self, a_bits, b_bits):
        a, b = BinaryMask(a_bits), BinaryMask(b_bits)
        xor = BinaryMask(a.bits ^ b.bits)
        both = BinaryMask(a.bits & b.bits)
        assert mask_area(xor) == mask_area(a) + mask_area(b) - 2 * mask_area(both)


class TestReflectMask:
    def test_vertical_line_mirrors_horizontally(self):
        bits = np.zeros((5, 5), dtype=bool)
        bits[2, 0] = True
        mirrored = reflect_mask(BinaryMask(bits), point=(2.0, 2.0), direction=(0.0, 1.0))
        assert mirrored.bits[2, 4]
        assert mask_area(mirrored) == 1

    def test_out_of_bounds_dropped(self):
        bits = np.zeros((3, 3), dtype=bool)
        bits[0, 0] = True
        mirrored = reflect_mask(BinaryMask(bits), point=(2.5, 0.0), direction=(0.0, 1.0))
        assert mask_area(mirrored) == 0

    def test_zero_direction_rejected(self):
        bits = np.ones((3, 3), dtype=bool)
        with pytest.raises(ValueError):
            reflect_mask(BinaryMask(bits), point=(1.0, 1.0), direction=(0.0, 0.0))

    @settings(deadline=None, max_examples=50)
    @given(
        cx=st.floats(28.0, 36.0),
        cy=st.floats(28.0, 36.0),
        a=st.floats(4.0, 14.0),
        b=st.floats(3.0, 8.0),
        angle=st.floats(0.0, 3.1),
        axis_angle=st.floats(0.0, 6.28),
    )
    def test_involution_recovers_foreground(self, cx, cy, a, b, angle, axis_angle):
        # Reflecting twice across the same axis recovers >= 99% of the pixels
        # (exactly 100% here: the shear construction is a lattice involution,
        # so only border clipping can lose pixels, and these masks fit).
        mask = ellipse_mask(64, 64, cx, cy, a, b, angle)
        if mask_area(mask) < 100:
            return
        direction = (np.cos(axis_angle), np.sin(axis_angle))
        once = reflect_mask(mask, (cx, cy), direction)
        twice = reflect_mask(once, (cx, cy), direction)
        recovered = np.count_nonzero(mask.bits & twice.bits)
        assert recovered >= 0.99 * mask_area(mask)
        if mask_area(once) == mask_area(mask):  # nothing clipped at the border
            np.testing.assert_array_equal(twice.bits, mask.bits)


class TestSymmetricDifferenceRatio:
    def test_identical_masks(self):
        mask = disk_mask(32, 32, 16, 16, 8)
        assert symmetric_difference_ratio(mask, mask) == 0.0

    def test_disjoint_masks(self):
        a = np.zeros((4, 4), dtype=bool)
        b = np.zeros((4, 4), dtype=bool)
        a[0, 0] = True
        b[3, 3] = True
        assert symmetric_difference_ratio(BinaryMask(a), BinaryMask(b)) == 1.0

    def test_both_empty(self):
        empty = BinaryMask(np.zeros((4, 4), dtype=bool))
        assert symmetric_difference_ratio(empty, empty) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            symmetric_difference_ratio(
                BinaryMask(np.zeros((4, 4), dtype=bool)),
                BinaryMask(np.zeros((5, 5), dtype=bool)),
            )

    @given(hnp.arrays(bool, (8, 8)), hnp.arrays(bool, (8, 8)))
    def test_bounded_and_symmetric(self, a_bits, b_bits):
        a, b = BinaryMask(a_bits), BinaryMask(b_bits)
        r = symmetric_difference_ratio(a, b)
        assert 0.0 <= r <= 1.0
        assert r == symmetric_difference_ratio(b, a)
