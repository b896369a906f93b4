"""Measure shape and color descriptors on simple rasterized shapes and show
the rendered technical report.

Run:  python3 demos/02_features.py
"""
import numpy as np

from dermapipe.features import build_technical_report, compute_features
from dermapipe.imaging import BinaryMask, RasterImage
from dermapipe.segmentation import extract_contours, largest_contour


def disk(h, w, cx, cy, r):
    yy, xx = np.mgrid[:h, :w].astype(float)
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


def main():
    mask = BinaryMask(disk(101, 101, 50, 50, 40))
    pixels = np.where(mask.bits[..., None], (90, 60, 55), (205, 175, 160)).astype(np.uint8)
    rng = np.random.default_rng(11)
    pixels = np.clip(pixels + rng.integers(-6, 7, pixels.shape), 0, 255).astype(np.uint8)
    image = RasterImage(pixels)

    contour = largest_contour(extract_contours(mask))
    features = compute_features(image, mask, contour)
    print(f"area        : {features.area:.1f}")
    print(f"perimeter   : {features.perimeter:.2f}")
    print(f"circularity : {features.circularity:.4f}  (ideal disk -> 1.0)")
    print(f"asymmetry   : major {features.asymmetry_major:.4f}, "
          f"minor {features.asymmetry_minor:.4f}")
    print(f"color std   : {tuple(round(c, 2) for c in features.color_std)}")
    print()
    print(build_technical_report(features).text)


if __name__ == "__main__":
    main()
