"""A/B/C lesion measurements: circularity, two-axis asymmetry, color variability,
and the prompt-ready technical report."""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field

import numpy as np

from .imaging import BinaryMask, EmptyMaskError, RasterImage, mask_centroid, symmetric_difference_ratio, reflect_mask
from .segmentation import Contour, contour_area, contour_perimeter

__all__ = [
    "LesionFeatures",
    "PrincipalAxes",
    "TechnicalReport",
    "DegenerateMaskError",
    "circularity",
    "principal_axes",
    "asymmetry",
    "color_variability",
    "compute_features",
    "build_technical_report",
    "parse_technical_report",
    "render_overlays",
]


class DegenerateMaskError(ValueError):
    """Mask is empty or collinear; axes/asymmetry are undefined."""


@dataclass(frozen=True)
class LesionFeatures:
    area: float
    perimeter: float
    circularity: float
    asymmetry_major: float
    asymmetry_minor: float
    asymmetry_avg: float
    color_std: tuple[float, float, float]


@dataclass(frozen=True)
class PrincipalAxes:
    centroid: tuple[float, float]
    major_axis: tuple[float, float]
    minor_axis: tuple[float, float]


@dataclass(frozen=True)
class TechnicalReport:
    text: str
    features: LesionFeatures
    plots: dict[str, bytes] = field(default_factory=dict)


def circularity(area: float, perimeter: float) -> float:
    """4*pi*area / perimeter^2, clamped to (0, 1.05] for rasterization overshoot."""
    if area <= 0 or perimeter <= 0:
        raise ValueError("area and perimeter must be positive")
    return min(4.0 * np.pi * area / perimeter**2, 1.05)


def _sign_normalize(v: np.ndarray) -> tuple[float, float]:
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return float(v[0]), float(v[1])


def principal_axes(mask: BinaryMask) -> PrincipalAxes:
    """Centroid and second-central-moment eigenvectors of the foreground.

    The major axis takes the larger eigenvalue; equal eigenvalues tie-break to
    (1, 0). Both axes are sign-normalized to positive x (then positive y).
    """
    ys, xs = np.nonzero(mask.bits)
    if len(xs) < 3:
        raise DegenerateMaskError("need at least 3 foreground pixels")
    cx, cy = float(xs.mean()), float(ys.mean())
    dx = xs - cx
    dy = ys - cy
    mu20 = float((dx * dx).mean())
    mu02 = float((dy * dy).mean())
    mu11 = float((dx * dy).mean())
    if mu20 * mu02 - mu11 * mu11 <= 1e-12:
        raise DegenerateMaskError("collinear foreground pixels")
    # Closed-form major-axis angle; atan2(0, 0) = 0 gives the declared tie-break.
    theta = 0.5 * np.arctan2(2.0 * mu11, mu20 - mu02)
    major = np.array([np.cos(theta), np.sin(theta)])
    minor = np.array([-np.sin(theta), np.cos(theta)])
    return PrincipalAxes(
        centroid=(cx, cy),
        major_axis=_sign_normalize(major),
        minor_axis=_sign_normalize(minor),
    )


def asymmetry(mask: BinaryMask, axis: str = "major") -> float:
    """Normalized symmetric difference between the mask and its mirror across the
    chosen principal axis through the centroid. 0 means perfect mirror symmetry."""
    if axis not in ("major", "minor"):
        raise ValueError("axis must be 'major' or 'minor'")
    axes = principal_axes(mask)
    direction = axes.major_axis if axis == "major" else axes.minor_axis
    mirrored = reflect_mask(mask, axes.centroid, direction)
    return symmetric_difference_ratio(mask, mirrored)


def color_variability(image: RasterImage, mask: BinaryMask) -> tuple[float, float, float]:
    """Population standard deviation of each RGB channel over foreground pixels."""
    if image.pixels.shape[:2] != mask.bits.shape:
        raise ValueError("mask dimensions must match image")
    fg = image.pixels[mask.bits]
    if len(fg) == 0:
        raise EmptyMaskError("mask has no foreground pixels")
    std = fg.astype(np.float64).std(axis=0)  # numpy default is the population std
    return (float(std[0]), float(std[1]), float(std[2]))


def _rounded_measurements(contour: Contour) -> tuple[float, float]:
    """Area and perimeter of the contour after one corner-rounding pass.

    The raw 8-connected chain through boundary pixel centers overestimates a
    smooth boundary's length by ~5% (staircase effect), which alone pushes a
    rasterized disk's circularity down to ~0.89. One Chaikin subdivision step
    (vertices at the 1/4 and 3/4 points of each edge) rounds the staircase
    corners and brings the perimeter within ~2.5% of the true arc length while
    leaving the enclosed area essentially unchanged.
    """
    pts = contour.points.astype(np.float64)
    nxt = np.roll(pts, -1, axis=0)
    smooth = np.empty((2 * len(pts), 2))
    smooth[0::2] = 0.75 * pts + 0.25 * nxt
    smooth[1::2] = 0.25 * pts + 0.75 * nxt
    x, y = smooth[:, 0], smooth[:, 1]
    area = float(abs(x @ np.roll(y, -1) - y @ np.roll(x, -1)) / 2.0)
    d = np.diff(np.vstack([smooth, smooth[:1]]), axis=0)
    return area, float(np.hypot(d[:, 0], d[:, 1]).sum())


def compute_features(image: RasterImage, mask: BinaryMask, contour: Contour) -> LesionFeatures:
    """Assemble the full measurement record from a segmented lesion."""
    if len(contour) >= 3:
        area, perimeter = _rounded_measurements(contour)
    else:
        area = contour_area(contour)
        perimeter = contour_perimeter(contour)
    a_major = asymmetry(mask, "major")
    a_minor = asymmetry(mask, "minor")
    return LesionFeatures(
        area=area,
        perimeter=perimeter,
        circularity=circularity(area, perimeter),
        asymmetry_major=a_major,
        asymmetry_minor=a_minor,
        asymmetry_avg=(a_major + a_minor) / 2.0,
        color_std=color_variability(image, mask),
    )


_REPORT_TEMPLATE = """Detailed Medical Assessment with Methodology of Segmented Image Analysis.
Segmentation and Feature Extraction Summary: the lesion of interest was isolated \
from the surrounding tissue by histogram thresholding refined with an iterative \
color-model graph cut, and geometric and colorimetric features were measured on \
the largest extracted boundary.
Area: {area}
Perimeter: {perimeter}
Circularity Index: {circularity}
Standard Deviation in the Red Channel: {std_r}
Standard Deviation in the Green Channel: {std_g}
Standard Deviation in the Blue Channel: {std_b}
Asymmetry (major axis): {asymmetry_major}
Asymmetry (minor axis): {asymmetry_minor}
Average Asymmetry: {asymmetry_avg}
Technical note: these measurements quantify border irregularity (circularity), \
color variability (per-channel standard deviations) and shape asymmetry of the \
segmented lesion; interpret them alongside the visual assessment and treat them \
as decision support, not a diagnosis."""

_REPORT_FIELDS = {
    "area": r"Area: (?P<area>\S+)",
    "perimeter": r"Perimeter: (?P<perimeter>\S+)",
    "circularity": r"Circularity Index: (?P<circularity>\S+)",
    "std_r": r"Standard Deviation in the Red Channel: (?P<std_r>\S+)",
    "std_g": r"Standard Deviation in the Green Channel: (?P<std_g>\S+)",
    "std_b": r"Standard Deviation in the Blue Channel: (?P<std_b>\S+)",
    "asymmetry_major": r"Asymmetry \(major axis\): (?P<asymmetry_major>\S+)",
    "asymmetry_minor": r"Asymmetry \(minor axis\): (?P<asymmetry_minor>\S+)",
    "asymmetry_avg": r"Average Asymmetry: (?P<asymmetry_avg>\S+)",
}


def build_technical_report(features: LesionFeatures, plots: dict[str, bytes] | None = None) -> TechnicalReport:
    """Render the deterministic assessment text; every numeric field appears
    verbatim (repr round-trips exactly through :func:`parse_technical_report`)."""
    text = _REPORT_TEMPLATE.format(
        area=repr(float(features.area)),
        perimeter=repr(float(features.perimeter)),
        circularity=repr(float(features.circularity)),
        std_r=repr(float(features.color_std[0])),
        std_g=repr(float(features.color_std[1])),
        std_b=repr(float(features.color_std[2])),
        asymmetry_major=repr(float(features.asymmetry_major)),
        asymmetry_minor=repr(float(features.asymmetry_minor)),
        asymmetry_avg=repr(float(features.asymmetry_avg)),
    )
    return TechnicalReport(text=text, features=features, plots=plots or {})


def parse_technical_report(text: str) -> LesionFeatures:
    """Recover the numeric fields from report text (round-trip of the builder)."""
    values = {}
    for name, pattern in _REPORT_FIELDS.items():
        m = re.search(pattern, text)
        if not m:
            raise ValueError(f"report field missing: {name}")
        values[name] = float(m.group(name))
    return LesionFeatures(
        area=values["area"],
        perimeter=values["perimeter"],
        circularity=values["circularity"],
        asymmetry_major=values["asymmetry_major"],
        asymmetry_minor=values["asymmetry_minor"],
        asymmetry_avg=values["asymmetry_avg"],
        color_std=(values["std_r"], values["std_g"], values["std_b"]),
    )


def render_overlays(image: RasterImage, mask: BinaryMask, contour: Contour) -> dict[str, bytes]:
    """PNG overlay artifacts: segmented outline, the two asymmetry mirrors, and
    the foreground color distribution."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    axes = principal_axes(mask)
    plots: dict[str, bytes] = {}

    def save(fig) -> bytes:
        buf = io.BytesIO()
        fig.savefig(buf, format="png", dpi=100)
        plt.close(fig)
        return buf.getvalue()

    fig, ax = plt.subplots()
    ax.imshow(image.pixels)
    pts = np.vstack([contour.points, contour.points[:1]])
    ax.plot(pts[:, 0], pts[:, 1], "c-", linewidth=1.5)
    ax.set_title("Segmented outline")
    ax.axis("off")
    plots["outline"] = save(fig)

    for name, direction in (("asymmetry_major", axes.major_axis), ("asymmetry_minor", axes.minor_axis)):
        mirrored = reflect_mask(mask, axes.centroid, direction)
        overlay = np.zeros((*mask.bits.shape, 3))
        overlay[mask.bits] += (1.0, 0.0, 0.0)
        overlay[mirrored.bits] += (0.0, 0.0, 1.0)
        fig, ax = plt.subplots()
        ax.imshow(np.clip(overlay, 0, 1))
        cx, cy = axes.centroid
        ax.plot(cx, cy, "w+")
        ax.set_title(f"Reflection overlay ({name.split('_')[1]} axis)")
        ax.axis("off")
        plots[name] = save(fig)

    fg = image.pixels[mask.bits]
    fig, ax = plt.subplots()
    for i, (channel, color) in enumerate((("red", "r"), ("green", "g"), ("blue", "b"))):
        ax.hist(fg[:, i], bins=32, color=color, alpha=0.5, label=channel)
    ax.set_title("Color distribution inside lesion")
    ax.legend()
    plots["color_distribution"] = save(fig)
    return plots
