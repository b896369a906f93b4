import io
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from dermapipe.imaging import BinaryMask, RasterImage

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def providers_dir() -> Path:
    return FIXTURES / "providers"


@pytest.fixture(scope="session")
def lesion_png() -> bytes:
    return (FIXTURES / "images" / "lesion.png").read_bytes()


@pytest.fixture(scope="session")
def condition_png() -> bytes:
    return (FIXTURES / "images" / "condition.png").read_bytes()


def png_bytes(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(pixels, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def ellipse_mask(h: int, w: int, cx: float, cy: float, a: float, b: float,
                 theta: float = 0.0) -> BinaryMask:
    yy, xx = np.mgrid[0:h, 0:w]
    dx = xx - cx
    dy = yy - cy
    u = dx * np.cos(theta) + dy * np.sin(theta)
    v = -dx * np.sin(theta) + dy * np.cos(theta)
    return BinaryMask((u / a) ** 2 + (v / b) ** 2 <= 1.0)


def disk_mask(h: int, w: int, cx: float, cy: float, r: float) -> BinaryMask:
    return ellipse_mask(h, w, cx, cy, r, r)


def noisy_blob_image(rng: np.random.Generator, mask: BinaryMask, sigma: float = 8.0,
                     fg=(60, 40, 40), bg=(200, 170, 160)) -> RasterImage:
    img = np.empty((*mask.bits.shape, 3))
    img[~mask.bits] = bg
    img[mask.bits] = fg
    img += rng.normal(0, sigma, img.shape)
    return RasterImage(np.clip(np.round(img), 0, 255).astype(np.uint8))
