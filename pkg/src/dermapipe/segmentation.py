"""Lesion isolation: Otsu thresholding, GrabCut-style refinement, contour tracing."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .imaging import BinaryMask, Contour, GrayImage, RasterImage, to_grayscale

__all__ = [
    "OtsuResult",
    "GrabCutParams",
    "GaussianMixture",
    "DegenerateHistogramError",
    "TrimapError",
    "NoLesionError",
    "otsu_threshold",
    "grabcut_refine",
    "extract_contours",
    "largest_contour",
    "contour_area",
    "contour_perimeter",
    "segment_lesion",
]

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


class DegenerateHistogramError(ValueError):
    """Otsu on a constant image: no threshold separates two classes."""


class TrimapError(ValueError):
    """GrabCut init must contain both foreground and background pixels."""


class NoLesionError(ValueError):
    """No contour / foreground region available."""


@dataclass(frozen=True)
class OtsuResult:
    threshold: int
    mask: BinaryMask


@dataclass(frozen=True)
class GrabCutParams:
    gmm_components: int = 5
    iterations: int = 5
    gamma: float = 50.0
    connectivity: int = 8
    fg_dilate_px: int = 10
    bbox_dilate_px: int = 20

    def __post_init__(self):
        if self.gmm_components < 1 or self.iterations < 1 or self.gamma <= 0:
            raise ValueError("invalid GrabCut parameters")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")


@dataclass
class GaussianMixture:
    """Full-covariance RGB mixture; one entry per component."""

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, 3)
    covariances: np.ndarray  # (K, 3, 3)

    def component_energies(self, pixels: np.ndarray) -> np.ndarray:
        """-log(pi_k * N(z | mu_k, Sigma_k)) for every pixel/component pair, shape (N, K)."""
        n = len(pixels)
        k = len(self.weights)
        out = np.full((n, k), np.inf)
        for i in range(k):
            if self.weights[i] <= 0:
                continue
            diff = pixels - self.means[i]
            cov = self.covariances[i]
            chol = np.linalg.cholesky(cov)
            sol = np.linalg.solve(chol, diff.T)
            maha = np.sum(sol * sol, axis=0)
            logdet = 2.0 * np.sum(np.log(np.diag(chol)))
            out[:, i] = (
                -np.log(self.weights[i])
                + 0.5 * logdet
                + 0.5 * maha
                + 1.5 * np.log(2.0 * np.pi)
            )
        return out

    def min_energy(self, pixels: np.ndarray) -> np.ndarray:
        """Assigned-component energy: min over components."""
        return self.component_energies(pixels).min(axis=1)


def otsu_threshold(gray: GrayImage) -> OtsuResult:
    """Threshold maximizing between-class variance; foreground is the darker class.

    Ties are broken by the smallest threshold. Constant images raise
    :class:`DegenerateHistogramError`.
    """
    intensities = gray.intensities
    hist = np.bincount(intensities.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    if np.count_nonzero(hist) < 2:
        raise DegenerateHistogramError("degenerate histogram")

    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)[:-1]  # class "<= t", t in [0, 254]
    w1 = total - w0
    cum = np.cumsum(hist * levels)[:-1]
    mu_total = float((hist * levels).sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = cum / w0
        mu1 = (mu_total - cum) / w1
        sigma_b = w0 * w1 * (mu0 - mu1) ** 2
    sigma_b = np.nan_to_num(sigma_b, nan=-1.0)
    t = int(np.argmax(sigma_b))  # argmax returns the first (smallest) maximizer

    low = intensities <= t
    # Orient foreground toward the darker class (lesions are darker than skin).
    mean_low = float(intensities[low].mean())
    mean_high = float(intensities[~low].mean())
    fg = low if mean_low <= mean_high else ~low
    return OtsuResult(threshold=t, mask=BinaryMask(fg))


def _init_components(pixels: np.ndarray, k: int) -> np.ndarray:
    """Deterministic component init: split pixels into k luma-ordered bins."""
    luma = pixels @ np.array([0.299, 0.587, 0.114])
    order = np.argsort(luma, kind="stable")
    assign = np.empty(len(pixels), dtype=np.int64)
    for i, chunk in enumerate(np.array_split(order, k)):
        assign[chunk] = i
    return assign


def _fit_gmm(pixels: np.ndarray, assign: np.ndarray, k: int, reg: float = 1e-3) -> GaussianMixture:
    weights = np.zeros(k)
    means = np.zeros((k, 3))
    covs = np.zeros((k, 3, 3))
    n = len(pixels)
    for i in range(k):
        sel = assign == i
        cnt = int(sel.sum())
        if cnt == 0:
            covs[i] = np.eye(3)
            continue
        weights[i] = cnt / n
        pts = pixels[sel]
        means[i] = pts.mean(axis=0)
        diff = pts - means[i]
        covs[i] = (diff.T @ diff) / cnt + reg * np.eye(3)
    return GaussianMixture(weights, means, covs)


def _neighbor_offsets(connectivity: int) -> list[tuple[int, int]]:
    # Forward half-neighborhood; each undirected pair is visited once.
    offs = [(0, 1), (1, 0)]
    if connectivity == 8:
        offs += [(1, 1), (1, -1)]
    return offs


def _pairwise_links(image: RasterImage, gamma: float, connectivity: int):
    """Contrast-weighted n-link weights gamma/dist * exp(-beta ||z_m - z_n||^2)."""
    h, w = image.height, image.width
    rgb = image.pixels.astype(np.float64)
    idx = np.arange(h * w).reshape(h, w)
    src, dst, sqd, dist = [], [], [], []
    for dy, dx in _neighbor_offsets(connectivity):
        ys = slice(max(0, -dy), h - max(0, dy))
        xs = slice(max(0, -dx), w - max(0, dx))
        ys2 = slice(max(0, dy), h - max(0, -dy))
        xs2 = slice(max(0, dx), w - max(0, -dx))
        a = idx[ys, xs].ravel()
        b = idx[ys2, xs2].ravel()
        d = rgb[ys, xs] - rgb[ys2, xs2]
        src.append(a)
        dst.append(b)
        sqd.append((d * d).sum(axis=2).ravel())
        dist.append(np.full(len(a), np.hypot(dy, dx)))
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    sqd = np.concatenate(sqd)
    dist = np.concatenate(dist)
    mean_sqd = float(sqd.mean())
    beta = 0.0 if mean_sqd == 0 else 1.0 / (2.0 * mean_sqd)
    weights = gamma / dist * np.exp(-beta * sqd)
    return src, dst, weights


def _min_cut(n_pixels: int, cap_src: np.ndarray, cap_sink: np.ndarray,
             link_a: np.ndarray, link_b: np.ndarray, link_w: np.ndarray) -> np.ndarray:
    """Binary labeling via max-flow; True = source (foreground) side.

    Capacities are quantized to integers for the solver; labels are read off the
    residual graph by reachability from the source.
    """
    scale = 10_000.0
    source = n_pixels
    sink = n_pixels + 1
    qs = np.rint(cap_src * scale).astype(np.int64)
    qt = np.rint(cap_sink * scale).astype(np.int64)
    qw = np.rint(link_w * scale).astype(np.int64)

    pix = np.arange(n_pixels)
    rows = np.concatenate([np.full(n_pixels, source), pix, link_a, link_b])
    cols = np.concatenate([pix, np.full(n_pixels, sink), link_b, link_a])
    caps = np.concatenate([qs, qt, qw, qw])
    keep = caps > 0
    graph = csr_matrix(
        (caps[keep], (rows[keep], cols[keep])), shape=(n_pixels + 2, n_pixels + 2)
    )
    result = maximum_flow(graph, source, sink)
    residual = graph - result.flow
    residual.data = np.maximum(residual.data, 0)
    residual.eliminate_zeros()

    # BFS from source over positive residual capacity.
    reach = np.zeros(n_pixels + 2, dtype=bool)
    reach[source] = True
    frontier = np.array([source])
    indptr, indices, data = residual.indptr, residual.indices, residual.data
    while len(frontier):
        nxt = []
        for u in frontier:
            nb = indices[indptr[u]:indptr[u + 1]]
            cp = data[indptr[u]:indptr[u + 1]]
            nb = nb[cp > 0]
            new = nb[~reach[nb]]
            reach[new] = True
            nxt.append(new)
        frontier = np.concatenate(nxt) if nxt else np.array([], dtype=np.int64)
    return reach[:n_pixels]


def _labeling_energy(fg: np.ndarray, d_fg: np.ndarray, d_bg: np.ndarray,
                     link_a: np.ndarray, link_b: np.ndarray, link_w: np.ndarray) -> float:
    data = float(d_fg[fg].sum() + d_bg[~fg].sum())
    smooth = float(link_w[fg[link_a] != fg[link_b]].sum())
    return data + smooth


def grabcut_refine(
    image: RasterImage,
    init: BinaryMask,
    params: GrabCutParams = GrabCutParams(),
    energy_log: list[float] | None = None,
) -> BinaryMask:
    """Refine an initial lesion mask by iterated GMM fitting and graph min-cut.

    Each iteration refits foreground/background color mixtures to the current
    labeling and re-solves the min-cut with data terms -log GMM likelihood and
    contrast-weighted smoothness. A relabeling is accepted only if it does not
    increase the energy, so the per-iteration energy log is non-increasing.
    """
    if image.pixels.shape[:2] != init.bits.shape:
        raise ValueError("mask dimensions must match image")
    n_fg = int(init.bits.sum())
    if n_fg == 0 or n_fg == init.bits.size:
        raise TrimapError("uninitialized trimap")

    h, w = image.height, image.width
    pixels = image.pixels.reshape(-1, 3).astype(np.float64)

    # Trimap: foreground can only grow within the dilated init region; everything
    # outside the dilated init bounding box is locked background.
    probable = ndimage.binary_dilation(
        init.bits, structure=_EIGHT_CONNECTED, iterations=params.fg_dilate_px
    )
    ys, xs = np.nonzero(init.bits)
    m = params.bbox_dilate_px
    box = np.zeros((h, w), dtype=bool)
    box[max(0, ys.min() - m):ys.max() + m + 1, max(0, xs.min() - m):xs.max() + m + 1] = True
    locked_bg = ~(probable & box)
    free = ~locked_bg.ravel()

    link_a, link_b, link_w = _pairwise_links(image, params.gamma, params.connectivity)

    fg = init.bits.ravel().copy()
    fg &= free
    if not fg.any():
        raise TrimapError("uninitialized trimap")
    fg_assign = _init_components(pixels[fg], params.gmm_components)
    bg_assign = _init_components(pixels[~fg], params.gmm_components)

    prev_energy = np.inf
    for _ in range(params.iterations):
        fg_gmm = _fit_gmm(pixels[fg], fg_assign, params.gmm_components)
        bg_gmm = _fit_gmm(pixels[~fg], bg_assign, params.gmm_components)
        d_fg = fg_gmm.min_energy(pixels)
        d_bg = bg_gmm.min_energy(pixels)

        big = float(max(d_fg.max(), d_bg.max()) + 1.0) * init.bits.size
        cap_src = np.where(free, d_bg, 0.0)  # cut when labeled bg
        cap_sink = np.where(free, d_fg, big)  # locked bg never joins the source side

        new_fg = _min_cut(init.bits.size, cap_src, cap_sink, link_a, link_b, link_w)
        new_fg &= free
        energy = _labeling_energy(new_fg, d_fg, d_bg, link_a, link_b, link_w)
        if not new_fg.any() or energy > _labeling_energy(fg, d_fg, d_bg, link_a, link_b, link_w):
            # Quantization can make the integer cut slightly suboptimal for the
            # float energy; keep the previous labeling and stop.
            if energy_log is not None:
                energy_log.append(_labeling_energy(fg, d_fg, d_bg, link_a, link_b, link_w))
            break
        if energy_log is not None:
            energy_log.append(energy)
        changed = bool((new_fg != fg).any())
        fg = new_fg
        fg_assign = np.argmin(fg_gmm.component_energies(pixels[fg]), axis=1)
        bg_assign = np.argmin(bg_gmm.component_energies(pixels[~fg]), axis=1)
        if not changed or energy >= prev_energy:
            break
        prev_energy = energy
    return BinaryMask(fg.reshape(h, w))


_MOORE_ORDER = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def _trace_boundary(component: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Moore-neighbor tracing from the top-left foreground pixel, clockwise.

    ``backtrack`` is the last background cell examined; scanning resumes from it
    so the trace hugs the outer boundary. Terminates when the start pixel is
    re-entered from the same backtrack cell (Jacob's stopping criterion).
    """
    h, w = component.shape
    sy, sx = start
    cur = (sy, sx)
    backtrack = (sy, sx - 1)  # "west" of the top-left pixel is always background
    contour = [(sx, sy)]
    seen = {(cur, backtrack)}
    while True:
        cy, cx = cur
        k = _MOORE_ORDER.index((backtrack[0] - cy, backtrack[1] - cx))
        found = None
        for step in range(1, 9):
            dy, dx = _MOORE_ORDER[(k + step) % 8]
            ny, nx = cy + dy, cx + dx
            if 0 <= ny < h and 0 <= nx < w and component[ny, nx]:
                found = (ny, nx)
                break
            backtrack = (ny, nx)
        if found is None:
            break  # isolated pixel
        cur = found
        state = (cur, backtrack)
        if state in seen:
            break
        seen.add(state)
        contour.append((cur[1], cur[0]))
    return contour


def extract_contours(mask: BinaryMask) -> list[Contour]:
    """One closed outer contour per 8-connected foreground component.

    Components are visited in row-major order of their top-left pixel, so the
    output order is deterministic.
    """
    labels, count = ndimage.label(mask.bits, structure=_EIGHT_CONNECTED)
    contours = []
    for comp in range(1, count + 1):
        component = labels == comp
        ys, xs = np.nonzero(component)
        order = np.lexsort((xs, ys))
        start = (int(ys[order[0]]), int(xs[order[0]]))
        pts = _trace_boundary(component, start)
        contours.append(Contour(np.array(pts, dtype=np.int64)))
    return contours


def contour_area(contour: Contour) -> float:
    """Enclosed area via the shoelace formula over the contour vertices."""
    pts = contour.points
    if len(pts) < 3:
        raise ValueError("contour needs at least 3 points")
    x = pts[:, 0].astype(np.float64)
    y = pts[:, 1].astype(np.float64)
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def contour_perimeter(contour: Contour) -> float:
    """Closed arc length: sum of Euclidean distances between consecutive vertices."""
    pts = contour.points
    if len(pts) < 3:
        raise ValueError("contour needs at least 3 points")
    diffs = np.diff(np.vstack([pts, pts[:1]]).astype(np.float64), axis=0)
    return float(np.hypot(diffs[:, 0], diffs[:, 1]).sum())


def largest_contour(contours: list[Contour]) -> Contour:
    """Contour with maximal enclosed area; ties broken by first occurrence."""
    if not contours:
        raise NoLesionError("no lesion found")
    best = contours[0]
    best_area = contour_area(best) if len(best) >= 3 else 0.0
    for c in contours[1:]:
        a = contour_area(c) if len(c) >= 3 else 0.0
        if a > best_area:
            best, best_area = c, a
    return best


def segment_lesion(
    image: RasterImage,
    params: GrabCutParams = GrabCutParams(),
) -> tuple[BinaryMask, list[Contour]]:
    """Full front half of the technical assessment: Otsu init, GrabCut refinement,
    contour extraction."""
    otsu = otsu_threshold(to_grayscale(image))
    refined = grabcut_refine(image, otsu.mask, params)
    return refined, extract_contours(refined)
