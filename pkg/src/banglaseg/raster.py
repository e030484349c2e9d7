"""Raster primitives shared by every pipeline stage.

Images are plain numpy arrays:

* grayscale: 2-D uint8, luminance 0..255
* binary:    2-D uint8 with values {0, 1}, 1 = ink (text), 0 = background

All filters replicate edge pixels at the borders and preserve the input
shape. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "Box",
    "Component",
    "to_grayscale",
    "gaussian_blur",
    "adaptive_threshold",
    "rotate",
    "project",
    "canny",
    "rank_filter",
    "dilate",
    "connected_components",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned pixel rectangle: top-left corner plus extent."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extent must be positive, got {self.w}x{self.h}")

    @property
    def x2(self) -> int:
        return self.x + self.w - 1

    @property
    def y2(self) -> int:
        return self.y + self.h - 1

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}


class Component(NamedTuple):
    id: int
    box: Box
    count: int


def _check_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] == 0 or img.shape[1] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {img.shape}")
    return img


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Convert an HxWx3 interleaved RGB raster to 8-bit luminance."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.shape[0] == 0 or rgb.shape[1] == 0:
        raise ValueError(f"expected non-empty HxWx3 RGB raster, got shape {rgb.shape}")
    r = rgb[:, :, 0].astype(np.float64)
    g = rgb[:, :, 1].astype(np.float64)
    b = rgb[:, :, 2].astype(np.float64)
    lum = np.rint(0.299 * r + 0.587 * g + 0.114 * b)
    return np.clip(lum, 0, 255).astype(np.uint8)


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_separable(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Apply a 1-D kernel along both axes with edge replication."""
    radius = len(kernel) // 2
    out = img.astype(np.float64)
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (radius, radius)
        padded = np.pad(out, pad, mode="edge")
        acc = np.zeros_like(out)
        for i, weight in enumerate(kernel):
            if axis == 0:
                acc += weight * padded[i : i + out.shape[0], :]
            else:
                acc += weight * padded[:, i : i + out.shape[1]]
        out = acc
    return out


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian smoothing with kernel radius ceil(3*sigma).

    Returns a float64 image on the same 0..255 scale; the normalized kernel
    keeps constant regions exactly constant.
    """
    img = _check_image(img)
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return _convolve_separable(img, _gaussian_kernel(sigma))


def _box_sums(img: np.ndarray, window: int) -> np.ndarray:
    """Sum over a centered window x window neighborhood, edges replicated."""
    r = window // 2
    padded = np.pad(img.astype(np.int64), r, mode="edge")
    # cumulative sums with a leading zero row/col so windows are pure diffs
    c = padded.cumsum(axis=0).cumsum(axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    h, w = img.shape
    return (
        c[window : window + h, window : window + w]
        - c[window : window + h, 0:w]
        - c[0:h, window : window + w]
        + c[0:h, 0:w]
    )


def adaptive_threshold(img: np.ndarray, window: int = 31, offset: int = 15) -> np.ndarray:
    """Binarize dark-on-light text: ink where luminance < local mean - offset.

    The local mean is taken over a centered window x window neighborhood.
    Integer arithmetic throughout, so results are exact.
    """
    img = _check_image(img)
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be an odd integer >= 3, got {window}")
    sums = _box_sums(img, window)
    count = window * window
    # lum < sum/count - offset, kept in integers
    ink = img.astype(np.int64) * count < sums - offset * count
    return ink.astype(np.uint8)


def rotate(img: np.ndarray, angle: float, fill: int = 255) -> np.ndarray:
    """Rotate about the image center by `angle` degrees, bilinear resampling.

    Output has the input's shape; samples falling outside the source take
    the `fill` luminance.
    """
    img = _check_image(img)
    h, w = img.shape
    theta = math.radians(angle)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0

    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    dx, dy = xs - cx, ys - cy
    src_x = cos_t * dx + sin_t * dy + cx
    src_y = -sin_t * dx + cos_t * dy + cy

    valid = (src_x >= 0) & (src_x <= w - 1) & (src_y >= 0) & (src_y <= h - 1)
    x0 = np.clip(np.floor(src_x), 0, w - 2).astype(np.intp) if w > 1 else np.zeros_like(src_x, np.intp)
    y0 = np.clip(np.floor(src_y), 0, h - 2).astype(np.intp) if h > 1 else np.zeros_like(src_y, np.intp)
    fx = np.clip(src_x - x0, 0.0, 1.0)
    fy = np.clip(src_y - y0, 0.0, 1.0)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)

    f = img.astype(np.float64)
    val = (
        f[y0, x0] * (1 - fx) * (1 - fy)
        + f[y0, x1] * fx * (1 - fy)
        + f[y1, x0] * (1 - fx) * fy
        + f[y1, x1] * fx * fy
    )
    out = np.where(valid, np.rint(val), float(fill))
    return np.clip(out, 0, 255).astype(np.uint8)


def project(img: np.ndarray, axis: str) -> np.ndarray:
    """Ink counts per row (axis='row') or per column (axis='column')."""
    img = _check_image(img)
    if axis == "row":
        return img.astype(np.int64).sum(axis=1)
    if axis == "column":
        return img.astype(np.int64).sum(axis=0)
    raise ValueError(f"axis must be 'row' or 'column', got {axis!r}")


def _sobel(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.pad(img, 1, mode="edge")
    h, w = img.shape
    tl, tc, tr = p[0:h, 0:w], p[0:h, 1 : w + 1], p[0:h, 2 : w + 2]
    ml, mr = p[1 : h + 1, 0:w], p[1 : h + 1, 2 : w + 2]
    bl, bc, br = p[2 : h + 2, 0:w], p[2 : h + 2, 1 : w + 1], p[2 : h + 2, 2 : w + 2]
    gx = (tr + 2 * mr + br) - (tl + 2 * ml + bl)
    gy = (bl + 2 * bc + br) - (tl + 2 * tc + tr)
    return gx, gy


def _shift(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """View of `a` displaced by (dy, dx), border replicated."""
    p = np.pad(a, 1, mode="edge")
    h, w = a.shape
    return p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]


def canny(img: np.ndarray, low: float = 50.0, high: float = 150.0) -> np.ndarray:
    """Four-stage Canny edge detector, 1 = edge pixel.

    Stages: Gaussian smoothing (sigma 1.4), Sobel gradients, non-maximum
    suppression over four quantized directions, then double threshold with
    hysteresis by 8-connectivity. Thresholds apply to the raw Sobel L2
    magnitude of a 0..255 image.
    """
    img = _check_image(img)
    if not (0 < low < high):
        raise ValueError(f"need 0 < low < high, got low={low} high={high}")

    smooth = gaussian_blur(img, 1.4)
    gx, gy = _sobel(smooth)
    mag = np.hypot(gx, gy)

    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    bins = np.zeros(img.shape, dtype=np.uint8)
    bins[(ang >= 22.5) & (ang < 67.5)] = 1
    bins[(ang >= 67.5) & (ang < 112.5)] = 2
    bins[(ang >= 112.5) & (ang < 157.5)] = 3

    # neighbor offsets along the gradient for each quantized direction
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(img.shape, dtype=bool)
    for b, (dy, dx) in offsets.items():
        ahead = _shift(mag, dy, dx)
        behind = _shift(mag, -dy, -dx)
        # strict on one side so plateau edges stay one pixel wide
        keep |= (bins == b) & (mag > ahead) & (mag >= behind)

    nms = np.where(keep, mag, 0.0)
    strong = nms >= high
    weak = nms >= low
    if not strong.any():
        return np.zeros(img.shape, dtype=np.uint8)

    labels, _ = _label_runs(weak.astype(np.uint8))
    strong_ids = np.unique(labels[strong])
    edge = np.isin(labels, strong_ids) & weak
    return edge.astype(np.uint8)


def rank_filter(img: np.ndarray, orientation: str, length: int) -> np.ndarray:
    """Sliding 1-D median along `orientation`; removes 1-px perpendicular lines.

    For binary input the median of an odd window is a majority vote, so this
    is computed as a windowed count. Edges are replicated.
    """
    img = _check_image(img)
    if length < 3 or length % 2 == 0:
        raise ValueError(f"length must be an odd integer >= 3, got {length}")
    if orientation == "horizontal":
        axis = 1
    elif orientation == "vertical":
        axis = 0
    else:
        raise ValueError(f"orientation must be 'horizontal' or 'vertical', got {orientation!r}")

    r = length // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(img.astype(np.int64), pad, mode="edge")
    c = padded.cumsum(axis=axis)
    c = np.pad(c, [(1, 0) if i == axis else (0, 0) for i in range(2)])
    n = img.shape[axis]
    if axis == 0:
        counts = c[length : length + n, :] - c[0:n, :]
    else:
        counts = c[:, length : length + n] - c[:, 0:n]
    return (counts >= (length + 1) // 2).astype(np.uint8)


def dilate(img: np.ndarray, kernel_w: int, kernel_h: int) -> np.ndarray:
    """Binary dilation by a centered kernel_w x kernel_h rectangle."""
    img = _check_image(img)
    if kernel_w < 1 or kernel_h < 1:
        raise ValueError(f"kernel dims must be >= 1, got {kernel_w}x{kernel_h}")
    if kernel_w == 1 and kernel_h == 1:
        return img.astype(np.uint8).copy()
    top, bottom = (kernel_h - 1) // 2, kernel_h // 2
    left, right = (kernel_w - 1) // 2, kernel_w // 2
    padded = np.pad(img.astype(np.int64), ((top, bottom), (left, right)))
    c = padded.cumsum(axis=0).cumsum(axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    h, w = img.shape
    sums = (
        c[kernel_h : kernel_h + h, kernel_w : kernel_w + w]
        - c[kernel_h : kernel_h + h, 0:w]
        - c[0:h, kernel_w : kernel_w + w]
        + c[0:h, 0:w]
    )
    return (sums > 0).astype(np.uint8)


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return i

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _runs_of(img: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Horizontal ink runs as (row, col_start, col_end_exclusive) arrays."""
    h, w = img.shape
    stuffed = np.zeros((h, w + 1), dtype=np.int8)
    stuffed[:, :w] = img != 0
    flat = stuffed.ravel()
    d = np.diff(flat, prepend=0)
    starts = np.flatnonzero(d == 1)
    stops = np.flatnonzero(d == -1)
    rows = starts // (w + 1)
    return rows, starts % (w + 1), stops % (w + 1)


def _label_runs(img: np.ndarray) -> tuple[np.ndarray, list[Component]]:
    """Two-pass union-find labeling over ink runs, 8-connectivity.

    Returns (labels image, components sorted by descending pixel count).
    Component ids are 1-based and match the labels image; 0 = background.
    """
    h, w = img.shape
    rows, c0, c1 = _runs_of(img)
    n = len(rows)
    labels = np.zeros((h, w), dtype=np.int32)
    if n == 0:
        return labels, []

    # runs [c0, c1) touch under 8-connectivity iff c0[k] <= c1[i] and c1[k] >= c0[i]
    uf = _UnionFind(n)
    row_starts = np.searchsorted(rows, np.arange(h + 1))
    for r in range(1, h):
        a, b = row_starts[r], row_starts[r + 1]
        pa, pb = row_starts[r - 1], row_starts[r]
        if a == b or pa == pb:
            continue
        j = pa
        for i in range(a, b):
            while j < pb and c1[j] < c0[i]:
                j += 1
            k = j
            while k < pb and c0[k] <= c1[i]:
                uf.union(i, k)
                k += 1

    root = np.fromiter((uf.find(i) for i in range(n)), dtype=np.int64, count=n)
    uniq, comp_idx = np.unique(root, return_inverse=True)
    ncomp = len(uniq)

    counts = np.zeros(ncomp, dtype=np.int64)
    np.add.at(counts, comp_idx, c1 - c0)
    min_x = np.full(ncomp, w, dtype=np.int64)
    max_x = np.zeros(ncomp, dtype=np.int64)
    min_y = np.full(ncomp, h, dtype=np.int64)
    max_y = np.zeros(ncomp, dtype=np.int64)
    np.minimum.at(min_x, comp_idx, c0)
    np.maximum.at(max_x, comp_idx, c1 - 1)
    np.minimum.at(min_y, comp_idx, rows)
    np.maximum.at(max_y, comp_idx, rows)

    order = np.lexsort((min_x, min_y, -counts))
    rank = np.empty(ncomp, dtype=np.int32)
    rank[order] = np.arange(1, ncomp + 1)
    run_label = rank[comp_idx]
    for i in range(n):
        labels[rows[i], c0[i] : c1[i]] = run_label[i]

    comps = [
        Component(
            id=int(rank[ci]),
            box=Box(int(min_x[ci]), int(min_y[ci]), int(max_x[ci] - min_x[ci] + 1), int(max_y[ci] - min_y[ci] + 1)),
            count=int(counts[ci]),
        )
        for ci in order
    ]
    return labels, comps


def connected_components(img: np.ndarray, return_labels: bool = False):
    """8-connected components of a binary image.

    Returns a list of Component(id, box, count) in descending pixel count
    (ties broken top-to-bottom, left-to-right). With return_labels=True also
    returns the int32 labels image using the same 1-based ids.
    """
    img = _check_image(img)
    labels, comps = _label_runs(img)
    if return_labels:
        return comps, labels
    return comps
