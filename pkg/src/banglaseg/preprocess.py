"""Page-level normalization: crop to the text region, straighten skew,
flatten curved lines, denoise and binarize.

All functions take and return plain numpy images (see `raster`); reports are
small dataclasses that serialize into the run manifest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import raster
from .exceptions import EmptyPageError, NoTextError
from .optim import minimize
from .raster import Box

__all__ = [
    "CropReport",
    "SkewReport",
    "Span",
    "DewarpParams",
    "crop_to_text",
    "correct_skew",
    "detect_spans",
    "dewarp_page",
    "denoise",
    "binarize",
    "span_straightness_rms",
]


@dataclass
class CropReport:
    crop_box: Box
    edge_count_before: int
    edge_count_after: int

    def to_dict(self) -> dict:
        return {
            "crop_box": self.crop_box.to_dict(),
            "edge_count_before": self.edge_count_before,
            "edge_count_after": self.edge_count_after,
        }


@dataclass
class SkewReport:
    best_angle: float
    peak_score: int
    angles: list = field(default_factory=list)
    scores: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_angle": self.best_angle,
            "peak_score": self.peak_score,
            "angles": self.angles,
            "scores": self.scores,
        }


@dataclass
class Span:
    """Midline keypoints of one detected text line, x strictly increasing."""

    line_id: int
    keypoints: np.ndarray  # (n, 2) float array of (x, y)


@dataclass
class DewarpParams:
    alpha: float
    beta: float
    rot: np.ndarray  # axis-angle, 3-vector
    trans: np.ndarray  # 3-vector, normalized page units
    span_offsets: np.ndarray
    focal: float


def denoise(img: np.ndarray, sigma: float = 0.8) -> np.ndarray:
    """Gaussian smoothing tuned to kill speckle before binarization."""
    out = raster.gaussian_blur(img, sigma)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def binarize(img: np.ndarray, window: int = 31, offset: int = 15) -> np.ndarray:
    """Adaptive-threshold binarization; 1 = ink."""
    return raster.adaptive_threshold(img, window=window, offset=offset)


# ---------------------------------------------------------------------------
# cropping
# ---------------------------------------------------------------------------

def crop_to_text(
    img: np.ndarray,
    canny_low: float = 50.0,
    canny_high: float = 150.0,
    rank_length: int = 15,
    min_component: int = 10,
    margin: int = 5,
) -> tuple[np.ndarray, CropReport]:
    """Crop away everything outside the text block.

    Edge map -> directional median filtering to suppress border lines ->
    connected components -> union bounding box (plus a small margin, clamped
    to the image). Edges are thickened by one pixel first so that the median
    filters measure local edge density rather than the one-pixel width every
    edge has after non-maximum suppression: dense text clusters pass, long
    isolated frame lines do not.

    Raises EmptyPageError when no component of at least `min_component`
    pixels survives.
    """
    img = np.asarray(img)
    if min(img.shape) < 64:
        raise ValueError(f"image too small to crop, need min dimension >= 64, got {img.shape}")

    edges = raster.canny(img, canny_low, canny_high)
    before = int(edges.sum())
    thick = raster.dilate(edges, 3, 3)
    filtered = raster.rank_filter(thick, "vertical", rank_length)
    filtered = raster.rank_filter(filtered, "horizontal", rank_length)
    after = int(filtered.sum())

    h, w = img.shape
    comps = [
        c
        for c in raster.connected_components(filtered)
        if c.count >= min_component
        # a frame ring flush with the image boundary survives the median
        # filters (edge replication feeds its windows); no text cluster
        # spans nearly the whole page in both dimensions, so drop those
        and not (c.box.w >= 0.9 * w and c.box.h >= 0.9 * h)
    ]
    if not comps:
        raise EmptyPageError("no text-like components found on the page")

    x0 = min(c.box.x for c in comps)
    y0 = min(c.box.y for c in comps)
    x1 = max(c.box.x2 for c in comps)
    y1 = max(c.box.y2 for c in comps)
    x0 = max(0, x0 - margin)
    y0 = max(0, y0 - margin)
    x1 = min(w - 1, x1 + margin)
    y1 = min(h - 1, y1 + margin)

    box = Box(x0, y0, x1 - x0 + 1, y1 - y0 + 1)
    return img[y0 : y1 + 1, x0 : x1 + 1].copy(), CropReport(box, before, after)


# ---------------------------------------------------------------------------
# skew correction
# ---------------------------------------------------------------------------

def correct_skew(
    img: np.ndarray,
    angle_range: float = 5.0,
    step: float = 0.25,
    window: int = 31,
    offset: int = 15,
    mode: str = "max_peak",
) -> tuple[np.ndarray, SkewReport]:
    """Rotate the page to the angle that maximizes the row-projection peak.

    Candidate angles run -angle_range..+angle_range in `step` increments.
    Scoring binarizes once and rotates the ink coordinates per candidate,
    which gives the same row histogram a rotated-image projection would.
    `mode` picks the score: 'max_peak' uses the highest row sum, 'peak_diff'
    its prominence over the mean. Ties prefer the smallest magnitude, then
    the negative angle. The returned image is grayscale.
    """
    img = np.asarray(img)
    if mode not in ("max_peak", "peak_diff"):
        raise ValueError(f"mode must be 'max_peak' or 'peak_diff', got {mode!r}")
    n_steps = int(round(angle_range / step))
    angles = [round(k * step, 6) for k in range(-n_steps, n_steps + 1)]

    ink = binarize(img, window=window, offset=offset)
    ys, xs = np.nonzero(ink)
    h, w = img.shape
    if len(ys) == 0:
        report = SkewReport(0.0, 0, angles, [0] * len(angles))
        return img.copy(), report

    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    dx = xs.astype(np.float64) - cx
    dy = ys.astype(np.float64) - cy

    scores = []
    for a in angles:
        t = math.radians(a)
        rows = np.rint(math.sin(t) * dx + math.cos(t) * dy + cy).astype(np.int64)
        inside = (rows >= 0) & (rows < h)
        hist = np.bincount(rows[inside], minlength=h)
        if mode == "max_peak":
            scores.append(int(hist.max()))
        else:
            scores.append(int(round(float(hist.max()) - float(hist.mean()))))

    best_idx = min(range(len(angles)), key=lambda i: (-scores[i], abs(angles[i]), angles[i]))
    best = angles[best_idx]
    rotated = raster.rotate(img, best, fill=255) if best != 0.0 else img.copy()
    return rotated, SkewReport(float(best), scores[best_idx], angles, scores)


# ---------------------------------------------------------------------------
# span detection
# ---------------------------------------------------------------------------

def detect_spans(
    ink: np.ndarray,
    dilate_w: int = 21,
    dilate_h: int = 3,
    sample_step: int = 20,
    max_height_factor: float = 3.0,
    min_width_frac: float = 0.05,
) -> list[Span]:
    """Detect text-line midlines on a binarized page.

    Dilation merges neighbouring words of a line into one blob; each
    surviving blob is sampled every `sample_step` columns at its vertical
    ink-mass centroid. Blobs taller than `max_height_factor` times the
    median height or narrower than `min_width_frac` of the page are dropped.
    Spans are ordered top to bottom.
    """
    ink = np.asarray(ink)
    h, w = ink.shape
    blob = raster.dilate(ink, dilate_w, dilate_h)
    comps, labels = raster.connected_components(blob, return_labels=True)
    if not comps:
        raise NoTextError("no text lines detected")

    med_h = float(np.median([c.box.h for c in comps]))
    kept = [c for c in comps if c.box.h <= max_height_factor * med_h and c.box.w >= min_width_frac * w]
    if not kept:
        raise NoTextError("no text lines detected after filtering")

    ys, xs = np.nonzero(blob)
    lab = labels[ys, xs]
    n_buckets = w // sample_step + 1
    key = lab.astype(np.int64) * n_buckets + xs // sample_step
    size = (int(lab.max()) + 1) * n_buckets
    counts = np.bincount(key, minlength=size)
    sum_y = np.bincount(key, weights=ys, minlength=size)
    sum_x = np.bincount(key, weights=xs, minlength=size)

    spans = []
    for c in kept:
        base = c.id * n_buckets
        cnt = counts[base : base + n_buckets]
        valid = cnt > 0
        if valid.sum() < 2:
            continue
        kx = sum_x[base : base + n_buckets][valid] / cnt[valid]
        ky = sum_y[base : base + n_buckets][valid] / cnt[valid]
        spans.append(np.column_stack([kx, ky]))

    if not spans:
        raise NoTextError("no span has enough keypoints")
    spans.sort(key=lambda kp: kp[:, 1].mean())
    return [Span(i, kp) for i, kp in enumerate(spans)]


def span_straightness_rms(spans: list[Span]) -> float:
    """RMS deviation of keypoints from their span's mean height, in pixels."""
    if not spans:
        return 0.0
    sq = []
    for s in spans:
        y = s.keypoints[:, 1]
        sq.append((y - y.mean()) ** 2)
    return float(np.sqrt(np.concatenate(sq).mean()))


# ---------------------------------------------------------------------------
# dewarping
# ---------------------------------------------------------------------------

def _rodrigues(r: np.ndarray) -> np.ndarray:
    theta = float(np.linalg.norm(r))
    if theta < 1e-12:
        return np.eye(3)
    k = r / theta
    kx, ky, kz = k
    K = np.array([[0, -kz, ky], [kz, 0, -kx], [-ky, kx, 0]])
    return np.eye(3) + math.sin(theta) * K + (1 - math.cos(theta)) * (K @ K)


def _cubic_sheet(x01: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    # cubic with zero endpoints and endpoint slopes alpha, beta over [0, 1]
    return (alpha + beta) * x01**3 - (2 * alpha + beta) * x01**2 + alpha * x01


class _SheetModel:
    """Projective cubic-sheet model fitted to span keypoints.

    Parameter vector: [rot(3), trans(3), alpha, beta, span offsets...].
    Page coordinates are normalized so the identity parameters (zero
    rotation, translation (0,0,focal)) project every page point onto
    itself.
    """

    def __init__(self, shape: tuple[int, int], spans: list[Span], focal: float):
        h, w = shape
        self.scale = 2.0 / max(h, w)
        self.cx, self.cy = w / 2.0, h / 2.0
        self.focal = focal

        pts = np.concatenate([s.keypoints for s in spans])
        self.span_idx = np.concatenate(
            [np.full(len(s.keypoints), i, dtype=np.int64) for i, s in enumerate(spans)]
        )
        self.obs = self.to_norm(pts)
        self.x_lo = float(self.obs[:, 0].min())
        self.x_hi = float(self.obs[:, 0].max())
        if self.x_hi - self.x_lo < 1e-9:
            self.x_hi = self.x_lo + 1e-9

        offsets0 = np.array([self.to_norm(s.keypoints)[:, 1].mean() for s in spans])
        self.x0 = np.concatenate([np.zeros(5), [focal], [0.0, 0.0], offsets0])

    def to_norm(self, pts_px: np.ndarray) -> np.ndarray:
        out = np.asarray(pts_px, dtype=np.float64).copy()
        out[..., 0] = (out[..., 0] - self.cx) * self.scale
        out[..., 1] = (out[..., 1] - self.cy) * self.scale
        return out

    def project(self, params: np.ndarray, nx: np.ndarray, ny: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map normalized page coords through the sheet into image coords."""
        R = _rodrigues(params[0:3])
        t = params[3:6]
        alpha, beta = params[6], params[7]
        x01 = np.clip((nx - self.x_lo) / (self.x_hi - self.x_lo), -0.25, 1.25)
        z = _cubic_sheet(x01, alpha, beta)
        X = nx * R[0, 0] + ny * R[0, 1] + z * R[0, 2] + t[0]
        Y = nx * R[1, 0] + ny * R[1, 1] + z * R[1, 2] + t[1]
        Z = nx * R[2, 0] + ny * R[2, 1] + z * R[2, 2] + t[2]
        Z = np.where(np.abs(Z) < 1e-6, 1e-6, Z)
        return self.focal * X / Z, self.focal * Y / Z

    def objective(self, params: np.ndarray) -> float:
        offs = params[8:]
        u, v = self.project(params, self.obs[:, 0], offs[self.span_idx])
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            return 1e9
        err = (u - self.obs[:, 0]) ** 2 + (v - self.obs[:, 1]) ** 2
        return float(err.mean())

    def rms_px(self, value: float) -> float:
        return math.sqrt(max(value, 0.0)) / self.scale

    def remap(self, img: np.ndarray, params: np.ndarray) -> np.ndarray:
        h, w = img.shape
        ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
        nx = (xs - self.cx) * self.scale
        ny = (ys - self.cy) * self.scale
        u, v = self.project(params, nx.ravel(), ny.ravel())
        sx = (u / self.scale + self.cx).reshape(h, w)
        sy = (v / self.scale + self.cy).reshape(h, w)

        valid = (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)
        x0 = np.clip(np.floor(sx), 0, w - 2).astype(np.intp)
        y0 = np.clip(np.floor(sy), 0, h - 2).astype(np.intp)
        fx = np.clip(sx - x0, 0.0, 1.0)
        fy = np.clip(sy - y0, 0.0, 1.0)
        f = img.astype(np.float64)
        val = (
            f[y0, x0] * (1 - fx) * (1 - fy)
            + f[y0, x0 + 1] * fx * (1 - fy)
            + f[y0 + 1, x0] * (1 - fx) * fy
            + f[y0 + 1, x0 + 1] * fx * fy
        )
        out = np.where(valid, np.rint(val), 255.0)
        return np.clip(out, 0, 255).astype(np.uint8)


def dewarp_page(
    img: np.ndarray,
    spans: list[Span],
    focal: float = 1.2,
    straight_rms_px: float = 0.8,
    max_iter_factor: int = 220,
) -> tuple[np.ndarray, float]:
    """Flatten curved text lines; returns (remapped image, fit RMS in px).

    A cubic sheet (endpoint slopes alpha/beta) under a rigid pose is fitted
    to the span keypoints by derivative-free search, each span free to sit
    at its own page height. The fitted forward map is then sampled over the
    output grid, which straightens every span midline to a constant row.

    Pages that are already straight (keypoint RMS below `straight_rms_px`)
    and failed fits fall back to the unchanged input, so the output is
    never meaningfully less straight than the input.
    """
    img = np.asarray(img)
    usable = [s for s in spans if len(s.keypoints) >= 3]
    if len(usable) < 2:
        return img.copy(), 0.0

    model = _SheetModel(img.shape, usable, focal)
    initial = model.objective(model.x0)
    if not math.isfinite(initial):
        return img.copy(), span_straightness_rms(usable)
    if model.rms_px(initial) < straight_rms_px:
        return img.copy(), model.rms_px(initial)

    dim = len(model.x0)
    res = minimize(model.objective, model.x0, tol=max(initial * 1e-6, 1e-14), max_iter=max_iter_factor * dim)
    res = minimize(model.objective, res.params, tol=max(res.value * 1e-6, 1e-14), max_iter=max_iter_factor * dim)

    if not math.isfinite(res.value) or res.value >= initial * 0.98:
        return img.copy(), model.rms_px(initial)
    return model.remap(img, res.params), model.rms_px(res.value)
