"""Synthetic Bangla-like page generator with exact ground truth.

The default "boxes" glyph mode draws each character as a distinct pattern of
strokes hanging from a full-word headline bar, so matra semantics hold by
construction and no font assets are needed. An atlas directory of pre-rendered
glyph images can be used instead for more realistic shapes.

Defects are applied in a fixed order: multifont layout, sinusoidal vertical
warp, rotation, border frame, speckle noise. Rendering is deterministic for a
given spec (seed included).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .raster import Box, rotate

__all__ = ["PageSpec", "GroundTruth", "TruthWord", "TruthChar", "generate", "render_word"]

# speckle luminance band: dark enough to binarize as ink on a raw page, light
# enough that the default denoise blur pushes it back over the threshold
_SPECK_LO, _SPECK_HI = 205, 232


@dataclass
class PageSpec:
    lines: int = 10
    words_per_line: tuple[int, int] = (3, 6)
    chars_per_word: tuple[int, int] = (2, 6)
    glyph_source: str = "boxes"  # "boxes" or a glyph-atlas directory
    font_px: int = 32
    width: int = 1000
    height: int = 1400
    skew_deg: float = 0.0
    warp_amplitude_px: float = 0.0
    noise_rate: float = 0.0
    border_px: int = 0
    multifont: tuple[float, int] | None = None  # (scale, line index)
    seed: int = 0

    def validate(self):
        if self.lines < 1:
            raise ValueError("lines must be >= 1")
        for name, rng in (("words_per_line", self.words_per_line), ("chars_per_word", self.chars_per_word)):
            lo, hi = rng
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} range must be non-empty, got {rng}")
        if self.font_px < 12:
            raise ValueError("font_px must be >= 12")
        if self.width < 64 or self.height < 64:
            raise ValueError("page must be at least 64x64")
        if not 0.0 <= self.noise_rate <= 0.05:
            raise ValueError("noise_rate must lie in [0, 0.05]")
        if abs(self.skew_deg) > 5.0:
            raise ValueError("skew_deg must lie in [-5, 5]")
        if self.warp_amplitude_px < 0:
            raise ValueError("warp_amplitude_px must be >= 0")
        if self.border_px < 0:
            raise ValueError("border_px must be >= 0")
        if self.multifont is not None:
            scale, pos = self.multifont
            if scale <= 1.0:
                raise ValueError("multifont scale must exceed 1.0")
            if not 0 <= pos < self.lines - 1:
                raise ValueError("multifont line index must leave a following line")

    def to_dict(self) -> dict:
        d = {
            "lines": self.lines,
            "words_per_line": list(self.words_per_line),
            "chars_per_word": list(self.chars_per_word),
            "glyph_source": self.glyph_source,
            "font_px": self.font_px,
            "width": self.width,
            "height": self.height,
            "skew_deg": self.skew_deg,
            "warp_amplitude_px": self.warp_amplitude_px,
            "noise_rate": self.noise_rate,
            "border_px": self.border_px,
            "multifont": list(self.multifont) if self.multifont else None,
            "seed": self.seed,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PageSpec":
        known = {
            "lines", "words_per_line", "chars_per_word", "glyph_source", "font_px",
            "width", "height", "skew_deg", "warp_amplitude_px", "noise_rate",
            "border_px", "multifont", "seed",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown page spec fields: {sorted(unknown)}")
        kwargs = dict(d)
        for key in ("words_per_line", "chars_per_word"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        if kwargs.get("multifont") is not None:
            kwargs["multifont"] = (float(kwargs["multifont"][0]), int(kwargs["multifont"][1]))
        spec = cls(**kwargs)
        spec.validate()
        return spec


@dataclass
class TruthWord:
    line: int
    word: int
    col_start: int
    col_end: int  # inclusive
    headline_rows: tuple[int, int]  # inclusive row range of the headline bar


@dataclass
class TruthChar:
    line: int
    word: int
    char: int
    box: Box  # canonical (pre-defect) coordinates
    final_box: Box | None = None  # defected coordinates where recoverable


@dataclass
class GroundTruth:
    width: int
    height: int
    line_bands: list[tuple[int, int]]  # inclusive nominal row range per line
    words: list[TruthWord]
    chars: list[TruthChar]
    defects: dict = field(default_factory=dict)

    def counts(self) -> tuple[int, int, int]:
        return len(self.line_bands), len(self.words), len(self.chars)

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "line_bands": [list(b) for b in self.line_bands],
            "words": [
                {
                    "line": w.line, "word": w.word,
                    "col_start": w.col_start, "col_end": w.col_end,
                    "headline_rows": list(w.headline_rows),
                }
                for w in self.words
            ],
            "chars": [
                {
                    "line": c.line, "word": c.word, "char": c.char,
                    "box": c.box.to_dict(),
                    "final_box": c.final_box.to_dict() if c.final_box else None,
                }
                for c in self.chars
            ],
            "defects": self.defects,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(
            width=d["width"],
            height=d["height"],
            line_bands=[tuple(b) for b in d["line_bands"]],
            words=[
                TruthWord(w["line"], w["word"], w["col_start"], w["col_end"], tuple(w["headline_rows"]))
                for w in d["words"]
            ],
            chars=[
                TruthChar(
                    c["line"], c["word"], c["char"],
                    Box(**c["box"]),
                    Box(**c["final_box"]) if c.get("final_box") else None,
                )
                for c in d["chars"]
            ],
            defects=d.get("defects", {}),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "GroundTruth":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# glyph rendering
# ---------------------------------------------------------------------------

def _box_glyph(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    """One synthetic character: vertical strokes plus low horizontal motifs.

    Upper rows carry vertical strokes only, keeping per-row ink well under
    the matra threshold; every stroke reaches row 0 so the glyph touches the
    word headline above it.
    """
    g = np.zeros((height, width), dtype=np.uint8)
    sw = max(2, width // 8)
    g[:, 0:sw] = 1  # left stem, always present
    motif = rng.integers(0, 5)
    if motif >= 1:
        g[:, width - sw : width] = 1  # right stem
    if motif >= 3:
        mid = width // 2 - sw // 2
        g[: height * 3 // 4, mid : mid + sw] = 1
    # horizontal elements stay in the lower 40% of the body
    bar_h = max(2, height // 10)
    if motif in (1, 3):
        y0 = height - bar_h
        g[y0:, :] = 1  # base bar
    elif motif in (2, 4):
        y0 = int(height * 0.62) + int(rng.integers(0, max(1, height // 8)))
        y0 = min(y0, height - bar_h)
        g[y0 : y0 + bar_h, : width - sw] = 1
    return g


def _load_atlas(path: str) -> list[np.ndarray]:
    from PIL import Image

    files = sorted(p for p in Path(path).iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
    glyphs = []
    for p in files:
        arr = np.asarray(Image.open(p).convert("L"))
        mask = (arr < 128).astype(np.uint8)
        if mask.any():
            glyphs.append(mask)
    if not glyphs:
        raise ValueError(f"glyph atlas {path!r} contains no usable glyph images")
    return glyphs


def _scale_nearest(mask: np.ndarray, new_h: int) -> np.ndarray:
    h, w = mask.shape
    new_w = max(1, round(w * new_h / h))
    ys = np.minimum((np.arange(new_h) * h / new_h).astype(int), h - 1)
    xs = np.minimum((np.arange(new_w) * w / new_w).astype(int), w - 1)
    return mask[np.ix_(ys, xs)]


class _WordPainter:
    """Renders words onto a page canvas and records their geometry."""

    def __init__(self, rng: np.random.Generator, font_px: int, glyphs: list[np.ndarray] | None):
        self.rng = rng
        self.font = font_px
        self.glyphs = glyphs
        self.headline_px = max(2, font_px // 10)
        self.body_px = font_px
        self.char_gap = 4
        self.word_gap = int(np.clip(font_px // 2, 14, 18))
        self.line_height = self.headline_px + self.body_px

    def char_size(self) -> tuple[int, int]:
        w = int(self.rng.integers(self.font // 2, self.font * 7 // 10 + 1))
        return w, self.body_px

    def paint_word(self, canvas: np.ndarray, x: int, y: int, n_chars: int):
        """Draw one word with its headline; returns (width, char col spans)."""
        spans = []
        cx = x
        glyph_cols = []
        for _ in range(n_chars):
            cw, ch = self.char_size()
            if self.glyphs is None:
                glyph = _box_glyph(self.rng, cw, ch)
            else:
                pick = self.glyphs[int(self.rng.integers(0, len(self.glyphs)))]
                glyph = _scale_nearest(pick, ch)
                cw = glyph.shape[1]
            gy = y + self.headline_px
            canvas[gy : gy + ch, cx : cx + cw][glyph == 1] = 0
            glyph_cols.append((cx, cx + cw - 1))
            cx += cw + self.char_gap + int(self.rng.integers(0, 3))
        width = glyph_cols[-1][1] - x + 1
        canvas[y : y + self.headline_px, x : x + width] = 0
        for c0, c1 in glyph_cols:
            spans.append((c0, c1))
        return width, spans


def _apply_warp(page: np.ndarray, amplitude: float) -> tuple[np.ndarray, np.ndarray]:
    """Shift each column down by a half-sine displacement; returns (page, d)."""
    h, w = page.shape
    d = amplitude * np.sin(np.pi * np.arange(w) / w)
    ys = np.arange(h, dtype=np.float64)[:, None] - d[None, :]
    y0 = np.clip(np.floor(ys), 0, h - 2).astype(np.intp)
    fy = np.clip(ys - y0, 0.0, 1.0)
    cols = np.arange(w)[None, :].repeat(h, axis=0)
    val = page[y0, cols] * (1 - fy) + page[np.minimum(y0 + 1, h - 1), cols] * fy
    out = np.where((ys >= 0) & (ys <= h - 1), np.rint(val), 255.0)
    return out.astype(np.uint8), d


def _rotate_box(box: Box, theta_deg: float, cx: float, cy: float) -> Box:
    t = math.radians(theta_deg)
    cos_t, sin_t = math.cos(t), math.sin(t)
    xs, ys = [], []
    for px in (box.x, box.x + box.w):
        for py in (box.y, box.y + box.h):
            dx, dy = px - cx, py - cy
            xs.append(cos_t * dx - sin_t * dy + cx)
            ys.append(sin_t * dx + cos_t * dy + cy)
    x0, y0 = int(math.floor(min(xs))), int(math.floor(min(ys)))
    x1, y1 = int(math.ceil(max(xs))), int(math.ceil(max(ys)))
    return Box(x0, y0, max(1, x1 - x0), max(1, y1 - y0))


def generate(spec: PageSpec) -> tuple[np.ndarray, GroundTruth]:
    """Render a page per `spec`; returns (grayscale image, ground truth)."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    glyphs = None if spec.glyph_source == "boxes" else _load_atlas(spec.glyph_source)
    painter = _WordPainter(rng, spec.font_px, glyphs)

    page = np.full((spec.height, spec.width), 255, dtype=np.uint8)
    margin = 50 + spec.border_px
    line_gap = max(12, spec.font_px // 2)
    lh = painter.line_height

    line_bands: list[tuple[int, int]] = []
    words: list[TruthWord] = []
    chars: list[TruthChar] = []

    big = None  # (line index, right edge) while a multifont block is active
    if spec.multifont is not None:
        mf_scale, mf_line = spec.multifont
    else:
        mf_scale, mf_line = 0.0, -1

    y = margin
    for li in range(spec.lines):
        if y + lh > spec.height - margin:
            break
        line_bands.append((y, y + lh - 1))
        x = margin
        wi = 0

        if li == mf_line:
            # oversized first word spanning this line and the next
            big_painter = _WordPainter(rng, int(spec.font_px * mf_scale), glyphs)
            n = int(rng.integers(spec.chars_per_word[0], spec.chars_per_word[1] + 1))
            n = max(2, min(n, 4))
            width, spans = big_painter.paint_word(page, x, y, n)
            words.append(TruthWord(li, 0, x, x + width - 1, (y, y + big_painter.headline_px - 1)))
            for ci, (c0, c1) in enumerate(spans):
                box = Box(c0, y, c1 - c0 + 1, big_painter.line_height)
                chars.append(TruthChar(li, 0, ci, box))
            big = (li, x + width - 1)
            x += width + 2 * painter.word_gap
            wi = 1
        elif big is not None and li == big[0] + 1:
            x = big[1] + 1 + 2 * painter.word_gap
            big = None

        n_words = int(rng.integers(spec.words_per_line[0], spec.words_per_line[1] + 1))
        for _ in range(n_words):
            n_chars = int(rng.integers(spec.chars_per_word[0], spec.chars_per_word[1] + 1))
            est = n_chars * (spec.font_px * 7 // 10 + painter.char_gap + 2)
            if x + est > spec.width - margin:
                break
            width, spans = painter.paint_word(page, x, y, n_chars)
            words.append(TruthWord(li, wi, x, x + width - 1, (y, y + painter.headline_px - 1)))
            for ci, (c0, c1) in enumerate(spans):
                chars.append(TruthChar(li, wi, ci, Box(c0, y, c1 - c0 + 1, lh)))
            x += width + painter.word_gap
            wi += 1
        y += lh + line_gap

    if not words:
        raise ValueError("page spec leaves no room for any word")

    # --- defects ------------------------------------------------------------
    displacement = np.zeros(spec.width)
    if spec.warp_amplitude_px > 0:
        page, displacement = _apply_warp(page, spec.warp_amplitude_px)

    recoverable = True
    for c in chars:
        cx_center = c.box.x + c.box.w // 2
        dy = int(round(displacement[min(cx_center, spec.width - 1)]))
        c.final_box = Box(c.box.x, c.box.y + dy, c.box.w, c.box.h)

    if spec.skew_deg != 0.0:
        page = rotate(page, spec.skew_deg, fill=255)
        cx, cy = (spec.width - 1) / 2.0, (spec.height - 1) / 2.0
        for c in chars:
            c.final_box = _rotate_box(c.final_box, spec.skew_deg, cx, cy)

    if spec.border_px > 0:
        t, inset = spec.border_px, 2
        page[inset : inset + t, inset : spec.width - inset] = 0
        page[spec.height - inset - t : spec.height - inset, inset : spec.width - inset] = 0
        page[inset : spec.height - inset, inset : inset + t] = 0
        page[inset : spec.height - inset, spec.width - inset - t : spec.width - inset] = 0

    if spec.noise_rate > 0:
        n = int(round(spec.noise_rate * page.size))
        idx = rng.choice(page.size, size=n, replace=False)
        ys, xs = np.unravel_index(idx, page.shape)
        dark = page[ys, xs] < 128
        vals = rng.integers(_SPECK_LO, _SPECK_HI + 1, size=n)
        page[ys, xs] = np.where(dark, 255 - vals, vals).astype(np.uint8)

    truth = GroundTruth(
        width=spec.width,
        height=spec.height,
        line_bands=line_bands,
        words=words,
        chars=chars,
        defects={
            "skew_deg": spec.skew_deg,
            "warp_amplitude_px": spec.warp_amplitude_px,
            "noise_rate": spec.noise_rate,
            "border_px": spec.border_px,
            "multifont": list(spec.multifont) if spec.multifont else None,
            "final_boxes_recoverable": recoverable,
        },
    )
    return page, truth


def render_word(seed: int = 0, n_chars: int = 4, font_px: int = 32) -> tuple[np.ndarray, tuple[int, int]]:
    """One isolated word as a binary image plus its headline row range."""
    rng = np.random.default_rng(seed)
    painter = _WordPainter(rng, font_px, None)
    pad = 6
    est_w = n_chars * (font_px + painter.char_gap) + 2 * pad
    canvas = np.full((painter.line_height + 2 * pad, est_w, ), 255, dtype=np.uint8)
    width, _ = painter.paint_word(canvas, pad, pad, n_chars)
    word = (canvas[:, : pad + width + pad] < 128).astype(np.uint8)
    ys, xs = np.nonzero(word)
    word = word[:, xs.min() : xs.max() + 1]
    word = word[ys.min() : ys.max() + 1, :]
    return word, (0, painter.headline_px - 1)
