import numpy as np
import pytest

from banglaseg import raster


# ---------------------------------------------------------------------------
# brute-force oracles, deliberately written as plain double loops
# ---------------------------------------------------------------------------

def brute_project(img, axis):
    h, w = img.shape
    if axis == "row":
        return np.array([sum(int(img[y, x] != 0) for x in range(w)) for y in range(h)])
    return np.array([sum(int(img[y, x] != 0) for y in range(h)) for x in range(w)])


def brute_rank_filter(img, orientation, length):
    h, w = img.shape
    r = length // 2
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            vals = []
            for k in range(-r, r + 1):
                yy, xx = (y + k, x) if orientation == "vertical" else (y, x + k)
                yy = min(max(yy, 0), h - 1)
                xx = min(max(xx, 0), w - 1)
                vals.append(img[yy, xx])
            out[y, x] = sorted(vals)[r]
    return out


def brute_adaptive_threshold(img, window, offset):
    h, w = img.shape
    r = window // 2
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            total = 0
            for ky in range(-r, r + 1):
                for kx in range(-r, r + 1):
                    yy = min(max(y + ky, 0), h - 1)
                    xx = min(max(x + kx, 0), w - 1)
                    total += int(img[yy, xx])
            mean = total / (window * window)
            out[y, x] = 1 if img[y, x] < mean - offset else 0
    return out


def brute_components(img):
    h, w = img.shape
    seen = np.zeros((h, w), dtype=bool)
    comps = []
    for sy in range(h):
        for sx in range(w):
            if img[sy, sx] == 0 or seen[sy, sx]:
                continue
            stack = [(sy, sx)]
            seen[sy, sx] = True
            pixels = []
            while stack:
                y, x = stack.pop()
                pixels.append((y, x))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w and img[yy, xx] and not seen[yy, xx]:
                            seen[yy, xx] = True
                            stack.append((yy, xx))
            ys = [p[0] for p in pixels]
            xs = [p[1] for p in pixels]
            comps.append((len(pixels), min(xs), min(ys), max(xs) - min(xs) + 1, max(ys) - min(ys) + 1))
    return sorted(comps)


def comp_key(c):
    return (c.count, c.box.x, c.box.y, c.box.w, c.box.h)


# ---------------------------------------------------------------------------
# to_grayscale
# ---------------------------------------------------------------------------

def test_grayscale_white_black_red():
    white = np.full((4, 5, 3), 255, dtype=np.uint8)
    black = np.zeros((4, 5, 3), dtype=np.uint8)
    red = np.zeros((4, 5, 3), dtype=np.uint8)
    red[:, :, 0] = 255
    assert (raster.to_grayscale(white) == 255).all()
    assert (raster.to_grayscale(black) == 0).all()
    # round(0.299 * 255) = 76
    assert (raster.to_grayscale(red) == 76).all()


def test_grayscale_rejects_empty():
    with pytest.raises(ValueError):
        raster.to_grayscale(np.zeros((0, 4, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        raster.to_grayscale(np.zeros((4, 4), dtype=np.uint8))


# ---------------------------------------------------------------------------
# gaussian_blur
# ---------------------------------------------------------------------------

def test_blur_constant_unchanged():
    img = np.full((20, 30), 137, dtype=np.uint8)
    for sigma in (0.5, 1.0, 2.5):
        out = raster.gaussian_blur(img, sigma)
        assert out.shape == img.shape
        assert np.allclose(out, 137.0)


def test_blur_impulse_matches_direct_convolution():
    img = np.zeros((7, 7), dtype=np.uint8)
    img[3, 3] = 255
    out = raster.gaussian_blur(img, 1.0)

    # direct 2-D convolution on the patch: response is 255 * k[dy] * k[dx]
    radius = 3
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / 2.0)
    k /= k.sum()
    expected_center = 255.0 * k[radius] * k[radius]
    assert out[3, 3] == pytest.approx(expected_center, rel=1e-9)
    assert out[3, 2] == pytest.approx(out[3, 4], rel=1e-12)
    assert out[2, 3] == pytest.approx(out[4, 3], rel=1e-12)
    assert out[3, 2] == pytest.approx(255.0 * k[radius] * k[radius - 1], rel=1e-9)


def test_blur_preserves_sum_for_interior_impulse():
    img = np.zeros((21, 21), dtype=np.uint8)
    img[10, 10] = 255
    out = raster.gaussian_blur(img, 1.0)
    assert abs(out.sum() - 255.0) <= 0.005 * 255.0


def test_blur_rejects_bad_sigma():
    img = np.zeros((4, 4), dtype=np.uint8)
    with pytest.raises(ValueError):
        raster.gaussian_blur(img, 0.0)
    with pytest.raises(ValueError):
        raster.gaussian_blur(img, -1.0)


# ---------------------------------------------------------------------------
# adaptive_threshold
# ---------------------------------------------------------------------------

def test_threshold_uniform_gray_is_background():
    img = np.full((16, 16), 128, dtype=np.uint8)
    assert raster.adaptive_threshold(img, window=9, offset=10).sum() == 0


def test_threshold_dark_square_oracle_case():
    img = np.full((9, 9), 255, dtype=np.uint8)
    img[3:6, 3:6] = 0
    out = raster.adaptive_threshold(img, window=9, offset=10)
    expected = brute_adaptive_threshold(img, 9, 10)
    assert (out == expected).all()
    assert out.sum() == 9
    assert (out[3:6, 3:6] == 1).all()


def test_threshold_shift_invariance():
    rng = np.random.default_rng(7)
    img = rng.integers(0, 190, size=(24, 18)).astype(np.uint8)
    base = raster.adaptive_threshold(img, window=7, offset=12)
    shifted = raster.adaptive_threshold((img + 12).astype(np.uint8), window=7, offset=12)
    assert (base == shifted).all()


def test_threshold_rejects_bad_window():
    img = np.zeros((8, 8), dtype=np.uint8)
    for window in (0, -3, 4, 2):
        with pytest.raises(ValueError):
            raster.adaptive_threshold(img, window=window, offset=5)


# ---------------------------------------------------------------------------
# rotate
# ---------------------------------------------------------------------------

def test_rotate_zero_is_identity():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, size=(30, 40)).astype(np.uint8)
    assert (raster.rotate(img, 0.0) == img).all()


def test_rotate_round_trip_on_smooth_image():
    # bilinear resampling is exact on affine images up to rounding
    xs = np.linspace(0, 255, 60)
    img = np.rint(np.tile(xs, (50, 1))).astype(np.uint8)
    out = raster.rotate(raster.rotate(img, 4.0, fill=128), -4.0, fill=128)
    interior = np.abs(out[3:-3, 3:-3].astype(int) - img[3:-3, 3:-3].astype(int))
    assert interior.max() <= 2


def test_rotate_bar_projection_peak_drops():
    img = np.full((60, 100), 255, dtype=np.uint8)
    img[29:32, 5:95] = 0  # bar spanning 90% of width
    def peak(g):
        return raster.project(raster.adaptive_threshold(g, 31, 15), "row").max()
    assert peak(raster.rotate(img, 0.0)) > peak(raster.rotate(img, 3.0))


# ---------------------------------------------------------------------------
# project
# ---------------------------------------------------------------------------

def test_project_all_background():
    img = np.zeros((6, 9), dtype=np.uint8)
    assert (raster.project(img, "row") == 0).all()
    assert (raster.project(img, "column") == 0).all()


def test_project_single_ink_row():
    img = np.zeros((4, 4), dtype=np.uint8)
    img[1, :] = 1
    assert raster.project(img, "row").tolist() == [0, 4, 0, 0]
    assert raster.project(img, "column").tolist() == [1, 1, 1, 1]


def test_project_matches_oracle_random():
    rng = np.random.default_rng(11)
    for _ in range(25):
        img = (rng.random((8, 8)) < 0.4).astype(np.uint8)
        for axis in ("row", "column"):
            assert (raster.project(img, axis) == brute_project(img, axis)).all()


def test_project_rejects_bad_axis():
    with pytest.raises(ValueError):
        raster.project(np.zeros((2, 2), dtype=np.uint8), "diagonal")


# ---------------------------------------------------------------------------
# canny
# ---------------------------------------------------------------------------

def test_canny_constant_has_no_edges():
    img = np.full((32, 32), 77, dtype=np.uint8)
    assert raster.canny(img).sum() == 0


def test_canny_step_edge_is_single_pixel_line():
    img = np.zeros((24, 40), dtype=np.uint8)
    img[:, 20:] = 255
    edges = raster.canny(img)
    # away from the top/bottom borders each row crosses the edge exactly once
    core = edges[4:-4, :]
    per_row = core.sum(axis=1)
    assert (per_row == 1).all()
    cols = np.argmax(core, axis=1)
    assert cols.min() == cols.max()  # perfectly vertical
    assert abs(cols[0] - 20) <= 1


def test_canny_rejects_bad_thresholds():
    img = np.zeros((8, 8), dtype=np.uint8)
    with pytest.raises(ValueError):
        raster.canny(img, low=100, high=50)
    with pytest.raises(ValueError):
        raster.canny(img, low=0, high=10)


# ---------------------------------------------------------------------------
# rank_filter
# ---------------------------------------------------------------------------

def test_rank_filter_removes_one_pixel_vertical_line():
    img = np.zeros((12, 12), dtype=np.uint8)
    img[:, 6] = 1
    assert raster.rank_filter(img, "horizontal", 3).sum() == 0


def test_rank_filter_keeps_solid_block():
    img = np.zeros((9, 9), dtype=np.uint8)
    img[2:7, 2:7] = 1
    for length in (3, 5):
        out = raster.rank_filter(img, "horizontal", length)
        assert (out[3:6, 3:6] == 1).all()
        out = raster.rank_filter(img, "vertical", length)
        assert (out[3:6, 3:6] == 1).all()


def test_rank_filter_matches_oracle_random():
    rng = np.random.default_rng(23)
    for _ in range(20):
        img = (rng.random((10, 9)) < 0.5).astype(np.uint8)
        for orientation in ("horizontal", "vertical"):
            for length in (3, 5):
                got = raster.rank_filter(img, orientation, length)
                want = brute_rank_filter(img, orientation, length)
                assert (got == want).all()


def test_rank_filter_rejects_even_length():
    img = np.zeros((4, 4), dtype=np.uint8)
    with pytest.raises(ValueError):
        raster.rank_filter(img, "horizontal", 4)
    with pytest.raises(ValueError):
        raster.rank_filter(img, "diagonal", 3)


# ---------------------------------------------------------------------------
# dilate
# ---------------------------------------------------------------------------

def test_dilate_identity_kernel():
    rng = np.random.default_rng(5)
    img = (rng.random((8, 8)) < 0.3).astype(np.uint8)
    assert (raster.dilate(img, 1, 1) == img).all()


def test_dilate_bridges_gap():
    img = np.zeros((5, 9), dtype=np.uint8)
    img[2, 2] = 1
    img[2, 5] = 1
    out = raster.dilate(img, 5, 1)
    assert (out[2, 2:6] == 1).all()  # run becomes connected
    assert out[1, :].sum() == 0  # 1-tall kernel does not grow rows


def test_dilate_monotone():
    rng = np.random.default_rng(9)
    for _ in range(10):
        img = (rng.random((12, 12)) < 0.2).astype(np.uint8)
        out = raster.dilate(img, 3, 3)
        assert out.sum() >= img.sum()
        assert (out[img == 1] == 1).all()


# ---------------------------------------------------------------------------
# connected_components
# ---------------------------------------------------------------------------

def test_components_empty_image():
    assert raster.connected_components(np.zeros((5, 5), dtype=np.uint8)) == []


def test_components_two_blocks():
    img = np.zeros((8, 8), dtype=np.uint8)
    img[1:3, 1:3] = 1
    img[5:7, 5:7] = 1
    comps = raster.connected_components(img)
    assert len(comps) == 2
    assert all(c.count == 4 and c.box.w == 2 and c.box.h == 2 for c in comps)


def test_components_diagonal_touch_is_one():
    img = np.zeros((4, 4), dtype=np.uint8)
    img[0, 0] = 1
    img[1, 1] = 1
    img[2, 2] = 1
    comps = raster.connected_components(img)
    assert len(comps) == 1
    assert comps[0].count == 3


def test_components_ordering_and_labels():
    img = np.zeros((10, 10), dtype=np.uint8)
    img[0:2, 0:5] = 1  # 10 px
    img[5, 0:3] = 1  # 3 px
    comps, labels = raster.connected_components(img, return_labels=True)
    assert [c.count for c in comps] == [10, 3]
    for c in comps:
        ys, xs = np.nonzero(labels == c.id)
        assert len(ys) == c.count
        assert xs.min() == c.box.x and xs.max() == c.box.x2
        assert ys.min() == c.box.y and ys.max() == c.box.y2


def test_components_match_oracle_random():
    rng = np.random.default_rng(41)
    for _ in range(40):
        h = int(rng.integers(1, 17))
        w = int(rng.integers(1, 17))
        img = (rng.random((h, w)) < 0.45).astype(np.uint8)
        got = sorted((c.count, c.box.x, c.box.y, c.box.w, c.box.h) for c in raster.connected_components(img))
        assert got == brute_components(img)


def test_components_partition_property():
    rng = np.random.default_rng(43)
    for _ in range(20):
        img = (rng.random((16, 16)) < 0.5).astype(np.uint8)
        comps = raster.connected_components(img)
        assert sum(c.count for c in comps) == int(img.sum())


# ---------------------------------------------------------------------------
# shared shape property
# ---------------------------------------------------------------------------

def test_filters_preserve_shape():
    rng = np.random.default_rng(17)
    gray = rng.integers(0, 256, size=(13, 21)).astype(np.uint8)
    binary = (rng.random((13, 21)) < 0.3).astype(np.uint8)
    assert raster.gaussian_blur(gray, 1.1).shape == gray.shape
    assert raster.adaptive_threshold(gray, 5, 3).shape == gray.shape
    assert raster.rotate(gray, 2.5).shape == gray.shape
    assert raster.canny(gray).shape == gray.shape
    assert raster.rank_filter(binary, "vertical", 3).shape == binary.shape
    assert raster.dilate(binary, 4, 2).shape == binary.shape
