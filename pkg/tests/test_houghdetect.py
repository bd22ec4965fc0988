import numpy as np
import pytest

from coinforge.houghdetect import (
    CircleHit,
    DetectParams,
    NoCoinFound,
    clean_image,
    detect_coin,
    hough_circles,
    sobel_magnitude,
)
from coinforge.raster import Raster, corner_fill_value
from coinforge.synthetic import disc_image


def blank(value=70, size=150):
    return Raster.from_array(np.full((size, size), value, np.uint8))


class TestSobelMagnitude:
    def test_constant_image_is_zero(self):
        assert (sobel_magnitude(blank(128)) == 0).all()

    def test_step_edge_peaks_on_edge_columns(self):
        arr = np.zeros((9, 10), np.uint8)
        arr[:, 5:] = 255
        mag = sobel_magnitude(Raster.from_array(arr))
        peak_cols = {4, 5}
        assert set(np.argwhere(mag == mag.max())[:, 1]) <= peak_cols
        assert mag.max() == pytest.approx(4 * 255)

    def test_hand_convolution_oracle(self):
        rng = np.random.default_rng(2)
        arr = rng.integers(0, 256, (5, 5), dtype=np.uint8)
        mag = sobel_magnitude(Raster.from_array(arr))

        kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], float)
        ky = kx.T
        a = arr.astype(float)
        expected = np.zeros((5, 5))
        for y in range(5):
            for x in range(5):
                gx = gy = 0.0
                for dy in range(-1, 2):
                    for dx in range(-1, 2):
                        yy = min(max(y + dy, 0), 4)
                        xx = min(max(x + dx, 0), 4)
                        gx += a[yy, xx] * kx[dy + 1, dx + 1]
                        gy += a[yy, xx] * ky[dy + 1, dx + 1]
                expected[y, x] = np.hypot(gx, gy)
        assert np.allclose(mag, expected)

    def test_rejects_rgb(self):
        img = Raster.from_array(np.zeros((4, 4, 3), np.uint8))
        with pytest.raises(ValueError):
            sobel_magnitude(img)


class TestHoughCircles:
    def test_blank_image_no_hits(self):
        assert hough_circles(blank()) == []

    def test_single_disc_found(self):
        img = disc_image(150, 150, 75, 75, 40)
        hits = hough_circles(img)
        top = hits[0]
        assert abs(top.cx - 75) <= 2 and abs(top.cy - 75) <= 2
        assert abs(top.radius - 40) <= 2
        assert all(hits[i].score >= hits[i + 1].score for i in range(len(hits) - 1))

    def test_two_discs_both_reported(self):
        params = DetectParams(r_min_frac=0.10)
        arr = disc_image(150, 150, 45, 75, 40).plane().copy()
        small = disc_image(150, 150, 115, 95, 20).plane()
        arr[small > 100] = 200
        hits = hough_circles(Raster.from_array(arr), params)

        def near(h, cx, cy, r):
            return abs(h.cx - cx) <= 2 and abs(h.cy - cy) <= 2 and abs(h.radius - r) <= 2

        big_hits = [h for h in hits if near(h, 45, 75, 40)]
        small_hits = [h for h in hits if near(h, 115, 95, 20)]
        assert big_hits and small_hits
        # longer perimeter gathers at least as many votes at equal edge density
        assert max(h.score for h in big_hits) >= max(h.score for h in small_hits)

    def test_deterministic_ordering(self):
        rng = np.random.default_rng(3)
        img = disc_image(150, 150, 66, 80, 45, noise_sigma=6, rng=rng)
        assert hough_circles(img) == hough_circles(img)

    def test_scores_meet_threshold(self):
        params = DetectParams(vote_threshold=50)
        img = disc_image(150, 150, 75, 75, 40)
        assert all(h.score >= 50 for h in hough_circles(img, params))


class TestDetectCoin:
    def test_blank_raises_with_diagnostics(self):
        with pytest.raises(NoCoinFound) as info:
            detect_coin(blank())
        assert info.value.best_score == 0

    def test_subthreshold_score_reported(self):
        # faint edges vote a little but never reach the threshold
        img = disc_image(150, 150, 75, 75, 40)
        params = DetectParams(vote_threshold=10**6)
        with pytest.raises(NoCoinFound) as info:
            detect_coin(img, params)
        assert 0 < info.value.best_score < 10**6

    def test_disc_fixture(self):
        img = disc_image(150, 150, 80, 70, 50)
        hit = detect_coin(img)
        assert abs(hit.cx - 80) <= 2 and abs(hit.cy - 70) <= 2 and abs(hit.radius - 50) <= 2

    def test_rgb_input_accepted(self):
        gray = disc_image(150, 150, 75, 75, 40).plane()
        img = Raster.from_array(np.repeat(gray[:, :, None], 3, axis=2))
        hit = detect_coin(img)
        assert abs(hit.cx - 75) <= 2 and abs(hit.cy - 75) <= 2

    def test_translation_covariance(self):
        base = detect_coin(disc_image(150, 150, 70, 72, 36))
        for dx, dy in [(5, 0), (0, -7), (9, 6), (-8, -4)]:
            hit = detect_coin(disc_image(150, 150, 70 + dx, 72 + dy, 36))
            assert abs(hit.cx - (base.cx + dx)) <= 1
            assert abs(hit.cy - (base.cy + dy)) <= 1

    def test_contrast_monotonicity(self):
        scores = []
        for contrast in (64, 96, 128, 192):
            img = disc_image(150, 150, 75, 75, 40, fg=40 + contrast, bg=40)
            scores.append(detect_coin(img).score)
        assert all(a <= b for a, b in zip(scores, scores[1:]))


class TestCleanImage:
    def test_output_format_and_centering(self):
        rng = np.random.default_rng(4)
        img = disc_image(200, 230, 90, 120, 55, fg=190, bg=30, noise_sigma=4, rng=rng)
        out = clean_image(img)
        assert (out.width, out.height, out.channels) == (150, 150, 1)
        p = out.plane().astype(float)
        bright = p > (p.min() + p.max()) / 2
        yy, xx = np.nonzero(bright)
        assert abs(xx.mean() - 74.5) <= 2
        assert abs(yy.mean() - 74.5) <= 2

    def test_coin_touching_frame_edge_gets_fill(self):
        img = disc_image(150, 150, 40, 75, 38, fg=200, bg=30)
        out = clean_image(img)
        assert (out.width, out.height) == (150, 150)
        fill = corner_fill_value(img)[0]
        # crop extends past the left frame edge; that strip is pure fill
        assert (out.plane()[:, 0] == fill).all()

    def test_propagates_no_coin(self):
        with pytest.raises(NoCoinFound):
            clean_image(blank())

    def test_rgb_source_becomes_grayscale(self):
        gray = disc_image(180, 180, 90, 90, 50).plane()
        img = Raster.from_array(np.repeat(gray[:, :, None], 3, axis=2))
        out = clean_image(img)
        assert out.channels == 1

    def test_centering_property_sweep(self):
        rng = np.random.default_rng(5)
        for _ in range(8):
            r = rng.uniform(32, 66)
            cx = rng.uniform(r + 5, 145 - r)
            cy = rng.uniform(r + 5, 145 - r)
            img = disc_image(150, 150, cx, cy, r, noise_sigma=3, rng=rng)
            p = clean_image(img).plane().astype(float)
            bright = p > (p.min() + p.max()) / 2
            yy, xx = np.nonzero(bright)
            assert abs(xx.mean() - 74.5) <= 2 and abs(yy.mean() - 74.5) <= 2


class TestDetectParams:
    def test_radius_fracs_validated(self):
        with pytest.raises(ValueError):
            DetectParams(r_min_frac=0.4, r_max_frac=0.3)
        with pytest.raises(ValueError):
            DetectParams(r_max_frac=0.6)

    def test_edge_threshold_validated(self):
        with pytest.raises(ValueError):
            DetectParams(edge_threshold_rel=0.0)

    def test_radius_step_validated(self):
        with pytest.raises(ValueError):
            DetectParams(radius_step=0)

    def test_hit_fields(self):
        hit = CircleHit(cx=3, cy=4, radius=5, score=6)
        assert (hit.cx, hit.cy, hit.radius, hit.score) == (3, 4, 5, 6)
