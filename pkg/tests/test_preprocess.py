import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from scriptid.preprocess import (
    BinaryImage,
    DegenerateHistogramError,
    PreprocessConfig,
    binarize,
    gaussian_smooth,
    otsu_threshold,
    prepare_page,
)
from scriptid.raster import GrayImage


def brute_force_otsu(img: GrayImage) -> int:
    """From-definition exhaustive search over all 256 thresholds."""
    bins = np.rint(img.pixels * 255.0).astype(np.int64).ravel()
    hist = [0] * 256
    for b in bins:
        hist[b] += 1
    total = len(bins)
    best_t, best_sigma = 0, -1.0
    for t in range(256):
        n0 = sum(hist[: t + 1])
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            continue
        w0 = n0 / total
        w1 = n1 / total
        mu0 = sum(level * hist[level] for level in range(t + 1)) / n0
        mu1 = sum(level * hist[level] for level in range(t + 1, 256)) / n1
        sigma = w0 * w1 * (mu0 - mu1) ** 2
        if sigma > best_sigma:
            best_sigma, best_t = sigma, t
    return best_t


def _image_from_bins(bins: np.ndarray) -> GrayImage:
    return GrayImage(bins.astype(np.float64).reshape(1, -1) / 255.0)


class TestOtsu:
    def test_two_extreme_bins_tie_resolves_to_zero(self):
        # 40% at bin 0 and 60% at bin 255: every t in [0, 254] gives the
        # same split, so the smallest-tie rule must return 0
        bins = np.array([0] * 40 + [255] * 60)
        img = _image_from_bins(bins)
        assert otsu_threshold(img) == 0
        assert brute_force_otsu(img) == 0

    def test_two_level_image_matches_exhaustive_argmax(self):
        bins = np.array([50] * 30 + [200] * 70)
        img = _image_from_bins(bins)
        t = otsu_threshold(img)
        assert 50 <= t <= 199
        assert t == brute_force_otsu(img)

    def test_constant_image_is_degenerate(self):
        with pytest.raises(DegenerateHistogramError):
            otsu_threshold(GrayImage(np.full((4, 4), 0.5)))

    def test_matches_brute_force_on_random_images(self):
        rng = np.random.default_rng(99)
        for _ in range(25):
            img = GrayImage(rng.random((8, 8)))
            assert otsu_threshold(img) == brute_force_otsu(img)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.int64, st.integers(2, 64), elements=st.integers(0, 255)))
    def test_matches_brute_force_on_arbitrary_bins(self, bins):
        img = _image_from_bins(bins)
        if len(set(bins.tolist())) < 2:
            with pytest.raises(DegenerateHistogramError):
                otsu_threshold(img)
        else:
            assert otsu_threshold(img) == brute_force_otsu(img)


class TestBinarize:
    def test_dark_ink_marks_low_bins(self):
        img = GrayImage(np.array([[0.1, 0.9], [0.9, 0.9]]))
        labels = binarize(img, 128, polarity="dark-ink").pixels
        assert labels.tolist() == [[1, 0], [0, 0]]

    def test_light_ink_marks_high_bins(self):
        img = GrayImage(np.array([[0.1, 0.9], [0.9, 0.9]]))
        labels = binarize(img, 128, polarity="light-ink").pixels
        assert labels.tolist() == [[0, 1], [1, 1]]

    def test_auto_polarity_uses_page_mean(self):
        light_page = GrayImage(np.array([[0.1, 0.9, 0.9, 0.9]]))
        dark_page = GrayImage(np.array([[0.9, 0.1, 0.1, 0.1]]))
        assert binarize(light_page, 128).pixels.tolist() == [[1, 0, 0, 0]]
        assert binarize(dark_page, 128).pixels.tolist() == [[1, 0, 0, 0]]

    def test_threshold_255_dark_ink_labels_all_ink(self):
        img = GrayImage(np.array([[0.0, 0.5, 1.0]]))
        labels = binarize(img, 255, polarity="dark-ink").pixels
        assert (labels[np.rint(img.pixels * 255) < 255] == 1).all()

    def test_known_mask_recovered_through_otsu(self):
        rng = np.random.default_rng(5)
        mask = rng.random((16, 16)) < 0.3
        img = GrayImage(np.where(mask, 0.1, 0.9))
        labels = binarize(img, otsu_threshold(img)).pixels
        assert (labels == mask.astype(np.uint8)).all()

    def test_threshold_out_of_range(self):
        img = GrayImage(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            binarize(img, 256)


class TestGaussianSmooth:
    def test_constant_image_is_preserved(self):
        img = GrayImage(np.full((10, 10), 0.37))
        out = gaussian_smooth(img, 1.0, 3)
        assert np.allclose(out.pixels, 0.37, atol=1e-12)

    def test_impulse_response_matches_direct_kernel(self):
        img = np.zeros((31, 31))
        img[15, 15] = 1.0
        out = gaussian_smooth(GrayImage(img), 1.5, 4).pixels
        taps = np.arange(-4, 5)
        g = np.exp(-(taps**2) / (2 * 1.5**2))
        g /= g.sum()
        direct = np.zeros((31, 31))
        direct[11:20, 11:20] = np.outer(g, g)
        assert np.abs(out - direct).max() < 1e-12
        assert abs(out.sum() - 1.0) < 1e-9

    def test_noise_dot_is_attenuated(self):
        img = np.zeros((21, 21))
        img[10, 10] = 1.0
        out = gaussian_smooth(GrayImage(img), 1.0, 3).pixels
        assert out.max() < 0.2

    def test_interior_content_preserves_mean(self, rng):
        img = np.zeros((64, 64))
        img[8:-8, 8:-8] = rng.random((48, 48))
        out = gaussian_smooth(GrayImage(img), 1.0, 3).pixels
        assert abs(out.mean() - img.mean()) < 1e-6

    def test_output_stays_in_unit_range(self, rng):
        out = gaussian_smooth(GrayImage(rng.random((20, 20))), 2.0, 5).pixels
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_accepts_binary_input(self):
        binary = BinaryImage(np.eye(8, dtype=np.uint8))
        out = gaussian_smooth(binary, 1.0, 2)
        assert out.pixels.shape == (8, 8)

    @pytest.mark.parametrize("sigma,radius", [(0.0, 3), (-1.0, 3), (1.0, 0)])
    def test_invalid_parameters(self, sigma, radius):
        img = GrayImage(np.zeros((4, 4)))
        with pytest.raises(ValueError):
            gaussian_smooth(img, sigma, radius)


class TestPreparePage:
    def test_gray_route_returns_input_unchanged(self):
        img = GrayImage(np.linspace(0, 1, 64).reshape(8, 8))
        cfg = PreprocessConfig(gabor_input="gray")
        assert prepare_page(img, cfg) is img

    def test_degenerate_page_becomes_background(self):
        img = GrayImage(np.full((8, 8), 0.5))
        out = prepare_page(img)
        assert (out.pixels == 0.0).all()

    def test_smoothed_binary_lands_in_unit_range(self, rng):
        img = GrayImage(np.where(rng.random((32, 32)) < 0.3, 0.05, 0.95))
        out = prepare_page(img)
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0
        assert 0.0 < out.pixels.mean() < 1.0

    def test_invalid_config_values(self):
        with pytest.raises(ValueError):
            PreprocessConfig(polarity="sideways")
        with pytest.raises(ValueError):
            PreprocessConfig(gabor_input="fourier")
