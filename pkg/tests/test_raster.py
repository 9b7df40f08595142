import numpy as np
import pytest
from hypothesis import given, strategies as st
from PIL import Image

from scriptid.raster import (
    GrayImage,
    RgbImage,
    UnsupportedFormatError,
    load_image,
    quantize,
    save_png,
    to_grayscale,
)


def _write(tmp_path, arr, fmt, mode="RGB", name="img"):
    path = tmp_path / f"{name}.{fmt.lower()}"
    Image.fromarray(arr, mode=mode).save(path, format=fmt)
    return path


class TestLoadImage:
    def test_white_bmp_decodes_identically(self, tmp_path):
        arr = np.full((2, 2, 3), 255, dtype=np.uint8)
        img = load_image(_write(tmp_path, arr, "BMP"))
        assert (img.width, img.height) == (2, 2)
        assert (img.pixels == 255).all()

    def test_black_pixel_png(self, tmp_path):
        arr = np.zeros((1, 1, 3), dtype=np.uint8)
        img = load_image(_write(tmp_path, arr, "PNG"))
        assert img.pixels.shape == (1, 1, 3)
        assert (img.pixels == 0).all()

    def test_grayscale_file_yields_equal_channels(self, tmp_path):
        arr = np.arange(16, dtype=np.uint8).reshape(4, 4) * 16
        img = load_image(_write(tmp_path, arr, "PNG", mode="L"))
        assert (img.pixels[..., 0] == arr).all()
        assert (img.pixels[..., 0] == img.pixels[..., 1]).all()
        assert (img.pixels[..., 1] == img.pixels[..., 2]).all()

    def test_palette_bmp_roundtrips_through_palette(self, tmp_path):
        arr = np.array([[0, 128], [255, 64]], dtype=np.uint8)
        path = tmp_path / "pal.bmp"
        Image.fromarray(arr, mode="L").convert("P").save(path, format="BMP")
        img = load_image(path)
        assert (img.pixels[..., 0] == arr).all()

    def test_png_roundtrip_is_bit_identical(self, tmp_path):
        # encode-then-decode oracle on a synthetic page
        from scriptid.synth import SynthClass, gen_page

        cls = SynthClass("t", 0.0, np.pi / 2, 0.5)
        page = gen_page(cls, (16, 16), 0.1, np.random.default_rng(7))
        path = tmp_path / "page.png"
        save_png(page, path)
        reloaded = load_image(path)
        expected = quantize(page)
        assert (reloaded.pixels[..., 0] == expected).all()
        assert (reloaded.pixels[..., 1] == expected).all()
        assert (reloaded.pixels[..., 2] == expected).all()

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_image(tmp_path / "nope.png")

    def test_unsupported_format_named(self, tmp_path):
        arr = np.zeros((4, 4, 3), dtype=np.uint8)
        path = _write(tmp_path, arr, "JPEG", name="bad")
        with pytest.raises(UnsupportedFormatError, match="JPEG"):
            load_image(path)

    def test_unsupported_bit_depth_named(self, tmp_path):
        path = tmp_path / "deep.png"
        Image.new("I;16", (4, 4)).save(path)
        with pytest.raises(UnsupportedFormatError, match="I;16"):
            load_image(path)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "junk.png"
        path.write_bytes(b"not an image at all")
        with pytest.raises(UnsupportedFormatError):
            load_image(path)


class TestToGrayscale:
    def test_white_maps_to_one(self):
        img = RgbImage(np.full((3, 2, 3), 255, dtype=np.uint8))
        assert (to_grayscale(img).pixels == 1.0).all()

    def test_black_maps_to_zero(self):
        img = RgbImage(np.zeros((2, 3, 3), dtype=np.uint8))
        assert (to_grayscale(img).pixels == 0.0).all()

    def test_pure_red_matches_luma_weight(self):
        px = np.zeros((1, 1, 3), dtype=np.uint8)
        px[0, 0, 0] = 255
        gray = to_grayscale(RgbImage(px))
        assert gray.pixels[0, 0] == 0.299

    def test_dimensions_preserved(self):
        img = RgbImage(np.zeros((5, 7, 3), dtype=np.uint8))
        gray = to_grayscale(img)
        assert (gray.height, gray.width) == (5, 7)

    @given(st.integers(0, 255))
    def test_gray_triple_roundtrip_exact(self, v):
        px = np.full((1, 1, 3), v, dtype=np.uint8)
        assert to_grayscale(RgbImage(px)).pixels[0, 0] == v / 255

    @given(
        st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)),
        st.integers(0, 2),
    )
    def test_raising_a_channel_never_decreases_luma(self, rgb, channel):
        if rgb[channel] == 255:
            return
        base = np.array([[rgb]], dtype=np.uint8)
        bumped = base.copy()
        bumped[0, 0, channel] += 1
        lo = to_grayscale(RgbImage(base)).pixels[0, 0]
        hi = to_grayscale(RgbImage(bumped)).pixels[0, 0]
        assert hi >= lo


class TestGrayImage:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GrayImage(np.array([[0.0, 1.5]]))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            GrayImage(np.array([[np.nan]]))

    def test_pixels_are_read_only(self):
        img = GrayImage(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 1.0
