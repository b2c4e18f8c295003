"""Image container, codec, and luma conversion tests."""

from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from sfrkit.errors import DecodeError, DomainError, IoError
from sfrkit.imgcore import (
    REC709,
    GrayImage,
    LumaWeights,
    RgbImage,
    decode_image,
    encode_image,
    load_gray,
    load_image,
    save_image,
    to_luma,
    transpose,
)


class TestContainers:
    def test_gray_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            GrayImage(np.array([[0.0, 1.5]]))

    def test_gray_rejects_nan(self):
        with pytest.raises(DomainError):
            GrayImage(np.array([[np.nan]]))

    def test_gray_rejects_wrong_rank(self):
        with pytest.raises(DomainError):
            GrayImage(np.zeros((4, 4, 3)))

    def test_rgb_rejects_wrong_channels(self):
        with pytest.raises(DomainError):
            RgbImage(np.zeros((4, 4, 4)))

    def test_data_is_defensively_copied_and_frozen(self):
        src = np.zeros((3, 3))
        img = GrayImage(src)
        src[0, 0] = 1.0
        assert img.data[0, 0] == 0.0
        with pytest.raises(ValueError):
            img.data[0, 0] = 0.5

    def test_dimensions(self):
        img = GrayImage(np.zeros((4, 7)))
        assert (img.width, img.height) == (7, 4)

    def test_transpose_involution(self, rng):
        img = GrayImage(rng.random((5, 9)))
        once = transpose(img)
        assert (once.width, once.height) == (img.height, img.width)
        back = transpose(once)
        assert np.array_equal(back.data, img.data)

    def test_transpose_rgb(self, rng):
        img = RgbImage(rng.random((5, 9, 3)))
        back = transpose(transpose(img))
        assert np.array_equal(back.data, img.data)

    def test_luma_weights_must_sum_to_one(self):
        with pytest.raises(DomainError):
            LumaWeights(0.5, 0.5, 0.5)


class TestCodec:
    def test_decode_8bit_png_scales_by_255(self):
        pil = Image.new("RGB", (2, 1))
        pil.putpixel((0, 0), (51, 102, 204))
        pil.putpixel((1, 0), (0, 255, 128))
        buf = io.BytesIO()
        pil.save(buf, format="PNG")
        img = decode_image(buf.getvalue())
        np.testing.assert_allclose(
            img.data[0, 0], [51 / 255, 102 / 255, 204 / 255], atol=1e-12
        )
        np.testing.assert_allclose(img.data[0, 1], [0.0, 1.0, 128 / 255], atol=1e-12)

    def test_decode_16bit_png_scales_by_65535(self):
        arr = np.array([[0, 32768, 65535]], dtype=np.uint16)
        pil = Image.fromarray(arr)  # uint16 -> mode I;16
        buf = io.BytesIO()
        pil.save(buf, format="PNG")
        img = decode_image(buf.getvalue())
        expect = np.array([0.0, 32768 / 65535, 1.0])
        for ch in range(3):
            np.testing.assert_allclose(img.data[0, :, ch], expect, atol=1e-12)

    def test_gray_png_replicates_channels(self):
        pil = Image.new("L", (1, 1), color=77)
        buf = io.BytesIO()
        pil.save(buf, format="PNG")
        img = decode_image(buf.getvalue())
        assert img.data[0, 0, 0] == img.data[0, 0, 1] == img.data[0, 0, 2]

    def test_decode_rejects_truncated_bytes(self):
        buf = io.BytesIO()
        Image.new("RGB", (16, 16)).save(buf, format="PNG")
        payload = buf.getvalue()[: len(buf.getvalue()) // 2]
        with pytest.raises(DecodeError):
            decode_image(payload)

    def test_decode_rejects_unsupported_format(self):
        buf = io.BytesIO()
        Image.new("RGB", (4, 4)).save(buf, format="GIF")
        with pytest.raises(DecodeError):
            decode_image(buf.getvalue())

    def test_png_16bit_roundtrip_on_lattice_values(self):
        vals = np.array([[0, 1, 17, 40000, 65535]], dtype=np.uint16) / 65535.0
        img = GrayImage(vals)
        data = encode_image(img, "png", bit_depth=16)
        back = decode_image(data)
        np.testing.assert_array_equal(back.data[:, :, 0], vals)

    def test_png_8bit_roundtrip_on_lattice_values(self):
        vals = np.array([[0, 1, 128, 254, 255]], dtype=np.uint8) / 255.0
        img = GrayImage(vals)
        back = decode_image(encode_image(img, "png", bit_depth=8))
        np.testing.assert_array_equal(back.data[:, :, 0], vals)

    def test_jpeg_roundtrip_is_close_not_exact(self):
        img = GrayImage(np.full((32, 32), 0.5))
        back = decode_image(encode_image(img, "jpg"))
        assert np.max(np.abs(back.data[:, :, 0] - 0.5)) < 0.02

    def test_save_and_load(self, tmp_path):
        img = GrayImage(np.linspace(0, 1, 64).reshape(8, 8))
        path = tmp_path / "x.png"
        save_image(path, img, bit_depth=16)
        loaded = load_image(path)
        assert loaded.width == 8
        gray = load_gray(path)
        np.testing.assert_allclose(gray.data, img.data, atol=1 / 65535)

    def test_load_missing_file_raises_io_error(self, tmp_path):
        with pytest.raises(IoError):
            load_image(tmp_path / "absent.png")


class TestLuma:
    def test_rec709_dot_product(self):
        # Hand oracle: 0.2126*0.2 + 0.7152*0.4 + 0.0722*0.8 = 0.38636 exactly.
        img = RgbImage(np.array([[[0.2, 0.4, 0.8]]]))
        gray = to_luma(img, REC709)
        assert gray.data[0, 0] == pytest.approx(0.38636, abs=1e-12)

    def test_gamma_applied_before_weighting(self):
        img = RgbImage(np.array([[[0.25, 0.25, 0.25]]]))
        gray = to_luma(img, REC709, gamma=2.0)
        assert gray.data[0, 0] == pytest.approx(0.0625, abs=1e-12)

    def test_custom_weights(self):
        img = RgbImage(np.array([[[1.0, 0.0, 0.0]]]))
        gray = to_luma(img, LumaWeights(1.0, 0.0, 0.0))
        assert gray.data[0, 0] == 1.0

    @settings(max_examples=50, deadline=None)
    @given(
        r=st.floats(0, 1),
        g=st.floats(0, 1),
        b=st.floats(0, 1),
    )
    def test_luma_stays_in_unit_interval(self, r, g, b):
        img = RgbImage(np.array([[[r, g, b]]]))
        gray = to_luma(img, REC709)
        assert 0.0 <= gray.data[0, 0] <= 1.0
