"""Blur engine tests with independent convolution and kernel oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfrkit.degrade import (
    BORDER_CONSTANT,
    BORDER_REFLECT101,
    BORDER_REPLICATE,
    GaussianSpec,
    blur,
    degrade_dataset,
    gaussian_kernel_1d,
    kernel_size,
)
from sfrkit.errors import DomainError
from sfrkit.imgcore import GrayImage, encode_image, save_image
from tests.conftest import make_noise_image


def reference_taps(sigma: float, size: int) -> np.ndarray:
    """Independent kernel oracle built from math.exp, no numpy vectorization."""
    half = size // 2
    raw = [math.exp(-(i * i) / (2.0 * sigma * sigma)) for i in range(-half, half + 1)]
    total = math.fsum(raw)
    return np.array([v / total for v in raw])


def brute_force_blur(data: np.ndarray, sigma: float) -> np.ndarray:
    """Direct 2D convolution oracle: product-of-taps kernel, mirrored border."""
    taps = reference_taps(sigma, kernel_size(sigma))
    k2 = np.outer(taps, taps)
    half = len(taps) // 2
    padded = np.pad(data, half, mode="reflect")
    out = np.empty_like(data)
    for y in range(data.shape[0]):
        for x in range(data.shape[1]):
            patch = padded[y : y + 2 * half + 1, x : x + 2 * half + 1]
            out[y, x] = np.sum(patch * k2)
    return np.clip(out, 0.0, 1.0)


class TestKernel:
    def test_size_mapping(self):
        assert [kernel_size(s) for s in (0.5, 1, 2, 3)] == [5, 7, 13, 19]

    def test_size_rejects_nonpositive(self):
        for bad in (0.0, -1.0):
            with pytest.raises(DomainError):
                kernel_size(bad)

    def test_golden_taps_sigma_1(self):
        taps = gaussian_kernel_1d(GaussianSpec.from_sigma(1.0)).taps
        golden = [
            0.00443305,
            0.05400558,
            0.24203623,
            0.39905028,
            0.24203623,
            0.05400558,
            0.00443305,
        ]
        np.testing.assert_allclose(taps, golden, atol=5e-9)

    def test_taps_match_reference_formula(self):
        for sigma in (0.5, 1.0, 1.7, 2.0, 3.0):
            taps = gaussian_kernel_1d(GaussianSpec.from_sigma(sigma)).taps
            np.testing.assert_allclose(taps, reference_taps(sigma, len(taps)), atol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(sigma=st.floats(0.3, 6.0))
    def test_kernel_invariants(self, sigma):
        k = gaussian_kernel_1d(GaussianSpec.from_sigma(sigma))
        taps = k.taps
        assert len(taps) % 2 == 1
        assert np.all(taps > 0)
        assert abs(taps.sum() - 1.0) < 1e-12
        np.testing.assert_array_equal(taps, taps[::-1])


class TestBlur:
    def test_separable_matches_brute_force_2d(self, rng):
        img = make_noise_image(rng, shape=(9, 9))
        for sigma in (0.8, 1.0):
            got = blur(img, GaussianSpec.from_sigma(sigma)).data
            want = brute_force_blur(img.data, sigma)
            assert np.max(np.abs(got - want)) < 1e-12

    def test_mean_preserved_on_flat_border_image(self, rng):
        # Mirror borders conserve mass exactly only when the margins are
        # uniform, so the fixture embeds noise inside a wide flat frame.
        data = np.full((64, 64), 0.5)
        data[24:40, 24:40] = rng.random((16, 16))
        img = GrayImage(data)
        for border in (BORDER_REFLECT101, BORDER_REPLICATE):
            out = blur(img, GaussianSpec.from_sigma(2.0, border=border))
            assert abs(out.data.mean() - data.mean()) < 1e-6

    def test_constant_border_darkens_edges(self):
        img = GrayImage(np.ones((32, 32)))
        out = blur(img, GaussianSpec.from_sigma(2.0, border=BORDER_CONSTANT, border_value=0.0))
        assert out.data[0, 0] < 0.9
        assert out.data[16, 16] == pytest.approx(1.0, abs=1e-12)

    def test_semigroup_composition_in_interior(self, rng):
        # sigma 3 then 4 approximates sigma 5; discrete sampling leaves a
        # small residual so the bound is loose and border rows are skipped.
        img = make_noise_image(rng, shape=(128, 128))
        twice = blur(blur(img, GaussianSpec.from_sigma(3.0)), GaussianSpec.from_sigma(4.0))
        once = blur(img, GaussianSpec.from_sigma(5.0))
        pad = 40
        diff = np.abs(twice.data[pad:-pad, pad:-pad] - once.data[pad:-pad, pad:-pad])
        assert diff.max() < 1e-3

    def test_total_variation_decreases(self, rng):
        img = make_noise_image(rng)

        def tv(a):
            return np.abs(np.diff(a, axis=0)).sum() + np.abs(np.diff(a, axis=1)).sum()

        out = blur(img, GaussianSpec.from_sigma(1.0))
        assert tv(out.data) < tv(img.data)

    def test_output_in_unit_interval(self, rng):
        out = blur(make_noise_image(rng), GaussianSpec.from_sigma(2.5))
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0

    def test_image_smaller_than_kernel_rejected(self):
        img = GrayImage(np.full((5, 5), 0.5))
        with pytest.raises(DomainError):
            blur(img, GaussianSpec.from_sigma(1.0))  # needs 7x7 minimum

    def test_constant_image_is_fixed_point(self):
        img = GrayImage(np.full((32, 32), 0.37))
        out = blur(img, GaussianSpec.from_sigma(1.0))
        np.testing.assert_allclose(out.data, 0.37, atol=1e-12)


class TestDataset:
    def test_processes_tree_and_mirrors_layout(self, tmp_path, rng):
        src = tmp_path / "src"
        (src / "sub").mkdir(parents=True)
        for rel in ("a.png", "sub/b.png"):
            save_image(src / rel, make_noise_image(rng, (32, 32)))
        dst = tmp_path / "dst"
        report = degrade_dataset(src, dst, GaussianSpec.from_sigma(1.0))
        assert report.processed == 2
        assert report.failed == 0
        assert (dst / "a.png").is_file()
        assert (dst / "sub" / "b.png").is_file()

    def test_output_format_follows_source(self, tmp_path, rng):
        src = tmp_path / "src"
        src.mkdir()
        (src / "a.jpg").write_bytes(encode_image(make_noise_image(rng, (32, 32)), "jpg"))
        dst = tmp_path / "dst"
        degrade_dataset(src, dst, GaussianSpec.from_sigma(1.0))
        out = dst / "a.jpg"
        assert out.is_file()
        assert out.read_bytes()[:2] == b"\xff\xd8"  # JPEG magic

    def test_corrupt_file_is_reported_not_raised(self, tmp_path, rng):
        src = tmp_path / "src"
        src.mkdir()
        save_image(src / "ok.png", make_noise_image(rng, (32, 32)))
        (src / "bad.png").write_bytes(b"\x89PNG\r\n\x1a\nnot really")
        report = degrade_dataset(src, tmp_path / "dst", GaussianSpec.from_sigma(1.0))
        assert report.processed == 1
        assert report.failed == 1
        assert report.failures[0]["path"] == "bad.png"

    def test_report_json_shape(self, tmp_path, rng):
        src = tmp_path / "src"
        src.mkdir()
        save_image(src / "a.png", make_noise_image(rng, (32, 32)))
        report = degrade_dataset(src, tmp_path / "dst", GaussianSpec.from_sigma(1.0))
        payload = report.to_json()
        assert '"processed": 1' in payload
