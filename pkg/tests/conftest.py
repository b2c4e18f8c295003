"""Shared fixtures: deterministic RNG, chart factories, tiny datasets."""

from __future__ import annotations

import numpy as np
import pytest

from sfrkit.imgcore import GrayImage, save_image
from sfrkit.synthchart import ChartSpec, GaussianEdge, IdealStep, render_chart


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def step_chart():
    """Default 200x200 ideal step at 5 degrees from vertical."""
    return render_chart(ChartSpec())


@pytest.fixture
def gauss_chart():
    """Default-size smooth edge, sigma 1, at 5 degrees."""
    return render_chart(ChartSpec(profile=GaussianEdge(1.0)))


@pytest.fixture
def chart_corpus(tmp_path):
    """Four charts on disk: step and smooth edges, both orientations.

    Angles near 90 degrees from vertical give near-horizontal edges, so
    the corpus exercises both MTF50 columns.
    """
    src = tmp_path / "corpus"
    src.mkdir()
    charts = [
        ("step_v.png", ChartSpec(edge_angle_deg=5.0)),
        ("step_h.png", ChartSpec(edge_angle_deg=85.0)),
        ("gauss_v.png", ChartSpec(edge_angle_deg=7.0, profile=GaussianEdge(1.0))),
        ("gauss_h.png", ChartSpec(edge_angle_deg=83.0, profile=GaussianEdge(1.0))),
    ]
    for name, spec in charts:
        save_image(src / name, render_chart(spec), bit_depth=16)
    return src


def make_noise_image(rng, shape=(96, 96)):
    return GrayImage(rng.random(shape))
