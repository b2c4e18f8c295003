"""Command-line surface tests: parsing, exit codes, stage chaining."""

from __future__ import annotations

import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from sfrkit.cli import main, parse_args
from sfrkit.errors import UsageError
from sfrkit.imgcore import GrayImage, save_image
from sfrkit.parallel import map_ordered, thread_count
from sfrkit.pipeline import RunConfig
from sfrkit.synthchart import ChartSpec, render_chart


@pytest.fixture
def one_chart_dir(tmp_path):
    src = tmp_path / "charts"
    src.mkdir()
    save_image(src / "edge.png", render_chart(ChartSpec()), bit_depth=16)
    return src


def tree_bytes(root):
    """Map of relative posix path -> file bytes for a directory tree."""
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestParsing:
    def test_pipeline_defaults(self):
        command, cfg = parse_args(["pipeline", "--src", "s", "--workdir", "w"])
        assert command == "pipeline"
        assert isinstance(cfg, RunConfig)
        assert cfg.sigmas == (1.0, 2.0, 3.0)
        assert cfg.oversample == 4
        assert cfg.border == "reflect101"
        assert cfg.weighting == "region"

    def test_degrade_kernel_derived_from_sigma(self):
        _, cmd = parse_args(["degrade", "--sigma", "2", "--src", "a", "--dst", "b"])
        assert cmd.spec.size == 13

    def test_degrade_kernel_override(self):
        _, cmd = parse_args(["degrade", "--sigma", "2", "--kernel", "9",
                             "--src", "a", "--dst", "b"])
        assert cmd.spec.size == 9

    def test_constant_border_with_value(self):
        _, cmd = parse_args(["degrade", "--sigma", "1", "--border", "constant:0.5",
                             "--src", "a", "--dst", "b"])
        assert (cmd.spec.border, cmd.spec.border_value) == ("constant", 0.5)

    def test_roi_geometry(self):
        _, cmd = parse_args(["harvest", "--src", "a", "--out", "r.json",
                             "--roi", "48x96", "--min-contrast", "0.1"])
        assert (cmd.criteria.roi_width, cmd.criteria.roi_length) == (48, 96)
        assert cmd.criteria.min_contrast == 0.1

    def test_measure_root_defaults_to_regions_parent(self):
        _, cmd = parse_args(["measure", "--regions", "x/y/regions.json", "--out", "m.json"])
        assert cmd.root.as_posix() == "x/y"

    def test_report_pairs_labels_with_paths(self):
        _, cmd = parse_args(["report", "--measurements", "a.json,b.json",
                             "--labels", "baseline,sigma1", "--out", "rep"])
        assert [label for label, _ in cmd.measurements] == ["baseline", "sigma1"]

    @pytest.mark.parametrize(
        "argv",
        [
            ["degrade", "--sigma", "0", "--src", "a", "--dst", "b"],
            ["degrade", "--sigma", "1", "--border", "mystery", "--src", "a", "--dst", "b"],
            ["chart", "--profile", "gauss:abc", "--out", "c.png"],
            ["chart", "--profile", "step", "--out", "c.jpg"],
            ["harvest", "--src", "a", "--out", "r.json", "--roi", "junk"],
            ["harvest", "--src", "a", "--out", "r.json", "--min-r2", "1.5"],
            ["harvest", "--src", "a", "--out", "r.json", "--luma", "1,2"],
            ["report", "--measurements", "a.json,b.json", "--labels", "one", "--out", "rep"],
            ["pipeline", "--src", "s", "--workdir", "w", "--sigmas", "2,1"],
            ["pipeline", "--src", "s", "--workdir", "w", "--sigmas", "0"],
            ["pipeline", "--src", "s", "--workdir", "w", "--nope"],
            ["mystery"],
        ],
    )
    def test_usage_errors(self, argv):
        with pytest.raises(UsageError):
            parse_args(argv)


class TestThreads:
    def test_explicit_wins(self, monkeypatch):
        monkeypatch.setenv("SS_SFR_THREADS", "7")
        assert thread_count(2) == 2

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("SS_SFR_THREADS", "3")
        assert thread_count(None) == 3

    def test_bad_env_falls_back(self, monkeypatch):
        monkeypatch.setenv("SS_SFR_THREADS", "lots")
        assert thread_count(None) >= 1

    def test_map_ordered_preserves_order(self):
        items = list(range(40))
        assert map_ordered(lambda x: x * x, items, workers=8) == [x * x for x in items]


class TestExitCodes:
    def test_usage_error_is_2(self, capsys):
        code = main(["degrade", "--sigma", "0", "--src", "a", "--dst", "b"])
        assert code == 2
        assert "usage error" in capsys.readouterr().err

    def test_missing_directory_is_4(self, tmp_path, capsys):
        code = main(["harvest", "--src", str(tmp_path / "absent"), "--out",
                     str(tmp_path / "r.json")])
        assert code == 4

    def test_unmeasurable_dataset_is_3_with_stage(self, tmp_path, capsys):
        src = tmp_path / "blank"
        src.mkdir()
        save_image(src / "flat.png", GrayImage(np.full((128, 128), 0.4)))
        code = main(["pipeline", "--src", str(src), "--workdir", str(tmp_path / "w"),
                     "--sigmas", "1"])
        assert code == 3
        payload = json.loads(capsys.readouterr().out)
        assert payload["status"] == "error"
        assert payload["stage"] == "aggregate"
        assert payload["error"] == "EmptyInputError"

    def test_console_script_help(self):
        proc = subprocess.run([sys.executable, "-c",
                               "from sfrkit.cli import main; raise SystemExit(main(['--help']))"],
                              capture_output=True, text=True)
        # argparse --help exits 0 via SystemExit before main's return path
        assert proc.returncode == 0
        assert "pipeline" in proc.stdout


class TestCommands:
    def test_chart_writes_png_and_reports(self, tmp_path, capsys):
        out = tmp_path / "c.png"
        assert main(["chart", "--profile", "gauss:1.0", "--out", str(out)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["written"] == out.as_posix()
        assert out.stat().st_size > 0

    def test_degrade_reports_counts(self, one_chart_dir, tmp_path, capsys):
        dst = tmp_path / "dst"
        code = main(["degrade", "--sigma", "1", "--src", str(one_chart_dir),
                     "--dst", str(dst)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert (payload["processed"], payload["failed"]) == (1, 0)

    def test_harvest_emits_rois(self, one_chart_dir, tmp_path, capsys):
        rois = tmp_path / "rois"
        code = main(["harvest", "--src", str(one_chart_dir),
                     "--out", str(tmp_path / "r.json"), "--emit-rois", str(rois)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["regions"] == 1
        crops = list(rois.glob("*.png"))
        assert len(crops) == 1
        assert "vertical" in crops[0].name


class TestChaining:
    def test_subcommands_reproduce_pipeline_bytes(self, one_chart_dir, tmp_path, capsys):
        pipe_dir = tmp_path / "piped"
        assert main(["pipeline", "--src", str(one_chart_dir), "--workdir", str(pipe_dir),
                     "--sigmas", "1"]) == 0

        hand = tmp_path / "chained"
        shutil.copytree(one_chart_dir, hand / "baseline")
        assert main(["degrade", "--sigma", "1", "--src", str(one_chart_dir),
                     "--dst", str(hand / "sigma1")]) == 0
        for label in ("baseline", "sigma1"):
            vdir = hand / label
            assert main(["harvest", "--src", str(vdir),
                         "--out", str(vdir / "regions.json")]) == 0
            assert main(["measure", "--regions", str(vdir / "regions.json"),
                         "--out", str(vdir / "measurements.json")]) == 0
        assert main(["report",
                     "--measurements", ",".join(
                         str(hand / label / "measurements.json")
                         for label in ("baseline", "sigma1")),
                     "--labels", "baseline,sigma1",
                     "--out", str(hand / "report")]) == 0

        piped, chained = tree_bytes(pipe_dir), tree_bytes(hand)
        assert set(piped) == set(chained)
        for rel in piped:
            assert piped[rel] == chained[rel], rel

    def test_pipeline_runs_are_byte_identical(self, one_chart_dir, tmp_path, capsys):
        outs = []
        for name in ("w1", "w2"):
            workdir = tmp_path / name
            assert main(["pipeline", "--src", str(one_chart_dir), "--workdir", str(workdir),
                         "--sigmas", "1,2"]) == 0
            outs.append(tree_bytes(workdir))
        assert outs[0] == outs[1]

    def test_pipeline_summary_shape(self, one_chart_dir, tmp_path, capsys):
        assert main(["pipeline", "--src", str(one_chart_dir),
                     "--workdir", str(tmp_path / "w"), "--sigmas", "1"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["status"] == "ok"
        assert payload["variants"] == ["baseline", "sigma1"]
        means = payload["mtf50_mean"]
        assert means["sigma1"] < means["baseline"]
