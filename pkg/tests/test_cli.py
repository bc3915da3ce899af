import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from pointparts.formats import read_ftns, read_points, validate_ftns


def run_cli(*args, cwd=None, expect=0):
    proc = subprocess.run(
        [sys.executable, "-m", "pointparts", *[str(a) for a in args]],
        capture_output=True, text=True, cwd=cwd,
    )
    assert proc.returncode == expect, f"{args}\nstdout:{proc.stdout}\nstderr:{proc.stderr}"
    return proc


COMMON = ["--views", "ortho6", "--canvas", "64", "--point-radius", "0.04",
          "--gfa-m", "48", "--gfa-k-spatial", "6", "--gfa-k-semantic", "20",
          "--sample-points", "0", "--anchor-sample", "256"]


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("clifix")
    run_cli("synth", "--shape", "segmented_bar", "--n", "600", "--parts", "3",
            "--sigma", "0", "--margin", "0.5", "--seed", "2",
            "--out-dir", root / "fix", *COMMON)
    return root


class TestSynthCommand:
    def test_emits_fixture_files(self, fixture_dir):
        fix = fixture_dir / "fix"
        assert (fix / "points.txt").exists()
        assert validate_ftns(fix / "grids.ftns") == (6, 64, 64, 3)
        assert validate_ftns(fix / "sim_maps.ftns") == (6, 64, 64, 3)
        pc = read_points(fix / "points.txt")
        assert pc.n_points == 600 and pc.gt_labels.max() == 3


class TestStages:
    def test_pipeline_end_to_end_and_stage_isolation(self, fixture_dir):
        fix = fixture_dir / "fix"
        base = ["--points", fix / "points.txt", "--grids", fix / "grids.ftns",
                "--sim-maps", fix / "sim_maps.ftns", "--p", "3", *COMMON]

        piped = run_cli("pipeline", "--out-dir", fixture_dir / "piped", *base)
        assert "miou_instance\t100.0000" in piped.stdout

        staged_dir = fixture_dir / "staged"
        for stage in ("render", "backproject", "gfa", "segment"):
            run_cli(stage, "--out-dir", staged_dir, *base)
        evald = run_cli("eval", "--out-dir", staged_dir, *base)
        assert "miou_instance\t100.0000" in evald.stdout

        for name in ("views.ftns", "corr.ftns", "corr_used.ftns", "feats.ftns",
                     "feats_gfa.ftns", "clusters.ftns", "assignment.ftns"):
            a = (fixture_dir / "piped" / name).read_bytes()
            b = (staged_dir / name).read_bytes()
            assert a == b, f"stage isolation broken for {name}"
        assert (fixture_dir / "piped" / "points_used.txt").read_text() == \
               (staged_dir / "points_used.txt").read_text()
        assert (fixture_dir / "piped" / "pred.txt").read_text() == \
               (staged_dir / "pred.txt").read_text()

    def test_render_dumps_images(self, fixture_dir):
        fix = fixture_dir / "fix"
        out = fixture_dir / "imgs"
        run_cli("render", "--points", fix / "points.txt", "--out-dir", out,
                "--dump-images", *COMMON)
        dumps = sorted((out / "images").glob("view_*.pgm"))
        assert len(dumps) == 6
        assert dumps[0].read_bytes().startswith(b"P5\n64 64\n255\n")

    def test_sphere48_render_shapes(self, fixture_dir, tmp_path):
        fix = fixture_dir / "fix"
        out = tmp_path / "r48"
        run_cli("render", "--points", fix / "points.txt", "--out-dir", out,
                "--views", "sphere48", "--canvas", "32", "--point-radius", "0.04")
        assert validate_ftns(out / "views.ftns") == (48, 32, 32)
        assert validate_ftns(out / "corr.ftns")[0] == 48

    def test_label_free_upper_bound_eval(self, fixture_dir, tmp_path):
        fix = fixture_dir / "fix"
        out = tmp_path / "nolabel"
        base = ["--points", fix / "points.txt", "--grids", fix / "grids.ftns",
                "--p", "3", "--out-dir", out, *COMMON]
        proc = run_cli("pipeline", *base)
        assert not (out / "pred.txt").exists()
        assert (out / "clusters.ftns").exists()
        assert "miou_instance\t100.0000" in proc.stdout  # perfect decomposition ceiling

    def test_eval_pred_equals_gt(self, fixture_dir, tmp_path):
        fix = fixture_dir / "fix"
        proc = run_cli("eval", "--pred", fix / "points.txt", "--gt", fix / "points.txt",
                       "--p", "3", "--category", "bar")
        for line in proc.stdout.splitlines():
            if line.startswith("bar") or "\t" in line and not line.startswith(("category", "#")):
                for token in line.split("\t")[2:]:
                    assert token == "100.0000"

    def test_eval_manifest(self, fixture_dir, tmp_path):
        fix = fixture_dir / "fix"
        manifest = tmp_path / "m.tsv"
        manifest.write_text(
            f"{fix/'points.txt'}\t{fix/'points.txt'}\t3\tcatA\n"
            f"{fix/'points.txt'}\t{fix/'points.txt'}\t3\tcatB\n"
        )
        proc = run_cli("eval", "--manifest", manifest)
        assert "catA\t1\t100.0000\t100.0000" in proc.stdout
        assert "miou_class\t100.0000" in proc.stdout


class TestConfigHandling:
    def test_config_file_with_flag_override(self, fixture_dir, tmp_path):
        fix = fixture_dir / "fix"
        cfg = {
            "views": "ortho6", "canvas": 64, "point_radius": 0.04, "p": 3,
            "gfa": {"m_superpoints": 48, "k_spatial": 6, "k_semantic": 20},
            "seeds": {"kmeans": 0, "sampling": 0},
            "sample_points": None, "anchor_sample": 256,
            "paths": {"points": str(fix / "points.txt"),
                      "grids": str(fix / "grids.ftns"),
                      "sim_maps": str(fix / "sim_maps.ftns"),
                      "out_dir": str(tmp_path / "cfgrun")},
        }
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(cfg))
        proc = run_cli("pipeline", "--config", cfg_path)
        assert "miou_instance\t100.0000" in proc.stdout
        # flag overrides the configured out_dir
        run_cli("render", "--config", cfg_path, "--out-dir", tmp_path / "other")
        assert (tmp_path / "other" / "views.ftns").exists()

    def test_missing_file_named_in_error(self, tmp_path):
        proc = run_cli("render", "--points", tmp_path / "absent.txt",
                       "--out-dir", tmp_path, expect=2)
        assert "absent.txt" in proc.stderr

    def test_invalid_config_field(self, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"views": "dome99"}))
        proc = run_cli("render", "--config", cfg_path, expect=2)
        assert "views" in proc.stderr

    def test_corrupt_grid_file(self, fixture_dir, tmp_path):
        fix = fixture_dir / "fix"
        bad = tmp_path / "bad.ftns"
        bad.write_bytes(b"NOPE" + b"\x00" * 32)
        out = tmp_path / "run"
        run_cli("render", "--points", fix / "points.txt", "--out-dir", out, *COMMON)
        proc = run_cli("backproject", "--points", fix / "points.txt",
                       "--grids", bad, "--out-dir", out, *COMMON, expect=2)
        assert "bad.ftns" in proc.stderr

    def test_stage_order_enforced(self, fixture_dir, tmp_path):
        proc = run_cli("gfa", "--out-dir", tmp_path / "empty", *COMMON, expect=2)
        assert "run earlier stages" in proc.stderr.lower() or "missing" in proc.stderr.lower()


class TestDeterminism:
    def test_identical_runs_identical_bytes(self, fixture_dir, tmp_path):
        fix = fixture_dir / "fix"
        base = ["--points", fix / "points.txt", "--grids", fix / "grids.ftns",
                "--sim-maps", fix / "sim_maps.ftns", "--p", "3", *COMMON]
        outs = []
        for name in ("d1", "d2"):
            proc = run_cli("pipeline", "--out-dir", tmp_path / name, *base)
            outs.append(proc.stdout)
        assert outs[0] == outs[1]
        for f in sorted((tmp_path / "d1").iterdir()):
            if f.is_file():
                assert f.read_bytes() == (tmp_path / "d2" / f.name).read_bytes(), f.name
