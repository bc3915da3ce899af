import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from viewfeat import ExportManifest, StubBackbone
from viewfeat.ftns import read as ftns_read

# the consumer: only its file formats and CLI are touched
from pointparts.formats import validate_ftns, write_pgm


def run(*argv, expect=0):
    proc = subprocess.run([sys.executable, "-m", *map(str, argv)],
                          capture_output=True, text=True)
    assert proc.returncode == expect, f"{argv}\n{proc.stdout}\n{proc.stderr}"
    return proc


def checksum(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def view_images(tmp_path_factory):
    """Three rendered 224x224 depth views plus one blank frame."""
    root = tmp_path_factory.mktemp("views")
    run("pointparts", "synth", "--shape", "lamp_like", "--n", "800", "--parts", "3",
        "--margin", "0.5", "--out-dir", root / "fix",
        "--views", "ortho6", "--canvas", "224", "--point-radius", "0.02")
    run("pointparts", "render", "--points", root / "fix" / "points.txt",
        "--out-dir", root / "render", "--dump-images",
        "--views", "ortho6", "--canvas", "224", "--point-radius", "0.02")
    img_dir = root / "render" / "images"
    assert len(list(img_dir.glob("*.pgm"))) == 6
    write_pgm(img_dir / "view_9999.pgm", np.zeros((224, 224)))  # blank frame
    return img_dir


class TestStubBackbone:
    def test_vit_base_geometry(self):
        bb = StubBackbone("stub-vit-base-14")
        grid = bb.patch_features(np.linspace(0, 1, 224 * 224).reshape(224, 224))
        assert grid.shape == (16, 16, 768)

    def test_deterministic(self):
        img = np.random.default_rng(0).random((224, 224))
        a = StubBackbone("stub-vit-base-14").patch_features(img)
        b = StubBackbone("stub-vit-base-14").patch_features(img)
        assert np.array_equal(a, b)

    def test_layer_changes_features(self):
        img = np.random.default_rng(1).random((224, 224))
        a = StubBackbone("stub-vit-base-14", layer=-1).patch_features(img)
        b = StubBackbone("stub-vit-base-14", layer=3).patch_features(img)
        assert not np.array_equal(a, b)

    def test_image_too_small(self):
        with pytest.raises(ValueError):
            StubBackbone("stub-vit-base-14").patch_features(np.zeros((8, 8)))


class TestExportFeatures:
    def test_patch_grids_validate_against_consumer(self, view_images, tmp_path):
        manifest = tmp_path / "m.json"
        run("viewfeat", "export-features", "--images", view_images,
            "--out", tmp_path / "grids", "--manifest", manifest)
        files = sorted((tmp_path / "grids").glob("*.ftns"))
        assert len(files) == 7
        for f in files:
            assert validate_ftns(f) == (16, 16, 768)
        meta = json.loads(manifest.read_text())
        assert meta["d"] == 768 and meta["patch_size"] == 14
        assert len(meta["views"]) == 7

    def test_identical_inputs_identical_tensors(self, view_images, tmp_path):
        for name in ("a", "b"):
            run("viewfeat", "export-features", "--images", view_images,
                "--out", tmp_path / name, "--manifest", tmp_path / f"{name}.json")
        for f in sorted((tmp_path / "a").glob("*.ftns")):
            assert checksum(f) == checksum(tmp_path / "b" / f.name)

    def test_blank_view_differs_from_render(self, view_images, tmp_path):
        run("viewfeat", "export-features", "--images", view_images,
            "--out", tmp_path / "g", "--manifest", tmp_path / "m.json")
        rendered = checksum(tmp_path / "g" / "view_0000.ftns")
        blank = checksum(tmp_path / "g" / "view_9999.ftns")
        assert rendered != blank

    def test_missing_model_is_reported(self, view_images, tmp_path):
        proc = run("viewfeat", "export-features", "--images", view_images,
                   "--out", tmp_path / "g", "--manifest", tmp_path / "m.json",
                   "--model", "no-such/model-anywhere", expect=1)
        assert "no-such/model-anywhere" in proc.stderr


class TestExportSimilarity:
    def test_single_prompt_single_plane(self, view_images, tmp_path):
        run("viewfeat", "export-similarity", "--images", view_images,
            "--out", tmp_path / "sim", "--manifest", tmp_path / "m.json",
            "--prompts", "lamp shade")
        for f in sorted((tmp_path / "sim").glob("*.ftns")):
            assert validate_ftns(f) == (224, 224, 1)

    def test_duplicate_prompts_identical_planes(self, view_images, tmp_path):
        run("viewfeat", "export-similarity", "--images", view_images,
            "--out", tmp_path / "sim", "--manifest", tmp_path / "m.json",
            "--prompts", "handle,handle")
        maps = ftns_read(sorted((tmp_path / "sim").glob("*.ftns"))[0])
        assert np.array_equal(maps[:, :, 0], maps[:, :, 1])

    def test_prompt_wording_changes_maps(self, view_images, tmp_path):
        for name, prompts in (("plain", "base,pole,shade"),
                              ("templ", "the base of a lamp,the pole of a lamp,the shade of a lamp")):
            run("viewfeat", "export-similarity", "--images", view_images,
                "--out", tmp_path / name, "--manifest", tmp_path / f"{name}.json",
                "--prompts", prompts)
        a = checksum(sorted((tmp_path / "plain").glob("*.ftns"))[0])
        b = checksum(sorted((tmp_path / "templ").glob("*.ftns"))[0])
        assert a != b

    def test_prompts_required(self, view_images, tmp_path):
        proc = run("viewfeat", "export-similarity", "--images", view_images,
                   "--out", tmp_path / "sim", "--manifest", tmp_path / "m.json",
                   expect=1)
        assert "prompts" in proc.stderr


class TestPipelineSmoke:
    def test_three_objects_through_full_pipeline(self, tmp_path):
        """Render, export with the stub backbone, and run every consumer
        stage; completion is the assertion, scores are not."""
        for i, (shape, p, prompts) in enumerate([
            ("segmented_bar", 3, "left,middle,right"),
            ("two_blobs", 2, "first blob,second blob"),
            ("lamp_like", 3, "base,pole,shade"),
        ]):
            obj = tmp_path / f"obj{i}"
            run("pointparts", "synth", "--shape", shape, "--n", "1200",
                "--parts", p, "--margin", "0.5", "--seed", i, "--out-dir", obj / "fix",
                "--views", "ortho6", "--canvas", "224", "--point-radius", "0.02")
            run("pointparts", "render", "--points", obj / "fix" / "points.txt",
                "--out-dir", obj / "run", "--dump-images",
                "--views", "ortho6", "--canvas", "224", "--point-radius", "0.02")
            run("viewfeat", "export-features", "--images", obj / "run" / "images",
                "--out", obj / "grids", "--manifest", obj / "manifest.json")
            run("viewfeat", "export-similarity", "--images", obj / "run" / "images",
                "--out", obj / "sim", "--manifest", obj / "manifest.json",
                "--prompts", prompts)
            common = ["--views", "ortho6", "--canvas", "224", "--point-radius", "0.02",
                      "--p", p, "--gfa-k-semantic", "60", "--out-dir", obj / "run"]
            run("pointparts", "backproject", "--points", obj / "fix" / "points.txt",
                "--grids", obj / "grids", *common)
            run("pointparts", "gfa", *common)
            run("pointparts", "segment", "--sim-maps", obj / "sim", *common)
            proc = run("pointparts", "eval", *common)
            assert "miou_instance" in proc.stdout
            assert (obj / "run" / "pred.txt").exists()
