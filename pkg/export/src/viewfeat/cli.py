"""viewfeat: export per-view tensors for the segmentation pipeline.

export-features  writes one patch-level (h, w, d) FTNS per input image; the
                 consumer upsamples, so a 224x224 view with 14-pixel patches
                 exports a 16x16xd grid.
export-similarity encodes part prompts alongside the image patches, scores
                  every patch against every prompt (cosine), upsamples to
                  the canvas, and writes one (H, W, P) FTNS per view.

Both update the manifest JSON with the model, layer, recorded feature size,
prompts, and per-view output paths.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import ftns
from .backbones import load_backbone, load_similarity
from .images import load_image, to_gray
from .manifest import ExportManifest
from .resample import upsample

IMAGE_SUFFIXES = (".pgm", ".ppm", ".png", ".jpg", ".jpeg")


def _list_images(directory):
    root = Path(directory)
    if not root.is_dir():
        raise ValueError(f"{root}: not a directory")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise ValueError(f"{root}: no view images found")
    return files


def _load_manifest(args, prompts=None):
    path = Path(args.manifest)
    manifest = ExportManifest.load(path) if path.exists() else ExportManifest()
    if args.model:
        manifest.model = args.model
    if args.layer is not None:
        manifest.layer = args.layer
    if args.patch_size:
        manifest.patch_size = args.patch_size
    if args.canvas:
        manifest.canvas = args.canvas
    if prompts:
        manifest.prompts = prompts
    return manifest


def export_features(args):
    manifest = _load_manifest(args)
    backbone = load_backbone(manifest.model, manifest.layer, manifest.patch_size)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for image_path in _list_images(args.images):
        gray = to_gray(load_image(image_path))
        grid = backbone.patch_features(gray)
        if grid.shape[2] != backbone.d:
            raise ValueError(
                f"{image_path}: backbone emitted d={grid.shape[2]}, expected {backbone.d}"
            )
        dest = out_dir / (image_path.stem + ".ftns")
        ftns.write(dest, grid.astype(np.float32))
        manifest.view_entry(image_path)["features"] = str(dest)
    manifest.d = backbone.d
    manifest.save(args.manifest)
    print(f"exported {len(manifest.views)} feature grids (d={manifest.d}) to {out_dir}")


def export_similarity(args):
    prompts = [p.strip() for p in args.prompts.split(",")] if args.prompts else None
    manifest = _load_manifest(args, prompts)
    if not manifest.prompts:
        raise ValueError("no prompts: pass --prompts or list them in the manifest")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    scorer = load_similarity(manifest.model)
    backbone = None if scorer is not None else load_backbone(
        manifest.model, manifest.layer, manifest.patch_size
    )
    text = None if scorer is not None else backbone.text_features(manifest.prompts)

    for image_path in _list_images(args.images):
        gray = to_gray(load_image(image_path))
        if scorer is not None:
            patch_scores = scorer.patch_scores(gray, manifest.prompts, manifest.patch_size)
        else:
            emb = backbone.joint_patch_embedding(gray)
            patch_scores = np.tensordot(emb, text, axes=(2, 1))
        maps = upsample(patch_scores, manifest.canvas, manifest.canvas)
        dest = out_dir / (image_path.stem + ".ftns")
        ftns.write(dest, maps.astype(np.float32))
        manifest.view_entry(image_path)["similarity"] = str(dest)
    manifest.save(args.manifest)
    print(f"exported {len(manifest.views)} similarity maps (P={len(manifest.prompts)}) to {out_dir}")


def build_parser():
    ap = argparse.ArgumentParser(prog="viewfeat", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (("export-features", export_features),
                     ("export-similarity", export_similarity)):
        sp = sub.add_parser(name)
        sp.add_argument("--images", required=True, help="directory of view images")
        sp.add_argument("--out", required=True, help="output directory for FTNS files")
        sp.add_argument("--manifest", required=True, help="manifest JSON (read and updated)")
        sp.add_argument("--model", help="backbone id (stub-* for the offline featurizer)")
        sp.add_argument("--layer", type=int, help="hidden layer to read (default last)")
        sp.add_argument("--patch-size", dest="patch_size", type=int)
        sp.add_argument("--canvas", type=int, help="similarity map output size")
        if name == "export-similarity":
            sp.add_argument("--prompts", help="comma-separated part descriptions")
        sp.set_defaults(fn=fn)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"viewfeat {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
