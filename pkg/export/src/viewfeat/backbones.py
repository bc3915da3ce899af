"""Patch-feature backbones and prompt encoders.

Two families:

- ``stub-*``: a deterministic offline featurizer (fixed random projection of
  raw patch pixels, seeded from the model name and layer). It has no
  semantics worth trusting, but it is fast, dependency-free, and produces
  the exact tensor geometry of a ViT-style backbone, which is what the
  pipeline plumbing and the tests need when no pretrained weights are on
  disk.
- anything else is treated as a huggingface model id and loaded through
  ``transformers`` (DINOv2-style encoders for features, CLIP for
  similarity). Loading happens strictly from the local cache; a missing
  model is reported as an error rather than downloaded.
"""

import numpy as np

_MASK = (1 << 64) - 1
STUB_DIM = 768
STUB_TEXT_DIM = 64


def _mix(z):
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _hash_text(text):
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h


def _seeded_matrix(seed, rows, cols):
    """Dense +-1 matrix from a counter-mode splitmix64 stream."""
    out = np.empty(rows * cols)
    for i in range(out.size):
        out[i] = 1.0 if _mix(seed + i) & 1 else -1.0
    return out.reshape(rows, cols) / np.sqrt(cols)


class StubBackbone:
    """Deterministic patch featurizer with ViT-B geometry (d = 768)."""

    def __init__(self, model_name, layer=-1, patch_size=14):
        self.model_name = model_name
        self.layer = layer
        self.patch_size = patch_size
        self.d = STUB_DIM
        seed = _mix(_hash_text(f"{model_name}/layer{layer}"))
        self._proj = _seeded_matrix(seed, STUB_DIM, patch_size * patch_size)

    def _patches(self, gray):
        p = self.patch_size
        h, w = gray.shape[0] // p, gray.shape[1] // p
        if h < 1 or w < 1:
            raise ValueError(
                f"image {gray.shape} smaller than one {p}x{p} patch"
            )
        trimmed = gray[: h * p, : w * p]
        return trimmed.reshape(h, p, w, p).transpose(0, 2, 1, 3).reshape(h, w, p * p)

    def patch_features(self, gray):
        """(h, w, d) features for an (H, W) grayscale image in [0, 1]."""
        blocks = self._patches(gray)
        return np.tensordot(blocks, self._proj, axes=(2, 1))

    def text_features(self, prompts):
        """(P, t) unit vectors derived from the prompt strings alone."""
        out = np.empty((len(prompts), STUB_TEXT_DIM))
        for i, prompt in enumerate(prompts):
            seed = _mix(_hash_text(f"{self.model_name}/text/{prompt}"))
            vec = _seeded_matrix(seed, 1, STUB_TEXT_DIM)[0]
            out[i] = vec / np.linalg.norm(vec)
        return out

    def joint_patch_embedding(self, gray):
        """(h, w, t) patch embeddings in the text space, unit-normalized."""
        seed = _mix(_hash_text(f"{self.model_name}/joint/layer{self.layer}"))
        proj = _seeded_matrix(seed, STUB_TEXT_DIM, self.patch_size * self.patch_size)
        emb = np.tensordot(self._patches(gray), proj, axes=(2, 1))
        norms = np.linalg.norm(emb, axis=2, keepdims=True)
        return emb / np.maximum(norms, 1e-12)


class TransformersBackbone:
    """Pretrained encoder through transformers; strictly local files."""

    def __init__(self, model_name, layer=-1, patch_size=14):
        try:
            import torch
            from transformers import AutoImageProcessor, AutoModel
        except ImportError as exc:
            raise RuntimeError(f"transformers stack unavailable: {exc}") from None
        try:
            self._processor = AutoImageProcessor.from_pretrained(model_name, local_files_only=True)
            self._model = AutoModel.from_pretrained(model_name, local_files_only=True).eval()
        except Exception as exc:
            raise RuntimeError(f"cannot load model {model_name!r} locally: {exc}") from None
        self._torch = torch
        self.model_name = model_name
        self.layer = layer
        self.patch_size = patch_size
        self.d = int(self._model.config.hidden_size)

    def patch_features(self, gray):
        torch = self._torch
        rgb = np.repeat(gray[:, :, None], 3, axis=2) if gray.ndim == 2 else gray
        inputs = self._processor(images=(rgb * 255).astype(np.uint8), return_tensors="pt",
                                 do_resize=False, do_center_crop=False)
        with torch.no_grad():
            out = self._model(**inputs, output_hidden_states=True)
        tokens = out.hidden_states[self.layer][0]
        n_special = tokens.shape[0] - (gray.shape[0] // self.patch_size) * (
            gray.shape[1] // self.patch_size
        )
        grid = tokens[n_special:].reshape(
            gray.shape[0] // self.patch_size, gray.shape[1] // self.patch_size, -1
        )
        return grid.numpy().astype(np.float64)


def load_backbone(model_name, layer=-1, patch_size=14):
    if model_name.startswith("stub"):
        return StubBackbone(model_name, layer, patch_size)
    return TransformersBackbone(model_name, layer, patch_size)


class ClipSimilarity:
    """CLIP image/text similarity at patch level; strictly local files."""

    def __init__(self, model_name):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise RuntimeError(f"transformers stack unavailable: {exc}") from None
        try:
            self._processor = CLIPProcessor.from_pretrained(model_name, local_files_only=True)
            self._model = CLIPModel.from_pretrained(model_name, local_files_only=True).eval()
        except Exception as exc:
            raise RuntimeError(f"cannot load model {model_name!r} locally: {exc}") from None
        self._torch = torch
        self.model_name = model_name

    def patch_scores(self, gray, prompts, patch_size):
        torch = self._torch
        rgb = np.repeat(gray[:, :, None], 3, axis=2) if gray.ndim == 2 else gray
        inputs = self._processor(
            text=list(prompts), images=(rgb * 255).astype(np.uint8),
            return_tensors="pt", padding=True,
        )
        with torch.no_grad():
            text = self._model.get_text_features(
                input_ids=inputs["input_ids"], attention_mask=inputs["attention_mask"]
            )
            vision = self._model.vision_model(pixel_values=inputs["pixel_values"])
            tokens = self._model.visual_projection(
                self._model.vision_model.post_layernorm(vision.last_hidden_state[0])
            )
        text = text / text.norm(dim=-1, keepdim=True)
        patches = tokens[1:]
        patches = patches / patches.norm(dim=-1, keepdim=True)
        h = w = int(np.sqrt(patches.shape[0]))
        scores = (patches @ text.T).reshape(h, w, len(prompts))
        return scores.numpy().astype(np.float64)


def load_similarity(model_name):
    if model_name.startswith("stub"):
        return None  # handled by StubBackbone joint embeddings
    return ClipSimilarity(model_name)
