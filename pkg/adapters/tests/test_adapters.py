"""Adapter outputs must load cleanly in the main pipeline: EMB1 headers match,
manifests align, crop rows follow detection order."""
import json
import os

import numpy as np
import pytest
from PIL import Image

from synthdet import embstore
from synthdet.compositor import load_mask

from synthdet_adapters.common import HashEmbedder, ImageUnreadable, write_emb1
from synthdet_adapters.embed_crops import embed_crops, main as crops_main
from synthdet_adapters.embed_images import embed_images, main as images_main
from synthdet_adapters.embed_texts import embed_texts
from synthdet_adapters.generate_images import generate_images
from synthdet_adapters.run_saliency import run_saliency


@pytest.fixture
def image_dir(tmp_path):
    rng = np.random.default_rng(3)
    d = tmp_path / "imgs"
    d.mkdir()
    entries = []
    for i in range(5):
        pixels = rng.integers(0, 255, size=(20, 24, 3), dtype=np.uint8)
        Image.fromarray(pixels).save(d / f"img_{i}.png")
        entries.append(
            {"row_index": i, "image_id": f"img_{i}", "category": "bird", "source": "generated"}
        )
    manifest = tmp_path / "manifest.jsonl"
    with open(manifest, "w") as f:
        for e in entries:
            f.write(json.dumps(e) + "\n")
    return d, manifest


class TestEmbedImages:
    def test_loads_in_pipeline(self, image_dir, tmp_path):
        d, manifest = image_dir
        out = tmp_path / "out.emb"
        n = embed_images(str(d), str(manifest), str(out), str(tmp_path / "out.jsonl"), "debug-hash")
        assert n == 5
        m = embstore.load_embeddings(out)
        assert (m.count, m.dim) == (5, 8)
        loaded = embstore.load_manifest(tmp_path / "out.jsonl")
        assert [e.image_id for e in loaded.entries] == [f"img_{i}" for i in range(5)]
        embstore.l2_normalize(m)  # no zero rows, finite

    def test_empty_manifest(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        manifest.write_text("")
        out = tmp_path / "o.emb"
        n = embed_images(str(tmp_path), str(manifest), str(out), str(tmp_path / "o.jsonl"), "debug-hash")
        assert n == 0
        assert embstore.load_embeddings(out).count == 0

    def test_corrupt_image_named(self, image_dir, tmp_path):
        d, manifest = image_dir
        (d / "img_2.png").write_bytes(b"not a png")
        with pytest.raises(ImageUnreadable) as exc:
            embed_images(str(d), str(manifest), str(tmp_path / "o.emb"), str(tmp_path / "o.jsonl"), "debug-hash")
        assert "img_2.png" in str(exc.value)

    def test_cli_exit_codes(self, image_dir, tmp_path):
        d, manifest = image_dir
        rc = images_main(
            ["--input", str(d), "--manifest", str(manifest), "--output", str(tmp_path / "o.emb")]
        )
        assert rc == 0
        assert os.path.exists(tmp_path / "o.emb")
        assert os.path.exists(tmp_path / "o.jsonl")


class TestEmbedTexts:
    def test_prompts_json(self, tmp_path):
        prompts = {"scheme": "a5", "prompts": {"bird": ["a bird"], "bus": ["a bus"]}}
        p = tmp_path / "prompts.json"
        p.write_text(json.dumps(prompts))
        out = tmp_path / "texts.emb"
        n = embed_texts(str(p), str(out), str(tmp_path / "texts.jsonl"), "debug-hash")
        assert n == 2
        m = embstore.load_embeddings(out)
        assert (m.count, m.dim) == (2, 8)
        manifest = embstore.load_manifest(tmp_path / "texts.jsonl")
        assert [e.category for e in manifest.entries] == ["bird", "bus"]
        assert all(e.source == "text" for e in manifest.entries)

    def test_jsonl_input(self, tmp_path):
        p = tmp_path / "texts.jsonl.in"
        with open(p, "w") as f:
            f.write(json.dumps({"text": "a cow", "category": "cow"}) + "\n")
        n = embed_texts(str(p), str(tmp_path / "t.emb"), str(tmp_path / "t.jsonl"), "debug-hash")
        assert n == 1

    def test_deterministic(self, tmp_path):
        p = tmp_path / "prompts.json"
        p.write_text(json.dumps({"prompts": {"bird": ["a bird"]}}))
        embed_texts(str(p), str(tmp_path / "a.emb"), str(tmp_path / "a.jsonl"), "debug-hash")
        embed_texts(str(p), str(tmp_path / "b.emb"), str(tmp_path / "b.jsonl"), "debug-hash")
        assert (tmp_path / "a.emb").read_bytes() == (tmp_path / "b.emb").read_bytes()


class TestSaliency:
    def test_masks_match_dimensions(self, image_dir, tmp_path):
        d, _ = image_dir
        out = tmp_path / "masks"
        n = run_saliency(str(d), str(out))
        assert n == 5
        for i in range(5):
            mask = load_mask(out / f"img_{i}.png")
            assert mask.shape == (20, 24)
            assert set(np.unique(mask)) <= {0, 255}


class TestGenerate:
    def test_count_per_prompt(self, tmp_path):
        p = tmp_path / "prompts.json"
        p.write_text(
            json.dumps({"prompts": {"bird": ["a bird", "a photo of bird"], "bus": ["a bus"]}})
        )
        out = tmp_path / "gen"
        total = generate_images(str(p), str(out), count=4)
        assert total == 12  # 3 prompts x 4 each
        manifest = tmp_path / "gen" / "images.jsonl"
        lines = manifest.read_text().splitlines()
        assert len(lines) == 12
        first = json.loads(lines[0])
        assert os.path.exists(out / (first["image_id"] + ".png"))
        assert "width" in first and "height" in first


class TestEmbedCrops:
    def test_alignment_with_sentinel(self, tmp_path):
        rng = np.random.default_rng(9)
        d = tmp_path / "imgs"
        d.mkdir()
        pixels = rng.integers(0, 255, size=(40, 40, 3), dtype=np.uint8)
        # sentinel: a solid magenta square at a known bbox
        pixels[10:20, 5:15] = (255, 0, 255)
        Image.fromarray(pixels).save(d / "scene.png")
        dets = [
            {"image_id": "scene", "category_id": 1, "bbox": [0, 0, 8, 8], "score": 0.9},
            {"image_id": "scene", "category_id": 2, "bbox": [5, 10, 10, 10], "score": 0.8},
            {"image_id": "scene", "category_id": 1, "bbox": [20, 20, 10, 10], "score": 0.7},
        ]
        dpath = tmp_path / "dets.json"
        dpath.write_text(json.dumps(dets))
        out = tmp_path / "crops.emb"
        n = embed_crops(str(d), str(dpath), str(out), str(tmp_path / "crops.jsonl"), "debug-hash")
        assert n == 3
        m = embstore.load_embeddings(out)
        assert (m.count, m.dim) == (3, 8)
        sentinel = np.full((10, 10, 3), (255, 0, 255), dtype=np.uint8)
        expected = HashEmbedder(dim=8).embed_image(sentinel)
        np.testing.assert_allclose(m.data[1], expected.astype(np.float32), rtol=1e-6)

    def test_missing_bbox_is_schema_error(self, tmp_path):
        d = tmp_path / "imgs"
        d.mkdir()
        Image.fromarray(np.zeros((8, 8, 3), np.uint8)).save(d / "a.png")
        dpath = tmp_path / "dets.json"
        dpath.write_text(json.dumps([{"image_id": "a", "score": 0.5}]))
        rc = crops_main(
            ["--input", str(d), "--detections", str(dpath), "--output", str(tmp_path / "c.emb")]
        )
        assert rc == 1


class TestAtomicWrites:
    def test_no_tmp_left_behind(self, tmp_path):
        write_emb1(tmp_path / "x.emb", np.zeros((2, 3), np.float32))
        leftovers = [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]
        assert leftovers == []
