import json
import os

import pytest
import yaml

from synthdet.cli import main, run_pipeline
from synthdet.config import PipelineConfig, config_from_dict, load_config
from synthdet.errors import ConfigInvalid


def write_config(path, assets, **overrides):
    raw = {
        "base_categories": ["person", "car", "dog"],
        "novel_categories": ["bird", "bus", "cow", "motorbike", "sofa"],
        "k_shots": 1,
        "seed": 0,
        "assets": assets,
        "prompt_scheme": "a5",
        "selection": {"strategy": "spectral_cluster", "g": 5, "seed": 0},
        "compositor": {"mode": "box"},
        "filter": {"threshold": 0.1, "list_mode": "all"},
    }
    for key, value in overrides.items():
        if isinstance(value, dict):
            raw.setdefault(key, {}).update(value)
        else:
            raw[key] = value
    with open(path, "w") as f:
        yaml.safe_dump(raw, f)
    return raw


class TestConfig:
    def test_overlapping_categories_rejected(self):
        with pytest.raises(ConfigInvalid):
            config_from_dict(
                {"base_categories": ["bird"], "novel_categories": ["bird"]}
            )

    def test_digest_stable_and_sensitive(self):
        a = config_from_dict({"novel_categories": ["bird"]})
        b = config_from_dict({"novel_categories": ["bird"]})
        c = config_from_dict({"novel_categories": ["bird"], "seed": 1})
        assert a.digest() == b.digest()
        assert a.digest() != c.digest()

    def test_yaml_round_trip(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        write_config(path, assets="/nowhere")
        cfg = load_config(path)
        assert cfg.selection.g == 5
        assert cfg.filter.threshold == 0.1
        assert cfg.novel_categories[0] == "bird"


class TestPipeline:
    def test_full_run(self, fixture_assets, tmp_path):
        cfg = config_from_dict(
            write_config(tmp_path / "cfg.yaml", assets=fixture_assets["root"])
        )
        run_dir, artifacts = run_pipeline(cfg, str(tmp_path / "runs"))
        assert set(artifacts) == {"prompts", "select", "compose", "filter", "eval"}

        with open(artifacts["prompts"]) as f:
            prompts = json.load(f)
        assert prompts["prompts"]["bus"][0] == "a bus"

        with open(artifacts["select"]) as f:
            selection = json.load(f)
        assert len(selection) == 5
        for entry in selection:
            assert len(entry["indices"]) == 5
            assert len(entry["image_ids"]) == 5

        with open(artifacts["compose"]) as f:
            coco = json.load(f)
        assert len(coco["annotations"]) == 25  # 5 categories x g=5

        with open(artifacts["filter"]) as f:
            kept = json.load(f)
        assert isinstance(kept, list)

        with open(artifacts["eval"]) as f:
            metrics = json.load(f)
        assert "map50" in metrics and "fp_ratio_before" in metrics

    def test_determinism_across_runs(self, fixture_assets, tmp_path):
        cfg = config_from_dict(
            write_config(tmp_path / "cfg.yaml", assets=fixture_assets["root"])
        )
        dir1, art1 = run_pipeline(cfg, str(tmp_path / "r1"))
        dir2, art2 = run_pipeline(cfg, str(tmp_path / "r2"))
        for stage in art1:
            with open(art1[stage], "rb") as f1, open(art2[stage], "rb") as f2:
                assert f1.read() == f2.read(), stage

    def test_eval_only_stage_isolation(self, fixture_assets, tmp_path):
        cfg = config_from_dict(
            write_config(tmp_path / "cfg.yaml", assets=fixture_assets["root"])
        )
        run_dir, artifacts = run_pipeline(cfg, str(tmp_path / "runs"), stages=("eval",))
        assert set(artifacts) == {"eval"}
        with open(artifacts["eval"]) as f:
            metrics = json.load(f)
        assert metrics["fp_ratio_before"] is not None

    def test_cli_entry_point(self, fixture_assets, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.yaml"
        write_config(cfg_path, assets=fixture_assets["root"])
        rc = main(
            [
                "run",
                "--config",
                str(cfg_path),
                "--out",
                str(tmp_path / "runs"),
                "--jobs",
                "2",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "run directory" in out

    def test_cli_error_exit_code(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.yaml"
        write_config(cfg_path, assets=str(tmp_path / "missing"))
        rc = main(["select", "--config", str(cfg_path), "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "error" in capsys.readouterr().err

    def test_run_dir_named_by_config_hash(self, fixture_assets, tmp_path):
        cfg = config_from_dict(
            write_config(tmp_path / "cfg.yaml", assets=fixture_assets["root"])
        )
        run_dir, _ = run_pipeline(cfg, str(tmp_path / "runs"), stages=("prompts",))
        assert os.path.basename(run_dir) == f"run-{cfg.digest()}"
