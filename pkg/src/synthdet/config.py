"""Declarative pipeline configuration, loaded from YAML with flag overrides."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import yaml

from .compositor import CompositorConfig, PasteMode
from .errors import ConfigInvalid
from .fpfilter import FilterConfig, ListMode
from .prompts import PromptScheme
from .selector import SelectionConfig, Strategy

ASSET_ROOT_ENV = "SYNTHDET_ASSETS"


@dataclass
class PipelineConfig:
    base_categories: list[str] = field(default_factory=list)
    novel_categories: list[str] = field(default_factory=list)
    k_shots: int = 1
    seed: int = 0
    assets: str | None = None
    prompt_scheme: PromptScheme = PromptScheme.A5
    score_text: str = "name"  # "name" or "prompt": which text embeddings score Eq. 2
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    compositor: CompositorConfig = field(default_factory=CompositorConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)

    def __post_init__(self):
        if set(self.base_categories) & set(self.novel_categories):
            raise ConfigInvalid("base and novel categories overlap")
        if self.k_shots < 0 or self.selection.g < 0:
            raise ConfigInvalid("shot counts must be non-negative")
        if self.score_text not in ("name", "prompt"):
            raise ConfigInvalid("score_text must be 'name' or 'prompt'")

    def asset_root(self) -> str:
        return self.assets or os.environ.get(ASSET_ROOT_ENV, ".")

    def all_categories(self) -> list[str]:
        return list(self.base_categories) + list(self.novel_categories)

    def category_ids(self) -> dict[str, int]:
        return {name: i + 1 for i, name in enumerate(self.all_categories())}

    def to_dict(self) -> dict:
        return {
            "base_categories": self.base_categories,
            "novel_categories": self.novel_categories,
            "k_shots": self.k_shots,
            "seed": self.seed,
            "prompt_scheme": self.prompt_scheme.value,
            "score_text": self.score_text,
            "selection": {
                "strategy": self.selection.strategy.value,
                "g": self.selection.g,
                "k": self.selection.k,
                "sigma": self.selection.sigma,
                "seed": self.selection.seed,
                "max_iters": self.selection.max_iters,
            },
            "compositor": {
                "mode": self.compositor.mode.value,
                "threshold": self.compositor.threshold,
                "scale_min": self.compositor.scale_min,
                "scale_max": self.compositor.scale_max,
                "overlap_max": self.compositor.overlap_max,
                "max_attempts": self.compositor.max_attempts,
            },
            "filter": {
                "threshold": self.filter.threshold,
                "list_mode": self.filter.mode.value,
                "temperature": self.filter.temperature,
            },
        }

    def digest(self) -> str:
        """Stable hash naming the run directory."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


def load_config(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> PipelineConfig:
    try:
        sel = raw.get("selection", {})
        comp = raw.get("compositor", {})
        filt = raw.get("filter", {})
        return PipelineConfig(
            base_categories=list(raw.get("base_categories", [])),
            novel_categories=list(raw.get("novel_categories", [])),
            k_shots=int(raw.get("k_shots", 1)),
            seed=int(raw.get("seed", 0)),
            assets=raw.get("assets"),
            prompt_scheme=PromptScheme(raw.get("prompt_scheme", "a5")),
            score_text=raw.get("score_text", "name"),
            selection=SelectionConfig(
                strategy=Strategy(sel.get("strategy", "spectral_cluster")),
                g=int(sel.get("g", 20)),
                k=sel.get("k"),
                sigma=sel.get("sigma"),
                seed=int(sel.get("seed", raw.get("seed", 0))),
                max_iters=int(sel.get("max_iters", 100)),
            ),
            compositor=CompositorConfig(
                mode=PasteMode(comp.get("mode", "box")),
                threshold=int(comp.get("threshold", 128)),
                scale_min=float(comp.get("scale_min", 0.3)),
                scale_max=float(comp.get("scale_max", 1.0)),
                overlap_max=float(comp.get("overlap_max", 0.5)),
                max_attempts=int(comp.get("max_attempts", 50)),
            ),
            filter=FilterConfig(
                threshold=float(filt.get("threshold", 0.1)),
                mode=ListMode(filt.get("list_mode", "all")),
                temperature=float(filt.get("temperature", 1.0)),
            ),
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigInvalid(str(exc)) from exc
