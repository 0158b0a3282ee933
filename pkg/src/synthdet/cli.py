"""Command-line pipeline: prompts -> select -> compose -> filter -> eval.

Each stage reads its inputs from the asset root (images, masks, embedding
files, detection results from external models) and earlier stages'
artifacts, and writes into a run directory named by the config hash.
"""
from __future__ import annotations

import argparse
import glob
import json
import os
import sys

from . import compositor, embstore, evaluator, fpfilter, prompts, selector
from .config import ASSET_ROOT_ENV, PipelineConfig, config_from_dict, load_config
from .errors import MissingAsset, SynthdetError


def _emb_path(cfg: PipelineConfig, name: str) -> str:
    return os.path.join(cfg.asset_root(), "embeddings", name)


def _load_pair(cfg: PipelineConfig, stem: str):
    emb = embstore.load_embeddings(_emb_path(cfg, stem + ".emb"))
    manifest = embstore.load_manifest(_emb_path(cfg, stem + ".jsonl"))
    if len(manifest) != emb.count:
        raise MissingAsset(f"{stem}: manifest rows {len(manifest)} != count {emb.count}")
    return emb, manifest


def _text_row(cfg: PipelineConfig, category: str, stem: str):
    emb, manifest = _load_pair(cfg, stem)
    rows = [e.row_index for e in manifest.entries if e.category == category]
    if not rows:
        raise MissingAsset(f"no text embedding for category {category!r} in {stem}")
    return embstore.l2_normalize(emb).data[rows[0]]


def stage_prompts(cfg: PipelineConfig, run_dir: str) -> str:
    out = {
        cat: prompts.generate_prompts(cat, cfg.prompt_scheme)
        for cat in cfg.novel_categories
    }
    path = os.path.join(run_dir, "prompts.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"scheme": cfg.prompt_scheme.value, "prompts": out}, f, indent=2)
        f.write("\n")
    return path


def stage_select(cfg: PipelineConfig, run_dir: str) -> str:
    results = []
    text_stem = "texts" if cfg.score_text == "name" else "prompt_texts"
    for cat in cfg.novel_categories:
        gen, manifest = _load_pair(cfg, f"{cat}.gen")
        gen_n = embstore.l2_normalize(gen)
        real = None
        real_path = _emb_path(cfg, f"{cat}.real.emb")
        if os.path.exists(real_path):
            real = embstore.load_embeddings(real_path)
        scores = None
        if cfg.selection.strategy in (
            selector.Strategy.CLIP_MAX,
            selector.Strategy.CLIP_UNIFORM,
        ):
            text = _text_row(cfg, cat, text_stem)
            scores = (gen_n.data @ text).tolist()
        res = selector.run_selection(cfg.selection, cat, gen=gen_n, real=real, scores=scores)
        results.append(
            {
                "category": cat,
                "strategy": res.strategy.value,
                "indices": res.indices,
                "image_ids": manifest.image_ids(res.indices),
            }
        )
    path = os.path.join(run_dir, "selection.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(results, f, indent=2)
        f.write("\n")
    return path


def stage_compose(cfg: PipelineConfig, run_dir: str, jobs: int = 1) -> str:
    with open(os.path.join(run_dir, "selection.json"), "r", encoding="utf-8") as f:
        selection = json.load(f)
    root = cfg.asset_root()
    instances = []
    ordinal = 0
    for entry in selection:
        for image_id in entry["image_ids"]:
            instances.append(
                compositor.SynthesisInstance(
                    ordinal=ordinal,
                    category=entry["category"],
                    image_path=os.path.join(root, "images", image_id + ".png"),
                    mask_path=os.path.join(root, "masks", image_id + ".png"),
                    source_id=image_id,
                )
            )
            ordinal += 1
    backgrounds = sorted(glob.glob(os.path.join(root, "backgrounds", "*.png")))
    out_dir = os.path.join(run_dir, "dataset")
    compositor.synthesize_dataset(
        instances, backgrounds, out_dir, cfg.compositor, seed=cfg.seed, jobs=jobs
    )
    return os.path.join(out_dir, "annotations.json")


def _filter_category_list(cfg: PipelineConfig) -> fpfilter.CategoryList:
    if cfg.filter.mode == fpfilter.ListMode.NOVEL_ONLY:
        names = list(cfg.novel_categories)
    else:
        names = cfg.all_categories()
    return fpfilter.CategoryList(names=names, mode=cfg.filter.mode)


def stage_filter(cfg: PipelineConfig, run_dir: str) -> str:
    root = cfg.asset_root()
    id_to_name = {v: k for k, v in cfg.category_ids().items()}
    dets = fpfilter.load_detections(os.path.join(root, "detections.json"), id_to_name)
    crops = embstore.l2_normalize(
        embstore.load_embeddings(os.path.join(root, "crops.emb"))
    )
    cat_list = _filter_category_list(cfg)
    texts, manifest = _load_pair(cfg, "texts")
    texts_n = embstore.l2_normalize(texts)
    by_cat = {e.category: e.row_index for e in manifest.entries}
    try:
        rows = [by_cat[name] for name in cat_list.names]
    except KeyError as exc:
        raise MissingAsset(f"no text embedding for category {exc}") from exc
    text_emb = embstore.EmbeddingMatrix(texts_n.data[rows], normalized=True)
    outcome = fpfilter.filter_detections(dets, crops, cat_list, text_emb, cfg.filter)
    ids = cfg.category_ids()
    kept_path = os.path.join(run_dir, "filtered.json")
    fpfilter.save_detections(outcome.kept, kept_path, ids)
    fpfilter.save_removed_report(outcome, os.path.join(run_dir, "removed.json"), ids)
    return kept_path


def stage_eval(cfg: PipelineConfig, run_dir: str, min_confidence: float = 0.0) -> str:
    root = cfg.asset_root()
    gt_path = os.path.join(root, "ground_truth.json")
    if not os.path.exists(gt_path):
        gt_path = os.path.join(run_dir, "dataset", "annotations.json")
    gts, _ = evaluator.load_coco_ground_truth(gt_path)
    id_to_name = {v: k for k, v in cfg.category_ids().items()}
    before = fpfilter.load_detections(os.path.join(root, "detections.json"), id_to_name)
    after_path = os.path.join(run_dir, "filtered.json")
    after = (
        fpfilter.load_detections(after_path, id_to_name)
        if os.path.exists(after_path)
        else before
    )
    path = os.path.join(run_dir, "metrics.json")
    evaluator.write_metrics_report(
        path,
        before,
        after,
        gts,
        cfg.novel_categories,
        min_confidence=min_confidence,
    )
    return path


STAGES = ("prompts", "select", "compose", "filter", "eval")


def run_pipeline(
    cfg: PipelineConfig,
    out_root: str,
    stages=STAGES,
    jobs: int = 1,
    min_confidence: float = 0.0,
):
    run_dir = os.path.join(out_root, f"run-{cfg.digest()}")
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "config.json"), "w", encoding="utf-8") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    artifacts = {}
    for stage in STAGES:
        if stage not in stages:
            continue
        try:
            if stage == "prompts":
                artifacts[stage] = stage_prompts(cfg, run_dir)
            elif stage == "select":
                artifacts[stage] = stage_select(cfg, run_dir)
            elif stage == "compose":
                artifacts[stage] = stage_compose(cfg, run_dir, jobs=jobs)
            elif stage == "filter":
                artifacts[stage] = stage_filter(cfg, run_dir)
            elif stage == "eval":
                artifacts[stage] = stage_eval(cfg, run_dir, min_confidence)
        except SynthdetError as exc:
            raise SynthdetError(f"stage {stage}: {exc}") from exc
    return run_dir, artifacts


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthdet",
        description="Synthetic-data curation pipeline for few-shot detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="pipeline YAML config")
        p.add_argument("--out", default="runs", help="output root directory")
        p.add_argument("--assets", help=f"asset root (or ${ASSET_ROOT_ENV})")
        p.add_argument("--seed", type=int, help="override global seed")
        p.add_argument("--jobs", type=int, default=1, help="worker cap")

    p = sub.add_parser("prompts", help="emit prompt strings per novel category")
    add_common(p)
    p.add_argument("--scheme", help="prompt scheme override")

    p = sub.add_parser("select", help="pick representative synthetic samples")
    add_common(p)
    p.add_argument("--strategy", help="selection strategy override")
    p.add_argument("--g", type=int, help="selected count per category")
    p.add_argument("--sigma", type=float, help="spectral kernel width")

    p = sub.add_parser("compose", help="crop and paste the selected samples")
    add_common(p)
    p.add_argument("--mode", choices=["box", "saliency", "segmentation"])
    p.add_argument("--scale-min", type=float, dest="scale_min")
    p.add_argument("--scale-max", type=float, dest="scale_max")
    p.add_argument("--overlap-max", type=float, dest="overlap_max")
    p.add_argument("--threshold", type=int, help="mask binarization threshold")

    p = sub.add_parser("filter", help="drop low-CLIP-score detections")
    add_common(p)
    p.add_argument("--clip-thresh", type=float, dest="clip_thresh")
    p.add_argument("--list-mode", choices=["novel", "all"], dest="list_mode")

    p = sub.add_parser("eval", help="AP50 and FP-ratio metrics")
    add_common(p)
    p.add_argument("--min-confidence", type=float, default=0.0, dest="min_confidence")

    p = sub.add_parser("run", help="run all stages in order")
    add_common(p)
    p.add_argument("--strategy")
    p.add_argument("--g", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--clip-thresh", type=float, dest="clip_thresh")
    p.add_argument("--list-mode", choices=["novel", "all"], dest="list_mode")
    p.add_argument("--stages", default=",".join(STAGES), help="comma-separated subset")
    return parser


def _apply_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    raw = cfg.to_dict()
    if getattr(args, "assets", None):
        raw["assets"] = args.assets
    else:
        raw["assets"] = cfg.assets
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
        raw["selection"]["seed"] = args.seed
    if getattr(args, "scheme", None):
        raw["prompt_scheme"] = args.scheme
    if getattr(args, "strategy", None):
        raw["selection"]["strategy"] = args.strategy
    if getattr(args, "g", None) is not None:
        raw["selection"]["g"] = args.g
    if getattr(args, "sigma", None) is not None:
        raw["selection"]["sigma"] = args.sigma
    if getattr(args, "mode", None):
        raw["compositor"]["mode"] = args.mode
    for key in ("scale_min", "scale_max", "overlap_max"):
        if getattr(args, key, None) is not None:
            raw["compositor"][key] = getattr(args, key)
    if getattr(args, "threshold", None) is not None:
        raw["compositor"]["threshold"] = args.threshold
    if getattr(args, "clip_thresh", None) is not None:
        raw["filter"]["threshold"] = args.clip_thresh
    if getattr(args, "list_mode", None):
        raw["filter"]["list_mode"] = args.list_mode
    return config_from_dict(raw)


_COMMAND_STAGES = {
    "prompts": ("prompts",),
    "select": ("select",),
    "compose": ("select", "compose"),
    "filter": ("filter",),
    "eval": ("eval",),
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "run":
            stages = tuple(s.strip() for s in args.stages.split(",") if s.strip())
        else:
            stages = _COMMAND_STAGES[args.command]
        run_dir, artifacts = run_pipeline(
            cfg,
            args.out,
            stages=stages,
            jobs=args.jobs,
            min_confidence=getattr(args, "min_confidence", 0.0),
        )
    except SynthdetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for stage, path in artifacts.items():
        print(f"{stage}: {path}")
    print(f"run directory: {run_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
