"""Command-line surface: train, explain, evaluate, tune, generate.

Threshold precedence is flags over config file over built-in defaults
(0.2 / 0.08 / 0.7, quantile binarization at 0.7). Logs go to stderr
(level from the TBX_LOG environment variable); data goes to files under
--out. Exit code 0 means zero per-record errors; per-record failures
yield exit code 1 plus a machine-readable errors.json.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import synthgen
from .errors import TbxError
from .ingest import load_manifest, load_spc, save_spc
from .pipeline import ThresholdConfig, explain_batch, train_from_records
from .saliency import format_binarize_mode, parse_binarize_mode
from .sentence import DEFAULT_TEMPLATES, load_templates
from .tuning import (
    GridSpec,
    evaluate,
    fidelity,
    grid_search,
    standard_grid,
    write_config_scores_csv,
    write_confusion_csv,
    write_fold_scores_csv,
)

log = logging.getLogger("tbx")

_DEFAULTS = {"tc": 0.2, "tr": 0.08, "tp": 0.7, "binarize": "quantile:0.7"}


def _setup_logging() -> None:
    level = os.environ.get("TBX_LOG", "WARNING").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _resolve_config(args: argparse.Namespace) -> ThresholdConfig:
    values = dict(_DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            overrides = json.load(f)
        unknown = set(overrides) - set(values)
        if unknown:
            raise TbxError(f"{args.config}: unknown config keys {sorted(unknown)}")
        values.update(overrides)
    for key in ("tc", "tr", "tp", "binarize"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return ThresholdConfig(
        t_c=float(values["tc"]),
        t_r=float(values["tr"]),
        t_p=float(values["tp"]),
        binarize=parse_binarize_mode(str(values["binarize"])),
    )


def _load_templates(args: argparse.Namespace):
    if getattr(args, "templates", None):
        return load_templates(args.templates)
    return DEFAULT_TEMPLATES


def _write_errors(out: Path, name: str, errors: list[dict]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(json.dumps(errors, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    records = load_manifest(args.manifest)
    if not records:
        log.error("manifest %s is empty; nothing to train on", args.manifest)
        return 1
    model, errors = train_from_records(records, cfg)
    out = Path(args.out)
    model_path = Path(args.model) if args.model else out / "model.json"
    out.mkdir(parents=True, exist_ok=True)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_spc(model, model_path)
    log.info("trained %d object labels over %d classes -> %s",
             len(model.counts), len(model.class_names), model_path)
    if errors:
        _write_errors(out, "train_errors.json",
                      [{"image_id": i, "error": e} for i, e in errors])
        log.error("%d records failed during training", len(errors))
        return 1
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    templates = _load_templates(args)
    records = load_manifest(args.manifest)
    model = load_spc(args.model)
    outcomes = explain_batch(records, model, cfg, templates, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_errors = 0
    with open(out / "explanations.jsonl", "w", encoding="utf-8") as jf, open(
        out / "sentences.txt", "w", encoding="utf-8"
    ) as sf:
        for oc in outcomes:
            if oc.explanation is not None:
                line = {"image_id": oc.image_id, **oc.explanation.to_dict()}
                sf.write(f"{oc.image_id}: {oc.explanation.sentence}\n")
            else:
                n_errors += 1
                line = {"image_id": oc.image_id, "error": oc.error}
                sf.write(f"{oc.image_id}: ERROR {oc.error}\n")
            jf.write(json.dumps(line, sort_keys=True) + "\n")
    if n_errors:
        _write_errors(
            out,
            "errors.json",
            [{"image_id": o.image_id, "error": o.error} for o in outcomes if o.error],
        )
        log.error("%d of %d records failed", n_errors, len(outcomes))
        return 1
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    templates = _load_templates(args)
    records = load_manifest(args.manifest)
    model = load_spc(args.model)
    outcomes = explain_batch(records, model, cfg, templates, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failures = [o for o in outcomes if o.error]
    if failures:
        _write_errors(out, "errors.json",
                      [{"image_id": o.image_id, "error": o.error} for o in failures])
        log.error("%d of %d records failed; cannot evaluate", len(failures), len(outcomes))
        return 1
    explanations = [o.explanation for o in outcomes]
    report = evaluate(records, model, cfg, templates, explanations=explanations)
    doc = report.to_dict()
    doc["thresholds"] = {
        "t_c": cfg.t_c, "t_r": cfg.t_r, "t_p": cfg.t_p,
        "binarize": format_binarize_mode(cfg.binarize),
    }
    if args.fidelity:
        doc["fidelity"] = {
            "rule": args.fidelity_rule,
            "score": fidelity(records, explanations, rule=args.fidelity_rule),
        }
    (out / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    write_confusion_csv(report, out / "confusion.csv")
    print(f"accuracy {report.accuracy:.4f} over {report.n_records} records "
          f"(scenarios {report.scenario_counts})")
    return 0


def _load_grid(args: argparse.Namespace) -> GridSpec:
    if args.grid:
        with open(args.grid, encoding="utf-8") as f:
            doc = json.load(f)
        allowed = {"t_c_values", "t_r_multipliers", "t_p_values", "folds"}
        unknown = set(doc) - allowed
        if unknown:
            raise TbxError(f"{args.grid}: unknown grid keys {sorted(unknown)}")
        spec = GridSpec(
            t_c_values=tuple(doc.get("t_c_values", GridSpec.t_c_values)),
            t_r_multipliers=tuple(doc.get("t_r_multipliers", GridSpec.t_r_multipliers)),
            t_p_values=tuple(doc.get("t_p_values", GridSpec.t_p_values)),
            folds=doc.get("folds", 4),
        )
    else:
        spec = standard_grid()
    if args.folds is not None:
        spec = GridSpec(spec.t_c_values, spec.t_r_multipliers, spec.t_p_values, args.folds)
    return spec


def cmd_tune(args: argparse.Namespace) -> int:
    records = load_manifest(args.manifest)
    spec = _load_grid(args)
    mode = parse_binarize_mode(args.binarize) if args.binarize else parse_binarize_mode(
        _DEFAULTS["binarize"]
    )
    result = grid_search(records, spec, args.seed, binarize_mode=mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_fold_scores_csv(result.fold_scores, out / "fold_scores.csv")
    write_config_scores_csv(result.config_scores, out / "config_scores.csv")
    best = {
        "t_c": result.best.t_c,
        "t_r": result.best.t_r,
        "t_p": result.best.t_p,
        "binarize": format_binarize_mode(result.best.binarize),
        "cv_accuracy": result.best_score,
    }
    (out / "best_config.json").write_text(
        json.dumps(best, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"best config t_c={result.best.t_c} t_r={result.best.t_r} "
          f"t_p={result.best.t_p} (cv accuracy {result.best_score:.4f})")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    factory = {"demo": synthgen.demo_spec, "planted": synthgen.planted_threshold_spec}
    spec = factory[args.preset](seed=args.seed)
    manifest = synthgen.generate(spec, args.n, args.out)
    print(manifest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbx",
        description="Explain and statistically correct scene-classifier predictions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_threshold_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--tc", type=float, help="detection confidence threshold")
        p.add_argument("--tr", type=float, help="relevance threshold")
        p.add_argument("--tp", type=float, help="class probability threshold")
        p.add_argument("--binarize", help="mask rule, e.g. quantile:0.7 or absolute:0.5")
        p.add_argument("--config", help="JSON file with tc/tr/tp/binarize defaults")

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--manifest", required=True, help="dataset manifest (JSON lines)")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("train", help="learn object-class occurrence weights")
    add_common(p)
    add_threshold_flags(p)
    p.add_argument("--model", help="output model path (default <out>/model.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="write explanations for every record")
    add_common(p)
    add_threshold_flags(p)
    p.add_argument("--model", required=True, help="trained model path")
    p.add_argument("--templates", help="JSON template file")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("evaluate", help="accuracy report and confusion matrix")
    add_common(p)
    add_threshold_flags(p)
    p.add_argument("--model", required=True, help="trained model path")
    p.add_argument("--templates", help="JSON template file")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    p.add_argument("--fidelity", action="store_true",
                   help="also score explanations against annotations")
    p.add_argument("--fidelity-rule", choices=("any", "majority"), default="any")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tune", help="grid search with k-fold cross-validation")
    add_common(p)
    p.add_argument("--grid", help="JSON grid file (defaults to the standard 4x4x10 grid)")
    p.add_argument("--folds", type=int, help="override fold count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--binarize", help="mask rule used for every configuration")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("generate", help="emit a synthetic corpus")
    p.add_argument("--preset", choices=("demo", "planted"), default="demo")
    p.add_argument("--n", type=int, required=True, help="number of images")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TbxError as e:
        log.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
