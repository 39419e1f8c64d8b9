"""Command-line entry points for experiments, sweeps, and one-off operations.

Failures print a machine-readable JSON object to stderr and exit
nonzero, so scripted callers never have to scrape tracebacks.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .data import load_code, load_csv, load_labels, save_code
from .ensemble import ensemble_from_json
from .errors import MbnError
from .evaluation import AhcConfig, accuracy, ahc
from .harness import (
    ExperimentConfig,
    b_sweep,
    config_from_dict,
    delta_sweep,
    emit_weight_plot,
    load_config,
    run_experiment,
    write_json,
)
from .network import encode, model_from_json
from .selection import SelectionConfig, select


def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    doc: dict = {}
    if args.config:
        doc.update(load_config(args.config).__dict__)
    for pair in args.set or []:
        if "=" not in pair:
            raise MbnError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        doc[key] = _coerce(value)
    for key in (
        "dataset",
        "pipeline",
        "runs",
        "seed",
        "budget",
        "delta",
        "criterion",
        "n_selected",
        "n_classes",
        "label_column",
        "output_dir",
    ):
        value = getattr(args, key, None)
        if value is not None:
            doc[key] = value
    if args.save_ensemble:
        doc["save_ensemble"] = True
    return config_from_dict(doc)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON experiment config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config field (repeatable)")
    p.add_argument("--dataset", help="feature CSV path")
    p.add_argument("--pipeline", help="one of the six pipeline names")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=float, help="scale V and Z down for smoke runs")
    p.add_argument("--delta", type=float)
    p.add_argument("--criterion", help="SWC, PB, PBM, or VRC")
    p.add_argument("--n-selected", dest="n_selected", type=int, help="B, models to keep")
    p.add_argument("--n-classes", dest="n_classes", type=int)
    p.add_argument("--label-column", dest="label_column", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--save-ensemble", dest="save_ensemble", action="store_true")
    p.add_argument("--n-jobs", dest="n_jobs", type=int, default=1)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    report = run_experiment(cfg, n_jobs=args.n_jobs)
    line = {
        "pipeline": report.pipeline,
        "dataset": report.dataset_name,
        "acc_mean": report.acc_mean,
        "acc_std": report.acc_std,
        "seconds": round(report.total_seconds, 3),
    }
    print(json.dumps(line))
    return 0


def _parse_grid(text: str, kind) -> list:
    return [kind(tok) for tok in text.split(",") if tok.strip()]


def _cmd_sweep_delta(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    doc = delta_sweep(cfg, _parse_grid(args.grid, float), n_jobs=args.n_jobs)
    print(json.dumps({"rows": doc["rows"]}))
    return 0


def _cmd_sweep_b(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    doc = b_sweep(cfg, _parse_grid(args.grid, int), n_jobs=args.n_jobs)
    print(json.dumps({"rows": doc["rows"]}))
    return 0


def _cmd_encode(args: argparse.Namespace) -> int:
    with open(args.model, "r", encoding="utf-8") as fh:
        model = model_from_json(json.load(fh))
    code = load_code(args.code)
    save_code(encode(model, code, n_jobs=args.n_jobs), args.out)
    print(json.dumps({"out": args.out, "n": code.n}))
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    with open(args.ensemble, "r", encoding="utf-8") as fh:
        ens = ensemble_from_json(json.load(fh))
    cfg = SelectionConfig(
        mode=args.mode,
        criterion=args.criterion,
        n_selected=args.n_selected,
        n_classes=args.n_classes,
        embed_dim=args.embed_dim,
        linkage=args.linkage,
        metric=args.metric,
        alternate=args.alternate,
    )
    result = select(ens, cfg)
    out = {"chosen": result.chosen.tolist(), "weights": result.weights.tolist()}
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        write_json(result.to_json(), f"{args.output_dir}/selection.json")
        emit_weight_plot(result, args.output_dir, deltas=[float(d) for d in ens.deltas])
        save_code(result.selected_code, f"{args.output_dir}/selected_code.json")
    print(json.dumps(out))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    emb = load_csv(args.embedding, label_column=None, delimiter=args.delimiter)
    pred = ahc(emb.features, AhcConfig(c=args.n_classes, linkage=args.linkage, metric=args.metric))
    doc: dict = {"labels": pred.labels.tolist(), "c": pred.c}
    if args.truth:
        truth = load_labels(args.truth, delimiter=args.delimiter)
        doc["accuracy"] = accuracy(pred, truth).to_json()
    if args.out:
        write_json(doc, args.out)
    summary = {"c": pred.c}
    if "accuracy" in doc:
        summary["acc"] = doc["accuracy"]["acc"]
    print(json.dumps(summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbnet",
        description="Multilayer bootstrap network ensembles: training, selection, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one pipeline for several seeded repeats")
    _add_run_flags(p)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep-delta", help="accuracy curve over the depth factor")
    _add_run_flags(p)
    p.add_argument("--grid", required=True, help="comma-separated delta values")
    p.set_defaults(fn=_cmd_sweep_delta)

    p = sub.add_parser("sweep-b", help="accuracy curve over the selected-model count")
    _add_run_flags(p)
    p.add_argument("--grid", required=True, help="comma-separated B values")
    p.set_defaults(fn=_cmd_sweep_b)

    p = sub.add_parser("encode", help="push a bottom-layer code through a saved model")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--code", required=True, help="bottom-layer code JSON file")
    p.add_argument("--out", required=True, help="output code JSON file")
    p.add_argument("--n-jobs", dest="n_jobs", type=int, default=1)
    p.set_defaults(fn=_cmd_encode)

    p = sub.add_parser("select", help="rank and pick base models from a saved ensemble")
    p.add_argument("--ensemble", required=True, help="ensemble JSON file")
    p.add_argument("--mode", required=True, choices=["so", "sd", "rso"])
    p.add_argument("--criterion")
    p.add_argument("--n-selected", dest="n_selected", type=int)
    p.add_argument("--n-classes", dest="n_classes", type=int)
    p.add_argument("--embed-dim", dest="embed_dim", type=int)
    p.add_argument("--linkage", default="average")
    p.add_argument("--metric", default="euclidean")
    p.add_argument("--alternate", action="store_true")
    p.add_argument("--output-dir", dest="output_dir")
    p.set_defaults(fn=_cmd_select)

    p = sub.add_parser("eval", help="cluster an embedding CSV and score against truth")
    p.add_argument("--embedding", required=True, help="embedding CSV (rows = points)")
    p.add_argument("--truth", help="single-column label CSV")
    p.add_argument("--n-classes", dest="n_classes", type=int, required=True)
    p.add_argument("--linkage", default="average")
    p.add_argument("--metric", default="euclidean", choices=["euclidean", "cosine"])
    p.add_argument("--delimiter", default=",")
    p.add_argument("--out", help="write the full result JSON here")
    p.set_defaults(fn=_cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (MbnError, ValueError, OSError, KeyError) as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
