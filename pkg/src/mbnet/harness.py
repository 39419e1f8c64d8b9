"""Experiment runner: multi-run pipelines, sweeps, reports, and plots.

A pipeline run goes dataset -> (optional PCA preprocessing) -> one of
six training strategies -> embedding -> agglomerative clustering ->
accuracy.  Every run gets its own derived seed, every report echoes the
fully resolved configuration, and all files are written atomically so a
crashed run never leaves a truncated report behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from ._kernels import mix
from .data import Dataset, LabelVector, load_csv, round_half_up
from .ensemble import (
    EnsembleConfig,
    ensemble_to_json,
    meta_embedding,
    train_bottom,
    train_ensemble,
)
from .errors import ConfigError
from .evaluation import AhcConfig, accuracy, ahc
from .network import MbnConfig, train_mbn
from .reduction import pca_fit, pca_sparse, pca_transform
from .selection import SelectionConfig, SelectionResult, select

SCHEMA_VERSION = 1
PIPELINES = ("mbn_default", "mbn_fixed_delta", "mbn_e", "mbn_so", "mbn_sd", "mbn_rso")
_SELECTION_MODES = {"mbn_so": "so", "mbn_sd": "sd", "mbn_rso": "rso"}


@dataclass(frozen=True)
class ExperimentConfig:
    pipeline: str
    dataset: str | None = None
    label_column: int | None = None
    delimiter: str = ","
    metric: str = "euclidean"
    dataset_name: str | None = None
    runs: int = 5
    seed: int = 0
    seeds: tuple[int, ...] | None = None
    delta: float | None = None
    criterion: str | None = None
    n_models: int = 40
    delta_range: tuple[float, float] = (0.05, 0.95)
    clusterings_per_layer: int = 400
    bottom_fraction: float = 0.5
    feature_ratio: float = 0.5
    top_k: int | None = None
    n_selected: int | None = None
    embed_dim: int | None = None
    preprocess_dim: int = 100
    linkage: str = "average"
    ahc_metric: str | None = None
    n_classes: int | None = None
    budget: float = 1.0
    include_constant: bool = False
    alternate: bool = False
    output_dir: str | None = None
    save_ensemble: bool = False

    def __post_init__(self) -> None:
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not (0.0 < self.budget <= 1.0):
            raise ConfigError(f"budget must be in (0, 1], got {self.budget}")
        if self.pipeline == "mbn_fixed_delta":
            if self.delta is None:
                raise ConfigError("mbn_fixed_delta needs a delta value")
        if self.delta is not None and not (0.0 < self.delta < 1.0):
            raise ConfigError(f"delta must be in (0, 1), got {self.delta}")
        if self.pipeline in ("mbn_so", "mbn_rso") and self.criterion is None:
            raise ConfigError(f"{self.pipeline} needs a validity criterion")
        if self.seeds is not None:
            object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
            if len(self.seeds) != self.runs:
                raise ConfigError(f"need {self.runs} seeds, got {len(self.seeds)}")
        if isinstance(self.delta_range, list):
            object.__setattr__(self, "delta_range", tuple(self.delta_range))


def config_from_dict(doc: dict) -> ExperimentConfig:
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return ExperimentConfig(**doc)


def load_config(path: str) -> ExperimentConfig:
    """Read an experiment config from a TOML or JSON file."""
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    elif path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        raise ConfigError(f"config file must end in .toml or .json: {path}")
    return config_from_dict(doc)


@dataclass
class RunReport:
    schema_version: int
    pipeline: str
    dataset_name: str
    n: int
    d: int
    n_classes: int | None
    runs: list[dict]
    acc_mean: float | None
    acc_std: float | None
    warnings: list[str]
    config: dict
    total_seconds: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


def stable_view(doc: dict) -> dict:
    """A report dict with its wall-clock fields removed, for equality checks."""
    out = {k: v for k, v in doc.items() if k != "total_seconds"}
    out["runs"] = [{k: v for k, v in r.items() if k != "stage_seconds"} for r in doc["runs"]]
    return out


def _resolved(cfg: ExperimentConfig, ds: Dataset, c: int | None) -> dict:
    v_eff = max(1, round_half_up(cfg.clusterings_per_layer * cfg.budget))
    z_eff = max(1, round_half_up(cfg.n_models * cfg.budget))
    top_k = cfg.top_k
    if top_k is None:
        if c is None:
            raise ConfigError("need labels, n_classes, or an explicit top_k")
        top_k = round_half_up(1.5 * c)
    seeds = list(cfg.seeds) if cfg.seeds is not None else [mix(cfg.seed, r) for r in range(cfg.runs)]
    return {
        "v_eff": v_eff,
        "z_eff": z_eff,
        "top_k": top_k,
        "run_seeds": seeds,
        "ahc_metric": cfg.ahc_metric or ds.metric,
        "embed_dim": cfg.embed_dim,
    }


def _load_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.dataset is None:
        raise ConfigError("no dataset path configured")
    return load_csv(
        cfg.dataset,
        label_column=cfg.label_column,
        delimiter=cfg.delimiter,
        metric=cfg.metric,
        name=cfg.dataset_name,
    )


def _preprocess(ds: Dataset, dim: int) -> Dataset:
    if ds.d <= dim:
        return ds
    model = pca_fit(ds.features, dim)
    return Dataset(
        features=pca_transform(model, ds.features).values,
        labels=ds.labels,
        metric=ds.metric,
        name=ds.name,
    )


def _run_once(
    ds: Dataset,
    cfg: ExperimentConfig,
    res: dict,
    c: int | None,
    run_seed: int,
    n_jobs: int,
) -> dict:
    stage: dict[str, float] = {}
    base = MbnConfig(
        delta=cfg.delta if cfg.delta is not None else 0.5,
        clusterings_per_layer=res["v_eff"],
        bottom_fraction=cfg.bottom_fraction,
        top_k=res["top_k"],
        feature_ratio=cfg.feature_ratio,
        metric=ds.metric,
        seed=run_seed,
    )
    out: dict = {"seed": run_seed, "acc": None, "deltas": None, "weights": None, "chosen": None}
    ensemble_doc = None

    t0 = time.perf_counter()
    if cfg.pipeline in ("mbn_default", "mbn_fixed_delta"):
        bottom = train_bottom(ds, base, n_jobs=n_jobs)
        model = train_mbn(bottom, base, n_jobs=n_jobs)
        stage["train"] = time.perf_counter() - t0
        out["deltas"] = [base.delta]
        t0 = time.perf_counter()
        emb = pca_sparse(model.output_code, res["embed_dim"])
        stage["reduce"] = time.perf_counter() - t0
    else:
        ens = train_ensemble(
            ds,
            EnsembleConfig(
                base=base,
                n_models=res["z_eff"],
                delta_range=cfg.delta_range,
                seed=run_seed,
            ),
            n_jobs=n_jobs,
        )
        stage["train"] = time.perf_counter() - t0
        out["deltas"] = [float(d) for d in ens.deltas]
        t0 = time.perf_counter()
        if cfg.pipeline == "mbn_e":
            emb = meta_embedding(ens, res["embed_dim"])
            stage["reduce"] = time.perf_counter() - t0
        else:
            sel = select(
                ens,
                SelectionConfig(
                    mode=_SELECTION_MODES[cfg.pipeline],
                    criterion=cfg.criterion,
                    n_selected=cfg.n_selected,
                    n_classes=c,
                    embed_dim=res["embed_dim"],
                    linkage=cfg.linkage,
                    metric=res["ahc_metric"],
                    alternate=cfg.alternate,
                ),
            )
            stage["select"] = time.perf_counter() - t0
            emb = sel.selected_embedding
            out["weights"] = [float(w) for w in sel.weights]
            out["chosen"] = sel.chosen.tolist()
        if cfg.save_ensemble:
            ensemble_doc = ensemble_to_json(ens)

    if c is not None:
        t0 = time.perf_counter()
        pred = ahc(emb, AhcConfig(c=c, linkage=cfg.linkage, metric=res["ahc_metric"]))
        stage["cluster"] = time.perf_counter() - t0
        if ds.labels is not None:
            out["acc"] = accuracy(pred, LabelVector(ds.labels, int(ds.labels.max()) + 1)).acc
    out["stage_seconds"] = stage
    if ensemble_doc is not None:
        out["_ensemble_doc"] = ensemble_doc
    return out


def run_experiment(
    cfg: ExperimentConfig, dataset: Dataset | None = None, n_jobs: int = 1
) -> RunReport:
    """Run the configured pipeline `runs` times and aggregate accuracy."""
    started = time.perf_counter()
    warnings: list[str] = []
    ds = dataset if dataset is not None else _load_dataset(cfg)
    name = cfg.dataset_name or ds.name or "dataset"
    c = cfg.n_classes if cfg.n_classes is not None else ds.n_classes
    res = _resolved(cfg, ds, c)
    work = _preprocess(ds, cfg.preprocess_dim)
    if work is not ds:
        warnings.append(f"features reduced from {ds.d} to {work.d} dims before training")
    if c is None:
        warnings.append("class count unknown: clustering and accuracy skipped")
    elif ds.labels is None:
        warnings.append("no ground-truth labels: accuracy omitted")

    runs = []
    for r in range(cfg.runs):
        runs.append(_run_once(work, cfg, res, c, res["run_seeds"][r], n_jobs))

    ensemble_docs = [r.pop("_ensemble_doc", None) for r in runs]
    accs = [r["acc"] for r in runs if r["acc"] is not None]
    acc_mean = float(np.mean(accs)) if accs else None
    acc_std = float(np.std(accs, ddof=1)) if len(accs) > 1 else (0.0 if accs else None)

    echo = asdict(cfg)
    echo.update(
        {
            "v_eff": res["v_eff"],
            "z_eff": res["z_eff"],
            "top_k": res["top_k"],
            "run_seeds": res["run_seeds"],
            "ahc_metric": res["ahc_metric"],
            "delta_range": list(cfg.delta_range),
            "seeds": list(cfg.seeds) if cfg.seeds is not None else None,
        }
    )
    report = RunReport(
        schema_version=SCHEMA_VERSION,
        pipeline=cfg.pipeline,
        dataset_name=name,
        n=ds.n,
        d=ds.d,
        n_classes=c,
        runs=runs,
        acc_mean=acc_mean,
        acc_std=acc_std,
        warnings=warnings,
        config=echo,
        total_seconds=time.perf_counter() - started,
    )
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        write_json(report.to_json(), os.path.join(cfg.output_dir, "report.json"))
        _write_runs_csv(report, os.path.join(cfg.output_dir, "runs.csv"))
        if any(r["weights"] is not None for r in runs):
            _write_weights_csv(report, os.path.join(cfg.output_dir, "weights.csv"))
        for r, doc in enumerate(ensemble_docs):
            if doc is not None:
                write_json(doc, os.path.join(cfg.output_dir, f"ensemble_run{r}.json"))
    return report


def write_json(doc: dict, path: str) -> None:
    """Serialize and atomically replace path, so readers never see partial files."""
    text = json.dumps(doc, indent=2, allow_nan=True)
    _atomic_write(path, text)


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return "" if x is None else str(x)


def _write_csv_rows(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    _atomic_write(path, buf.getvalue())


def _write_runs_csv(report: RunReport, path: str) -> None:
    rows = [[i, r["seed"], r["acc"]] for i, r in enumerate(report.runs)]
    _write_csv_rows(path, ["run", "seed", "acc"], rows)


def _write_weights_csv(report: RunReport, path: str) -> None:
    rows = []
    for i, r in enumerate(report.runs):
        if r["weights"] is None:
            continue
        chosen = set(r["chosen"] or [])
        deltas = r["deltas"] or [None] * len(r["weights"])
        for z, w in enumerate(r["weights"]):
            rows.append([i, z, deltas[z], w, int(z in chosen)])
    _write_csv_rows(path, ["run", "model", "delta", "weight", "chosen"], rows)


def _plot_curve(xs, means, stds, xlabel: str, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": "mbnet"}):
        fig, ax = plt.subplots(figsize=(5.5, 3.5), dpi=100)
        ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("clustering accuracy")
        ax.set_ylim(0.0, 1.05)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def delta_sweep(cfg: ExperimentConfig, grid: list[float],
                dataset: Dataset | None = None, n_jobs: int = 1) -> dict:
    """Accuracy curve of the single-model pipeline across depth factors."""
    if not grid:
        raise ConfigError("delta grid is empty")
    for g in grid:
        if not (0.0 < g < 1.0):
            raise ConfigError(f"delta grid values must be in (0, 1), got {g}")
    ds = dataset if dataset is not None else _load_dataset(cfg)
    rows = []
    for g in grid:
        sub = replace(cfg, pipeline="mbn_fixed_delta", delta=float(g), output_dir=None)
        rep = run_experiment(sub, dataset=ds, n_jobs=n_jobs)
        rows.append(
            {
                "delta": float(g),
                "acc_mean": rep.acc_mean,
                "acc_std": rep.acc_std,
                "accs": [r["acc"] for r in rep.runs],
            }
        )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "sweep": "delta",
        "dataset_name": cfg.dataset_name or ds.name or "dataset",
        "rows": rows,
    }
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        _write_csv_rows(
            os.path.join(cfg.output_dir, "curve.csv"),
            ["delta", "acc_mean", "acc_std"],
            [[r["delta"], r["acc_mean"], r["acc_std"]] for r in rows],
        )
        write_json(doc, os.path.join(cfg.output_dir, "curve.json"))
        _plot_curve(
            [r["delta"] for r in rows],
            [r["acc_mean"] for r in rows],
            [r["acc_std"] for r in rows],
            "delta",
            os.path.join(cfg.output_dir, "curve.svg"),
        )
    return doc


def b_sweep(cfg: ExperimentConfig, grid: list[int],
            dataset: Dataset | None = None, n_jobs: int = 1) -> dict:
    """Accuracy curve of a selection pipeline across selected-model counts.

    The ensemble for each run seed is trained once and reused for every
    B value; results are identical to retraining because selection never
    mutates the ensemble.
    """
    if cfg.pipeline not in _SELECTION_MODES:
        raise ConfigError(f"b_sweep needs a selection pipeline, got {cfg.pipeline!r}")
    if not grid:
        raise ConfigError("B grid is empty")
    ds = dataset if dataset is not None else _load_dataset(cfg)
    c = cfg.n_classes if cfg.n_classes is not None else ds.n_classes
    res = _resolved(cfg, ds, c)
    for g in grid:
        if not (1 <= g <= res["z_eff"]):
            raise ConfigError(f"B={g} outside [1, {res['z_eff']}]")
    if c is None:
        raise ConfigError("b_sweep needs a class count")
    work = _preprocess(ds, cfg.preprocess_dim)
    truth = None
    if work.labels is not None:
        truth = LabelVector(work.labels, int(work.labels.max()) + 1)

    base_fields = dict(
        criterion=cfg.criterion,
        n_classes=c,
        embed_dim=res["embed_dim"],
        linkage=cfg.linkage,
        metric=res["ahc_metric"],
        alternate=cfg.alternate,
    )
    per_b: dict[int, list[float]] = {g: [] for g in grid}
    for run_seed in res["run_seeds"]:
        base = MbnConfig(
            delta=cfg.delta if cfg.delta is not None else 0.5,
            clusterings_per_layer=res["v_eff"],
            bottom_fraction=cfg.bottom_fraction,
            top_k=res["top_k"],
            feature_ratio=cfg.feature_ratio,
            metric=work.metric,
            seed=run_seed,
        )
        ens = train_ensemble(
            work,
            EnsembleConfig(
                base=base, n_models=res["z_eff"], delta_range=cfg.delta_range, seed=run_seed
            ),
            n_jobs=n_jobs,
        )
        for g in grid:
            sel = select(
                ens,
                SelectionConfig(
                    mode=_SELECTION_MODES[cfg.pipeline], n_selected=int(g), **base_fields
                ),
            )
            pred = ahc(
                sel.selected_embedding,
                AhcConfig(c=c, linkage=cfg.linkage, metric=res["ahc_metric"]),
            )
            if truth is not None:
                per_b[g].append(accuracy(pred, truth).acc)

    rows = []
    for g in grid:
        accs = per_b[g]
        rows.append(
            {
                "b": int(g),
                "acc_mean": float(np.mean(accs)) if accs else None,
                "acc_std": float(np.std(accs, ddof=1)) if len(accs) > 1 else (0.0 if accs else None),
                "accs": accs,
            }
        )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "sweep": "b",
        "dataset_name": cfg.dataset_name or ds.name or "dataset",
        "rows": rows,
    }
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        _write_csv_rows(
            os.path.join(cfg.output_dir, "curve.csv"),
            ["b", "acc_mean", "acc_std"],
            [[r["b"], r["acc_mean"], r["acc_std"]] for r in rows],
        )
        write_json(doc, os.path.join(cfg.output_dir, "curve.json"))
        _plot_curve(
            [r["b"] for r in rows],
            [r["acc_mean"] for r in rows],
            [r["acc_std"] for r in rows],
            "selected base models",
            os.path.join(cfg.output_dir, "curve.svg"),
        )
    return doc


def emit_weight_plot(
    result: SelectionResult,
    out_dir: str,
    deltas: list[float] | None = None,
    standalone_accs: list[float] | None = None,
    stem: str = "weights",
) -> tuple[str, str]:
    """Write the per-model weight CSV and a bit-stable SVG bar chart."""
    os.makedirs(out_dir, exist_ok=True)
    z_count = result.weights.shape[0]
    chosen = set(result.chosen.tolist())
    header = ["model", "delta", "weight", "standalone_acc", "chosen"]
    rows = []
    for z in range(z_count):
        rows.append(
            [
                z,
                None if deltas is None else deltas[z],
                float(result.weights[z]),
                None if standalone_accs is None else standalone_accs[z],
                int(z in chosen),
            ]
        )
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    _write_csv_rows(csv_path, header, rows)

    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    svg_path = os.path.join(out_dir, f"{stem}.svg")
    label = result.mode if result.criterion is None else f"{result.mode} ({result.criterion})"
    with plt.rc_context({"svg.hashsalt": "mbnet"}):
        fig, ax = plt.subplots(figsize=(6.0, 3.2), dpi=100)
        xs = np.arange(z_count)
        finite = np.where(np.isfinite(result.weights), result.weights, 0.0)
        colors = ["#d62728" if z in chosen else "#1f77b4" for z in range(z_count)]
        ax.bar(xs, finite, color=colors)
        ax.set_xlabel("model index")
        ax.set_ylabel("weight")
        ax.set_title(label)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return csv_path, svg_path
