"""Command-line front end.

Subcommands: ``run`` (scenario x configuration cells), ``grid-search`` (the
exhaustive pipeline sweep), ``synth`` (synthetic dataset emission),
``plots`` (SVG figures from report files), ``validate`` (dataset schema
check).  Every report is plain JSON/CSV/SVG and byte-reproducible for a
fixed config, dataset, and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import experiment, gbdt, prep1d, search, synth
from .core import load_dataset

CACHE_ENV = "SPECTRAFUSE_CACHE"


def _fail(message: str, kind: str = "error", out_dir: Path | None = None) -> int:
    payload = json.dumps({"error": message, "kind": kind}, sort_keys=True)
    print(payload, file=sys.stderr)
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "error.json").write_text(payload + "\n", encoding="utf-8")
        except OSError:
            pass
    return 1


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_config(path: str) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _gbdt_params(cfg: dict) -> gbdt.GBDTParams:
    overrides = cfg.get("gbdt", {})
    base = gbdt.GBDTParams().to_dict()
    base.update(overrides)
    return gbdt.GBDTParams.from_dict(base)


def _write_roc_csv(path: Path, cell: experiment.CellResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "fpr", "tpr"])
        for f, (fpr, tpr) in enumerate(cell.cv.fold_rocs):
            for a, b in zip(fpr, tpr):
                writer.writerow([f, repr(float(a)), repr(float(b))])
        for a, b in zip(cell.cv.mean_fpr, cell.cv.mean_tpr):
            writer.writerow(["mean", repr(float(a)), repr(float(b))])
        for a, b in zip(cell.cv.mean_fpr, cell.cv.std_tpr):
            writer.writerow(["std", repr(float(a)), repr(float(b))])


def _write_cell(out_dir: Path, cell: experiment.CellResult, seed: int, threshold: float) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics = {
        "scenario": cell.scenario,
        "configuration": cell.name,
        "seed": seed,
        "threshold": threshold,
        **cell.cv.summary.to_json_dict(),
    }
    _dump_json(out_dir / "metrics.json", metrics)
    _write_roc_csv(out_dir / f"roc_{cell.scenario}_{cell.name}.csv", cell)
    _dump_json(out_dir / "feature_names.json", cell.feature_names)
    if cell.learning_curve is not None:
        with open(out_dir / "learning_curve.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fraction", "n_train_mean", "auc_mean", "auc_std"])
            for row in cell.learning_curve:
                writer.writerow([repr(float(row["fraction"])), repr(float(row["n_train_mean"])),
                                 repr(float(row["auc_mean"])), repr(float(row["auc_std"]))])
    if cell.pca:
        for modality, (ids, tags, coords, evr) in cell.pca.items():
            with open(out_dir / f"pca_{modality}.csv", "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["patient_id", "group", "pc1", "pc2"])
                for pid, tag, (x, y) in zip(ids, tags, coords):
                    writer.writerow([pid, tag, repr(float(x)), repr(float(y))])
            _dump_json(out_dir / f"pca_{modality}_variance.json",
                       {"pc1": float(evr[0]), "pc2": float(evr[1])})


def _cell_spec_list(cfg: dict) -> list[tuple[str, tuple[str, ...]]]:
    if cfg.get("suite"):
        return [(sc, mods) for sc in experiment.SCENARIOS
                for mods in experiment.CONFIGURATIONS]
    scenario = cfg.get("scenario")
    modalities = tuple(cfg.get("modalities", ()))
    if scenario is None or not modalities:
        raise ValueError("config needs either 'suite': true or 'scenario' + 'modalities'")
    return [(scenario, modalities)]


def _run_one_cell(args):
    manifest, ftir_cfg_dict, scenario, modalities, params_dict, k, seed, threshold, fractions, out = args
    tables = load_dataset(manifest)
    study = experiment.preprocess_study(
        tables, prep1d.PipelineConfig.from_dict(ftir_cfg_dict))
    cell = experiment.run_cell(
        study, scenario, modalities,
        params=gbdt.GBDTParams.from_dict(params_dict), k=k, seed=seed,
        threshold=threshold, fractions=fractions)
    _write_cell(Path(out), cell, seed, threshold)
    return f"{scenario}_{experiment.config_name(modalities)}"


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    out_root = Path(args.out or cfg.get("out", "reports"))
    try:
        cells = _cell_spec_list(cfg)
        manifest = cfg["dataset"]
        cv = cfg.get("cv", {})
        k = int(cv.get("k", 10))
        seed = int(args.seed if args.seed is not None else cv.get("seed", 0))
        threshold = float(args.threshold if args.threshold is not None
                          else cfg.get("threshold", 0.5))
        fractions = cfg.get("learning_curve")
        params = _gbdt_params(cfg)
        ftir_cfg = (prep1d.PipelineConfig.from_dict(cfg["ftir_pipeline"])
                    if "ftir_pipeline" in cfg else prep1d.DEFAULT_FTIR_PIPELINE)

        if args.jobs > 1 and len(cells) > 1:
            work = [
                (manifest, ftir_cfg.to_dict(), sc, mods, params.to_dict(), k, seed,
                 threshold, fractions,
                 str(out_root / f"{sc}_{experiment.config_name(mods)}"))
                for sc, mods in cells
            ]
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                done = list(pool.map(_run_one_cell, work))
        else:
            tables = load_dataset(manifest)
            study = experiment.preprocess_study(tables, ftir_cfg)
            done = []
            for scenario, modalities in cells:
                cell = experiment.run_cell(
                    study, scenario, modalities, params=params, k=k, seed=seed,
                    threshold=threshold, fractions=fractions)
                cell_dir = out_root / f"{scenario}_{cell.name}"
                _write_cell(cell_dir, cell, seed, threshold)
                done.append(f"{scenario}_{cell.name}")
        for name in done:
            print(f"wrote {out_root / name}")
        return 0
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        return _fail(str(exc), kind=type(exc).__name__, out_dir=out_root)


def cmd_grid_search(args) -> int:
    cfg = _load_config(args.config)
    out_root = Path(args.out or cfg.get("out", "grid"))
    try:
        tables = load_dataset(cfg["dataset"])
        cv = cfg.get("cv", {})
        k = int(cv.get("k", 10))
        seed = int(args.seed if args.seed is not None else cv.get("seed", 0))
        params = _gbdt_params(cfg)
        scenarios = tuple(cfg.get("scenarios", ("breast", "colon")))

        cache_dir = os.environ.get(CACHE_ENV) or cfg.get("cache") or str(out_root / "cache")
        cache_path = Path(cache_dir) / "sweep.jsonl"
        report = search.run_search(
            tables, scenarios=scenarios, params=params, k=k, seed=seed,
            cache_path=cache_path, jobs=args.jobs)

        out_root.mkdir(parents=True, exist_ok=True)
        with open(out_root / "grid_results.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            stage_names = [name for name, _ in prep1d.enumerate_pipeline_axes()]
            writer.writerow(stage_names + [f"auc_{s}" for s in scenarios]
                            + ["worst_case", "flagged"])
            for res in report.results:
                d = res.config.to_dict()
                row = [d[name] for name in stage_names]
                row += ["" if res.scenario_aucs[s] is None else repr(float(res.scenario_aucs[s]))
                        for s in scenarios]
                row += [repr(float(res.worst_case)), int(res.flagged)]
                writer.writerow(row)
        _dump_json(out_root / "winner.json", {
            "config": report.winner.config.to_dict(),
            "scenario_aucs": report.winner.scenario_aucs,
            "worst_case": report.winner.worst_case,
        })
        print(f"evaluated {report.n_evaluated} candidates "
              f"({len(report.results) - report.n_evaluated} from cache)")
        print(f"wrote {out_root / 'grid_results.csv'} and {out_root / 'winner.json'}")
        return 0
    except Exception as exc:  # noqa: BLE001
        return _fail(str(exc), kind=type(exc).__name__, out_dir=out_root)


def cmd_synth(args) -> int:
    try:
        spec_dict = _load_config(args.spec)
        if args.seed is not None:
            spec_dict["seed"] = args.seed
        spec = synth.SynthSpec.from_dict(spec_dict)
        manifest = synth.write_dataset(spec, args.out)
        print(f"wrote {manifest}")
        return 0
    except Exception as exc:  # noqa: BLE001
        return _fail(str(exc), kind=type(exc).__name__)


def _read_roc_csv(path: Path):
    folds: dict[str, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for fold, a, b in reader:
            folds.setdefault(fold, []).append((float(a), float(b)))
    mean = np.array(folds["mean"])
    std = np.array(folds["std"])
    return mean[:, 0], mean[:, 1], std[:, 1]


def cmd_plots(args) -> int:
    from . import plots

    report_dir = Path(args.report)
    out_dir = Path(args.out or report_dir)
    try:
        cell_dirs = sorted(d for d in report_dir.iterdir()
                           if d.is_dir() and (d / "metrics.json").exists())
        if (report_dir / "metrics.json").exists():
            cell_dirs.insert(0, report_dir)
        if not cell_dirs:
            raise FileNotFoundError(f"no metrics.json found under {report_dir}")

        out_dir.mkdir(parents=True, exist_ok=True)
        by_scenario: dict[str, dict] = {}
        wrote = []
        for cell_dir in cell_dirs:
            meta = json.loads((cell_dir / "metrics.json").read_text(encoding="utf-8"))
            scenario, name = meta["scenario"], meta["configuration"]
            roc_path = cell_dir / f"roc_{scenario}_{name}.csv"
            if roc_path.exists():
                by_scenario.setdefault(scenario, {})[name] = _read_roc_csv(roc_path)
            lc_path = cell_dir / "learning_curve.csv"
            if lc_path.exists():
                with open(lc_path, newline="", encoding="utf-8") as fh:
                    reader = csv.DictReader(fh)
                    rows = [{k: float(v) for k, v in row.items()} for row in reader]
                p = plots.learning_curve_svg(
                    out_dir / f"learning_curve_{scenario}_{name}.svg", rows,
                    f"Learning curve: {scenario}, {name}")
                wrote.append(p)
            for pca_path in sorted(cell_dir.glob("pca_*.csv")):
                modality = pca_path.stem.split("_", 1)[1]
                var = json.loads(
                    (cell_dir / f"pca_{modality}_variance.json").read_text(encoding="utf-8"))
                evr = [var["pc1"], var["pc2"]]
                with open(pca_path, newline="", encoding="utf-8") as fh:
                    reader = csv.reader(fh)
                    next(reader)
                    ids, tags, xy = [], [], []
                    for pid, tag, x, y in reader:
                        ids.append(pid)
                        tags.append(tag)
                        xy.append((float(x), float(y)))
                p = plots.pca_svg(
                    out_dir / f"pca_{scenario}_{name}_{modality}.svg",
                    tags, np.array(xy), evr,
                    f"PCA: {modality} ({scenario}, {name})")
                wrote.append(p)
        for scenario, curves in by_scenario.items():
            p = plots.roc_svg(out_dir / f"roc_{scenario}.svg", curves,
                              f"Mean ROC ({scenario})")
            wrote.append(p)
        for p in wrote:
            print(f"wrote {p}")
        return 0
    except Exception as exc:  # noqa: BLE001
        return _fail(str(exc), kind=type(exc).__name__)


def cmd_validate(args) -> int:
    try:
        tables = load_dataset(args.dataset)
        counts = {m: len(t) for m, t in tables.items()}
        print(json.dumps({"ok": True, "records": counts}, sort_keys=True))
        return 0
    except Exception as exc:  # noqa: BLE001
        print(json.dumps({"ok": False, "error": str(exc)}, sort_keys=True))
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectrafuse",
        description="Multimodal spectroscopic preprocessing, fusion, and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scenario x configuration cells")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--threshold", type=float, default=None)
    p_run.set_defaults(func=cmd_run)

    p_grid = sub.add_parser("grid-search", help="exhaustive pipeline sweep")
    p_grid.add_argument("--config", required=True)
    p_grid.add_argument("--out", default=None)
    p_grid.add_argument("--seed", type=int, default=None)
    p_grid.add_argument("--jobs", type=int, default=1)
    p_grid.set_defaults(func=cmd_grid_search)

    p_synth = sub.add_parser("synth", help="write a synthetic dataset")
    p_synth.add_argument("--spec", required=True)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.set_defaults(func=cmd_synth)

    p_plots = sub.add_parser("plots", help="render SVG figures from reports")
    p_plots.add_argument("--report", required=True)
    p_plots.add_argument("--out", default=None)
    p_plots.set_defaults(func=cmd_plots)

    p_val = sub.add_parser("validate", help="schema-check a dataset manifest")
    p_val.add_argument("--dataset", required=True)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
