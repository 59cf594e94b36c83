"""Command-line harness: ``python -m mufinns <command> [--config run.json] [--out DIR] [--seed N]``.

Commands share one run directory (``--out``, else ``output_dir`` from the
config; relative paths are placed under ``$MUFINNS_OUTPUT_ROOT`` when set):

=========  =====================================================================
synth      synthetic traces + ``data/manifest.json``
ingest     validated canonical CSVs in ``ingested/`` + ``ingest_report.json``
fit-lofi   ``trend.json``, ``lofi_grid*.csv``, ``fit_report.json``
train      ``model.json``, ``loss_history.csv``, ``train_summary.json``
evaluate   ``predictions/<condition>.csv``, ``summary_rmse.csv``
predict    ``predictions.csv`` for a CSV of raw inputs (``--input``)
bench      benchmark suites with pass/fail lines, ``bench_report.json``
=========  =====================================================================

Exit codes: 0 success, 1 validation failure (bad config, data or a missed
benchmark threshold, a fit with too little data), 2 numerical failure
(optimizer abort, non-finite values, singular linear algebra).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import benchmarks, lofi, pipeline, synth, thermo
from .config import ConfigError, RunConfig
from .dataset import (CaseCondition, DataError, FlameTrace, HoldoutSpec, ingest_traces, load_registry,
                      read_trace_csv)
from .model import CompoundLossConfig, MufinnModel, forward_mf, init_model, train
from .optim import OptimizerError

log = logging.getLogger("mufinns")

OUTPUT_ROOT_ENV = "MUFINNS_OUTPUT_ROOT"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2
PREDICTION_COLUMNS = ("abscissa", "hifi_mean", "lofi", "prediction", "split_tag")


# ---------------------------------------------------------------------------
# helpers


def resolve_out(out: Optional[str], cfg: RunConfig) -> Path:
    p = Path(out or cfg.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not p.is_absolute():
        p = Path(root) / p
    return p


def _label(c: CaseCondition) -> str:
    return f"{c.case_id}_u{c.u_value:g}_P{c.P_value:g}".replace(".", "p")


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _registry(cfg: RunConfig) -> Dict[str, CaseCondition]:
    return {c.case_id: c for c in load_registry(cfg.data.registry)}


def _condition(entry: dict, registry: Dict[str, CaseCondition]) -> CaseCondition:
    case = entry.get("case")
    if case not in registry:
        raise DataError(f"unknown case {case!r}")
    base = registry[case]
    u = entry.get("u_prime")
    P = entry.get("P")
    if u is None and base.u_prime[0] != base.u_prime[1]:
        raise DataError(f"case {case}: u_prime level required")
    if P is None and base.P[0] != base.P[1]:
        raise DataError(f"case {case}: pressure level required")
    return base.at(u_prime=u, P=P)


def _read_manifest(path: Path) -> List[dict]:
    if path.is_dir():
        path = path / "manifest.json"
    if not path.exists():
        raise DataError(f"no data: {path} not found")
    entries = json.loads(path.read_text()).get("entries", [])
    if not entries:
        raise DataError(f"no data: {path} lists no files")
    base = path.parent
    for e in entries:
        e["path"] = str(base / e["file"])
    return entries


# ---------------------------------------------------------------------------
# synth


_SYNTH_DEFAULTS = {
    "flame": ("V", list(benchmarks.FLAME_LEVELS), 15, (0.005, 0.05)),
    "pressure_sweep": ("VII", [0.1, 0.3, 0.5, 0.7, 1.0], 40, (0.002, 0.02)),
    "pressure_trace": ("V", [0.3, 0.6, 0.9, 1.2, 1.5], 3000, (0.0, 0.06)),
    "forrester": (None, None, 21, (0.0, 1.0)),
}


def cmd_synth(cfg: RunConfig, out: Path) -> int:
    s = cfg.synth
    if s.kind not in _SYNTH_DEFAULTS:
        raise ConfigError(f"synth.kind must be one of {sorted(_SYNTH_DEFAULTS)}")
    case_id, levels, n, t_range = _SYNTH_DEFAULTS[s.kind]
    case_id = s.case or case_id
    levels = s.levels or levels
    n = s.n_times or n
    t_range = s.t_range or t_range
    data = out / "data"
    data.mkdir(parents=True, exist_ok=True)
    entries = []
    if s.kind == "forrester":
        x = np.linspace(t_range[0], t_range[1], n)
        yl, yh = synth.forrester_pair(x)
        with open(data / "forrester.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y_lf", "y_hf"])
            w.writerows(zip(x.tolist(), yl.tolist(), yh.tolist()))
        print(f"wrote {data / 'forrester.csv'} ({n} points)")
        return EXIT_OK
    case = _registry(cfg)[case_id]
    times = np.linspace(t_range[0], t_range[1], n)
    if s.kind == "flame":
        area, radius = synth.default_flame_trends(reference=(case.T, case.P_value))
        spec = synth.SyntheticFlameSpec(area, radius, s.amplitude, s.frequency, s.noise_std, cfg.seed, s.realizations)
        traces, _ = synth.generate_flame_case(spec, [case.at(u_prime=u) for u in levels], times)
    elif s.kind == "pressure_sweep":
        spec = synth.PressureSweepSpec(tuple(levels), noise_std=s.noise_std, seed=cfg.seed,
                                       realizations=s.realizations)
        traces = synth.generate_pressure_sweep(spec, case, times)
    else:
        for k, u in enumerate(levels):
            cond = case.at(u_prime=u)
            for rep in range(s.realizations):
                tr = synth.synthetic_pressure_trace(P0=cond.P_value, Pf=cond.P_value * 8, duration=0.06 / (1 + u),
                                                    n=n, noise_std=s.noise_std * 0.01, seed=cfg.seed + 1000 * k + rep)
                name = f"{_label(cond)}_r{rep}.pressure.csv"
                thermo.write_pressure_csv(data / name, tr)
                entries.append({"file": name, "kind": "pressure", "case": cond.case_id,
                                "u_prime": cond.u_value, "P": cond.P_value, "realization": rep})
        traces = []
    for tr in traces:
        name = f"{_label(tr.condition)}_r{tr.realization_id}.csv"
        tr.to_csv(data / name)
        entries.append({"file": name, "kind": "trace", "case": tr.condition.case_id,
                        "u_prime": tr.condition.u_value, "P": tr.condition.P_value,
                        "realization": tr.realization_id})
    _write_json(data / "manifest.json", {"kind": s.kind, "seed": cfg.seed, "entries": entries})
    print(f"wrote {len(entries)} files and {data / 'manifest.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ingest


def cmd_ingest(cfg: RunConfig, out: Path) -> int:
    src = Path(cfg.data.input) if cfg.data.input else out / "data"
    entries = _read_manifest(src)
    registry = _registry(cfg)
    dest = out / "ingested"
    dest.mkdir(parents=True, exist_ok=True)
    accepted, rejected = [], []
    pcfg = cfg.pipeline_config()
    for e in entries:
        try:
            cond = _condition(e, registry)
            kind = e.get("kind", "trace")
            stem = f"{_label(cond)}_r{e.get('realization', 0)}"
            if kind == "trace":
                tr = ingest_traces([e["path"]], cond)[0]
                name = stem + ".csv"
                tr.to_csv(dest / name)
                flags = tr.flags
            elif kind == "pressure":
                raw, smooth = thermo.process_pressure_trace(thermo.read_pressure_csv(e["path"]), pcfg)
                name = stem + ".burning.csv"
                smooth.to_csv(dest / name)
                raw.to_csv(dest / (stem + ".burning_raw.csv"))
                flags = []
            else:
                raise DataError(f"unknown entry kind {kind!r}")
        except (DataError, ValueError, OSError, KeyError) as exc:
            rejected.append({"file": e.get("file"), "error": str(exc)})
            print(f"REJECTED {e.get('file')}: {exc}", file=sys.stderr)
            continue
        accepted.append({"file": name, "kind": "trace" if kind == "trace" else "burning",
                         "case": cond.case_id, "u_prime": cond.u_value, "P": cond.P_value,
                         "realization": e.get("realization", 0), "flags": flags, "source": e.get("file")})
    _write_json(dest / "manifest.json", {"entries": accepted})
    _write_json(out / "ingest_report.json", {"accepted": accepted, "rejected": rejected})
    print(f"ingested {len(accepted)} file(s), rejected {len(rejected)}")
    return EXIT_VALIDATION if rejected else EXIT_OK


def load_curves(cfg: RunConfig, out: Path, target: str) -> List[pipeline.Curve]:
    entries = _read_manifest(out / "ingested")
    registry = _registry(cfg)
    traces, burning = [], {}
    for e in entries:
        cond = _condition(e, registry)
        if e["kind"] == "trace":
            t, A, r = read_trace_csv(e["path"])
            traces.append(FlameTrace(cond, int(e.get("realization", 0)), t, A, r))
        else:
            burning.setdefault(cond, []).append(thermo.BurningCurve.from_csv(e["path"]))
    if target == "u_tm":
        if not burning:
            raise DataError("target u_tm needs ingested pressure traces")
        return [pipeline.Curve(c, *_mean_curve(bs), abscissa="r") for c, bs in burning.items()]
    if not traces:
        raise DataError(f"target {target} needs ingested flame traces")
    return pipeline.curves_from_traces(traces, target)


def _mean_curve(curves: Sequence[thermo.BurningCurve]):
    """Average burning curves on the first curve's radii inside the common range."""
    lo = max(c.r[0] for c in curves)
    hi = min(c.r[-1] for c in curves)
    grid = curves[0].r[(curves[0].r >= lo) & (curves[0].r <= hi)]
    if grid.size == 0:
        raise DataError("burning-curve replicates do not overlap in radius")
    return grid, np.mean([np.interp(grid, c.r, c.u_tm) for c in curves], axis=0)


# ---------------------------------------------------------------------------
# fit-lofi


def cmd_fit_lofi(cfg: RunConfig, out: Path) -> int:
    task = cfg.task()
    if task.target == "u_tm" and task.kind != "linear_r":
        raise ConfigError("target u_tm requires lofi.kind = linear_r")
    curves = load_curves(cfg, out, task.target)
    holdout = cfg.holdout_spec()
    train_c, _ = pipeline.split_curves(curves, holdout)
    trend = pipeline.fit_trend(task, train_c)
    for old in out.glob("lofi_grid*.csv"):
        old.unlink()
    grids = pipeline.lofi_grids(task, trend, curves)
    names = ["lofi_grid.csv"] if len(grids) == 1 else [f"lofi_grid_{k}.csv" for k in range(len(grids))]
    for g, name in zip(grids, names):
        g.to_csv(out / name)
    _write_json(out / "trend.json", {"format": "mufinn-trend", "task": task.to_dict(),
                                     "holdout": holdout.to_dict() if holdout else None,
                                     "trend": trend.to_dict()})
    residuals = []
    for c in train_c:
        fit = pipeline.evaluate_trend(task, trend, c.columns())
        res = task.out(fit) - task.out(c.y) if task.kind == "log_quadratic" else fit - c.y
        residuals.append({"condition": _label(c.condition), "rms": float(np.sqrt(np.mean(res ** 2))),
                          "max_abs": float(np.max(np.abs(res)))})
    notices = []
    if task.kind == "log_quadratic" and len(trend.correction.offsets) <= 1:
        notices.append("single thermodynamic condition: thermo correction skipped")
    _write_json(out / "fit_report.json", {"kind": task.kind, "residual_space": "log" if task.kind == "log_quadratic"
                                          else "linear", "curves": residuals, "notices": notices})
    for n in notices:
        print(f"notice: {n}")
    worst = max(r["rms"] for r in residuals)
    print(f"fitted {task.kind} trend on {len(train_c)} curve(s); worst residual rms {worst:.3e}; "
          f"{len(grids)} grid file(s)")
    return EXIT_OK


def _load_trend(out: Path):
    p = out / "trend.json"
    if not p.exists():
        raise DataError(f"{p} not found; run fit-lofi first")
    d = json.loads(p.read_text())
    return pipeline.Task.from_dict(d["task"]), lofi.trend_from_dict(d["trend"]), d


# ---------------------------------------------------------------------------
# train


def _forrester_data(x_hf=benchmarks.FORRESTER_HF_X, n_lf=21):
    xl = np.linspace(0.0, 1.0, n_lf)
    xh = np.asarray(x_hf, dtype=np.float64)
    return (xl, synth.forrester_lf(xl)), (xh, synth.forrester_hf(xh))


def cmd_train(cfg: RunConfig, out: Path) -> int:
    settings = cfg.train_settings()
    out.mkdir(parents=True, exist_ok=True)
    if cfg.data.source == "forrester":
        lf, hf = _forrester_data()
        model0 = init_model(lf, hf, settings.lf_hidden, settings.nl_hidden, settings.seed)
        model, report = train(model0, lf, hf, settings.loss, settings.adam, settings.lbfgs)
        model.provenance.update({"source": "forrester", "seed": settings.seed})
        xt = np.linspace(0.0, 1.0, 100)
        _, y_mf = forward_mf(model, xt)
        summary = {"source": "forrester",
                   "test_rmse": synth.evaluate_rmse(y_mf, synth.forrester_hf(xt)) / model.norm.y_std}
    else:
        task, trend, doc = _load_trend(out)
        holdout = cfg.holdout_spec()
        if (holdout.to_dict() if holdout else None) != doc["holdout"]:
            raise ConfigError("holdout differs from the one used by fit-lofi; refit the trend")
        curves = load_curves(cfg, out, task.target)
        train_c, test_c = pipeline.split_curves(curves, holdout)
        grids = [lofi.LofiGrid.from_csv(p) for p in sorted(out.glob("lofi_grid*.csv"))]
        if not grids:
            raise DataError("no lofi_grid*.csv found; run fit-lofi first")
        model, report, inputs = pipeline.train_on_trend(task, trend, curves, train_c, settings, holdout, grids)
        model.provenance["train_conditions"] = [_label(c.condition) for c in train_c]
        _, tr, te = pipeline.score(task, model, trend, inputs, train_c, test_c)
        summary = {"source": "manifest", "train_rmse": tr, "test_rmse": te}
    summary.update(lbfgs_status=report.lbfgs_status, final_loss=report.final.as_dict(),
                   adam_iters=len(report.adam_history), lbfgs_iters=len(report.lbfgs_history))
    model.save(out / "model.json")
    report.to_csv(out / "loss_history.csv")
    summary["digest"] = model.digest()
    _write_json(out / "train_summary.json", summary)
    if not settings.adam.max_iters and not settings.lbfgs.max_iters:
        print("zero optimization budget: initial model written unchanged")
    for k in ("train_rmse", "test_rmse"):
        if summary.get(k) is not None:
            print(f"{k} (normalized): {summary[k]:.6g}")
    print(f"final loss {report.final.total:.6e}; model digest {summary['digest'][:16]}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate / predict


def _model_path(args, out: Path) -> Path:
    p = Path(args.model) if getattr(args, "model", None) else out / "model.json"
    if not p.exists():
        raise DataError(f"model file {p} not found")
    return p


def cmd_evaluate(cfg: RunConfig, out: Path, model_path: Path) -> int:
    model = MufinnModel.load(model_path)
    pred_dir = out / "predictions"
    pred_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    if model.provenance.get("source") == "forrester":
        lf, hf = _forrester_data()
        xt = np.linspace(0.0, 1.0, 100)
        with open(pred_dir / "forrester.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PREDICTION_COLUMNS)
            for split, x in (("train", hf[0]), ("test", xt)):
                y_lf, y_mf = forward_mf(model, x)
                for row in zip(x, synth.forrester_hf(x), synth.forrester_lf(x), y_mf):
                    w.writerow([repr(float(v)) for v in row] + [split])
                rows.append({"condition": "forrester", "split": split, "regime": split,
                             "rmse": synth.evaluate_rmse(y_mf, synth.forrester_hf(x)) / model.norm.y_std,
                             "n": int(x.size)})
        pooled = {"train": rows[0]["rmse"], "test": rows[1]["rmse"]}
    else:
        task, trend, _ = _load_trend(out)
        meta = model.provenance.get("task")
        if meta is None:
            raise DataError("model lacks task metadata; was it produced by `train`?")
        inputs = tuple(meta["inputs"])
        holdout = HoldoutSpec(**model.provenance["holdout"]) if model.provenance.get("holdout") else None
        curves = load_curves(cfg, out, task.target)
        labels = {_label(c.condition) for c in curves}
        missing = [lab for lab in model.provenance.get("train_conditions", []) if lab not in labels]
        if missing:
            raise DataError(f"condition(s) {', '.join(missing)} absent from both splits")
        train_c, test_c = pipeline.split_curves(curves, holdout)
        preds, tr, te = pipeline.score(task, model, trend, inputs, train_c, test_c)
        sweep = pipeline._SWEEP_AXIS[task.kind]
        seen = [c.columns()[sweep][0] for c in train_c]
        for p in preds:
            with open(pred_dir / f"{_label(p.curve.condition)}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(PREDICTION_COLUMNS)
                for row in zip(p.curve.x, p.curve.y, p.lofi, p.prediction):
                    w.writerow([repr(float(v)) for v in row] + [p.split])
            level = p.curve.columns()[sweep][0]
            regime = "train" if p.split == "train" else (
                "interpolation" if min(seen) < level < max(seen) else "extrapolation")
            rows.append({"condition": _label(p.curve.condition), "split": p.split, "regime": regime,
                         "rmse": p.rmse, "n": int(p.curve.x.size)})
        pooled = {"train": tr, "test": te}
    with open(out / "summary_rmse.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, ["condition", "split", "regime", "rmse", "n"])
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print(f"{r['condition']:<24} {r['split']:<5} {r['regime']:<13} rmse={r['rmse']:.4g}")
    if pooled["test"] is None:
        print("no test split: interpolation-only run (all conditions used for training)")
    else:
        print(f"pooled rmse: train {pooled['train']:.4g}, test {pooled['test']:.4g}")
    return EXIT_OK


def cmd_predict(cfg: RunConfig, out: Path, model_path: Path, input_csv: Optional[str]) -> int:
    if not input_csv:
        raise ConfigError("predict needs --input <csv> with one column per model input")
    model = MufinnModel.load(model_path)
    with open(input_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{input_csv}: no rows")
    meta = model.provenance.get("task")
    if meta is None:  # plain network on raw inputs, e.g. Forrester
        names = ["x"] if model.input_dim == 1 else [f"x{k}" for k in range(model.input_dim)]
        task = None
    else:
        task = pipeline.Task.from_dict(meta)
        names = list(meta["inputs"])
    missing = [n for n in names if n not in rows[0]]
    if missing:
        raise DataError(f"{input_csv}: missing input column(s) {missing}")
    try:
        cols = {n: np.array([float(r[n]) for r in rows]) for n in names}
    except ValueError as exc:
        raise DataError(f"{input_csv}: {exc}") from exc
    X = task.features(cols, names) if task else np.column_stack([cols[n] for n in names])
    y_lf, y_mf = forward_mf(model, X)
    if task:
        y_lf, y_mf = task.out_inv(y_lf), task.out_inv(y_mf)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "predictions.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["lofi_net", "prediction"])
        for k in range(len(rows)):
            w.writerow([repr(float(cols[n][k])) for n in names] + [repr(float(y_lf[k])), repr(float(y_mf[k]))])
    print(f"wrote {len(rows)} prediction(s) to {out / 'predictions.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def _run_suite(name: str, seed: int, lambda_lf, lambda_hf_nl):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if name == "forrester":
            loss = None
            if lambda_lf is not None or lambda_hf_nl is not None:
                loss = CompoundLossConfig(1e-5 if lambda_lf is None else lambda_lf,
                                          1e-5 if lambda_hf_nl is None else lambda_hf_nl)
            return benchmarks.forrester_suite(seed, loss=loss)
        settings = benchmarks.holdout_settings(seed, 1e-5 if lambda_lf is None else lambda_lf,
                                               1e-3 if lambda_hf_nl is None else lambda_hf_nl)
        return benchmarks.SUITES[name](seed, settings=settings)


def cmd_bench(cfg: RunConfig, out: Path, list_only: bool) -> int:
    if list_only:
        for name, fn in benchmarks.SUITES.items():
            doc = (fn.__doc__ or "").strip().splitlines()
            print(f"{name}{': ' + doc[0] if doc else ''}")
        return EXIT_OK
    b = cfg.bench
    unknown = [s for s in b.suites if s not in benchmarks.SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; see `bench --list`")
    jobs = [(s, cfg.seed, b.lambda_lf, b.lambda_hf_nl) for s in b.suites]
    if b.parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)) as ex:
            results = list(ex.map(_run_suite, *zip(*jobs)))
    else:
        results = [_run_suite(*j) for j in jobs]
    checks = [c for r in results for c in r]
    for c in checks:
        print(c.line())
    report = [{"suite": c.suite, "name": c.name, "value": c.value, "threshold": c.threshold, "op": c.op,
               "passed": c.passed, "detail": c.detail} for c in checks]
    _write_json(out / "bench_report.json", {"seed": cfg.seed, "checks": report})
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return EXIT_VALIDATION if n_fail else EXIT_OK


# ---------------------------------------------------------------------------
# entry point


COMMANDS = ("ingest", "fit-lofi", "train", "predict", "evaluate", "bench", "synth")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mufinns", description="Multi-fidelity flame-trend modeling harness.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run config (defaults apply to omitted keys)")
        sp.add_argument("--out", help=f"run directory (relative paths go under ${OUTPUT_ROOT_ENV})")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "bench":
            sp.add_argument("--list", action="store_true", help="list suites without running them")
        if name in ("evaluate", "predict"):
            sp.add_argument("--model", help="model file (default: <out>/model.json)")
        if name == "predict":
            sp.add_argument("--input", help="CSV with one column per model input")
    return p


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    out = resolve_out(args.out, cfg)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / f"config.{args.command}.json")
    cmd = args.command
    if cmd == "synth":
        return cmd_synth(cfg, out)
    if cmd == "ingest":
        return cmd_ingest(cfg, out)
    if cmd == "fit-lofi":
        return cmd_fit_lofi(cfg, out)
    if cmd == "train":
        return cmd_train(cfg, out)
    if cmd == "evaluate":
        return cmd_evaluate(cfg, out, _model_path(args, out))
    if cmd == "predict":
        return cmd_predict(cfg, out, _model_path(args, out), args.input)
    return cmd_bench(cfg, out, args.list)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return run(argv)
    except (OptimizerError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except lofi.FitError as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, DataError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
