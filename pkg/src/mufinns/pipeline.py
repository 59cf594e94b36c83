"""Task assembly: Hi-Fi curves, Lo-Fi grids, feature transforms, hold-out runs.

A *task* names the trend family, the target quantity and the network
inputs.  Curves carry one operating point each; the Lo-Fi trend is fitted
on the training curves only and then sampled densely over the range of
every curve, held-out ones included.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import lofi
from .dataset import CaseCondition, FlameTrace, HoldoutSpec, apply_mask, replicate_mean
from .model import (CompoundLossConfig, MufinnModel, TrainingReport, forward_mf, init_model,
                    train)
from .optim import AdamConfig, LbfgsConfig
from .synth import evaluate_rmse

log = logging.getLogger(__name__)

# continuous condition axis spanned by the Lo-Fi grid for each trend family
_SWEEP_AXIS = {"log_quadratic": "u_prime", "linear_r": "u_prime", "pressure_linear": "P"}
_ABSCISSA = {"log_quadratic": "t", "linear_r": "r", "pressure_linear": "t"}
_DEFAULT_INPUTS = {
    "log_quadratic": ("t", "u_prime", "phi", "T", "P"),
    "linear_r": ("r", "u_prime"),
    "pressure_linear": ("t", "P"),
}


@dataclass
class Curve:
    """One Hi-Fi target curve ``y(x)`` at a fixed operating point."""

    condition: CaseCondition
    x: np.ndarray
    y: np.ndarray
    abscissa: str = "t"

    def columns(self) -> Dict[str, np.ndarray]:
        c = self.condition
        n = self.x.size
        return {self.abscissa: self.x, "u_prime": np.full(n, c.u_value), "phi": np.full(n, c.phi),
                "T": np.full(n, c.T), "P": np.full(n, c.P_value)}


def curves_from_traces(traces: Sequence[FlameTrace], target: str = "A3d") -> List[Curve]:
    """Average replicates per condition and extract ``target`` (``A3d`` or ``r3d``)."""
    groups: Dict[CaseCondition, List[FlameTrace]] = {}
    for tr in traces:
        groups.setdefault(tr.condition, []).append(tr)
    out = []
    for cond, reps in groups.items():
        m = replicate_mean(reps)
        out.append(Curve(cond, m.t, getattr(m, target), "t"))
    return out


@dataclass
class Task:
    kind: str = "log_quadratic"
    target: str = "A3d"
    inputs: Optional[Tuple[str, ...]] = None
    log_inputs: Tuple[str, ...] = ()
    log_output: bool = False
    basis: str = "quad2d"
    reference: Optional[Tuple[float, float]] = None
    grid_n: int = 50

    def __post_init__(self):
        if self.kind not in _SWEEP_AXIS:
            raise ValueError(f"unknown Lo-Fi kind {self.kind!r}")

    @property
    def abscissa(self) -> str:
        return _ABSCISSA[self.kind]

    def resolve_inputs(self, curves: Sequence[Curve]) -> Tuple[str, ...]:
        """Explicit inputs, else the family defaults minus features constant over ``curves``."""
        if self.inputs:
            return tuple(self.inputs)
        cols = [c.columns() for c in curves]
        keep = []
        for name in _DEFAULT_INPUTS[self.kind]:
            vals = np.concatenate([c[name] for c in cols])
            if name == self.abscissa or np.ptp(vals) > 0:
                keep.append(name)
        return tuple(keep)

    def features(self, cols: Dict[str, np.ndarray], inputs: Sequence[str]) -> np.ndarray:
        return np.column_stack([np.log(cols[n]) if n in self.log_inputs else np.asarray(cols[n], dtype=np.float64)
                                for n in inputs])

    def to_dict(self, inputs=None) -> dict:
        return {"kind": self.kind, "target": self.target,
                "inputs": list(inputs if inputs is not None else (self.inputs or ())),
                "log_inputs": list(self.log_inputs), "log_output": self.log_output,
                "basis": self.basis, "reference": list(self.reference) if self.reference else None,
                "grid_n": self.grid_n}

    @classmethod
    def from_dict(cls, d) -> "Task":
        d = dict(d)
        d["inputs"] = tuple(d["inputs"]) if d.get("inputs") else None
        d["log_inputs"] = tuple(d.get("log_inputs", ()))
        if d.get("reference"):
            d["reference"] = tuple(d["reference"])
        return cls(**d)

    def out(self, y):
        return np.log(y) if self.log_output else np.asarray(y, dtype=np.float64)

    def out_inv(self, z):
        return np.exp(z) if self.log_output else np.asarray(z, dtype=np.float64)


def fit_trend(task: Task, curves: Sequence[Curve]):
    if task.kind == "log_quadratic":
        recs = [(c.condition.case_id, c.condition.u_value, c.condition.phi, c.condition.T,
                 c.condition.P_value, c.x, c.y) for c in curves]
        return lofi.fit_hierarchical_trend(recs, task.reference, task.target, task.basis)
    if task.kind == "linear_r":
        return lofi.fit_linear_r_trend([(c.condition.u_value, c.x, c.y) for c in curves], task.basis)
    return lofi.fit_pressure_trend([(c.condition.P_value, c.x, c.y) for c in curves])


def evaluate_trend(task: Task, trend, cols: Dict[str, np.ndarray]) -> np.ndarray:
    return trend.evaluate(**{n: cols[n] for n in trend.input_names})


def lofi_grids(task: Task, trend, curves: Sequence[Curve]) -> List[lofi.LofiGrid]:
    """Dense grids covering every curve: one per fixed (phi, T, P) group for log-quadratic trends."""
    sweep = _SWEEP_AXIS[task.kind]
    xs = np.concatenate([c.x for c in curves])
    sv = np.array([c.columns()[sweep][0] for c in curves])
    lo_x, hi_x = float(xs.min()), float(xs.max())
    spec = {task.abscissa: {"min": lo_x, "max": hi_x, "n": task.grid_n}}
    if np.ptp(sv) > 0:
        spec[sweep] = {"min": float(sv.min()), "max": float(sv.max()), "n": task.grid_n}
    else:
        spec[sweep] = [float(sv[0])]
    if task.kind != "log_quadratic":
        return [_grid(trend, spec)]
    groups = sorted({(c.condition.phi, c.condition.T, c.condition.P_value) for c in curves})
    grids = []
    for phi, T, P in groups:
        us = np.array([c.condition.u_value for c in curves
                       if (c.condition.phi, c.condition.T, c.condition.P_value) == (phi, T, P)])
        g = dict(spec)
        g["u_prime"] = ({"min": float(us.min()), "max": float(us.max()), "n": task.grid_n}
                        if np.ptp(us) > 0 else [float(us[0])])
        g.update(phi=[phi], T=[T], P=[P])
        grids.append(_grid(trend, g))
    return grids


def _grid(trend, spec):
    import warnings
    with warnings.catch_warnings():
        # extrapolation beyond the training hull is the point of hold-out runs
        warnings.simplefilter("ignore", UserWarning)
        return lofi.build_lofi_grid(trend, spec)


def grid_columns(grid: lofi.LofiGrid) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
    X, y = grid.points()
    return {n: X[:, k] for k, n in enumerate(grid.axes)}, y


def lf_dataset(task: Task, grids: Sequence[lofi.LofiGrid], inputs) -> Tuple[np.ndarray, np.ndarray]:
    Xs, ys = [], []
    for g in grids:
        cols, y = grid_columns(g)
        Xs.append(task.features(cols, inputs))
        ys.append(task.out(y))
    return np.vstack(Xs), np.concatenate(ys)


def hf_dataset(task: Task, curves: Sequence[Curve], inputs) -> Tuple[np.ndarray, np.ndarray]:
    if not curves:
        return np.empty((0, len(inputs))), np.empty(0)
    return (np.vstack([task.features(c.columns(), inputs) for c in curves]),
            np.concatenate([task.out(c.y) for c in curves]))


@dataclass
class TrainSettings:
    lf_hidden: Tuple[int, ...] = (20, 20)
    nl_hidden: Tuple[int, ...] = (10, 10)
    loss: CompoundLossConfig = field(default_factory=CompoundLossConfig)
    adam: AdamConfig = field(default_factory=AdamConfig)
    lbfgs: LbfgsConfig = field(default_factory=LbfgsConfig)
    seed: int = 0


@dataclass
class CurvePrediction:
    curve: Curve
    split: str  # "train" | "test"
    lofi: np.ndarray
    prediction: np.ndarray
    rmse: float  # normalized model-output space


@dataclass
class HoldoutResult:
    model: MufinnModel
    report: TrainingReport
    trend: object
    inputs: Tuple[str, ...]
    curves: List[CurvePrediction]
    train_rmse: float
    test_rmse: Optional[float]

    def summary(self) -> dict:
        rows = [{"condition": _label(p.curve.condition), "split": p.split, "rmse": p.rmse} for p in self.curves]
        return {"train_rmse": self.train_rmse, "test_rmse": self.test_rmse,
                "lbfgs_status": self.report.lbfgs_status, "final_loss": self.report.final.as_dict(),
                "digest": self.model.digest(), "per_condition": rows}


def _label(c: CaseCondition) -> str:
    return f"{c.case_id} u'={c.u_value:g} P={c.P_value:g}"


def normalized_rmse(model: MufinnModel, pred_out, true_out) -> float:
    """RMSE in the model's normalized output space."""
    return evaluate_rmse(pred_out, true_out) / model.norm.y_std


def split_curves(curves: Sequence[Curve], holdout: Optional[HoldoutSpec]):
    if holdout is None:
        return list(curves), []
    return apply_mask(curves, holdout)


def train_on_trend(task: Task, trend, curves: Sequence[Curve], train_c: Sequence[Curve],
                   settings: TrainSettings, holdout: Optional[HoldoutSpec] = None,
                   grids: Optional[Sequence[lofi.LofiGrid]] = None):
    """Build Lo-Fi and Hi-Fi sets for ``task`` and run two-stage training.

    ``curves`` (all conditions) fixes the Lo-Fi grid extent and the input
    features; only ``train_c`` contributes Hi-Fi targets.  ``grids`` reuses
    previously exported Lo-Fi grids instead of resampling ``trend``.
    """
    if grids is None:
        grids = lofi_grids(task, trend, curves)
    inputs = task.resolve_inputs(curves)
    lf = lf_dataset(task, grids, inputs)
    hf = hf_dataset(task, train_c, inputs)
    model0 = init_model(lf, hf, settings.lf_hidden, settings.nl_hidden, settings.seed)
    model, report = train(model0, lf, hf, settings.loss, settings.adam, settings.lbfgs)
    model.provenance.update({
        "task": task.to_dict(inputs),
        "holdout": holdout.to_dict() if holdout else None,
        "n_lf": int(lf[1].size), "n_hf": int(hf[1].size), "seed": settings.seed,
    })
    return model, report, inputs


def score(task: Task, model: MufinnModel, trend, inputs, train_c, test_c):
    """Per-curve predictions plus pooled train and test RMSE (normalized output space)."""
    preds = []
    for split, group in (("train", train_c), ("test", test_c)):
        for c in group:
            X = task.features(c.columns(), inputs)
            _, y_mf = forward_mf(model, X)
            lo = evaluate_trend(task, trend, c.columns())
            preds.append(CurvePrediction(c, split, lo, task.out_inv(y_mf),
                                         normalized_rmse(model, y_mf, task.out(c.y))))
    return (preds, _pooled(model, task, [p for p in preds if p.split == "train"]),
            _pooled(model, task, [p for p in preds if p.split == "test"]))


def run_holdout(
    task: Task,
    curves: Sequence[Curve],
    holdout: Optional[HoldoutSpec],
    settings: TrainSettings,
) -> HoldoutResult:
    """Fit the Lo-Fi trend on training curves, train, and score both splits."""
    train_c, test_c = split_curves(curves, holdout)
    trend = fit_trend(task, train_c)
    model, report, inputs = train_on_trend(task, trend, curves, train_c, settings, holdout)
    preds, tr, te = score(task, model, trend, inputs, train_c, test_c)
    return HoldoutResult(model, report, trend, inputs, preds, tr, te)


def _pooled(model, task, preds) -> Optional[float]:
    if not preds:
        return None
    pred = np.concatenate([task.out(p.prediction) for p in preds])
    true = np.concatenate([task.out(p.curve.y) for p in preds])
    return normalized_rmse(model, pred, true)
