"""Benchmark suites with pass/fail thresholds.

Each suite returns a list of :class:`Check` rows.  The same functions back
the ``bench`` command and the acceptance tests.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .dataset import HoldoutSpec, builtin_registry
from .model import CompoundLossConfig, forward_mf, init_model, train
from .optim import AdamConfig, LbfgsConfig
from .pipeline import Task, TrainSettings, curves_from_traces, run_holdout
from .synth import (PressureSweepSpec, SyntheticFlameSpec, default_flame_trends, evaluate_rmse,
                    forrester_pair, generate_flame_case, generate_pressure_sweep)
from .lofi import fit_linear_trend


@dataclass
class Check:
    suite: str
    name: str
    value: float
    threshold: float
    op: str  # "<", "<=", ">="
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        return bool({"<": v < t, "<=": v <= t, ">=": v >= t}[self.op])

    def line(self) -> str:
        return (f"[{'PASS' if self.passed else 'FAIL'}] {self.suite}/{self.name}: "
                f"{self.value:.4g} {self.op} {self.threshold:g}")


def holdout_settings(seed: int = 0, lambda_lf: float = 1e-5, lambda_hf_nl: float = 1e-3) -> TrainSettings:
    """Training budget used by the hold-out suites."""
    return TrainSettings(
        loss=CompoundLossConfig(lambda_lf, lambda_hf_nl),
        adam=AdamConfig(lr_max=1e-2, max_iters=3000),
        lbfgs=LbfgsConfig(max_iters=3000),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Forrester


FORRESTER_HF_X = (0.0, 0.4, 0.6, 1.0)


def run_forrester(
    seed: int = 0,
    n_lf: int = 21,
    hf_x: Sequence[float] = FORRESTER_HF_X,
    loss: Optional[CompoundLossConfig] = None,
    adam: Optional[AdamConfig] = None,
    lbfgs: Optional[LbfgsConfig] = None,
    nl_hidden=(10, 10),
):
    """Train on 21 uniform LF points and 4 HF points, score on 100 uniform test points.

    Returns ``(model, report, metrics)``; RMSEs are in normalized output space.
    """
    xl = np.linspace(0.0, 1.0, n_lf)
    xh = np.asarray(hf_x, dtype=np.float64)
    yl, _ = forrester_pair(xl)
    _, yh = forrester_pair(xh)
    loss = loss or CompoundLossConfig()
    adam = adam or AdamConfig(lr_max=1e-2, max_iters=5000)
    lbfgs = lbfgs or LbfgsConfig(max_iters=5000)
    m0 = init_model((xl, yl), (xh, yh), (20, 20), nl_hidden, seed)
    model, report = train(m0, (xl, yl), (xh, yh), loss, adam, lbfgs)
    xt = np.linspace(0.0, 1.0, 100)
    _, yt = forrester_pair(xt)
    y_lf, y_mf = forward_mf(model, xt)
    s = model.norm.y_std
    metrics = {
        "test_rmse": evaluate_rmse(y_mf, yt) / s,
        "lf_only_rmse": evaluate_rmse(y_lf, yt) / s,
        "loss_after_adam": report.adam_final,
        "loss_after_lbfgs": report.final.total,
        "digest": model.digest(),
    }
    return model, report, metrics


def forrester_suite(seed: int = 0, loss: Optional[CompoundLossConfig] = None) -> List[Check]:
    """Forrester pair: test RMSE < 0.05, at least 5x better than the LF network alone."""
    t0 = time.perf_counter()
    _, _, m = run_forrester(seed, loss=loss)
    elapsed = time.perf_counter() - t0
    checks = [
        Check("forrester", "test_rmse", m["test_rmse"], 0.05, "<", m),
        Check("forrester", "improvement_over_lf", m["lf_only_rmse"] / max(m["test_rmse"], 1e-300), 5.0, ">="),
        Check("forrester", "runtime_s", elapsed, 120.0, "<"),
    ]
    if m["loss_after_adam"] is not None:
        checks.append(Check("forrester", "lbfgs_not_worse", m["loss_after_lbfgs"] - m["loss_after_adam"], 0.0, "<="))
    return checks


# ---------------------------------------------------------------------------
# synthetic flame hold-out (turbulence-intensity masking)

FLAME_LEVELS = (0.3, 0.6, 0.9, 1.2, 1.5)
FLAME_SCENARIOS = {
    "a_interpolation": ((0.6, 1.2), "interpolation", 2.0),
    "b_mixed": ((0.3, 0.9), "mixed", 2.0),
    "c_extrapolation": ((1.5,), "extrapolation", 3.0),
}
FLAME_TIMES = np.linspace(0.005, 0.05, 15)


def flame_curves(levels=FLAME_LEVELS, seed: int = 0, spec: Optional[SyntheticFlameSpec] = None,
                 times=FLAME_TIMES, target: str = "A3d"):
    """Replicate-mean curves for one synthetic case and the generator truth."""
    if spec is None:
        area, radius = default_flame_trends()
        spec = SyntheticFlameSpec(area, radius, noise_std=0.02, seed=seed)
    case = next(c for c in builtin_registry() if c.case_id == "V")
    traces, truth = generate_flame_case(spec, [case.at(u_prime=u) for u in levels], times)
    return curves_from_traces(traces, target), truth


def flame_task() -> Task:
    return Task(kind="log_quadratic", target="A3d", log_inputs=("t",), log_output=True, grid_n=30)


def flame_suite(seed: int = 0, scenarios: Optional[Sequence[str]] = None,
                spec: Optional[SyntheticFlameSpec] = None, levels=FLAME_LEVELS,
                settings: Optional[TrainSettings] = None) -> List[Check]:
    """Synthetic flame area, five u' levels: masked/train RMSE ratio <= 2 (interior), <= 3 (edge)."""
    curves, truth = flame_curves(levels, seed, spec)
    task = flame_task()
    settings = settings or holdout_settings(seed)
    checks = []
    for name in scenarios or FLAME_SCENARIOS:
        masked, purpose, limit = FLAME_SCENARIOS[name]
        t0 = time.perf_counter()
        res = run_holdout(task, curves, HoldoutSpec("u_prime", list(masked), purpose), settings)
        elapsed = time.perf_counter() - t0
        ratio = res.test_rmse / res.train_rmse
        detail = {"train_rmse": res.train_rmse, "test_rmse": res.test_rmse, "masked": list(masked),
                  "truth_rmse": _truth_rmse(res, truth, task), **_losses(res)}
        checks.append(Check("flame", f"{name}_ratio", ratio, limit, "<=", detail))
        checks.append(Check("flame", f"{name}_runtime_s", elapsed, 300.0, "<"))
    return checks


def _losses(res) -> Dict[str, Optional[float]]:
    return {"loss_after_adam": res.report.adam_final, "loss_after_lbfgs": res.report.final.total}


def _truth_rmse(res, truth, task) -> Dict[str, float]:
    out = {}
    for split in ("train", "test"):
        ps = [p for p in res.curves if p.split == split]
        if not ps:
            continue
        pred = np.concatenate([task.out(p.prediction) for p in ps])
        true = np.concatenate([task.out(truth.area(p.curve.x, p.curve.condition.u_value)) for p in ps])
        out[split] = evaluate_rmse(pred, true) / res.model.norm.y_std
    return out


# ---------------------------------------------------------------------------
# quiescent pressure sweep


PRESSURE_SCENARIOS = {
    "a_interpolation": (0.3, 0.5),
    "b_low_extrapolation": (0.1, 0.7),
    "c_high_extrapolation": (0.3, 1.0),
}
PRESSURE_TIMES = np.linspace(0.002, 0.02, 40)


def pressure_curves(seed: int = 0, spec: Optional[PressureSweepSpec] = None, times=PRESSURE_TIMES):
    spec = spec or PressureSweepSpec(seed=seed)
    case = next(c for c in builtin_registry() if c.case_id == "VII")
    traces = generate_pressure_sweep(spec, case, times)
    return curves_from_traces(traces, "r3d"), spec


def pressure_task() -> Task:
    return Task(kind="pressure_linear", target="r3d", grid_n=30)


def pressure_suite(seed: int = 0, scenarios: Optional[Sequence[str]] = None,
                   settings: Optional[TrainSettings] = None, tol: float = 0.05) -> List[Check]:
    """Quiescent radius sweep over 1-10 bar: slopes at masked pressures within 5% of truth."""
    curves, spec = pressure_curves(seed)
    task = pressure_task()
    settings = settings or holdout_settings(seed)
    checks = []
    for name in scenarios or PRESSURE_SCENARIOS:
        masked = PRESSURE_SCENARIOS[name]
        res = run_holdout(task, curves, HoldoutSpec("pressure", list(masked), "mixed"), settings)
        for p in (pp for pp in res.curves if pp.split == "test"):
            P = p.curve.condition.P_value
            slope, _ = fit_linear_trend(p.curve.x, p.prediction)
            true = float(spec.slope(P))
            checks.append(Check("pressure", f"{name}_P{P * 10:g}bar_slope_relerr", abs(slope / true - 1.0), tol, "<=",
                                {"predicted": slope, "true": true, "lofi": float(res.trend.slope(P)),
                                 **_losses(res)}))
    return checks


SUITES: Dict[str, Callable[..., List[Check]]] = {
    "forrester": forrester_suite,
    "flame": flame_suite,
    "pressure": pressure_suite,
}
