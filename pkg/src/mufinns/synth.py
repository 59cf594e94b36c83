"""Synthetic benchmarks with known ground truth.

* the Forrester low/high-fidelity pair, whose fidelity gap is affine;
* flame-geometry traces from a known log-quadratic trend plus a smooth
  nonlinear discrepancy and log-normal measurement noise;
* quiescent radius sweeps, linear in time with pressure-dependent slope;
* closed-vessel pressure traces with a smooth rise and a post-peak tail.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .dataset import CaseCondition, FlameTrace
from .lofi import CoeffSurface, LogQuadTrend, ThermoCorrection
from .thermo import PressureTrace


def forrester_hf(x):
    x = np.asarray(x, dtype=np.float64)
    return (6.0 * x - 2.0) ** 2 * np.sin(12.0 * x - 4.0)


def forrester_lf(x):
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * forrester_hf(x) + 10.0 * (x - 0.5) - 5.0


def forrester_pair(x):
    """``(y_lf, y_hf)`` of the Forrester benchmark on ``[0, 1]``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("Forrester benchmark is defined on [0, 1]")
    return forrester_lf(x), forrester_hf(x)


def evaluate_rmse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise ValueError("cannot score empty series")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def _surface(coef_u: Sequence[float]) -> CoeffSurface:
    """Polynomial in u' only: ``coef_u[k] * u'^k``."""
    return CoeffSurface("quad2d", [(k, 0) for k in range(len(coef_u))], np.asarray(coef_u, dtype=np.float64))


def default_flame_trends(reference=(365.0, 0.5)) -> Tuple[LogQuadTrend, LogQuadTrend]:
    """Ground-truth ``(area, radius)`` trends for t in seconds, SI outputs.

    The radius grows roughly as ``t^0.9`` from about 5 mm at 5 ms to 40 mm
    at 50 ms and speeds up with u'; the area is ``4 pi r^2`` times a
    wrinkling factor rising from ~1.5 to ~3.5 over the same span.
    """
    b = [_surface([-0.8, 0.3, -0.03]), _surface([0.9, 0.02]), _surface([0.01])]
    # log W = w0 + w1 ln t with w1 = 0.25 + 0.1 u', W(5 ms) ~ 1.5
    lg4pi = float(np.log(4 * np.pi))
    a = [
        _surface([lg4pi - 1.6 + 1.73, 0.6 + 0.53, -0.06]),
        _surface([1.8 + 0.25, 0.04 + 0.1]),
        _surface([0.02]),
    ]
    corr = ThermoCorrection(reference)
    hull = {"t": [0.005, 0.05], "u_prime": [0.3, 2.0], "phi": [0.3, 0.3],
            "T": [reference[0]] * 2, "P": [reference[1]] * 2}
    area = LogQuadTrend("A3d", a, corr, hull=hull, provenance="synthetic ground truth")
    radius = LogQuadTrend("r3d", b, ThermoCorrection(reference), hull=dict(hull), provenance="synthetic ground truth")
    return area, radius


@dataclass
class SyntheticFlameSpec:
    area: LogQuadTrend
    radius: LogQuadTrend
    amplitude: float = 0.1
    frequency: float = 2.0 * np.pi
    noise_std: float = 0.02
    seed: int = 0
    realizations: int = 3

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if self.realizations < 1:
            raise ValueError("need at least one realization")

    def perturbation(self, t, u_prime):
        """Log-space discrepancy ``amplitude * sin(frequency * u') * ln t``."""
        return self.amplitude * np.sin(self.frequency * np.asarray(u_prime)) * np.log(np.asarray(t))


@dataclass
class FlameTruth:
    spec: SyntheticFlameSpec
    phi: float
    T: float
    P: float

    def area_lofi(self, t, u_prime):
        return self.spec.area.evaluate(t, u_prime, self.phi, self.T, self.P)

    def area(self, t, u_prime):
        return self.area_lofi(t, u_prime) * np.exp(self.spec.perturbation(t, u_prime))

    def radius(self, t, u_prime):
        return self.spec.radius.evaluate(t, u_prime, self.phi, self.T, self.P)


def generate_flame_case(
    spec: SyntheticFlameSpec,
    conditions: Sequence[CaseCondition],
    times,
) -> Tuple[List[FlameTrace], FlameTruth]:
    """Noisy replicate traces for every condition plus the noise-free truth.

    The discrepancy is applied to the area only; the radius follows its
    trend exactly up to noise.
    """
    times = np.asarray(times, dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    c0 = conditions[0]
    truth = FlameTruth(spec, c0.phi, c0.T, c0.P_value)
    traces = []
    for cond in conditions:
        u = cond.u_value
        tr = FlameTruth(spec, cond.phi, cond.T, cond.P_value)
        A = tr.area(times, u)
        r = tr.radius(times, u)
        for k in range(spec.realizations):
            eA = rng.standard_normal(times.size) * spec.noise_std
            er = rng.standard_normal(times.size) * spec.noise_std
            traces.append(FlameTrace(cond, k, times, A * np.exp(eA), r * np.exp(er)))
    return traces, truth


def default_slope(P_MPa):
    """Ground-truth radius growth rate [m/s] versus pressure [MPa].

    Decreases with pressure with mild curvature.
    """
    P = np.asarray(P_MPa, dtype=np.float64)
    return 2.0 - 0.8 * P + 0.1 * P ** 2


def default_intercept(P_MPa):
    return 0.006 + 0.002 * np.asarray(P_MPa, dtype=np.float64)


@dataclass
class PressureSweepSpec:
    pressures_MPa: Tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 1.0)
    slope: Callable = default_slope
    intercept: Callable = default_intercept
    noise_std: float = 0.02
    seed: int = 0
    realizations: int = 3


def generate_pressure_sweep(spec: PressureSweepSpec, case: CaseCondition, times) -> List[FlameTrace]:
    """Quiescent radius traces ``r = a(P) t + b(P)`` with relative noise.

    The area column is the smooth-sphere area ``4 pi r^2``.
    """
    times = np.asarray(times, dtype=np.float64)
    rng = np.random.default_rng(spec.seed)
    out = []
    for P in spec.pressures_MPa:
        cond = case.at(P=P)
        r = spec.slope(P) * times + spec.intercept(P)
        for k in range(spec.realizations):
            rn = r * (1.0 + spec.noise_std * rng.standard_normal(times.size))
            out.append(FlameTrace(cond, k, times, 4 * np.pi * rn ** 2, rn))
    return out


def synthetic_pressure_trace(
    P0: float = 0.1,
    Pf: float = 0.8,
    gamma_u: float = 1.4,
    R0: float = 0.19,
    duration: float = 0.06,
    n: int = 3000,
    post_peak: float = 0.15,
    noise_std: float = 0.0,
    seed: int = 0,
) -> PressureTrace:
    """Closed-vessel pressure rise with a cosine-shaped burn, then a decaying tail.

    The rising branch is ``P0 + (Pf - P0) * (1 - cos(pi s)) / 2`` on
    ``s = t / duration``; ``post_peak`` sets the fraction of extra samples
    after the peak, where pressure relaxes by heat loss.
    """
    rng = np.random.default_rng(seed)
    n_post = int(n * post_peak)
    t = np.linspace(0.0, duration * (1 + post_peak), n + n_post)
    s = np.clip(t / duration, 0.0, 1.0)
    P = P0 + (Pf - P0) * 0.5 * (1 - np.cos(np.pi * s))
    tail = t > duration
    P = np.where(tail, Pf - 0.5 * (Pf - P0) * ((t - duration) / duration) ** 2, P)
    P = P + noise_std * (Pf - P0) * rng.standard_normal(t.size)
    return PressureTrace(t, P, P0, gamma_u, R0)
