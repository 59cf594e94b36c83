"""Pressure-trace processing and pressure-based burning velocity.

Pipeline: smooth the raw trace, downsample, truncate at peak pressure,
differentiate, evaluate the fractional burning-rate expressions for
``u_tm`` and ``r_m``, then re-express ``u_tm`` against radius and smooth
again.  Pressures may be in any unit as long as it is used consistently;
the file formats use MPa.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from scipy.signal import savgol_filter

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SgConfig:
    window: int = 11
    poly_order: int = 3

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"Savitzky-Golay window must be odd and >= 3, got {self.window}")
        if not 0 <= self.poly_order < self.window:
            raise ValueError(f"poly_order must be in [0, window), got {self.poly_order}")


@dataclass
class PressureTrace:
    t: np.ndarray
    P: np.ndarray
    P0: float
    gamma_u: float
    R0: float
    Pf: Optional[float] = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.P = np.asarray(self.P, dtype=np.float64)
        if self.t.shape != self.P.shape or self.t.ndim != 1 or self.t.size == 0:
            raise ValueError("t and P must be nonempty 1-D arrays of equal length")
        if not np.all(np.isfinite(self.P)):
            raise ValueError("pressure must be finite")
        if self.gamma_u <= 1:
            raise ValueError("gamma_u must exceed 1")
        if self.R0 <= 0:
            raise ValueError("chamber radius R0 must be positive")
        if self.Pf is None:
            self.Pf = float(np.max(self.P))
        if not self.P0 < self.Pf:
            raise ValueError(f"initial pressure {self.P0:g} must be below peak {self.Pf:g}")

    def __len__(self):
        return self.t.size


@dataclass
class BurningCurve:
    r: np.ndarray
    u_tm: np.ndarray
    provenance: str = "smoothed"
    condition: object = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r_m", "u_tm_mps", "provenance"])
            for r, u in zip(self.r, self.u_tm):
                w.writerow([repr(float(r)), repr(float(u)), self.provenance])

    @classmethod
    def from_csv(cls, path) -> "BurningCurve":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        prov = rows[0]["provenance"] if rows else "smoothed"
        return cls(np.array([float(r["r_m"]) for r in rows]),
                   np.array([float(r["u_tm_mps"]) for r in rows]), prov)


def savgol_smooth(y, cfg: SgConfig) -> np.ndarray:
    """Least-squares polynomial smoothing; edges use one-sided fits, no padding."""
    y = np.asarray(y, dtype=np.float64)
    if y.size < cfg.window:
        raise ValueError(f"series of length {y.size} is shorter than window {cfg.window}")
    return savgol_filter(y, cfg.window, cfg.poly_order, mode="interp")


def downsample(series, factor: int):
    if factor < 1:
        raise ValueError("downsample factor must be >= 1")
    return np.asarray(series)[::factor]


def truncate_at_peak(trace: PressureTrace) -> PressureTrace:
    """Keep the rising branch up to the first global maximum, dropping dips."""
    k = int(np.argmax(trace.P))
    t, P = trace.t[:k + 1], trace.P[:k + 1]
    keep = P >= np.maximum.accumulate(P)
    return replace(trace, t=t[keep], P=P[keep], Pf=float(P[-1]))


def derivative(t, P) -> np.ndarray:
    """Second-order accurate derivative on a (possibly nonuniform) grid."""
    t = np.asarray(t, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    if t.size < 3:
        raise ValueError("derivative needs at least 3 samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing (duplicates found)")
    return np.gradient(P, t, edge_order=2)


def _burned_fraction_term(trace: PressureTrace, P):
    x = (trace.P0 / P) ** (1.0 / trace.gamma_u)
    return x, 1.0 - x * (trace.Pf - P) / (trace.Pf - trace.P0)


def compute_rm(trace: PressureTrace, P=None) -> np.ndarray:
    """Flame radius from the fractional burning-rate relation."""
    P = trace.P if P is None else np.asarray(P, dtype=np.float64)
    _, bracket = _burned_fraction_term(trace, P)
    if np.any(bracket < 0):
        log.warning("clamping %d negative radius brackets to zero", int(np.sum(bracket < 0)))
        bracket = np.maximum(bracket, 0.0)
    return trace.R0 * np.cbrt(bracket)


def compute_utm(trace: PressureTrace, dPdt, P=None, eps_frac: float = 0.02) -> np.ndarray:
    """Turbulent mass burning velocity from pressure and its rate of rise.

    Pressures at or below ``P0 + eps_frac*(Pf - P0)`` are rejected, since the
    expression is singular at ``P = P0``; filter them out beforehand (see
    :func:`admissible`).
    """
    P = trace.P if P is None else np.asarray(P, dtype=np.float64)
    dPdt = np.asarray(dPdt, dtype=np.float64)
    floor = trace.P0 + eps_frac * (trace.Pf - trace.P0)
    if np.any(P <= trace.P0) or (eps_frac > 0 and np.any(P < floor)):
        raise ValueError(f"pressure below singularity guard {floor:g}")
    x, bracket = _burned_fraction_term(trace, P)
    return x * bracket ** (-2.0 / 3.0) * trace.R0 / (3.0 * (trace.Pf - trace.P0)) * dPdt


def admissible(trace: PressureTrace, eps_frac: float = 0.02) -> np.ndarray:
    return trace.P >= trace.P0 + eps_frac * (trace.Pf - trace.P0)


def reparam_utm_vs_r(u_tm, r_m, window: Tuple[float, float], sg: Optional[SgConfig] = SgConfig()):
    """Sort by radius, clip to ``window`` and smooth once more.

    Returns ``(raw, smoothed)`` curves.  ``sg=None`` skips smoothing; the
    window is shrunk automatically if fewer samples than its length remain.
    """
    u_tm = np.asarray(u_tm, dtype=np.float64)
    r_m = np.asarray(r_m, dtype=np.float64)
    if u_tm.shape != r_m.shape:
        raise ValueError("u_tm and r_m must have equal length")
    order = np.argsort(r_m, kind="stable")
    r, u = r_m[order], u_tm[order]
    keep = (r >= window[0]) & (r <= window[1])
    r, u = r[keep], u[keep]
    if r.size == 0:
        raise ValueError(f"no samples inside radius window {window}")
    raw = BurningCurve(r, u, "raw")
    if sg is None:
        return raw, BurningCurve(r.copy(), u.copy(), "smoothed")
    w = sg.window
    if r.size < w:
        w = r.size if r.size % 2 else r.size - 1
        if w <= sg.poly_order:
            log.warning("only %d samples in window; second smoothing skipped", r.size)
            return raw, BurningCurve(r.copy(), u.copy(), "smoothed")
    return raw, BurningCurve(r.copy(), savgol_smooth(u, SgConfig(w, sg.poly_order)), "smoothed")


def wrinkling_ratio(A3d, r3d):
    """Area relative to the equal-volume smooth sphere; values below 1 are logged."""
    A3d = np.asarray(A3d, dtype=np.float64)
    r3d = np.asarray(r3d, dtype=np.float64)
    if np.any(A3d <= 0) or np.any(r3d <= 0):
        raise ValueError("area and radius must be positive")
    ratio = A3d / (4.0 * np.pi * r3d ** 2)
    if np.any(ratio < 1):
        log.warning("wrinkling ratio below 1 at %d samples", int(np.sum(ratio < 1)))
    return ratio if ratio.ndim else float(ratio)


@dataclass
class PipelineConfig:
    sg_pressure: SgConfig = field(default_factory=lambda: SgConfig(51, 3))
    downsample_factor: int = 10
    sg_curve: SgConfig = field(default_factory=lambda: SgConfig(11, 3))
    eps_frac: float = 0.02
    r_window: Tuple[float, float] = (0.0, np.inf)
    Pf_override: Optional[float] = None


def process_pressure_trace(trace: PressureTrace, cfg: PipelineConfig = PipelineConfig()):
    """Raw pressure trace to ``(raw, smoothed)`` burning-velocity curves."""
    P = savgol_smooth(trace.P, cfg.sg_pressure) if len(trace) >= cfg.sg_pressure.window else trace.P
    t = downsample(trace.t, cfg.downsample_factor)
    P = downsample(P, cfg.downsample_factor)
    tr = truncate_at_peak(replace(trace, t=t, P=P, Pf=None))
    if cfg.Pf_override is not None:
        tr = replace(tr, Pf=cfg.Pf_override)
    dPdt = derivative(tr.t, tr.P)
    ok = admissible(tr, cfg.eps_frac)
    u = compute_utm(tr, dPdt[ok], P=tr.P[ok], eps_frac=cfg.eps_frac)
    r = compute_rm(tr, tr.P[ok])
    return reparam_utm_vs_r(u, r, cfg.r_window, cfg.sg_curve)


def read_pressure_csv(path, meta_path=None) -> PressureTrace:
    """Read ``t_s,P_MPa`` plus a JSON sidecar holding ``P0_MPa``, ``gamma_u``, ``R0_m``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["t_s", "P_MPa"]:
            raise ValueError(f"{path}: header must be t_s,P_MPa")
        rows = [[float(c) for c in row] for row in reader if row]
    data = np.array(rows)
    if meta_path is None:
        meta_path = str(path).rsplit(".", 1)[0] + ".meta.json"
    with open(meta_path) as fh:
        meta = json.load(fh)
    return PressureTrace(data[:, 0], data[:, 1], float(meta["P0_MPa"]), float(meta["gamma_u"]), float(meta["R0_m"]))


def write_pressure_csv(path, trace: PressureTrace, meta_path=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "P_MPa"])
        for t, p in zip(trace.t, trace.P):
            w.writerow([repr(float(t)), repr(float(p))])
    if meta_path is None:
        meta_path = str(path).rsplit(".", 1)[0] + ".meta.json"
    with open(meta_path, "w") as fh:
        json.dump({"P0_MPa": trace.P0, "gamma_u": trace.gamma_u, "R0_m": trace.R0}, fh, indent=1)
