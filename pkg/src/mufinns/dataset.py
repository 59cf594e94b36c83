"""Experimental case registry, flame traces, hold-out masking, normalization.

Units are fixed at ingestion: seconds, m^2, m, MPa, K and m/s.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)

FUELS = ("CH4", "H2")
TRACE_COLUMNS = ("t_s", "A3d_m2", "r3d_m")
REGISTRY_COLUMNS = ("fuel", "case", "phi", "T_K", "P_min_MPa", "P_max_MPa", "u_min_mps", "u_max_mps")


class DataError(ValueError):
    """Invalid input data; the message names the offending file/row."""


@dataclass(frozen=True)
class CaseCondition:
    """Operating condition of one case.

    ``P`` and ``u_prime`` are closed ranges ``(lo, hi)``; a concrete
    operating point has ``lo == hi``.  Use :meth:`at` to pin a level.
    """

    fuel: str
    phi: float
    T: float
    P: Tuple[float, float]
    u_prime: Tuple[float, float]
    case_id: str

    def __post_init__(self):
        P = _as_range(self.P)
        u = _as_range(self.u_prime)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "u_prime", u)
        if self.fuel not in FUELS:
            raise DataError(f"unknown fuel {self.fuel!r}")
        if self.phi <= 0 or self.T <= 0 or P[0] <= 0:
            raise DataError(f"case {self.case_id}: phi, T and P must be positive")
        if u[0] < 0:
            raise DataError(f"case {self.case_id}: u' must be nonnegative")

    def at(self, u_prime: Optional[float] = None, P: Optional[float] = None) -> "CaseCondition":
        return replace(self,
                       u_prime=self.u_prime if u_prime is None else (u_prime, u_prime),
                       P=self.P if P is None else (P, P))

    @property
    def P_value(self) -> float:
        return _point(self.P, "P", self.case_id)

    @property
    def u_value(self) -> float:
        return _point(self.u_prime, "u'", self.case_id)


def _as_range(v) -> Tuple[float, float]:
    if np.ndim(v) == 0:
        return (float(v), float(v))
    lo, hi = (float(x) for x in v)
    if hi < lo:
        raise DataError(f"range ({lo}, {hi}) is reversed")
    return (lo, hi)


def _point(r, name, case_id) -> float:
    if r[0] != r[1]:
        raise DataError(f"case {case_id}: {name} is a range {r}, not a single level")
    return r[0]


# Table of investigated combustion cases (fuel, id, phi, T [K], P [MPa], u' [m/s]).
_BUILTIN = [
    ("CH4", "I", 0.60, 365, (0.1, 0.1), (0.3, 1.5)),
    ("CH4", "II", 0.70, 300, (0.1, 0.1), (0.3, 1.5)),
    ("CH4", "III", 1.30, 300, (0.1, 0.1), (0.3, 2.0)),
    ("CH4", "IV", 1.25, 365, (0.5, 0.5), (0.3, 2.0)),
    ("H2", "V", 0.30, 365, (0.5, 0.5), (0.3, 2.0)),
    ("H2", "VI", 0.40, 365, (0.5, 0.5), (0.3, 1.5)),
    ("H2", "VII", 0.30, 360, (0.1, 1.0), (0.0, 0.0)),
]


def builtin_registry() -> List[CaseCondition]:
    return [CaseCondition(f, phi, T, P, u, cid) for f, cid, phi, T, P, u in _BUILTIN]


def registry_to_csv(cases: Sequence[CaseCondition]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REGISTRY_COLUMNS)
    for c in cases:
        w.writerow([c.fuel, c.case_id, f"{c.phi:g}", f"{c.T:g}", f"{c.P[0]:g}", f"{c.P[1]:g}",
                    f"{c.u_prime[0]:g}", f"{c.u_prime[1]:g}"])
    return buf.getvalue()


def load_registry(source=None) -> List[CaseCondition]:
    """Parse a registry CSV (path or text); ``None`` returns the built-in table."""
    if source is None:
        return builtin_registry()
    text = Path(source).read_text() if isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source and Path(source).exists()) else str(source)
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        return []
    reader = csv.DictReader(lines)
    missing = set(REGISTRY_COLUMNS) - set(reader.fieldnames or [])
    if missing:
        raise DataError(f"registry header lacks columns {sorted(missing)}")
    cases = []
    for i, row in enumerate(reader, start=1):
        try:
            cases.append(CaseCondition(
                row["fuel"].strip(), float(row["phi"]), float(row["T_K"]),
                (float(row["P_min_MPa"]), float(row["P_max_MPa"])),
                (float(row["u_min_mps"]), float(row["u_max_mps"])), row["case"].strip()))
        except (TypeError, ValueError, AttributeError) as exc:
            raise DataError(f"registry row {i}: {exc}") from exc
    return cases


@dataclass
class FlameTrace:
    condition: CaseCondition
    realization_id: int
    t: np.ndarray
    A3d: np.ndarray
    r3d: np.ndarray
    flags: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.A3d = np.asarray(self.A3d, dtype=np.float64)
        self.r3d = np.asarray(self.r3d, dtype=np.float64)
        if not (self.t.shape == self.A3d.shape == self.r3d.shape) or self.t.ndim != 1:
            raise DataError("t, A3d and r3d must be 1-D arrays of equal length")
        bad = np.flatnonzero(np.diff(self.t) <= 0)
        if bad.size:
            raise DataError(f"time is not strictly increasing at sample {bad[0] + 1}")
        bad = np.flatnonzero((self.A3d <= 0) | (self.r3d <= 0) | ~np.isfinite(self.A3d) | ~np.isfinite(self.r3d))
        if bad.size:
            raise DataError(f"nonpositive or non-finite geometry at sample {bad[0]}")
        low = np.flatnonzero(self.A3d < 4 * np.pi * self.r3d ** 2)
        if low.size and "wrinkling_below_one" not in self.flags:
            self.flags.append("wrinkling_below_one")

    def __len__(self):
        return self.t.size

    @property
    def samples(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.A3d.tolist(), self.r3d.tolist()))

    def to_csv(self, path) -> None:
        write_trace_csv(path, self.t, self.A3d, self.r3d)


def write_trace_csv(path, t, A3d, r3d) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in zip(t, A3d, r3d):
            w.writerow([repr(float(v)) for v in row])


def read_trace_csv(path) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a ``t_s,A3d_m2,r3d_m`` file; errors cite the 1-based data row."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if [h.strip() for h in header] != list(TRACE_COLUMNS):
            raise DataError(f"{path}: header must be {','.join(TRACE_COLUMNS)}, got {','.join(header)}")
        rows = []
        for k, row in enumerate(reader, start=1):
            if not row or not any(c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise DataError(f"{path}: row {k}: {exc}") from exc
            if len(vals) != 3:
                raise DataError(f"{path}: row {k}: expected 3 columns, got {len(vals)}")
            if rows and vals[0] <= rows[-1][0]:
                raise DataError(f"{path}: row {k}: time {vals[0]:g} does not increase")
            if vals[1] <= 0 or vals[2] <= 0 or not all(np.isfinite(vals)):
                raise DataError(f"{path}: row {k}: geometry must be finite and positive")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    a = np.array(rows)
    return a[:, 0], a[:, 1], a[:, 2]


def ingest_traces(files: Iterable, condition: CaseCondition) -> List[FlameTrace]:
    """Read replicate files for one operating point; realization ids follow file order."""
    traces = []
    for k, path in enumerate(files):
        t, A, r = read_trace_csv(path)
        tr = FlameTrace(condition, k, t, A, r)
        if tr.flags:
            log.warning("%s: %s", path, ", ".join(tr.flags))
        traces.append(tr)
    return traces


def replicate_mean(traces: Sequence[FlameTrace]) -> FlameTrace:
    """Average replicates on the union of their sample times inside the common range."""
    if not traces:
        raise DataError("replicate_mean needs at least one trace")
    cond = traces[0].condition
    if any(tr.condition != cond for tr in traces):
        raise DataError("replicates must share one condition")
    lo = max(tr.t[0] for tr in traces)
    hi = min(tr.t[-1] for tr in traces)
    if lo > hi:
        raise DataError("replicate time ranges do not overlap")
    grid = np.unique(np.concatenate([tr.t for tr in traces]))
    grid = grid[(grid >= lo) & (grid <= hi)]
    A = np.mean([np.interp(grid, tr.t, tr.A3d) for tr in traces], axis=0)
    r = np.mean([np.interp(grid, tr.t, tr.r3d) for tr in traces], axis=0)
    return FlameTrace(cond, -1, grid, A, r)


AXES = ("u_prime", "pressure", "case")
PURPOSES = ("interpolation", "extrapolation", "mixed", "unseen_case")


@dataclass
class HoldoutSpec:
    masked_axis: str
    masked_values: list = field(default_factory=list)
    purpose: str = "interpolation"

    def __post_init__(self):
        if self.masked_axis not in AXES:
            raise ValueError(f"masked_axis must be one of {AXES}")
        if self.purpose not in PURPOSES:
            raise ValueError(f"purpose must be one of {PURPOSES}")
        self.masked_values = list(self.masked_values)

    def key(self, condition: CaseCondition):
        if self.masked_axis == "u_prime":
            return condition.u_value
        if self.masked_axis == "pressure":
            return condition.P_value
        return condition.case_id

    def is_masked(self, condition: CaseCondition) -> bool:
        k = self.key(condition)
        if self.masked_axis == "case":
            return k in self.masked_values
        return any(np.isclose(k, v, rtol=1e-9, atol=1e-12) for v in self.masked_values)

    def to_dict(self) -> dict:
        return {"masked_axis": self.masked_axis, "masked_values": list(self.masked_values), "purpose": self.purpose}


def apply_mask(hf_data: Sequence, spec: HoldoutSpec):
    """Split items carrying a ``condition`` into ``(train, test)`` by masked level."""
    levels = {spec.key(item.condition) for item in hf_data}
    for v in spec.masked_values:
        if spec.masked_axis == "case":
            found = v in levels
        else:
            found = any(np.isclose(v, lv, rtol=1e-9, atol=1e-12) for lv in levels)
        if not found:
            raise DataError(f"masked {spec.masked_axis} value {v!r} not present in the data")
    train = [item for item in hf_data if not spec.is_masked(item.condition)]
    test = [item for item in hf_data if spec.is_masked(item.condition)]
    if hf_data and not train:
        raise DataError("hold-out mask removes all training data")
    return train, test


@dataclass
class NormStats:
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    def __post_init__(self):
        self.x_mean = np.atleast_1d(np.asarray(self.x_mean, dtype=np.float64))
        self.x_std = np.atleast_1d(np.asarray(self.x_std, dtype=np.float64))
        self.y_mean = float(self.y_mean)
        self.y_std = float(self.y_std)
        if np.any(self.x_std <= 0) or self.y_std <= 0:
            raise ValueError("normalization stds must be strictly positive")

    def norm_x(self, x):
        return (np.asarray(x, dtype=np.float64) - self.x_mean) / self.x_std

    def norm_y(self, y):
        return (np.asarray(y, dtype=np.float64) - self.y_mean) / self.y_std

    def denorm_y(self, y):
        return np.asarray(y, dtype=np.float64) * self.y_std + self.y_mean

    def to_dict(self) -> dict:
        return {"x_mean": self.x_mean.tolist(), "x_std": self.x_std.tolist(),
                "y_mean": self.y_mean, "y_std": self.y_std}

    @classmethod
    def from_dict(cls, d) -> "NormStats":
        return cls(d["x_mean"], d["x_std"], d["y_mean"], d["y_std"])


def _floored_std(a, axis=0):
    s = np.std(a, axis=axis)
    return np.where(s > 1e-12 * np.maximum(1.0, np.abs(np.mean(a, axis=axis))), s, 1.0)


def compute_norm_stats(inputs, outputs) -> NormStats:
    """Z-score statistics (population std; constant features get std 1)."""
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(outputs, dtype=np.float64).ravel()
    if X.shape[0] == 0 or y.size == 0:
        raise ValueError("normalization needs nonempty data")
    return NormStats(X.mean(axis=0), _floored_std(X), float(y.mean()), float(_floored_std(y[:, None])[0]))
