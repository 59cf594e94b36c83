"""Low-fidelity trend models built from sparse high-fidelity data.

Three families are provided:

* :class:`LogQuadTrend` -- per-case temporal fits ``log y = c0 + c1 ln t + c2 (ln t)^2``
  whose coefficients are regressed over ``(u', phi)`` at a reference
  thermodynamic condition and shifted by additive offsets for the others.
* :class:`LinearRTrend` -- ``u_tm ~ alpha(u') r + beta(u')``.
* :class:`PressureLinearTrend` -- ``r ~ a(P) t + b(P)`` with slope and
  intercept interpolated piecewise-linearly in pressure.

All three evaluate on broadcastable arrays and serialize to plain dicts.
"""
from __future__ import annotations

import csv
import itertools
import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)


class FitError(ValueError):
    """Raised when a regression stage has too little or invalid data."""


# ---------------------------------------------------------------------------
# temporal fits


@dataclass(frozen=True)
class LogQuadCoeffs:
    c0: float
    c1: float
    c2: float
    rms: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.c0, self.c1, self.c2])


def _design_logquad(t):
    lt = np.log(t)
    return np.column_stack([np.ones_like(lt), lt, lt ** 2])


def fit_log_quadratic(times, values) -> LogQuadCoeffs:
    """Least-squares quadratic in ``ln t`` fitted to ``ln y``."""
    t = np.asarray(times, dtype=np.float64).ravel()
    y = np.asarray(values, dtype=np.float64).ravel()
    if t.shape != y.shape:
        raise FitError("times and values must have equal length")
    if np.any(t <= 0) or np.any(y <= 0):
        raise FitError("log-quadratic fit needs strictly positive times and values")
    if np.unique(t).size < 3:
        raise FitError("log-quadratic fit needs at least 3 distinct times")
    X = _design_logquad(t)
    ly = np.log(y)
    c, *_ = np.linalg.lstsq(X, ly, rcond=None)
    rms = float(np.sqrt(np.mean((X @ c - ly) ** 2)))
    return LogQuadCoeffs(float(c[0]), float(c[1]), float(c[2]), rms)


def eval_log_quadratic(c, t):
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0):
        raise ValueError("log-quadratic trend is only defined for t > 0")
    c = c.as_array() if isinstance(c, LogQuadCoeffs) else np.asarray(c, dtype=np.float64)
    lt = np.log(t)
    return np.exp(c[..., 0] + c[..., 1] * lt + c[..., 2] * lt ** 2)


def fit_linear_trend(x, y) -> Tuple[float, float]:
    """Ordinary least-squares line, returned as ``(slope, intercept)``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise FitError("x and y must have equal length")
    if np.unique(x).size < 2:
        raise FitError("linear fit needs at least 2 distinct x values")
    X = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(slope), float(intercept)


# ---------------------------------------------------------------------------
# coefficient surfaces over (u', phi)


@dataclass
class CoeffSurface:
    """Polynomial ``sum_k coef_k * u^i_k * phi^j_k`` with exponent pairs ``terms``."""

    basis: str
    terms: List[Tuple[int, int]]
    coef: np.ndarray

    def __call__(self, u, phi=0.0):
        u = np.asarray(u, dtype=np.float64)
        phi = np.asarray(phi, dtype=np.float64)
        out = np.zeros(np.broadcast(u, phi).shape)
        for (i, j), c in zip(self.terms, self.coef):
            out = out + c * u ** i * phi ** j
        return out

    def to_dict(self) -> dict:
        return {"basis": self.basis, "terms": [list(t) for t in self.terms],
                "coef": [float(c) for c in self.coef]}

    @classmethod
    def from_dict(cls, d) -> "CoeffSurface":
        return cls(d["basis"], [tuple(t) for t in d["terms"]], np.asarray(d["coef"], dtype=np.float64))


def _candidate_terms(basis: str, n: int, phi_varies: bool) -> List[Tuple[int, int]]:
    if basis == "linear":
        terms = [(0, 0), (1, 0)]
        if phi_varies:
            terms.append((0, 1))
    elif basis == "quad2d":
        terms = [(0, 0), (1, 0), (2, 0)]
        if phi_varies:
            terms.append((0, 1))
            if n >= 8:
                terms += [(1, 1), (0, 2)]
    else:
        raise ValueError(f"unknown basis {basis!r}")
    return terms


def fit_coeff_surface(points, basis: str = "quad2d") -> CoeffSurface:
    """Regress one coefficient over ``(u', phi)``.

    ``points`` is a sequence of ``(u', phi, value)``.  A single distinct phi
    drops the phi terms; a rank-deficient design drops the highest-degree
    terms one at a time until it is full rank.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    u, phi, val = pts.T
    n = len(val)
    phi_varies = np.unique(phi).size > 1
    terms = _candidate_terms(basis, n, phi_varies)
    min_pts = 2 if basis == "linear" else 3
    if n < min_pts or np.unique(u).size < 2:
        raise FitError(f"{basis} coefficient surface needs at least {min_pts} points "
                       f"with 2 distinct u' values, got {n}")
    while True:
        X = np.column_stack([u ** i * phi ** j for i, j in terms])
        rank = np.linalg.matrix_rank(X)
        if rank == len(terms) and n >= len(terms):
            break
        # drop the last term of highest total degree
        drop = max(range(len(terms)), key=lambda k: (sum(terms[k]), k))
        log.info("coefficient surface rank deficient (%d points, %d terms); dropping term %s",
                 n, len(terms), terms[drop])
        terms = terms[:drop] + terms[drop + 1:]
    coef, *_ = np.linalg.lstsq(X, val, rcond=None)
    return CoeffSurface(basis, terms, coef)


# ---------------------------------------------------------------------------
# thermodynamic corrections


def _cond_key(T, P) -> str:
    return f"{float(T):g}|{float(P):g}"


@dataclass
class ThermoCorrection:
    """Additive per-coefficient offsets keyed by ``(T, P)``; zero at the reference."""

    reference: Tuple[float, float]
    offsets: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.offsets.setdefault(_cond_key(*self.reference), np.zeros(3))

    def delta(self, T, P) -> np.ndarray:
        key = _cond_key(T, P)
        if key not in self.offsets:
            raise KeyError(f"no thermodynamic correction for T={T:g}, P={P:g}")
        return self.offsets[key]

    def conditions(self) -> List[Tuple[float, float]]:
        return [tuple(float(v) for v in k.split("|")) for k in self.offsets]

    def to_dict(self) -> dict:
        return {"reference": list(self.reference),
                "offsets": {k: [float(x) for x in v] for k, v in self.offsets.items()}}

    @classmethod
    def from_dict(cls, d) -> "ThermoCorrection":
        return cls(tuple(d["reference"]), {k: np.asarray(v, dtype=np.float64) for k, v in d["offsets"].items()})


def fit_thermo_correction(
    base: Sequence[CoeffSurface],
    case_coeffs: Mapping[str, Sequence[Tuple[float, float, LogQuadCoeffs]]],
    case_conditions: Mapping[str, Tuple[float, float]],
    reference: Tuple[float, float],
) -> ThermoCorrection:
    """Mean offset of each case's fitted coefficients from the base surfaces.

    ``case_coeffs`` maps a case id to ``[(u', phi, coeffs), ...]``.  Cases
    sharing a ``(T, P)`` pair are pooled.
    """
    pooled: Dict[str, List[np.ndarray]] = {}
    for case_id, (T, P) in case_conditions.items():
        rows = case_coeffs.get(case_id)
        if not rows:
            raise FitError(f"case {case_id!r} has no fitted coefficients")
        key = _cond_key(T, P)
        for u, phi, c in rows:
            pred = np.array([float(s(u, phi)) for s in base])
            pooled.setdefault(key, []).append(c.as_array() - pred)
    ref_key = _cond_key(*reference)
    offsets = {k: np.mean(v, axis=0) for k, v in pooled.items() if k != ref_key}
    offsets[ref_key] = np.zeros(3)
    return ThermoCorrection(tuple(float(v) for v in reference), offsets)


# ---------------------------------------------------------------------------
# trend models


def _hull_from(**axes) -> Dict[str, List[float]]:
    return {k: [float(np.min(v)), float(np.max(v))] for k, v in axes.items()}


@dataclass
class LogQuadTrend:
    """Hierarchical log-quadratic trend for ``A_3D`` or ``r_3D``."""

    quantity: str
    base: List[CoeffSurface]
    correction: ThermoCorrection
    case_fits: Dict[str, List[dict]] = field(default_factory=dict)
    hull: Dict[str, List[float]] = field(default_factory=dict)
    provenance: str = ""
    kind: str = "log_quadratic"
    input_names: Tuple[str, ...] = ("t", "u_prime", "phi", "T", "P")

    def coefficients(self, u, phi, T, P) -> np.ndarray:
        base = np.stack([np.asarray(s(u, phi)) for s in self.base], axis=-1)
        return base + self.correction.delta(T, P)

    def evaluate(self, t, u_prime, phi=None, T=None, P=None):
        T, P = self._default_thermo(T, P)
        phi = self._default_phi(phi)
        t, u_prime, phi = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (t, u_prime, phi)))
        T = np.broadcast_to(np.asarray(T, dtype=np.float64), t.shape)
        P = np.broadcast_to(np.asarray(P, dtype=np.float64), t.shape)
        out = np.empty(t.shape)
        for tp in {(float(a), float(b)) for a, b in zip(T.ravel(), P.ravel())}:
            sel = (T == tp[0]) & (P == tp[1])
            c = self.coefficients(u_prime[sel], phi[sel], *tp)
            out[sel] = eval_log_quadratic(c, t[sel])
        return out

    def _default_thermo(self, T, P):
        if T is None or P is None:
            T0, P0 = self.correction.reference
            return (T0 if T is None else T), (P0 if P is None else P)
        return T, P

    def _default_phi(self, phi):
        if phi is None:
            lo, hi = self.hull.get("phi", [0.0, 0.0])
            return 0.5 * (lo + hi)
        return phi

    def to_dict(self) -> dict:
        return {"kind": self.kind, "quantity": self.quantity,
                "base": [s.to_dict() for s in self.base],
                "correction": self.correction.to_dict(),
                "case_fits": self.case_fits, "hull": self.hull, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d) -> "LogQuadTrend":
        return cls(d["quantity"], [CoeffSurface.from_dict(s) for s in d["base"]],
                   ThermoCorrection.from_dict(d["correction"]), d.get("case_fits", {}),
                   d.get("hull", {}), d.get("provenance", ""))


def fit_hierarchical_trend(
    records: Iterable[Tuple[str, float, float, float, float, np.ndarray, np.ndarray]],
    reference: Optional[Tuple[float, float]] = None,
    quantity: str = "A3d",
    basis: str = "quad2d",
) -> LogQuadTrend:
    """Fit the full hierarchy from ``(case_id, u', phi, T, P, t, y)`` records.

    Step 1 fits a log-quadratic per record, step 2 regresses each
    coefficient over ``(u', phi)`` using the reference-condition cases, and
    step 3 estimates thermodynamic offsets for the remaining conditions.
    ``reference`` defaults to the ``(T, P)`` pair with the most records.
    """
    records = list(records)
    if not records:
        raise FitError("no records to fit")
    case_coeffs: Dict[str, list] = {}
    case_conditions: Dict[str, Tuple[float, float]] = {}
    case_fits: Dict[str, List[dict]] = {}
    all_t, all_u, all_phi, all_T, all_P = [], [], [], [], []
    for case_id, u, phi, T, P, t, y in records:
        try:
            c = fit_log_quadratic(t, y)
        except FitError as exc:
            raise FitError(f"temporal fit for case {case_id!r} at u'={u:g}: {exc}") from exc
        case_coeffs.setdefault(case_id, []).append((u, phi, c))
        prev = case_conditions.setdefault(case_id, (float(T), float(P)))
        if prev != (float(T), float(P)):
            raise FitError(f"case {case_id!r} mixes thermodynamic conditions {prev} and {(T, P)}")
        case_fits.setdefault(case_id, []).append(
            {"u_prime": float(u), "phi": float(phi), "coeffs": [c.c0, c.c1, c.c2], "rms": c.rms})
        all_t.append(np.asarray(t)); all_u.append(u); all_phi.append(phi); all_T.append(T); all_P.append(P)
    if reference is None:
        counts: Dict[Tuple[float, float], int] = {}
        for cid, cond in case_conditions.items():
            counts[cond] = counts.get(cond, 0) + len(case_coeffs[cid])
        reference = max(counts, key=lambda k: (counts[k], -k[0], -k[1]))
    reference = (float(reference[0]), float(reference[1]))
    ref_rows = [row for cid, rows in case_coeffs.items() if case_conditions[cid] == reference for row in rows]
    if not ref_rows:
        raise FitError(f"no cases at the reference condition T={reference[0]:g}, P={reference[1]:g}")
    try:
        base = [fit_coeff_surface([(u, phi, c.as_array()[i]) for u, phi, c in ref_rows], basis)
                for i in range(3)]
    except FitError as exc:
        raise FitError(f"coefficient regression: {exc}") from exc
    correction = fit_thermo_correction(base, case_coeffs, case_conditions, reference)
    hull = _hull_from(t=np.concatenate(all_t), u_prime=all_u, phi=all_phi, T=all_T, P=all_P)
    return LogQuadTrend(quantity, base, correction, case_fits, hull,
                        provenance=f"hierarchical log-quadratic fit of {len(records)} curves")


@dataclass
class LinearRTrend:
    """``u_tm ~ alpha(u') r + beta(u')`` with alpha, beta polynomial in ``u'``."""

    alpha: CoeffSurface
    beta: CoeffSurface
    level_fits: List[dict] = field(default_factory=list)
    hull: Dict[str, List[float]] = field(default_factory=dict)
    provenance: str = ""
    quantity: str = "u_tm"
    kind: str = "linear_r"
    input_names: Tuple[str, ...] = ("r", "u_prime")

    def evaluate(self, r, u_prime):
        r, u = np.broadcast_arrays(np.asarray(r, dtype=np.float64), np.asarray(u_prime, dtype=np.float64))
        return self.alpha(u) * r + self.beta(u)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "quantity": self.quantity, "alpha": self.alpha.to_dict(),
                "beta": self.beta.to_dict(), "level_fits": self.level_fits,
                "hull": self.hull, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d) -> "LinearRTrend":
        return cls(CoeffSurface.from_dict(d["alpha"]), CoeffSurface.from_dict(d["beta"]),
                   d.get("level_fits", []), d.get("hull", {}), d.get("provenance", ""))


def fit_linear_r_trend(curves: Iterable[Tuple[float, np.ndarray, np.ndarray]], basis: str = "quad2d") -> LinearRTrend:
    """Fit ``(u', r, u_tm)`` curves: a line per level, then alpha/beta over ``u'``."""
    fits, all_r = [], []
    for u, r, y in curves:
        slope, intercept = fit_linear_trend(r, y)
        fits.append({"u_prime": float(u), "alpha": slope, "beta": intercept})
        all_r.append(np.asarray(r))
    if not fits:
        raise FitError("no curves to fit")
    # quadratic in u' needs 3 levels; fall back to a line below that
    use = basis if len(fits) >= 3 else "linear"
    if len(fits) < 2:
        a = CoeffSurface("linear", [(0, 0)], np.array([fits[0]["alpha"]]))
        b = CoeffSurface("linear", [(0, 0)], np.array([fits[0]["beta"]]))
    else:
        a = fit_coeff_surface([(f["u_prime"], 0.0, f["alpha"]) for f in fits], use)
        b = fit_coeff_surface([(f["u_prime"], 0.0, f["beta"]) for f in fits], use)
    hull = _hull_from(r=np.concatenate(all_r), u_prime=[f["u_prime"] for f in fits])
    return LinearRTrend(a, b, fits, hull, provenance=f"linear-in-r fit of {len(fits)} levels")


def _interp_linear_extrap(xq, xs, ys):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    xq = np.asarray(xq, dtype=np.float64)
    if xs.size == 1:
        return np.full(xq.shape, ys[0])
    out = np.interp(xq, xs, ys)
    lo = xq < xs[0]
    hi = xq > xs[-1]
    out = np.where(lo, ys[0] + (xq - xs[0]) * (ys[1] - ys[0]) / (xs[1] - xs[0]), out)
    out = np.where(hi, ys[-1] + (xq - xs[-1]) * (ys[-1] - ys[-2]) / (xs[-1] - xs[-2]), out)
    return out


@dataclass
class PressureLinearTrend:
    """``r ~ a(P) t + b(P)`` from per-pressure line fits.

    Between fitted pressures ``a`` and ``b`` are interpolated linearly;
    outside they are extrapolated from the two nearest end levels.
    """

    pressures: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    hull: Dict[str, List[float]] = field(default_factory=dict)
    provenance: str = ""
    quantity: str = "r"
    kind: str = "pressure_linear"
    input_names: Tuple[str, ...] = ("t", "P")

    def slope(self, P):
        return _interp_linear_extrap(P, self.pressures, self.slopes)

    def intercept(self, P):
        return _interp_linear_extrap(P, self.pressures, self.intercepts)

    def evaluate(self, t, P):
        t, P = np.broadcast_arrays(np.asarray(t, dtype=np.float64), np.asarray(P, dtype=np.float64))
        return self.slope(P) * t + self.intercept(P)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "quantity": self.quantity,
                "pressures": self.pressures.tolist(), "slopes": self.slopes.tolist(),
                "intercepts": self.intercepts.tolist(), "hull": self.hull, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d) -> "PressureLinearTrend":
        return cls(np.asarray(d["pressures"], dtype=np.float64), np.asarray(d["slopes"], dtype=np.float64),
                   np.asarray(d["intercepts"], dtype=np.float64), d.get("hull", {}), d.get("provenance", ""))


def fit_pressure_trend(curves: Iterable[Tuple[float, np.ndarray, np.ndarray]]) -> PressureLinearTrend:
    """Fit ``(P, t, r)`` curves, one line per pressure level."""
    rows, all_t = [], []
    for P, t, r in curves:
        slope, intercept = fit_linear_trend(t, r)
        rows.append((float(P), slope, intercept))
        all_t.append(np.asarray(t))
    if not rows:
        raise FitError("no pressure levels to fit")
    rows.sort()
    P, a, b = (np.array(v) for v in zip(*rows))
    if np.unique(P).size != P.size:
        raise FitError("duplicate pressure levels")
    hull = _hull_from(t=np.concatenate(all_t), P=P)
    return PressureLinearTrend(P, a, b, hull, provenance=f"linear-in-t fit at {len(P)} pressures")


TREND_KINDS = {
    "log_quadratic": LogQuadTrend,
    "linear_r": LinearRTrend,
    "pressure_linear": PressureLinearTrend,
}


def trend_from_dict(d):
    return TREND_KINDS[d["kind"]].from_dict(d)


# ---------------------------------------------------------------------------
# dense grids


@dataclass
class LofiGrid:
    axes: Dict[str, np.ndarray]
    values: np.ndarray
    provenance: str

    def points(self) -> Tuple[np.ndarray, np.ndarray]:
        """Flatten to ``(X, y)`` with one row per node, columns in axis order."""
        mesh = np.meshgrid(*self.axes.values(), indexing="ij")
        X = np.column_stack([m.ravel() for m in mesh])
        return X, self.values.ravel()

    def to_csv(self, path) -> None:
        X, y = self.points()
        with open(path, "w", newline="") as fh:
            fh.write(f"# provenance: {self.provenance}\n")
            w = csv.writer(fh)
            w.writerow([*self.axes.keys(), "value"])
            for row, v in zip(X, y):
                w.writerow([repr(float(c)) for c in row] + [repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "LofiGrid":
        with open(path, newline="") as fh:
            first = fh.readline()
            provenance = first.split(":", 1)[1].strip() if first.startswith("#") else ""
            if not first.startswith("#"):
                fh.seek(0)
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=np.float64)
        names = header[:-1]
        axes = {n: np.unique(data[:, k]) for k, n in enumerate(names)}
        values = data[:, -1].reshape([len(a) for a in axes.values()])
        return cls(axes, values, provenance)


def _axis_values(spec) -> np.ndarray:
    if isinstance(spec, Mapping):
        lo, hi, n = spec["min"], spec["max"], int(spec.get("n", 50))
        if spec.get("log", False):
            return np.geomspace(lo, hi, n)
        return np.linspace(lo, hi, n)
    return np.atleast_1d(np.asarray(spec, dtype=np.float64))


def build_lofi_grid(model, grid_spec: Mapping[str, object]) -> LofiGrid:
    """Evaluate ``model`` on the tensor grid described by ``grid_spec``.

    Each axis entry is either an explicit list of values or a mapping with
    ``min``, ``max`` and optional ``n`` (default 50) and ``log``.  Axes
    omitted from ``grid_spec`` fall back to the model's defaults.
    """
    names = [n for n in model.input_names if n in grid_spec]
    unknown = set(grid_spec) - set(model.input_names)
    if unknown:
        raise ValueError(f"grid axes {sorted(unknown)} are not inputs of {model.kind} trend")
    axes = {n: _axis_values(grid_spec[n]) for n in names}
    for n, vals in axes.items():
        lo_hi = model.hull.get(n)
        if lo_hi and (vals.min() < lo_hi[0] - 1e-12 or vals.max() > lo_hi[1] + 1e-12):
            warnings.warn(f"grid axis {n!r} [{vals.min():g}, {vals.max():g}] leaves the fitted "
                          f"range [{lo_hi[0]:g}, {lo_hi[1]:g}]", stacklevel=2)
    mesh = np.meshgrid(*axes.values(), indexing="ij")
    values = model.evaluate(**dict(zip(names, mesh)))
    if not np.all(np.isfinite(values)):
        raise FitError("Lo-Fi grid contains non-finite values")
    return LofiGrid(axes, np.asarray(values), provenance=f"{model.kind}:{model.quantity} {model.provenance}".strip())
