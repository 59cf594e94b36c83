"""Multi-fidelity network: a low-fidelity net plus linear and nonlinear corrections.

The low-fidelity net maps normalized inputs ``x`` to ``y_lf``.  Both
correction branches see ``[x, y_lf]``; their outputs are summed into the
multi-fidelity prediction.  Everything is computed in normalized space and
de-normalized on the way out.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import nn
from .dataset import NormStats, compute_norm_stats
from .optim import AdamConfig, LbfgsConfig, adam_run, lbfgs_run

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass
class MufinnModel:
    lf_spec: nn.NetworkSpec
    lf_params: np.ndarray
    lin_spec: nn.NetworkSpec
    lin_params: np.ndarray
    nl_spec: nn.NetworkSpec
    nl_params: np.ndarray
    norm: NormStats
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.lf_spec.input_dim
        if self.lf_spec.output_dim != 1 or self.lin_spec.output_dim != 1 or self.nl_spec.output_dim != 1:
            raise ValueError("all three networks must have a scalar output")
        if self.lin_spec.input_dim != d + 1 or self.nl_spec.input_dim != d + 1:
            raise ValueError(f"correction branches need input_dim {d + 1}")
        if self.lin_spec.hidden_layers or self.lin_spec.activation != "identity":
            raise ValueError("linear branch must be a single affine layer")
        if self.norm.x_mean.size != d:
            raise ValueError("normalization statistics do not match the input dimension")
        self.lf_params = np.asarray(self.lf_params, dtype=np.float64)
        self.lin_params = np.asarray(self.lin_params, dtype=np.float64)
        self.nl_params = np.asarray(self.nl_params, dtype=np.float64)

    @property
    def input_dim(self) -> int:
        return self.lf_spec.input_dim

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return self.lf_spec.n_params, self.lin_spec.n_params, self.nl_spec.n_params

    def theta(self) -> np.ndarray:
        return np.concatenate([self.lf_params, self.lin_params, self.nl_params])

    def with_theta(self, theta) -> "MufinnModel":
        a, b, _ = self.sizes
        theta = np.asarray(theta, dtype=np.float64)
        return replace(self, lf_params=theta[:a].copy(), lin_params=theta[a:a + b].copy(),
                       nl_params=theta[a + b:].copy())

    def to_dict(self) -> dict:
        return {
            "format": "mufinn-model",
            "version": FORMAT_VERSION,
            "lf": {"spec": self.lf_spec.to_dict(), "params": self.lf_params.tolist()},
            "lin": {"spec": self.lin_spec.to_dict(), "params": self.lin_params.tolist()},
            "nl": {"spec": self.nl_spec.to_dict(), "params": self.nl_params.tolist()},
            "norm": self.norm.to_dict(),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d) -> "MufinnModel":
        if d.get("format") != "mufinn-model":
            raise ValueError("not a mufinn model document")
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')}")
        return cls(nn.NetworkSpec.from_dict(d["lf"]["spec"]), np.asarray(d["lf"]["params"]),
                   nn.NetworkSpec.from_dict(d["lin"]["spec"]), np.asarray(d["lin"]["params"]),
                   nn.NetworkSpec.from_dict(d["nl"]["spec"]), np.asarray(d["nl"]["params"]),
                   NormStats.from_dict(d["norm"]), d.get("provenance", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MufinnModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def digest(self) -> str:
        """SHA-256 of the exact parameter bits and specs."""
        h = hashlib.sha256()
        for spec in (self.lf_spec, self.lin_spec, self.nl_spec):
            h.update(json.dumps(spec.to_dict(), sort_keys=True).encode())
        h.update(self.theta().tobytes())
        h.update(np.concatenate([self.norm.x_mean, self.norm.x_std,
                                 [self.norm.y_mean, self.norm.y_std]]).tobytes())
        return h.hexdigest()


def build_model(
    input_dim: int,
    norm: NormStats,
    lf_hidden: Sequence[int] = (20, 20),
    nl_hidden: Sequence[int] = (10, 10),
    seed: int = 0,
) -> MufinnModel:
    """Fresh model with Glorot-initialized networks; the three nets get distinct seeds."""
    lf = nn.NetworkSpec(input_dim, tuple(lf_hidden), 1, "tanh")
    lin = nn.NetworkSpec(input_dim + 1, (), 1, "identity")
    nl = nn.NetworkSpec(input_dim + 1, tuple(nl_hidden), 1, "tanh")
    ss = np.random.SeedSequence(seed).spawn(3)
    seeds = [int(s.generate_state(1)[0]) for s in ss]
    return MufinnModel(lf, nn.init_params(lf, seeds[0]), lin, nn.init_params(lin, seeds[1]),
                       nl, nn.init_params(nl, seeds[2]), norm)


def _check_x(model: MufinnModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None] if model.input_dim == 1 else x[None, :]
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(f"inputs must have shape (n, {model.input_dim}), got {np.shape(x)}")
    return x


def _forward_norm(model: MufinnModel, xn: np.ndarray, cache: bool = False):
    y_lf, c_lf = nn.forward(model.lf_spec, model.lf_params, xn, return_cache=True)
    z = np.hstack([xn, y_lf])
    y_l, c_l = nn.forward(model.lin_spec, model.lin_params, z, return_cache=True)
    y_nl, c_nl = nn.forward(model.nl_spec, model.nl_params, z, return_cache=True)
    y_mf = y_l + y_nl
    if cache:
        return y_lf, y_mf, (c_lf, c_l, c_nl)
    return y_lf, y_mf


def forward_mf(model: MufinnModel, x) -> Tuple[np.ndarray, np.ndarray]:
    """Return de-normalized ``(y_lf, y_mf)`` as 1-D arrays."""
    xn = model.norm.norm_x(_check_x(model, x))
    y_lf, y_mf = _forward_norm(model, xn)
    return model.norm.denorm_y(y_lf[:, 0]), model.norm.denorm_y(y_mf[:, 0])


def predict(model: MufinnModel, x) -> np.ndarray:
    return forward_mf(model, x)[1]


@dataclass
class CompoundLossConfig:
    lambda_lf: float = 1e-5
    lambda_hf_nl: float = 1e-5

    def __post_init__(self):
        for v in (self.lambda_lf, self.lambda_hf_nl):
            if not np.isfinite(v) or v < 0:
                raise ValueError("regularization weights must be finite and nonnegative")


@dataclass
class LossTerms:
    total: float
    mse_lf: float
    mse_hf: float
    reg_lf: float
    reg_nl: float

    def as_dict(self) -> Dict[str, float]:
        return {"total_loss": self.total, "mse_lf": self.mse_lf, "mse_hf": self.mse_hf,
                "reg_lf": self.reg_lf, "reg_nl": self.reg_nl}

    def __iter__(self):
        return iter((self.total, self.mse_lf, self.mse_hf, self.reg_lf, self.reg_nl))


def _prepare(model: MufinnModel, data, name: str):
    x, y = data
    x = _check_x(model, x)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise ValueError(f"{name} dataset is empty")
    if y.size != x.shape[0]:
        raise ValueError(f"{name} dataset has {x.shape[0]} inputs but {y.size} targets")
    return model.norm.norm_x(x), model.norm.norm_y(y)


def _loss_and_grad(model: MufinnModel, xl, yl, xh, yh, cfg: CompoundLossConfig, need_grad=True):
    """Compound loss on pre-normalized data; returns ``(LossTerms, grad)``."""
    lf_w = nn.weight_mask(model.lf_spec)
    nl_w = nn.weight_mask(model.nl_spec)
    reg_lf = cfg.lambda_lf * float(np.sum(model.lf_params[lf_w] ** 2))
    reg_nl = cfg.lambda_hf_nl * float(np.sum(model.nl_params[nl_w] ** 2))

    y_lf_l, c_lf_l = nn.forward(model.lf_spec, model.lf_params, xl, return_cache=True)
    r_lf = y_lf_l[:, 0] - yl
    mse_lf = float(np.mean(r_lf ** 2))

    y_lf_h, y_mf_h, (c_lf_h, c_l, c_nl) = _forward_norm(model, xh, cache=True)
    r_hf = y_mf_h[:, 0] - yh
    mse_hf = float(np.mean(r_hf ** 2))
    terms = LossTerms(mse_lf + mse_hf + reg_lf + reg_nl, mse_lf, mse_hf, reg_lf, reg_nl)
    if not need_grad:
        return terms, None

    d_hf = (2.0 / r_hf.size) * r_hf[:, None]
    g_lin, dz_l = nn.backward(model.lin_spec, model.lin_params, c_l, d_hf)
    g_nl, dz_nl = nn.backward(model.nl_spec, model.nl_params, c_nl, d_hf)
    dy_lf_h = (dz_l + dz_nl)[:, -1:]
    g_lf_h, _ = nn.backward(model.lf_spec, model.lf_params, c_lf_h, dy_lf_h)
    g_lf_l, _ = nn.backward(model.lf_spec, model.lf_params, c_lf_l, (2.0 / r_lf.size) * r_lf[:, None])
    g_lf = g_lf_l + g_lf_h + 2.0 * cfg.lambda_lf * model.lf_params * lf_w
    g_nl = g_nl + 2.0 * cfg.lambda_hf_nl * model.nl_params * nl_w
    return terms, np.concatenate([g_lf, g_lin, g_nl])


def compound_loss(model: MufinnModel, lf_data, hf_data, cfg: CompoundLossConfig) -> LossTerms:
    """Total loss and its four terms, MSEs taken in normalized output space."""
    xl, yl = _prepare(model, lf_data, "low-fidelity")
    xh, yh = _prepare(model, hf_data, "high-fidelity")
    terms, _ = _loss_and_grad(model, xl, yl, xh, yh, cfg, need_grad=False)
    return terms


def compound_loss_grad(model: MufinnModel, lf_data, hf_data, cfg: CompoundLossConfig):
    """``(LossTerms, d total / d theta)`` with theta ordered lf, lin, nl."""
    xl, yl = _prepare(model, lf_data, "low-fidelity")
    xh, yh = _prepare(model, hf_data, "high-fidelity")
    return _loss_and_grad(model, xl, yl, xh, yh, cfg)


@dataclass
class TrainingReport:
    adam_history: List[dict]
    lbfgs_history: List[dict]
    lbfgs_status: str
    final: LossTerms
    adam_final: Optional[float] = None

    def rows(self) -> List[dict]:
        out = []
        for stage, hist in (("adam", self.adam_history), ("lbfgs", self.lbfgs_history)):
            for r in hist:
                out.append({"stage": stage, **r})
        return out

    def to_csv(self, path) -> None:
        import csv
        cols = ["stage", "iter", "total_loss", "mse_lf", "mse_hf", "reg_lf", "reg_nl"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for r in self.rows():
                w.writerow({k: (repr(float(r[k])) if k not in ("stage", "iter") else r[k]) for k in cols})


def train(
    model0: MufinnModel,
    lf_data,
    hf_data,
    loss_cfg: Optional[CompoundLossConfig] = None,
    adam_cfg: Optional[AdamConfig] = None,
    lbfgs_cfg: Optional[LbfgsConfig] = None,
) -> Tuple[MufinnModel, TrainingReport]:
    """Optimize all three networks jointly: Adam, then L-BFGS, on the compound loss.

    ``model0.norm`` must already hold statistics of the training data (see
    :func:`init_model`).
    """
    loss_cfg = loss_cfg or CompoundLossConfig()
    adam_cfg = adam_cfg or AdamConfig()
    lbfgs_cfg = lbfgs_cfg or LbfgsConfig()
    xl, yl = _prepare(model0, lf_data, "low-fidelity")
    xh, yh = _prepare(model0, hf_data, "high-fidelity")
    for arr in (xl, yl, xh, yh):
        if not np.all(np.isfinite(arr)):
            raise ValueError("training data must be finite")

    last: Dict[str, LossTerms] = {}

    def loss_and_grad(theta):
        terms, g = _loss_and_grad(model0.with_theta(theta), xl, yl, xh, yh, loss_cfg)
        last["terms"] = terms
        return terms.total, g

    adam_rows: List[dict] = []
    lbfgs_rows: List[dict] = []

    def on_adam(it, theta, loss):
        adam_rows.append({"iter": it, **last["terms"].as_dict()})

    theta, _ = adam_run(loss_and_grad, model0.theta(), adam_cfg, callback=on_adam)
    adam_final = loss_and_grad(theta)[0] if adam_cfg.max_iters else None

    def on_lbfgs(it, theta, loss):
        terms, _ = _loss_and_grad(model0.with_theta(theta), xl, yl, xh, yh, loss_cfg, need_grad=False)
        lbfgs_rows.append({"iter": it, **terms.as_dict()})

    status = "skipped"
    if lbfgs_cfg.max_iters:
        res = lbfgs_run(loss_and_grad, theta, lbfgs_cfg, callback=on_lbfgs)
        theta, status = res.params, res.status
    model = model0.with_theta(theta)
    final, _ = _loss_and_grad(model, xl, yl, xh, yh, loss_cfg, need_grad=False)
    log.info("training finished: adam %d iters, lbfgs %d iters (%s), loss %.3e",
             len(adam_rows), len(lbfgs_rows), status, final.total)
    return model, TrainingReport(adam_rows, lbfgs_rows, status, final, adam_final)


def init_model(lf_data, hf_data, lf_hidden=(20, 20), nl_hidden=(10, 10), seed: int = 0) -> MufinnModel:
    """Build a model whose normalization covers the union of both datasets."""
    xl, yl = lf_data
    xh, yh = hf_data
    xl = np.asarray(xl, dtype=np.float64)
    xh = np.asarray(xh, dtype=np.float64)
    if xl.ndim == 1:
        xl = xl[:, None]
    if xh.ndim == 1:
        xh = xh[:, None]
    norm = compute_norm_stats(np.vstack([xl, xh]), np.concatenate([np.ravel(yl), np.ravel(yh)]))
    return build_model(xl.shape[1], norm, lf_hidden, nl_hidden, seed)
