"""Two-stage optimization: scheduled Adam followed by L-BFGS refinement.

Both optimizers take a ``loss_and_grad(params) -> (loss, grad)`` callable
and operate on flat float64 vectors.
"""
from __future__ import annotations

import csv
import logging
import warnings
from collections import deque
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import line_search
from scipy.optimize._linesearch import LineSearchWarning

log = logging.getLogger(__name__)

LossAndGrad = Callable[[np.ndarray], Tuple[float, np.ndarray]]


class OptimizerError(RuntimeError):
    """Raised when the loss or gradient becomes non-finite."""

    def __init__(self, stage: str, iteration: int, message: str):
        super().__init__(f"{stage} iteration {iteration}: {message}")
        self.stage = stage
        self.iteration = iteration


@dataclass
class AdamConfig:
    lr_max: float = 1e-3
    warmup_iters: Optional[int] = None  # None -> 5% of max_iters
    max_iters: int = 10000
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float = 1.0
    plateau_window: int = 500
    plateau_tol: float = 1e-4

    def __post_init__(self):
        if self.warmup_iters is None:
            self.warmup_iters = int(0.05 * self.max_iters)
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.max_iters > 0 and not 0 <= self.warmup_iters < self.max_iters:
            raise ValueError("warmup_iters must satisfy 0 <= warmup_iters < max_iters")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.lr_max <= 0 or self.epsilon <= 0 or self.clip_norm <= 0 or self.plateau_tol <= 0:
            raise ValueError("lr_max, epsilon, clip_norm and plateau_tol must be positive")
        if self.plateau_window < 2:
            raise ValueError("plateau_window must be at least 2")


@dataclass
class LbfgsConfig:
    max_iters: int = 2000
    history_size: int = 20
    grad_tol: float = 1e-8
    line_search: str = "strong_wolfe"

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.history_size < 1:
            raise ValueError("history_size must be at least 1")
        if self.line_search != "strong_wolfe":
            raise ValueError(f"unsupported line search {self.line_search!r}")


def lr_schedule(iteration: int, cfg: AdamConfig) -> float:
    """Linear warmup to ``lr_max`` followed by cosine decay."""
    w = cfg.warmup_iters
    if iteration < w:
        return cfg.lr_max * iteration / w
    frac = (iteration - w) / (cfg.max_iters - w)
    return cfg.lr_max * 0.5 * (1.0 + np.cos(np.pi * frac))


def clip_gradient(g: np.ndarray, clip_norm: float) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    norm = np.linalg.norm(g)
    if norm <= clip_norm:
        return g
    return g * (clip_norm / norm)


def plateau_reached(history, window: int, tol: float) -> bool:
    if len(history) < window:
        return False
    tail = np.asarray(history[-window:])
    return (tail.max() - tail.min()) / max(abs(tail.mean()), 1e-12) < tol


def adam_run(
    loss_and_grad: LossAndGrad,
    params0: np.ndarray,
    cfg: AdamConfig,
    callback: Optional[Callable[[int, np.ndarray, float], None]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Full-batch Adam with warmup-cosine schedule, clipping and plateau stop.

    Returns the final parameters and the loss recorded at every iteration.
    """
    x = np.array(params0, dtype=np.float64)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    history: List[float] = []
    for it in range(cfg.max_iters):
        loss, g = loss_and_grad(x)
        if not np.isfinite(loss) or not np.all(np.isfinite(g)):
            raise OptimizerError("adam", it, f"non-finite loss or gradient (loss={loss})")
        history.append(float(loss))
        if callback is not None:
            callback(it, x, loss)
        if plateau_reached(history, cfg.plateau_window, cfg.plateau_tol):
            log.debug("adam plateau stop at iteration %d", it + 1)
            break
        g = clip_gradient(g, cfg.clip_norm)
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1 ** (it + 1))
        v_hat = v / (1.0 - cfg.beta2 ** (it + 1))
        x = x - lr_schedule(it, cfg) * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    return x, np.asarray(history)


@dataclass
class LbfgsResult:
    params: np.ndarray
    loss: float
    iterations: int
    status: str  # "converged" | "max_iters" | "line_search_failed"
    history: np.ndarray

    def __iter__(self):
        # allows ``params, loss = lbfgs_run(...)``
        yield self.params
        yield self.loss


def _two_loop(g, s_hist, y_hist, rho_hist):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
        a = rho * s.dot(q)
        alphas.append(a)
        q -= a * y
    s, y = s_hist[-1], y_hist[-1]
    q *= s.dot(y) / y.dot(y)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
        b = rho * y.dot(q)
        q += (a - b) * s
    return -q


def lbfgs_run(
    loss_and_grad: LossAndGrad,
    params0: np.ndarray,
    cfg: LbfgsConfig,
    callback: Optional[Callable[[int, np.ndarray, float], None]] = None,
) -> LbfgsResult:
    """Limited-memory BFGS with a strong-Wolfe line search.

    A failed line search does not raise; the best iterate found so far is
    returned with ``status == "line_search_failed"``.
    """
    cache = {}

    def evaluate(x):
        key = x.tobytes()
        if key not in cache:
            cache.clear()
            f, g = loss_and_grad(x)
            cache[key] = (float(f), np.array(g, dtype=np.float64))
        return cache[key]

    x = np.array(params0, dtype=np.float64)
    f, g = evaluate(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise OptimizerError("lbfgs", 0, f"non-finite loss or gradient (loss={f})")
    history = [f]
    s_hist: deque = deque(maxlen=cfg.history_size)
    y_hist: deque = deque(maxlen=cfg.history_size)
    rho_hist: deque = deque(maxlen=cfg.history_size)
    status = "max_iters"
    it = 0
    while it < cfg.max_iters:
        if np.max(np.abs(g)) < cfg.grad_tol:
            status = "converged"
            break
        if s_hist:
            d = _two_loop(g, s_hist, y_hist, rho_hist)
            old_old = None
        else:
            d = -g
            old_old = f + np.linalg.norm(g) / 2.0
        if d.dot(g) >= 0:
            s_hist.clear(); y_hist.clear(); rho_hist.clear()
            d = -g
            old_old = f + np.linalg.norm(g) / 2.0
        alpha, f_new = _search(evaluate, x, d, g, f, old_old)
        if alpha is None and s_hist:
            # retry once along steepest descent with a fresh memory
            s_hist.clear(); y_hist.clear(); rho_hist.clear()
            d = -g
            alpha, f_new = _search(evaluate, x, d, g, f, f + np.linalg.norm(g) / 2.0)
        if alpha is None or not f_new < f:
            status = "line_search_failed"
            log.info("lbfgs line search failed at iteration %d; returning best iterate", it)
            break
        x_new = x + alpha * d
        f_new, g_new = evaluate(x_new)
        s = x_new - x
        y = g_new - g
        sy = s.dot(y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s); y_hist.append(y); rho_hist.append(1.0 / sy)
        x, f, g = x_new, f_new, g_new
        it += 1
        history.append(f)
        if callback is not None:
            callback(it, x, f)
    else:
        if np.max(np.abs(g)) < cfg.grad_tol:
            status = "converged"
    return LbfgsResult(x, f, it, status, np.asarray(history))


def _search(evaluate, x, d, g, f, old_old):
    def phi(z):
        return evaluate(z)[0]

    def dphi(z):
        return evaluate(z)[1]

    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", LineSearchWarning)
        try:
            res = line_search(phi, dphi, x, d, gfk=g, old_fval=f, old_old_fval=old_old,
                              c1=1e-4, c2=0.9, maxiter=50)
        except (FloatingPointError, ValueError):
            return None, None
    alpha, f_new = res[0], res[3]
    if alpha is None or f_new is None or not np.isfinite(f_new):
        return None, None
    return alpha, f_new


def write_history_csv(path, rows, fieldnames=("iter", "total_loss", "mse_lf", "mse_hf", "reg_lf", "reg_nl")):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fieldnames), extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(float(v)) if k != "iter" and not isinstance(v, str) else v
                        for k, v in row.items()})


def read_history_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        out = []
        for row in csv.DictReader(fh):
            rec = {}
            for k, v in row.items():
                if k == "iter":
                    rec[k] = int(v)
                elif k == "stage":
                    rec[k] = v
                else:
                    rec[k] = float(v)
            out.append(rec)
        return out
