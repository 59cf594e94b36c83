"""Run configuration: one JSON document per run, every field defaulted.

Sections and defaults
---------------------
``seed`` (0), ``output_dir`` ("runs")

``data``
    ``source`` ("manifest": ingested traces; or "forrester"), ``input`` (None: a
    manifest JSON or a directory holding ``manifest.json``; defaults to the
    ``synth`` output under the run directory), ``registry`` (None: built-in
    case table), ``target`` ("A3d"; also "r3d", or "u_tm" for burning curves).
``synth``
    ``kind`` ("flame"; also "pressure_sweep", "pressure_trace", "forrester"),
    ``case``, ``levels`` and ``n_times`` (None: per-kind defaults, e.g. case V
    with u' in 0.3..1.5 and 15 samples for "flame"),
    ``t_range`` (None: per-kind defaults), ``noise_std`` (0.02),
    ``realizations`` (3), ``amplitude`` (0.1), ``frequency`` (2 pi).
``lofi``
    ``kind`` ("log_quadratic"; also "linear_r", "pressure_linear"), ``basis``
    ("quad2d"), ``grid_n`` (50), ``reference`` (None: most populated (T, P)).
``features``
    ``inputs`` (None: family defaults minus constant columns), ``log_inputs``
    ([]), ``log_output`` (false).
``model``
    ``lf_hidden`` ([20, 20]), ``nl_hidden`` ([10, 10]).
``loss``
    ``lambda_lf`` (1e-5), ``lambda_hf_nl`` (1e-5).
``adam``
    ``lr_max`` (1e-3), ``warmup_iters`` (None: 5% of ``max_iters``),
    ``max_iters`` (10000), ``beta1`` (0.9), ``beta2`` (0.999), ``epsilon`` (1e-8),
    ``clip_norm`` (1.0), ``plateau_window`` (500), ``plateau_tol`` (1e-4).
``lbfgs``
    ``max_iters`` (2000), ``history_size`` (20), ``grad_tol`` (1e-8),
    ``line_search`` ("strong_wolfe").
``holdout``
    ``masked_axis`` (None: no masking), ``masked_values`` ([]), ``purpose``
    ("interpolation").
``signal``
    ``sg_pressure`` ([51, 3]), ``downsample`` (10), ``sg_curve`` ([11, 3]),
    ``eps_frac`` (0.02), ``r_window`` (None: no clipping), ``Pf_override`` (None).
``bench``
    ``suites`` (["forrester", "flame", "pressure"]), ``parallel`` (true),
    ``lambda_lf`` and ``lambda_hf_nl`` (None: suite defaults).
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .dataset import HoldoutSpec
from .model import CompoundLossConfig
from .optim import AdamConfig, LbfgsConfig
from .pipeline import Task, TrainSettings
from .thermo import PipelineConfig, SgConfig


class ConfigError(ValueError):
    pass


@dataclass
class DataSection:
    source: str = "manifest"
    input: Optional[str] = None
    registry: Optional[str] = None
    target: str = "A3d"


@dataclass
class SynthSection:
    kind: str = "flame"
    case: Optional[str] = None
    levels: Optional[List[float]] = None
    n_times: Optional[int] = None
    t_range: Optional[List[float]] = None
    noise_std: float = 0.02
    realizations: int = 3
    amplitude: float = 0.1
    frequency: float = 2.0 * math.pi


@dataclass
class LofiSection:
    kind: str = "log_quadratic"
    basis: str = "quad2d"
    grid_n: int = 50
    reference: Optional[List[float]] = None


@dataclass
class FeatureSection:
    inputs: Optional[List[str]] = None
    log_inputs: List[str] = field(default_factory=list)
    log_output: bool = False


@dataclass
class ModelSection:
    lf_hidden: List[int] = field(default_factory=lambda: [20, 20])
    nl_hidden: List[int] = field(default_factory=lambda: [10, 10])


@dataclass
class HoldoutSection:
    masked_axis: Optional[str] = None
    masked_values: list = field(default_factory=list)
    purpose: str = "interpolation"


@dataclass
class SignalSection:
    sg_pressure: List[int] = field(default_factory=lambda: [51, 3])
    downsample: int = 10
    sg_curve: List[int] = field(default_factory=lambda: [11, 3])
    eps_frac: float = 0.02
    r_window: Optional[List[float]] = None
    Pf_override: Optional[float] = None


@dataclass
class BenchSection:
    suites: List[str] = field(default_factory=lambda: ["forrester", "flame", "pressure"])
    parallel: bool = True
    lambda_lf: Optional[float] = None
    lambda_hf_nl: Optional[float] = None


_SECTIONS = {
    "data": DataSection, "synth": SynthSection, "lofi": LofiSection, "features": FeatureSection,
    "model": ModelSection, "loss": CompoundLossConfig, "adam": AdamConfig, "lbfgs": LbfgsConfig,
    "holdout": HoldoutSection, "signal": SignalSection, "bench": BenchSection,
}


@dataclass
class RunConfig:
    seed: int = 0
    output_dir: str = "runs"
    data: DataSection = field(default_factory=DataSection)
    synth: SynthSection = field(default_factory=SynthSection)
    lofi: LofiSection = field(default_factory=LofiSection)
    features: FeatureSection = field(default_factory=FeatureSection)
    model: ModelSection = field(default_factory=ModelSection)
    loss: CompoundLossConfig = field(default_factory=CompoundLossConfig)
    adam: AdamConfig = field(default_factory=AdamConfig)
    lbfgs: LbfgsConfig = field(default_factory=LbfgsConfig)
    holdout: HoldoutSection = field(default_factory=HoldoutSection)
    signal: SignalSection = field(default_factory=SignalSection)
    bench: BenchSection = field(default_factory=BenchSection)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config root must be an object")
        _reject_unknown(d, {f.name for f in dataclasses.fields(cls)}, "config")
        kw = {}
        for k, v in d.items():
            if k in _SECTIONS:
                if not isinstance(v, dict):
                    raise ConfigError(f"section {k!r} must be an object")
                sec = _SECTIONS[k]
                _reject_unknown(v, {f.name for f in dataclasses.fields(sec)}, k)
                try:
                    kw[k] = sec(**v)
                except TypeError as exc:
                    raise ConfigError(f"section {k!r}: {exc}") from exc
            else:
                kw[k] = v
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    # typed views -----------------------------------------------------------

    def task(self) -> Task:
        ref = tuple(self.lofi.reference) if self.lofi.reference else None
        return Task(kind=self.lofi.kind, target=self.data.target,
                    inputs=tuple(self.features.inputs) if self.features.inputs else None,
                    log_inputs=tuple(self.features.log_inputs), log_output=self.features.log_output,
                    basis=self.lofi.basis, reference=ref, grid_n=self.lofi.grid_n)

    def holdout_spec(self) -> Optional[HoldoutSpec]:
        h = self.holdout
        if h.masked_axis is None:
            return None
        return HoldoutSpec(h.masked_axis, h.masked_values, h.purpose)

    def train_settings(self) -> TrainSettings:
        return TrainSettings(tuple(self.model.lf_hidden), tuple(self.model.nl_hidden),
                             self.loss, self.adam, self.lbfgs, self.seed)

    def pipeline_config(self) -> PipelineConfig:
        s = self.signal
        return PipelineConfig(SgConfig(*s.sg_pressure), s.downsample, SgConfig(*s.sg_curve), s.eps_frac,
                              tuple(s.r_window) if s.r_window else (0.0, math.inf), s.Pf_override)


def _reject_unknown(d: dict, allowed, where: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
