"""Multi-fidelity neural networks for turbulent flame trends.

Low-fidelity trend fits feed a composite network whose linear and
nonlinear branches correct them toward scarce high-fidelity data.
"""
from .dataset import CaseCondition, FlameTrace, HoldoutSpec, builtin_registry
from .lofi import fit_hierarchical_trend, fit_linear_r_trend, fit_pressure_trend
from .model import CompoundLossConfig, MufinnModel, build_model, forward_mf, init_model, predict, train
from .nn import NetworkSpec, backward, forward, init_params
from .optim import AdamConfig, LbfgsConfig, adam_run, lbfgs_run

__version__ = "0.1.0"
