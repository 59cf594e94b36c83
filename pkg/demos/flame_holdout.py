"""Synthetic flame-area hold-out with two discrepancy frequencies.

At the default frequency (2 pi) the discrepancy changes sign between
adjacent u' levels, so masked levels cannot be inferred; at 1.309 it varies
by a quarter period over the sampled range and the hold-out ratios fall
inside the thresholds.

    python demos/flame_holdout.py
"""
import warnings

import numpy as np

from mufinns.benchmarks import flame_suite
from mufinns.synth import SyntheticFlameSpec, default_flame_trends


def main():
    warnings.simplefilter("ignore")
    area, radius = default_flame_trends()
    for freq in (2 * np.pi, 1.309):
        spec = SyntheticFlameSpec(area, radius, frequency=freq, noise_std=0.02, seed=0)
        print(f"discrepancy frequency {freq:.3f}")
        for c in flame_suite(0, spec=spec):
            if c.name.endswith("_ratio"):
                d = c.detail
                print(f"  {c.line()}  (train {d['train_rmse']:.4f}, test {d['test_rmse']:.4f})")


if __name__ == "__main__":
    main()
