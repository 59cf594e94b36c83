"""Train on the Forrester pair and print the fit next to the LF-only network.

    python demos/forrester.py [seed]
"""
import sys

import numpy as np

from mufinns.benchmarks import run_forrester
from mufinns.model import forward_mf
from mufinns.synth import forrester_pair


def main(seed=0):
    model, report, m = run_forrester(seed=seed)
    print(f"test RMSE {m['test_rmse']:.4f}  LF-only {m['lf_only_rmse']:.4f}  "
          f"(loss {m['loss_after_adam']:.3e} after Adam, {m['loss_after_lbfgs']:.3e} after L-BFGS)")
    x = np.linspace(0, 1, 11)
    y_lf, y_mf = forward_mf(model, x)
    _, y_hf = forrester_pair(x)
    print(f"{'x':>5} {'hf':>9} {'lf net':>9} {'mufinn':>9}")
    for row in zip(x, y_hf, y_lf, y_mf):
        print("{:5.2f} {:9.4f} {:9.4f} {:9.4f}".format(*row))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
