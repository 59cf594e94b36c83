"""Pressure trace to burning curve: smoothing, truncation, u_tm(r_m).

    python demos/burning_velocity.py
"""
import numpy as np

from mufinns.synth import synthetic_pressure_trace
from mufinns.thermo import PipelineConfig, process_pressure_trace


def main():
    trace = synthetic_pressure_trace(n=3000, noise_std=0.002)
    raw, smooth = process_pressure_trace(trace, PipelineConfig())
    print(f"{raw.r.size} admissible samples, r_m from {raw.r[0] * 1e3:.1f} to {raw.r[-1] * 1e3:.1f} mm")
    for r in np.linspace(smooth.r[0], smooth.r[-1], 8):
        print(f"  r_m {r * 1e3:6.1f} mm   u_tm {np.interp(r, smooth.r, smooth.u_tm):.4f} m/s")


if __name__ == "__main__":
    main()
