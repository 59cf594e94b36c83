import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mufinns.synth import synthetic_pressure_trace
from mufinns.thermo import (BurningCurve, PipelineConfig, PressureTrace, SgConfig, admissible, compute_rm,
                            compute_utm, derivative, downsample, process_pressure_trace, read_pressure_csv,
                            reparam_utm_vs_r, savgol_smooth, truncate_at_peak, wrinkling_ratio,
                            write_pressure_csv)

WORKED = dict(P0=0.1, Pf=0.8, gamma=1.4, R0=0.19, P=0.45, dPdt=2.0)


def trace_at(P, P0=0.1, Pf=0.8, gamma=1.4, R0=0.19):
    P = np.atleast_1d(np.asarray(P, dtype=float))
    return PressureTrace(np.arange(P.size, dtype=float), P, P0, gamma, R0, Pf=Pf)


def utm_oneliner(P0, Pf, gamma, R0, P, dPdt):
    return (P0 / P) ** (1 / gamma) * (1 - (P0 / P) ** (1 / gamma) * (Pf - P) / (Pf - P0)) ** (-2 / 3) \
        * R0 / (3 * (Pf - P0)) * dPdt


def test_worked_example_utm_and_rm():
    w = WORKED
    tr = trace_at(w["P"])
    u = compute_utm(tr, np.array([w["dPdt"]]))[0]
    assert u == pytest.approx(utm_oneliner(**w), abs=1e-10)
    assert u == pytest.approx(0.0700, abs=5e-5)
    x = (w["P0"] / w["P"]) ** (1 / w["gamma"])
    rm = w["R0"] * (1 - x * (w["Pf"] - w["P"]) / (w["Pf"] - w["P0"])) ** (1 / 3)
    assert compute_rm(tr)[0] == pytest.approx(rm, abs=1e-14)
    assert rm == pytest.approx(0.1785, abs=5e-5)


def test_utm_at_peak_and_zero_rate():
    tr = trace_at(0.8)
    expected = (0.1 / 0.8) ** (1 / 1.4) * 0.19 * 3.0 / (3 * 0.7)
    assert compute_utm(tr, np.array([3.0]))[0] == pytest.approx(expected, rel=1e-14)
    assert compute_utm(trace_at(0.5), np.array([0.0]))[0] == 0.0


def test_utm_guard():
    with pytest.raises(ValueError, match="singularity"):
        compute_utm(trace_at([0.1, 0.5]), np.ones(2))
    with pytest.raises(ValueError):
        compute_utm(trace_at(0.1 + 0.01 * 0.7), np.ones(1))
    assert compute_utm(trace_at(0.1 + 0.03 * 0.7), np.ones(1))[0] > 0
    assert list(admissible(trace_at([0.1, 0.11, 0.2]))) == [False, False, True]


@given(st.floats(0.05, 2.0), st.floats(1.5, 20.0), st.floats(1.05, 1.7), st.floats(0.01, 1.0))
@settings(max_examples=100, deadline=None)
def test_rm_boundary_identities(P0, ratio, gamma, R0):
    Pf = P0 * ratio
    tr = PressureTrace(np.arange(2.0), np.array([P0, Pf]), P0, gamma, R0, Pf=Pf)
    r = compute_rm(tr)
    assert abs(r[0]) <= 1e-12 and abs(r[1] - R0) <= 1e-12


def test_rm_monotone_in_pressure():
    P = np.linspace(0.1, 0.8, 400)[1:]
    assert np.all(np.diff(compute_rm(trace_at(P))) > 0)


def test_rm_clamps_negative_bracket(caplog):
    tr = PressureTrace(np.arange(2.0), np.array([0.0999, 0.8]), 0.1, 1.4, 0.19, Pf=0.8)
    with caplog.at_level(logging.WARNING):
        r = compute_rm(tr)
    assert r[0] == 0.0 and "clamping" in caplog.text


def test_utm_unit_invariance():
    P = np.linspace(0.2, 0.8, 7)
    tr = trace_at(P)
    u1 = compute_utm(tr, np.full(7, 2.0))
    k = 10.0  # MPa -> bar
    tr2 = PressureTrace(tr.t, P * k, 0.1 * k, 1.4, 0.19, Pf=0.8 * k)
    np.testing.assert_allclose(compute_utm(tr2, np.full(7, 2.0 * k)), u1, rtol=1e-13)


# --- smoothing and differencing ----------------------------------------------


def test_sg_constant_preserved():
    y = np.full(30, 2.5)
    np.testing.assert_allclose(savgol_smooth(y, SgConfig(11, 3)), y, atol=1e-12)


@pytest.mark.parametrize("window", [5, 11, 21])
@pytest.mark.parametrize("order", [2, 3])
def test_sg_polynomial_reproduction(window, order):
    x = np.linspace(-1, 2, 80)
    y = sum(c * x ** k for k, c in enumerate([0.3, -1.2, 0.7, 0.25][:order + 1]))
    half = window // 2
    out = savgol_smooth(y, SgConfig(window, order))
    np.testing.assert_allclose(out[half:-half], y[half:-half], atol=1e-9)


def test_sg_cubic_example():
    t = np.linspace(0, 1, 50)
    np.testing.assert_allclose(savgol_smooth(t ** 3, SgConfig(11, 3))[5:-5], (t ** 3)[5:-5], atol=1e-9)


def test_sg_noise_reduction():
    x = np.linspace(0, 2 * np.pi, 200)
    clean = np.sin(x)
    noise_var, resid_var = [], []
    for seed in range(100):
        n = np.random.default_rng(seed).uniform(-0.1, 0.1, x.size)
        noise_var.append(np.var(n))
        resid_var.append(np.var(savgol_smooth(clean + n, SgConfig(21, 3)) - clean))
    assert np.mean(noise_var) / np.mean(resid_var) >= 5.0


def test_sg_config_and_length_validation():
    for bad in [(4, 2), (1, 0), (5, 5)]:
        with pytest.raises(ValueError):
            SgConfig(*bad)
    with pytest.raises(ValueError):
        savgol_smooth(np.ones(5), SgConfig(11, 3))


def test_downsample_examples():
    y = np.arange(10)
    np.testing.assert_array_equal(downsample(y, 1), y)
    np.testing.assert_array_equal(downsample(y, 3), [0, 3, 6, 9])
    np.testing.assert_array_equal(downsample(y, 50), [0])


def test_truncate_examples():
    t = np.arange(6.0)
    rising = PressureTrace(t, np.array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6]), 0.1, 1.4, 0.19)
    out = truncate_at_peak(rising)
    np.testing.assert_array_equal(out.P, rising.P)
    assert out.Pf == 0.6
    fall = truncate_at_peak(PressureTrace(t, np.array([0.1, 0.3, 0.5, 0.7, 0.6, 0.4]), 0.1, 1.4, 0.19))
    np.testing.assert_array_equal(fall.P, [0.1, 0.3, 0.5, 0.7])


def test_truncate_dip_matches_running_max_scan():
    P = np.array([0.1, 0.2, 0.3, 0.25, 0.28, 0.35, 0.5, 0.45, 0.6, 0.55])
    out = truncate_at_peak(PressureTrace(np.arange(P.size, dtype=float), P, 0.1, 1.4, 0.19))
    kept, best = [], -np.inf
    for p in P[:int(np.argmax(P)) + 1]:
        if p >= best:
            kept.append(p)
            best = p
    np.testing.assert_array_equal(out.P, kept)
    assert np.all(np.diff(out.P) >= 0)


def test_derivative_examples():
    t = np.linspace(0, 1, 21)
    np.testing.assert_allclose(derivative(t, 5 * t), 5.0, atol=1e-10)
    np.testing.assert_allclose(derivative(t, t ** 2)[1:-1], 2 * t[1:-1], atol=1e-12)
    with pytest.raises(ValueError, match="duplicate"):
        derivative(np.array([0.0, 1.0, 1.0, 2.0]), np.arange(4.0))


def test_derivative_second_order_convergence():
    errs = []
    for n in (50, 100, 200):
        t = np.sort(np.random.default_rng(n).uniform(0, 1, n))
        t[0], t[-1] = 0, 1
        t = np.linspace(0, 1, n)
        errs.append(np.max(np.abs(derivative(t, np.sin(3 * t)) - 3 * np.cos(3 * t))))
    assert errs[1] / errs[2] > 3.5 and errs[0] / errs[1] > 3.5


# --- re-parameterization and pipeline -----------------------------------------


def test_reparam_sorted_and_reversed():
    r = np.linspace(0.01, 0.08, 30)
    u = 1 + r
    raw, _ = reparam_utm_vs_r(u, r, (0, 1), sg=None)
    np.testing.assert_array_equal(raw.r, r)
    raw2, sm2 = reparam_utm_vs_r(u[::-1], r[::-1], (0, 1))
    assert np.all(np.diff(raw2.r) > 0)
    np.testing.assert_allclose(sm2.u_tm, 1 + raw2.r, atol=1e-12)
    assert raw2.provenance == "raw" and sm2.provenance == "smoothed"


def test_reparam_window_count_matches_scan():
    rng = np.random.default_rng(0)
    r = rng.uniform(0.0, 0.1, 200)
    raw, _ = reparam_utm_vs_r(rng.uniform(size=200), r, (0.02, 0.06))
    assert raw.r.size == sum(1 for v in r if 0.02 <= v <= 0.06)
    with pytest.raises(ValueError):
        reparam_utm_vs_r(np.ones(3), np.array([0.1, 0.2, 0.3]), (0.5, 0.6))


def test_wrinkling_examples(caplog):
    assert wrinkling_ratio(4 * np.pi, 1.0) == pytest.approx(1.0)
    assert wrinkling_ratio(8 * np.pi, 1.0) == pytest.approx(2.0)
    assert wrinkling_ratio(0.0125, 0.03) == pytest.approx(0.0125 / (4 * np.pi * 9e-4))
    assert wrinkling_ratio(0.0125, 0.03) == pytest.approx(1.105, abs=1e-3)
    with caplog.at_level(logging.WARNING):
        wrinkling_ratio(np.pi, 1.0)
    assert "below 1" in caplog.text
    with pytest.raises(ValueError):
        wrinkling_ratio(-1.0, 1.0)


def test_pipeline_recovers_closed_form_and_is_deterministic():
    tr = synthetic_pressure_trace(n=3000)
    cfg = PipelineConfig()
    raw, smooth = process_pressure_trace(tr, cfg)
    raw2, smooth2 = process_pressure_trace(tr, cfg)
    np.testing.assert_array_equal(smooth.u_tm, smooth2.u_tm)
    assert np.all(np.diff(raw.r) >= 0)
    assert np.all((raw.r > 0) & (raw.r <= tr.R0))
    # noise-free trace: compare with the closed form using the analytic derivative
    s = np.linspace(0.3, 0.9, 5)
    P = tr.P0 + (tr.Pf - tr.P0) * 0.5 * (1 - np.cos(np.pi * s))
    dPdt = (tr.Pf - tr.P0) * 0.5 * np.pi * np.sin(np.pi * s) / 0.06
    u_true = compute_utm(trace_at(P, tr.P0, tr.Pf, tr.gamma_u, tr.R0), dPdt)
    r_true = compute_rm(trace_at(P, tr.P0, tr.Pf, tr.gamma_u, tr.R0))
    np.testing.assert_allclose(np.interp(r_true, smooth.r, smooth.u_tm), u_true, rtol=1e-3)


def test_pressure_csv_roundtrip(tmp_path):
    tr = synthetic_pressure_trace(n=200, noise_std=0.01)
    write_pressure_csv(tmp_path / "p.csv", tr)
    back = read_pressure_csv(tmp_path / "p.csv")
    np.testing.assert_array_equal(back.t, tr.t)
    np.testing.assert_array_equal(back.P, tr.P)
    assert (back.P0, back.gamma_u, back.R0) == (tr.P0, tr.gamma_u, tr.R0)


def test_burning_curve_csv_roundtrip(tmp_path):
    bc = BurningCurve(np.array([0.01, 0.02 + 1e-17, 1 / 3]), np.array([1.0, np.pi, 2.5]), "raw")
    bc.to_csv(tmp_path / "b.csv")
    back = BurningCurve.from_csv(tmp_path / "b.csv")
    np.testing.assert_array_equal(back.r, bc.r)
    np.testing.assert_array_equal(back.u_tm, bc.u_tm)
    assert back.provenance == "raw"


@pytest.mark.parametrize("kw", [dict(gamma_u=1.0), dict(R0=0.0), dict(P0=0.9)])
def test_trace_invariants(kw):
    args = dict(t=np.arange(3.0), P=np.array([0.1, 0.4, 0.8]), P0=0.1, gamma_u=1.4, R0=0.19)
    args.update(kw)
    with pytest.raises(ValueError):
        PressureTrace(**args)
