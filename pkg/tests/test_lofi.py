import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import base_surfaces as _base_surfaces, synthetic_records
from mufinns.lofi import (CoeffSurface, FitError, LofiGrid, LogQuadCoeffs, ThermoCorrection, build_lofi_grid,
                          eval_log_quadratic, fit_coeff_surface, fit_hierarchical_trend, fit_linear_r_trend,
                          fit_linear_trend, fit_log_quadratic, fit_pressure_trend, fit_thermo_correction,
                          trend_from_dict)


def normal_equations(X, y):
    """Independent least-squares oracle via the normal equations."""
    return np.linalg.solve(X.T @ X, X.T @ y)


# --- temporal fits ----------------------------------------------------------


def test_log_quadratic_three_point_recovery():
    t = np.array([0.01, 0.1, 1.0])
    y = eval_log_quadratic([1.0, 2.0, 0.5], t)
    np.testing.assert_allclose(fit_log_quadratic(t, y).as_array(), [1, 2, 0.5], atol=1e-10)


def test_log_quadratic_constant():
    c = fit_log_quadratic(np.linspace(0.1, 1, 5), np.full(5, 5.0))
    np.testing.assert_allclose(c.as_array(), [np.log(5), 0, 0], atol=1e-12)


def test_log_quadratic_matches_normal_equations():
    rng = np.random.default_rng(3)
    t = np.sort(rng.uniform(0.005, 0.05, 50))
    y = np.exp(0.3 + 1.1 * np.log(t) + 0.02 * np.log(t) ** 2 + 0.05 * rng.standard_normal(50))
    lt = np.log(t)
    X = np.column_stack([np.ones(50), lt, lt ** 2])
    c = fit_log_quadratic(t, y)
    np.testing.assert_allclose(c.as_array(), normal_equations(X, np.log(y)), atol=1e-8)
    resid = X @ c.as_array() - np.log(y)
    assert np.all(np.abs(X.T @ resid) < 1e-9)
    assert c.rms == pytest.approx(np.sqrt(np.mean(resid ** 2)))


@pytest.mark.parametrize("t,y", [([0.0, 1, 2], [1, 1, 1]), ([1, 2, 3], [1, -1, 1]), ([1, 1, 2], [1, 2, 3]),
                                 ([1, 2], [1, 2])])
def test_log_quadratic_rejects(t, y):
    with pytest.raises(FitError):
        fit_log_quadratic(t, y)


def test_eval_log_quadratic_examples():
    assert eval_log_quadratic([0, 0, 0], 3.7) == 1.0
    assert eval_log_quadratic([0, 1, 0], np.e) == pytest.approx(np.e)
    lt = np.log(0.1)
    assert eval_log_quadratic([1, 2, 0.5], 0.1) == pytest.approx(np.exp(1 + 2 * lt + 0.5 * lt ** 2))
    assert eval_log_quadratic([1, 2, 0.5], 0.1) == pytest.approx(0.3851, abs=1e-4)
    with pytest.raises(ValueError):
        eval_log_quadratic([0, 0, 0], 0.0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-0.5, 0.5))
@settings(max_examples=50, deadline=None)
def test_log_quadratic_exact_recovery_property(c0, c1, c2):
    t = np.geomspace(0.005, 0.05, 12)
    fit = fit_log_quadratic(t, eval_log_quadratic([c0, c1, c2], t))
    np.testing.assert_allclose(fit.as_array(), [c0, c1, c2], atol=1e-8)


def test_linear_trend_examples():
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(fit_linear_trend(x, 4 * x + 1), (4, 1), atol=1e-12)
    np.testing.assert_allclose(fit_linear_trend(x, np.full(7, 7.0)), (0, 7), atol=1e-12)
    with pytest.raises(FitError):
        fit_linear_trend([2, 2, 2], [1, 2, 3])


def test_linear_trend_closed_form():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 10, 100)
    y = 0.7 * x - 2 + rng.standard_normal(100)
    slope = np.sum((x - x.mean()) * (y - y.mean())) / np.sum((x - x.mean()) ** 2)
    np.testing.assert_allclose(fit_linear_trend(x, y), (slope, y.mean() - slope * x.mean()), atol=1e-10)


# --- coefficient surfaces ---------------------------------------------------


def test_surface_constant():
    pts = [(u, phi, 1.5) for u in (0.3, 0.9, 1.5) for phi in (0.3, 0.4)]
    s = fit_coeff_surface(pts)
    assert s.coef[0] == pytest.approx(1.5, abs=1e-10)
    np.testing.assert_allclose(s.coef[1:], 0, atol=1e-10)


def test_surface_plane_recovery():
    pts = [(u, phi, 2 + 3 * u - phi) for u, phi in [(0.3, 0.3), (0.6, 0.4), (0.9, 0.3), (1.2, 0.4), (1.5, 0.3),
                                                     (0.45, 0.4)]]
    s = fit_coeff_surface(pts)
    for u, phi, v in pts:
        assert s(u, phi) == pytest.approx(v, abs=1e-12)
    assert s(2.0, 0.35) == pytest.approx(2 + 6 - 0.35, abs=1e-10)


def test_surface_cubic_matches_oracle():
    u = np.linspace(0.3, 2.0, 8)
    v = 1 - u + 0.5 * u ** 3
    s = fit_coeff_surface([(a, 0.3, b) for a, b in zip(u, v)])
    assert s.terms == [(0, 0), (1, 0), (2, 0)]
    X = np.column_stack([np.ones(8), u, u ** 2])
    np.testing.assert_allclose(s.coef, normal_equations(X, v), atol=1e-10)


def test_surface_degenerate_phi_drops_terms():
    s = fit_coeff_surface([(u, 0.6, u) for u in (0.3, 0.6, 0.9)])
    assert all(j == 0 for _, j in s.terms)


def test_surface_rank_deficiency_downgrades(caplog):
    # two u' levels cannot support a quadratic in u'
    pts = [(0.3, 0.3, 1.0), (0.9, 0.3, 2.0), (0.3, 0.3, 1.0)]
    with caplog.at_level("INFO"):
        s = fit_coeff_surface(pts)
    assert (2, 0) not in s.terms
    assert "dropping" in caplog.text
    assert s(0.6) == pytest.approx(1.5)


def test_surface_needs_points():
    with pytest.raises(FitError):
        fit_coeff_surface([(0.3, 0.3, 1.0), (0.3, 0.3, 2.0)])


def test_surface_dict_roundtrip():
    s = fit_coeff_surface([(u, 0.3, u ** 2) for u in (0.3, 0.6, 0.9, 1.2)])
    s2 = CoeffSurface.from_dict(s.to_dict())
    assert s2(0.77) == s(0.77)


# --- thermodynamic corrections and the full hierarchy ----------------------


def test_thermo_single_reference_case_zero():
    base = _base_surfaces()
    rows = [(u, 0.5, LogQuadCoeffs(*[float(s(u, 0.5)) for s in base])) for u in (0.3, 0.9, 1.5)]
    corr = fit_thermo_correction(base, {"A": rows}, {"A": (300.0, 0.1)}, (300.0, 0.1))
    np.testing.assert_array_equal(corr.delta(300, 0.1), 0.0)


def test_thermo_uniform_offset():
    base = _base_surfaces()
    rows = [(u, 0.5, LogQuadCoeffs(*[float(s(u, 0.5)) + 0.3 for s in base])) for u in (0.3, 0.9)]
    corr = fit_thermo_correction(base, {"B": rows}, {"B": (365.0, 0.5)}, (300.0, 0.1))
    np.testing.assert_allclose(corr.delta(365, 0.5), 0.3, atol=1e-10)
    with pytest.raises(KeyError):
        corr.delta(400, 1.0)


def test_thermo_missing_case_rejected():
    with pytest.raises(FitError):
        fit_thermo_correction(_base_surfaces(), {}, {"B": (365.0, 0.5)}, (300.0, 0.1))


def test_hierarchical_exact_recovery():
    base, recs = synthetic_records()
    trend = fit_hierarchical_trend(recs, reference=(300.0, 0.1))
    for fitted, true in zip(trend.base, base):
        for u in (0.3, 1.0, 1.5):
            for phi in (0.6, 0.65, 0.7):
                assert abs(fitted(u, phi) - true(u, phi)) < 1e-8
    np.testing.assert_allclose(trend.correction.delta(365, 0.1), 0.2, atol=1e-8)
    np.testing.assert_allclose(trend.correction.delta(365, 0.5), -0.1, atol=1e-8)


def test_hierarchical_offsets_within_residual_under_noise():
    _, recs = synthetic_records(noise=0.01, seed=4)
    trend = fit_hierarchical_trend(recs, reference=(300.0, 0.1))
    resid = max(f["rms"] for fits in trend.case_fits.values() for f in fits)
    assert np.all(np.abs(trend.correction.delta(365, 0.1) - 0.2) < resid)
    assert np.all(np.abs(trend.correction.delta(365, 0.5) + 0.1) < resid)


def test_reference_consistency_and_positivity():
    base, recs = synthetic_records()
    trend = fit_hierarchical_trend(recs, reference=(300.0, 0.1))
    t = np.geomspace(1e-4, 1.0, 30)
    direct = eval_log_quadratic(np.array([float(s(0.8, 0.65)) for s in trend.base]), t)
    np.testing.assert_array_equal(trend.evaluate(t, 0.8, 0.65, 300.0, 0.1), direct)
    assert np.all(trend.evaluate(t, 0.8, 0.65, 365.0, 0.5) > 0)


def test_default_reference_is_most_populated():
    _, recs = synthetic_records()
    recs = recs + [(c, u + 0.01, phi, T, P, t, y) for c, u, phi, T, P, t, y in recs if c == "II"]
    assert fit_hierarchical_trend(recs).correction.reference == (365.0, 0.1)


def test_hierarchical_names_failing_stage():
    with pytest.raises(FitError, match="temporal fit"):
        fit_hierarchical_trend([("A", 0.3, 0.5, 300, 0.1, np.array([0.01, 0.02]), np.array([1.0, 2.0]))])
    t = np.geomspace(0.005, 0.05, 10)
    with pytest.raises(FitError, match="coefficient regression"):
        fit_hierarchical_trend([("A", 0.3, 0.5, 300, 0.1, t, t)])


def test_trend_dict_roundtrip():
    _, recs = synthetic_records()
    trend = fit_hierarchical_trend(recs)
    again = trend_from_dict(trend.to_dict())
    t = np.geomspace(0.005, 0.05, 5)
    np.testing.assert_array_equal(again.evaluate(t, 0.7, 0.6, 365.0, 0.5), trend.evaluate(t, 0.7, 0.6, 365.0, 0.5))


# --- other trend families ---------------------------------------------------


def test_linear_r_trend_recovery():
    r = np.linspace(0.02, 0.06, 15)
    curves = [(u, r, (1 + 0.5 * u - 0.1 * u ** 2) * r + (0.3 + 0.2 * u)) for u in (0.3, 0.6, 0.9, 1.2)]
    tr = fit_linear_r_trend(curves)
    np.testing.assert_allclose(tr.evaluate(0.04, 1.05), (1 + 0.525 - 0.11025) * 0.04 + 0.51, atol=1e-12)
    two = fit_linear_r_trend(curves[:2])
    assert two.alpha.terms == [(0, 0), (1, 0)]


def test_pressure_trend_interpolates_slopes():
    t = np.linspace(0.002, 0.02, 10)
    tr = fit_pressure_trend([(0.3, t, 1.8 * t + 0.01), (0.7, t, 1.4 * t + 0.02), (0.1, t, 2.0 * t)])
    assert tr.slope(0.5) == pytest.approx(1.6)
    assert tr.intercept(0.5) == pytest.approx(0.015)
    # linear extrapolation from the two end levels
    assert tr.slope(1.0) == pytest.approx(1.4 - 0.3 * 1.0)
    assert tr.slope(0.0) == pytest.approx(2.1)


def test_pressure_trend_duplicate_rejected():
    t = np.linspace(0, 1, 5)
    with pytest.raises(FitError):
        fit_pressure_trend([(0.3, t, t), (0.3, t, 2 * t)])


# --- grids -------------------------------------------------------------------


def test_grid_single_node_equals_direct():
    _, recs = synthetic_records()
    trend = fit_hierarchical_trend(recs)
    g = build_lofi_grid(trend, {"t": [0.02], "u_prime": [0.9], "phi": [0.6], "T": [365.0], "P": [0.5]})
    assert g.values.ravel()[0] == trend.evaluate(0.02, 0.9, 0.6, 365.0, 0.5)


def test_grid_monotone_in_time():
    c = np.array([0.5, 1.2, 0.01])
    assert c[1] + 2 * c[2] * np.log(0.005) > 0  # derivative sign on the interval
    trend = trend_from_dict({"kind": "log_quadratic", "quantity": "A3d",
                             "base": [{"basis": "quad2d", "terms": [[0, 0]], "coef": [v]} for v in c],
                             "correction": {"reference": [365, 0.5], "offsets": {}}})
    g = build_lofi_grid(trend, {"t": {"min": 0.005, "max": 0.05, "n": 40}, "u_prime": [1.0], "phi": [0.3]})
    v = g.values.ravel()
    assert np.all(v > 0) and np.all(np.diff(v) > 0)


def test_grid_warns_outside_hull_and_rejects_unknown_axis():
    t = np.linspace(0.002, 0.02, 10)
    tr = fit_pressure_trend([(0.1, t, 2 * t), (0.5, t, 1.6 * t)])
    with pytest.warns(UserWarning, match="leaves the fitted range"):
        build_lofi_grid(tr, {"t": t, "P": [1.0]})
    with pytest.raises(ValueError):
        build_lofi_grid(tr, {"t": t, "u_prime": [1.0]})


def test_grid_pressure_held_out_slope():
    t = np.linspace(0.002, 0.02, 10)
    tr = fit_pressure_trend([(0.3, t, 1.8 * t + 0.01), (0.7, t, 1.4 * t + 0.01)])
    g = build_lofi_grid(tr, {"t": t, "P": [0.5]})
    slope, _ = fit_linear_trend(t, g.values.ravel())
    assert slope == pytest.approx(0.5 * (1.8 + 1.4))


def test_grid_csv_roundtrip(tmp_path):
    t = np.geomspace(0.002, 0.02, 7)
    tr = fit_pressure_trend([(0.1, t, 2 * t + 0.003), (0.5, t, 1.6 * t)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = build_lofi_grid(tr, {"t": t, "P": {"min": 0.1, "max": 1.0, "n": 4}})
    g.to_csv(tmp_path / "g.csv")
    back = LofiGrid.from_csv(tmp_path / "g.csv")
    assert back.provenance == g.provenance
    assert list(back.axes) == ["t", "P"]
    for k in g.axes:
        np.testing.assert_array_equal(back.axes[k], g.axes[k])
    np.testing.assert_array_equal(back.values, g.values)
