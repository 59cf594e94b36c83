import numpy as np
import pytest

from helpers import central_diff, grad_close
from mufinns import nn
from mufinns.model import (CompoundLossConfig, MufinnModel, compound_loss, compound_loss_grad, forward_mf,
                           init_model, predict, train)
from mufinns.optim import AdamConfig, LbfgsConfig
from mufinns.synth import forrester_pair


def _data(d=2, n_lf=12, n_hf=5, seed=0):
    rng = np.random.default_rng(seed)
    xl = rng.uniform(-1, 1, (n_lf, d))
    xh = rng.uniform(-1, 1, (n_hf, d))
    f = lambda x: np.sin(2 * x[:, 0]) + x[:, -1] ** 2
    return (xl, 0.8 * f(xl) + 0.3), (xh, f(xh))


def _small_model(d=2, seed=0):
    lf, hf = _data(d, seed=seed)
    return init_model(lf, hf, (5, 4), (3,), seed), lf, hf


@pytest.mark.parametrize("seed", range(3))
def test_compound_loss_gradient_matches_fd(seed):
    model, lf, hf = _small_model(seed=seed)
    rng = np.random.default_rng(seed + 10)
    model = model.with_theta(model.theta() + 0.3 * rng.standard_normal(model.theta().size))
    cfg = CompoundLossConfig(lambda_lf=0.01, lambda_hf_nl=0.05)
    _, g = compound_loss_grad(model, lf, hf, cfg)
    fd = central_diff(lambda th: compound_loss(model.with_theta(th), lf, hf, cfg).total, model.theta())
    assert grad_close(g, fd)


def test_loss_terms_and_bias_exclusion():
    model, lf, hf = _small_model()
    cfg = CompoundLossConfig(0.0, 0.0)
    base = compound_loss(model, lf, hf, cfg)
    assert base.reg_lf == base.reg_nl == 0.0
    assert base.total == pytest.approx(base.mse_lf + base.mse_hf, rel=1e-15)
    cfg = CompoundLossConfig(2.0, 3.0)
    t = compound_loss(model, lf, hf, cfg)
    lw = model.lf_params[nn.weight_mask(model.lf_spec)]
    nw = model.nl_params[nn.weight_mask(model.nl_spec)]
    assert t.reg_lf == pytest.approx(2.0 * np.sum(lw ** 2), rel=1e-14)
    assert t.reg_nl == pytest.approx(3.0 * np.sum(nw ** 2), rel=1e-14)
    # changing only biases leaves the penalties unchanged
    th = model.theta().copy()
    a, b, _ = model.sizes
    th[:a][~nn.weight_mask(model.lf_spec)] += 1.0
    th[a + b:][~nn.weight_mask(model.nl_spec)] += 1.0
    t2 = compound_loss(model.with_theta(th), lf, hf, cfg)
    assert (t2.reg_lf, t2.reg_nl) == (t.reg_lf, t.reg_nl)


def test_mf_output_is_sum_of_branches():
    model, _, hf = _small_model()
    xn = model.norm.norm_x(hf[0])
    y_lf = nn.forward(model.lf_spec, model.lf_params, xn)
    z = np.hstack([xn, y_lf])
    y = nn.forward(model.lin_spec, model.lin_params, z) + nn.forward(model.nl_spec, model.nl_params, z)
    np.testing.assert_allclose(predict(model, hf[0]), model.norm.denorm_y(y[:, 0]), rtol=1e-14)
    lf_out, _ = forward_mf(model, hf[0])
    np.testing.assert_allclose(lf_out, model.norm.denorm_y(y_lf[:, 0]), rtol=1e-14)


def test_save_load_roundtrip_and_digest(tmp_path):
    model, _, hf = _small_model()
    model.provenance["note"] = "unit"
    model.save(tmp_path / "m.json")
    back = MufinnModel.load(tmp_path / "m.json")
    assert back.digest() == model.digest()
    np.testing.assert_array_equal(predict(back, hf[0]), predict(model, hf[0]))
    assert back.provenance == {"note": "unit"}
    th = model.theta().copy()
    th[0] = np.nextafter(th[0], np.inf)
    assert model.with_theta(th).digest() != model.digest()


def test_load_rejects_foreign_document():
    with pytest.raises(ValueError):
        MufinnModel.from_dict({"format": "other"})


def test_input_shape_and_length_validation():
    model, lf, hf = _small_model()
    with pytest.raises(ValueError, match="shape"):
        predict(model, np.ones((3, 5)))
    with pytest.raises(ValueError, match="targets"):
        compound_loss(model, lf, (hf[0], hf[1][:-1]), CompoundLossConfig())


def test_zero_budget_returns_initial_model():
    model, lf, hf = _small_model()
    out, rep = train(model, lf, hf, CompoundLossConfig(), AdamConfig(max_iters=0), LbfgsConfig(max_iters=0))
    assert out.digest() == model.digest()
    assert rep.adam_history == [] and rep.lbfgs_status == "skipped"


def test_training_reduces_loss_and_history_csv(tmp_path):
    model, lf, hf = _small_model()
    cfg = CompoundLossConfig()
    before = compound_loss(model, lf, hf, cfg).total
    out, rep = train(model, lf, hf, cfg, AdamConfig(lr_max=1e-2, max_iters=300), LbfgsConfig(max_iters=100))
    assert rep.final.total < before
    assert rep.final.total <= rep.adam_final
    rep.to_csv(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "stage,iter,total_loss,mse_lf,mse_hf,reg_lf,reg_nl"
    assert len(lines) == 1 + len(rep.adam_history) + len(rep.lbfgs_history)


def test_forrester_one_dimensional_fit_is_accurate():
    xl = np.linspace(0, 1, 21)
    xh = np.array([0.0, 0.4, 0.6, 1.0])
    yl, _ = forrester_pair(xl)
    _, yh = forrester_pair(xh)
    m0 = init_model((xl, yl), (xh, yh), (20, 20), (10, 10), 0)
    m, _ = train(m0, (xl, yl), (xh, yh), CompoundLossConfig(),
                 AdamConfig(lr_max=1e-2, max_iters=2000), LbfgsConfig(max_iters=2000))
    xt = np.linspace(0, 1, 100)
    _, yt = forrester_pair(xt)
    assert np.sqrt(np.mean((predict(m, xt) - yt) ** 2)) / m.norm.y_std < 0.05
