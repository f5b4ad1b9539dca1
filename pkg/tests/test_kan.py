import json
import math

import numpy as np
import pytest

from rbfkan import kernels
from rbfkan.baselines import model_from_dict
from rbfkan.errors import DomainError, NumericalDivergenceError
from rbfkan.kan import ModelConfig, RbfKanModel, backward, forward, init_model
from rbfkan.kernels import KERNEL_NAMES

from conftest import fd_check, jitter_params


def _single_edge(kernel="GA", centers=(0.0, 1.0), coef=(1.0, 0.0), h=1.0, residual=False):
    cfg = ModelConfig(widths=(1, 1), kernel=kernel, num_centers=len(centers), center_range=(centers[0], centers[-1]),
                      use_layernorm=False, use_residual=residual, input_norm="none")
    m = init_model(cfg, h)
    m.params["coef0"][0, 0] = coef
    return m


def test_theta_init():
    assert init_model(ModelConfig(), 1.0).theta == 0.0
    assert init_model(ModelConfig(), math.e).theta == pytest.approx(1.0, abs=1e-15)


def test_shapes():
    m = init_model(ModelConfig(widths=(2, 8, 1), num_centers=8), 0.5)
    assert m.params["coef0"].shape == (8, 2, 8)
    assert m.params["coef1"].shape == (1, 8, 8)
    assert np.all(np.diff(m.centers) > 0)
    assert m.centers[0] == -2.0 and m.centers[-1] == 2.0


def test_init_residual_and_layernorm():
    m = init_model(ModelConfig(widths=(2, 4, 3, 1), use_residual=True), 0.5)
    for k in range(3):
        np.testing.assert_array_equal(m.params[f"res{k}"], 1.0)
    for k in (1, 2):
        np.testing.assert_array_equal(m.params[f"ln_gain{k}"], 1.0)
        np.testing.assert_array_equal(m.params[f"ln_bias{k}"], 0.0)


def test_init_deterministic():
    a = init_model(ModelConfig(seed=4), 0.3)
    b = init_model(ModelConfig(seed=4), 0.3)
    c = init_model(ModelConfig(seed=5), 0.3)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    assert not np.array_equal(a.params["coef0"], c.params["coef0"])


@pytest.mark.parametrize("bad", [dict(widths=(2,)), dict(num_centers=1), dict(center_range=(1, -1)), dict(kernel="X")])
def test_config_errors(bad):
    with pytest.raises(DomainError):
        ModelConfig(**bad)


def test_bad_h_init():
    with pytest.raises(DomainError):
        init_model(ModelConfig(), 0.0)


def test_edge_eval_examples():
    m = _single_edge(coef=(0.0, 0.0))
    assert m.edge_eval(0, 0, 0, 0.3) == 0.0
    m = _single_edge(centers=(0.0, 1.0), coef=(1.0, 0.0))
    assert m.edge_eval(0, 0, 0, 0.0) == 1.0
    m = _single_edge(kernel="W2", centers=(-1.0, 1.0), coef=(1.0, 1.0))
    assert m.edge_eval(0, 0, 0, 0.0) == 0.0


def test_edge_eval_with_residual():
    m = _single_edge(coef=(0.5, -0.25), residual=True, h=0.7)
    m.params["res0"][0, 0] = 2.0
    x = 0.4
    expected = 0.5 * math.exp(-(x**2) / (2 * 0.49)) - 0.25 * math.exp(-((x - 1) ** 2) / (2 * 0.49))
    expected += 2.0 * x / (1 + math.exp(-x))
    assert m.edge_eval(0, 0, 0, x) == pytest.approx(expected, rel=1e-14)


def test_forward_zero_model():
    m = init_model(ModelConfig(widths=(2, 3, 1), use_layernorm=False), 0.5)
    for k in ("coef0", "coef1"):
        m.params[k][:] = 0
    out, _ = forward(m, np.random.default_rng(0).random((7, 2)))
    np.testing.assert_array_equal(out, 0.0)


def test_forward_single_edge_reduces_to_edge_eval():
    m = _single_edge(centers=(-1.0, 0.0, 1.0), coef=(0.3, -1.0, 2.0), h=0.4, residual=True)
    xs = np.array([-0.7, 0.1, 0.95])
    out, _ = m.forward(xs[:, None])
    np.testing.assert_allclose(out[:, 0], [m.edge_eval(0, 0, 0, x) for x in xs], rtol=1e-14)


def test_forward_shape_contract():
    m = init_model(ModelConfig(widths=(2, 8, 1)), 0.5)
    out, trace = m.forward(np.random.default_rng(1).random((1600, 2)))
    assert out.shape == (1600, 1)
    assert trace.phi[0].shape == (1600, 2, 8)
    assert np.all(np.isfinite(out))


def test_layernorm_matches_definition():
    m = init_model(ModelConfig(widths=(2, 5, 1), use_layernorm=True), 0.5)
    x = np.random.default_rng(2).random((4, 2))
    _, trace = m.forward(x)
    hid = trace.x_in[1]
    mu = hid.mean(1, keepdims=True)
    var = hid.var(1, keepdims=True)
    np.testing.assert_allclose(trace.z[1], (hid - mu) / np.sqrt(var + 1e-5), rtol=1e-12)


def test_forward_rejects_bad_batch():
    m = init_model(ModelConfig(), 0.5)
    with pytest.raises(DomainError):
        m.forward(np.zeros((0, 2)))
    with pytest.raises(DomainError):
        m.forward(np.array([[np.nan, 0.0]]))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_forward_overflow_raises():
    m = init_model(ModelConfig(widths=(2, 3, 1), use_residual=True, use_layernorm=False), 0.5)
    m.params["res0"][:] = 1e308
    with pytest.raises(NumericalDivergenceError):
        m.forward(np.full((1, 2), 10.0))


def test_backward_zero_cotangent():
    m = init_model(ModelConfig(widths=(2, 3, 1)), 0.5)
    out, trace = m.forward(np.random.default_rng(0).random((5, 2)))
    grads = backward(m, trace, np.zeros_like(out))
    assert set(grads) == set(m.params)
    assert all(np.all(g == 0) for g in grads.values())


def test_backward_theta_zero_at_center():
    m = _single_edge(centers=(0.0, 1.0), coef=(1.0, 0.0), h=1.0)
    out, trace = m.forward(np.array([[0.0]]))
    assert m.backward(trace, np.ones_like(out))["theta"][0] == 0.0


def test_backward_rejects_foreign_trace():
    a = init_model(ModelConfig(), 0.5)
    b = init_model(ModelConfig(), 0.5)
    _, trace = a.forward(np.zeros((2, 2)))
    with pytest.raises(DomainError):
        b.backward(trace, np.zeros((2, 1)))


@pytest.mark.parametrize("kernel", KERNEL_NAMES)
@pytest.mark.parametrize("variant", [
    dict(),
    dict(use_residual=True),
    dict(input_norm="minmax"),
    dict(input_norm="layernorm", use_residual=True),
])
def test_gradients_match_finite_differences(kernel, variant):
    cfg = ModelConfig(widths=(2, 3, 1), kernel=kernel, num_centers=4, seed=1, **variant)
    m = jitter_params(init_model(cfg, 0.8), seed=2)
    x = np.random.default_rng(3).random((6, 2))
    assert fd_check(m, x) <= 1e-5


def test_theta_positivity_after_wild_updates():
    m = init_model(ModelConfig(), 0.5)
    for step in (-700.0, 1400.0, -1e3):
        m.params["theta"] += step
        assert m.h >= 0.0
    m.params["theta"][0] = -50.0
    assert m.h > 0.0


@pytest.mark.parametrize("kernel", ["W2", "W4", "W6"])
def test_compact_support_locality(kernel):
    cfg = ModelConfig(widths=(1, 1), kernel=kernel, num_centers=9, center_range=(-2, 2),
                      use_layernorm=False, input_norm="none")
    m = init_model(cfg, 0.6)
    xs = np.linspace(-2.5, 2.5, 101)
    before = np.array([m.edge_eval(0, 0, 0, x) for x in xs])
    j = 4
    m.params["coef0"][0, 0, j] += 1.0
    after = np.array([m.edge_eval(0, 0, 0, x) for x in xs])
    changed = before != after
    dist = np.abs(xs - m.centers[j])
    assert not np.any(changed & (dist >= m.h))
    assert np.all(changed[dist < 0.99 * m.h])


def test_forward_is_pure():
    m = init_model(ModelConfig(widths=(2, 4, 1), use_residual=True), 0.5)
    x = np.random.default_rng(0).random((10, 2))
    a, _ = m.forward(x)
    b, _ = m.forward(x.copy())
    np.testing.assert_array_equal(a, b)


def test_save_load_round_trip(tmp_path):
    m = jitter_params(init_model(ModelConfig(widths=(2, 4, 1), kernel="M4", use_residual=True), 0.37), 9)
    path = tmp_path / "model.json"
    m.save(path)
    doc = json.loads(path.read_text())
    assert doc["schema"] == "rbfkan.model/1"
    assert doc["params"]["coef0"]["shape"] == [4, 2, 8]
    back = model_from_dict(doc)
    assert isinstance(back, RbfKanModel)
    assert back.config == m.config
    for k in m.params:
        np.testing.assert_array_equal(back.params[k], m.params[k])
    x = np.random.default_rng(1).random((5, 2))
    np.testing.assert_array_equal(back.predict(x), m.predict(x))
