"""Comparison models: B-spline KAN, Chebyshev KAN and a ReLU MLP.

The fixed-shape FastKAN baseline is an :class:`~rbfkan.kan.RbfKanModel`
with theta frozen (see :func:`fastkan_fixed`).  Every model here follows the
same forward/backward/params protocol as the RBF network, so the training
loop and the gradient checks treat them uniformly.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._nn import (
    Model,
    as_batch,
    check_finite,
    decode_array,
    layernorm_backward,
    layernorm_forward,
    silu,
)
from .errors import DomainError
from .kan import ModelConfig, RbfKanModel, init_model

FASTKAN_FIXED_H = 0.5714
BASELINE_NAMES = ("fastkan_fixed", "spline_kan", "cheb_kan", "mlp")


def fastkan_fixed(config: ModelConfig, h: float = FASTKAN_FIXED_H) -> RbfKanModel:
    return init_model(config, h, trainable_h=False)


# --------------------------------------------------------------------------
# B-splines


def clamped_knots(grid_intervals: int, degree: int, domain=(-1.0, 1.0)) -> np.ndarray:
    lo, hi = domain
    inner = np.linspace(lo, hi, grid_intervals + 1)
    return np.concatenate([np.full(degree, lo), inner, np.full(degree, hi)])


def bspline_basis(x: float, knots, j: int, degree: int) -> float:
    """Cox-de Boor value of B_{j,degree}(x).

    Spans are half-open [t_i, t_{i+1}) except that the right end of the
    knot vector is included in the last non-empty span.  Points outside the
    knot range get 0.
    """
    t = np.asarray(knots, dtype=np.float64)
    n_basis = t.size - degree - 1
    if not 0 <= j < n_basis:
        raise DomainError(f"basis index {j} outside 0..{n_basis - 1}")
    return float(_basis_matrix(np.array([float(x)]), t, degree)[0][0, j])


def _basis_matrix(x, t, degree):
    """All basis values and first derivatives at x, shape (x.size, n_basis)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    m = t.size - 1
    b = ((t[:-1] <= x[:, None]) & (x[:, None] < t[1:])).astype(np.float64)
    # right end belongs to the last non-degenerate span
    last = np.flatnonzero(t[:-1] < t[1:])[-1]
    b[x == t[-1], last] = 1.0
    db = np.zeros_like(b)
    for p in range(1, degree + 1):
        n = m - p
        left_den = t[p : p + n] - t[:n]
        right_den = t[p + 1 : p + 1 + n] - t[1 : 1 + n]
        with np.errstate(divide="ignore", invalid="ignore"):
            lw = np.where(left_den > 0, 1.0 / left_den, 0.0)
            rw = np.where(right_den > 0, 1.0 / right_den, 0.0)
        lo, hi = b[:, :n], b[:, 1 : n + 1]
        if p == degree:
            db = p * (lo * lw - hi * rw)
        b = (x[:, None] - t[:n]) * lw * lo + (t[p + 1 : p + 1 + n] - x[:, None]) * rw * hi
    return b, db


@dataclass(frozen=True)
class SplineKanConfig:
    widths: tuple = (2, 5, 5, 1)
    grid_intervals: int = 5
    degree: int = 3
    domain: tuple = (-1.0, 1.0)
    use_layernorm: bool = True
    use_residual: bool = True
    input_box: tuple = (0.0, 1.0)
    coef_init_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))
        object.__setattr__(self, "input_box", tuple(float(v) for v in self.input_box))
        if len(self.widths) < 2 or min(self.widths) < 1:
            raise DomainError("widths needs at least two entries, all >= 1")
        if self.grid_intervals < 1 or self.degree < 0:
            raise DomainError("need grid_intervals >= 1 and degree >= 0")
        if not self.domain[0] < self.domain[1]:
            raise DomainError("domain must be increasing")

    def to_dict(self):
        d = asdict(self)
        for k in ("widths", "domain", "input_box"):
            d[k] = list(d[k])
        return d


@dataclass
class _Trace:
    layers: list = field(default_factory=list)
    out: np.ndarray | None = None
    model_id: int = 0


class SplineKanModel(Model):
    """KAN with B-spline edges plus a SiLU residual term.

    The first layer maps ``input_box`` linearly onto the spline domain;
    deeper layers are layer-normalized.  Inputs falling outside the domain
    are clamped to it before the basis is evaluated.
    """

    kind = "spline_kan"

    def __init__(self, config: SplineKanConfig, params: dict, frozen=()):
        self.config = config
        self.params = params
        self.frozen = frozenset(frozen)
        self.knots = clamped_knots(config.grid_intervals, config.degree, config.domain)

    @property
    def n_basis(self):
        return self.config.grid_intervals + self.config.degree

    def config_dict(self):
        return self.config.to_dict()

    def forward(self, x):
        cfg = self.config
        x = as_batch(x, cfg.widths[0])
        trace = _Trace(model_id=id(self))
        lo, hi = cfg.domain
        for k in range(len(cfg.widths) - 1):
            if k == 0:
                a, b = cfg.input_box
                z, ln = lo + (x - a) * ((hi - lo) / (b - a)), None
            elif cfg.use_layernorm:
                z, ln = layernorm_forward(x, self.params[f"ln_gain{k}"], self.params[f"ln_bias{k}"])
            else:
                z, ln = x, None
            check_finite(z, k)
            inside = (z >= lo) & (z <= hi)
            zc = np.clip(z, lo, hi)
            bsz, d_in = z.shape
            basis, dbasis = _basis_matrix(zc, self.knots, cfg.degree)
            basis = basis.reshape(bsz, d_in, -1)
            dbasis = dbasis.reshape(bsz, d_in, -1) * inside[:, :, None]
            coef = self.params[f"coef{k}"]
            out = basis.reshape(bsz, -1) @ coef.reshape(coef.shape[0], -1).T
            s = None
            if cfg.use_residual:
                s = silu(z)
                out = out + s[0] @ self.params[f"res{k}"].T
            check_finite(out, k)
            trace.layers.append((z, ln, basis, dbasis, s))
            x = out
        trace.out = x
        return x, trace

    def backward(self, trace, grad_out):
        g = _check_grad(self, trace, grad_out)
        cfg = self.config
        grads = {}
        for k in reversed(range(len(cfg.widths) - 1)):
            z, ln, basis, dbasis, s = trace.layers[k]
            coef = self.params[f"coef{k}"]
            bsz, d_in, nb = basis.shape
            grads[f"coef{k}"] = (g.T @ basis.reshape(bsz, -1)).reshape(coef.shape)
            dphi = (g @ coef.reshape(coef.shape[0], -1)).reshape(bsz, d_in, nb)
            dz = np.einsum("bnj,bnj->bn", dphi, dbasis)
            if s is not None:
                grads[f"res{k}"] = g.T @ s[0]
                dz += (g @ self.params[f"res{k}"]) * s[1]
            if k == 0:
                a, b = cfg.input_box
                lo, hi = cfg.domain
                g = dz * ((hi - lo) / (b - a))
            elif ln is not None:
                g, grads[f"ln_gain{k}"], grads[f"ln_bias{k}"] = layernorm_backward(dz, ln, self.params[f"ln_gain{k}"])
            else:
                g = dz
        return {k: grads[k] for k in self.params}


def init_spline_kan(config: SplineKanConfig) -> SplineKanModel:
    rng = np.random.Generator(np.random.Philox(config.seed))
    nb = config.grid_intervals + config.degree
    params = {}
    for k in range(len(config.widths) - 1):
        d_in, d_out = config.widths[k], config.widths[k + 1]
        params[f"coef{k}"] = config.coef_init_std * rng.standard_normal((d_out, d_in, nb))
        if config.use_residual:
            params[f"res{k}"] = np.ones((d_out, d_in))
        if k > 0 and config.use_layernorm:
            params[f"ln_gain{k}"] = np.ones(d_in)
            params[f"ln_bias{k}"] = np.zeros(d_in)
    return SplineKanModel(config, params)


# --------------------------------------------------------------------------
# Chebyshev


def chebyshev_basis(t, degree: int):
    """T_0..T_degree and their derivatives at t via the three-term recurrence."""
    t = np.asarray(t, dtype=np.float64)
    T = np.empty(t.shape + (degree + 1,))
    dT = np.empty_like(T)
    T[..., 0], dT[..., 0] = 1.0, 0.0
    if degree >= 1:
        T[..., 1], dT[..., 1] = t, 1.0
    for j in range(1, degree):
        T[..., j + 1] = 2.0 * t * T[..., j] - T[..., j - 1]
        dT[..., j + 1] = 2.0 * T[..., j] + 2.0 * t * dT[..., j] - dT[..., j - 1]
    return T, dT


@dataclass(frozen=True)
class ChebKanConfig:
    widths: tuple = (2, 8, 1)
    degree: int = 4
    use_layernorm: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2 or min(self.widths) < 1:
            raise DomainError("widths needs at least two entries, all >= 1")
        if self.degree < 1:
            raise DomainError("degree must be at least 1")

    def to_dict(self):
        d = asdict(self)
        d["widths"] = list(d["widths"])
        return d


class ChebKanModel(Model):
    """KAN whose edges are Chebyshev series in tanh(x)."""

    kind = "cheb_kan"

    def __init__(self, config: ChebKanConfig, params: dict, frozen=()):
        self.config = config
        self.params = params
        self.frozen = frozenset(frozen)

    def config_dict(self):
        return self.config.to_dict()

    def forward(self, x):
        cfg = self.config
        x = as_batch(x, cfg.widths[0])
        trace = _Trace(model_id=id(self))
        for k in range(len(cfg.widths) - 1):
            if k > 0 and cfg.use_layernorm:
                z, ln = layernorm_forward(x, self.params[f"ln_gain{k}"], self.params[f"ln_bias{k}"])
            else:
                z, ln = x, None
            t = np.tanh(z)
            T, dT = chebyshev_basis(t, cfg.degree)
            coef = self.params[f"coef{k}"]
            bsz, d_in = z.shape
            out = T.reshape(bsz, -1) @ coef.reshape(coef.shape[0], -1).T
            check_finite(out, k)
            trace.layers.append((ln, T, dT * (1.0 - t * t)[:, :, None]))
            x = out
        trace.out = x
        return x, trace

    def backward(self, trace, grad_out):
        g = _check_grad(self, trace, grad_out)
        grads = {}
        for k in reversed(range(len(self.config.widths) - 1)):
            ln, T, dTz = trace.layers[k]
            coef = self.params[f"coef{k}"]
            bsz, d_in, nb = T.shape
            grads[f"coef{k}"] = (g.T @ T.reshape(bsz, -1)).reshape(coef.shape)
            dphi = (g @ coef.reshape(coef.shape[0], -1)).reshape(bsz, d_in, nb)
            dz = np.einsum("bnj,bnj->bn", dphi, dTz)
            if ln is not None:
                g, grads[f"ln_gain{k}"], grads[f"ln_bias{k}"] = layernorm_backward(dz, ln, self.params[f"ln_gain{k}"])
            else:
                g = dz
        return {k: grads[k] for k in self.params}


def init_cheb_kan(config: ChebKanConfig) -> ChebKanModel:
    rng = np.random.Generator(np.random.Philox(config.seed))
    params = {}
    for k in range(len(config.widths) - 1):
        d_in, d_out = config.widths[k], config.widths[k + 1]
        std = 1.0 / math.sqrt(d_in * (config.degree + 1))
        params[f"coef{k}"] = std * rng.standard_normal((d_out, d_in, config.degree + 1))
        if k > 0 and config.use_layernorm:
            params[f"ln_gain{k}"] = np.ones(d_in)
            params[f"ln_bias{k}"] = np.zeros(d_in)
    return ChebKanModel(config, params)


# --------------------------------------------------------------------------
# MLP


@dataclass(frozen=True)
class MlpConfig:
    widths: tuple = (2, 128, 128, 128, 1)
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2 or min(self.widths) < 1:
            raise DomainError("widths needs at least two entries, all >= 1")
        if self.activation not in _ACTIVATIONS:
            raise DomainError(f"activation must be one of {sorted(_ACTIVATIONS)}")

    def to_dict(self):
        d = asdict(self)
        d["widths"] = list(d["widths"])
        return d


def _relu(x):
    return np.maximum(x, 0.0), (x > 0).astype(np.float64)


def _tanh(x):
    t = np.tanh(x)
    return t, 1.0 - t * t


_ACTIVATIONS = {"relu": _relu, "tanh": _tanh, "silu": silu}


class MlpModel(Model):
    """Affine maps interleaved with a fixed activation; none after the last."""

    kind = "mlp"

    def __init__(self, config: MlpConfig, params: dict, frozen=()):
        self.config = config
        self.params = params
        self.frozen = frozenset(frozen)

    def config_dict(self):
        return self.config.to_dict()

    def forward(self, x):
        cfg = self.config
        x = as_batch(x, cfg.widths[0])
        act = _ACTIVATIONS[cfg.activation]
        trace = _Trace(model_id=id(self))
        n = len(cfg.widths) - 1
        for k in range(n):
            pre = x @ self.params[f"W{k}"].T + self.params[f"b{k}"]
            check_finite(pre, k)
            if k < n - 1:
                a, da = act(pre)
            else:
                a, da = pre, None
            trace.layers.append((x, da))
            x = a
        trace.out = x
        return x, trace

    def backward(self, trace, grad_out):
        g = _check_grad(self, trace, grad_out)
        grads = {}
        for k in reversed(range(len(self.config.widths) - 1)):
            x_in, da = trace.layers[k]
            if da is not None:
                g = g * da
            grads[f"W{k}"] = g.T @ x_in
            grads[f"b{k}"] = g.sum(axis=0)
            g = g @ self.params[f"W{k}"]
        return {k: grads[k] for k in self.params}


def init_mlp(config: MlpConfig) -> MlpModel:
    """He-normal weights for ReLU, Glorot-normal otherwise; zero biases."""
    rng = np.random.Generator(np.random.Philox(config.seed))
    params = {}
    for k in range(len(config.widths) - 1):
        d_in, d_out = config.widths[k], config.widths[k + 1]
        gain = 2.0 / d_in if config.activation == "relu" else 2.0 / (d_in + d_out)
        params[f"W{k}"] = math.sqrt(gain) * rng.standard_normal((d_out, d_in))
        params[f"b{k}"] = np.zeros(d_out)
    return MlpModel(config, params)


def _check_grad(model, trace, grad_out):
    if trace.model_id != id(model) or trace.out is None:
        raise DomainError("trace does not belong to this model")
    g = np.asarray(grad_out, dtype=np.float64)
    if g.ndim == 1:
        g = g[:, None]
    if g.shape != trace.out.shape:
        raise DomainError(f"grad_out shape {g.shape} does not match output {trace.out.shape}")
    return g


def spline_kan_forward(model, batch):
    return model.forward(batch)


def cheb_kan_forward(model, batch):
    return model.forward(batch)


def mlp_forward(model, batch):
    return model.forward(batch)


_REGISTRY = {
    "rbf_kan": (ModelConfig, RbfKanModel),
    "spline_kan": (SplineKanConfig, SplineKanModel),
    "cheb_kan": (ChebKanConfig, ChebKanModel),
    "mlp": (MlpConfig, MlpModel),
}


def model_from_dict(d: dict) -> Model:
    try:
        cfg_cls, model_cls = _REGISTRY[d["kind"]]
    except KeyError:
        raise DomainError(f"unknown model kind {d.get('kind')!r}") from None
    config = cfg_cls(**d["config"])
    params = {k: decode_array(v) for k, v in d["params"].items()}
    return model_cls(config, params, frozen=d.get("frozen", ()))
