"""Adaptive RBF Kolmogorov-Arnold network.

Layer k maps d_k inputs to d_{k+1} outputs through d_{k+1} * d_k edge
functions

    psi(x) = sum_j c[m, n, j] * phi(|x - center_j|; h) + w[m, n] * silu(x)

summed over the incoming index n.  All edges share the fixed center grid and
a single shape parameter h = exp(theta); theta is trained like any other
weight, so h stays positive no matter what the optimizer does.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
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
from .kernels import KernelSpec, parse_kernel

INPUT_NORMS = ("layernorm", "minmax", "none")


@dataclass(frozen=True)
class ModelConfig:
    widths: tuple = (2, 8, 1)
    kernel: KernelSpec = KernelSpec.GA
    num_centers: int = 8
    center_range: tuple = (-2.0, 2.0)
    use_layernorm: bool = True
    use_residual: bool = False
    input_norm: str = "none"
    input_box: tuple = (0.0, 1.0)
    coef_init_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "center_range", tuple(float(c) for c in self.center_range))
        object.__setattr__(self, "input_box", tuple(float(c) for c in self.input_box))
        object.__setattr__(self, "kernel", parse_kernel(self.kernel))
        if len(self.widths) < 2 or min(self.widths) < 1:
            raise DomainError("widths needs at least two entries, all >= 1")
        if self.num_centers < 2:
            raise DomainError("num_centers must be at least 2")
        lo, hi = self.center_range
        if not lo < hi:
            raise DomainError("center_range must satisfy c_min < c_max")
        if self.input_norm not in INPUT_NORMS:
            raise DomainError(f"input_norm must be one of {INPUT_NORMS}")
        if not self.input_box[0] < self.input_box[1]:
            raise DomainError("input_box must be increasing")
        if not self.coef_init_std > 0:
            raise DomainError("coef_init_std must be positive")

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    def input_scale(self) -> float:
        """Factor mapping raw input distances to first-layer distances."""
        if self.input_norm != "minmax":
            return 1.0
        (a, b), (lo, hi) = self.input_box, self.center_range
        return (hi - lo) / (b - a)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kernel"] = self.kernel.value
        d["widths"] = list(self.widths)
        d["center_range"] = list(self.center_range)
        d["input_box"] = list(self.input_box)
        return d


@dataclass
class ForwardTrace:
    x_in: list = field(default_factory=list)  # per-layer incoming activations
    z: list = field(default_factory=list)  # after normalization
    ln: list = field(default_factory=list)  # layernorm caches (or None)
    sign: list = field(default_factory=list)
    phi: list = field(default_factory=list)
    phi_dr: list = field(default_factory=list)
    phi_dh: list = field(default_factory=list)
    silu: list = field(default_factory=list)
    out: np.ndarray | None = None
    model_id: int = 0


class RbfKanModel(Model):
    kind = "rbf_kan"

    def __init__(self, config: ModelConfig, params: dict, frozen=()):
        self.config = config
        self.params = params
        self.frozen = frozenset(frozen)
        self.centers = np.linspace(*config.center_range, config.num_centers)

    # -- parameters -------------------------------------------------------
    @property
    def theta(self) -> float:
        return float(self.params["theta"][0])

    @property
    def h(self) -> float:
        return math.exp(self.theta)

    def coefficients(self, k):
        return self.params[f"coef{k}"]

    def residual_weights(self, k):
        return self.params[f"res{k}"]

    def _norm_kind(self, k):
        if k == 0:
            return self.config.input_norm
        return "layernorm" if self.config.use_layernorm else "none"

    def config_dict(self):
        return self.config.to_dict()

    # -- evaluation ---------------------------------------------------------
    def edge_eval(self, k, m, n, x) -> float:
        """psi_{k,m,n}(x) on an already-normalized scalar input."""
        if not (0 <= k < self.config.n_layers):
            raise IndexError(f"layer {k} out of range")
        c = self.params[f"coef{k}"][m, n]
        val = float(np.dot(c, kernels.eval(self.config.kernel, np.abs(x - self.centers), self.h)))
        if self.config.use_residual:
            val += float(self.params[f"res{k}"][m, n] * silu(np.float64(x))[0])
        return val

    def _normalize(self, k, x, trace):
        kind = self._norm_kind(k)
        if kind == "layernorm":
            z, cache = layernorm_forward(x, self.params[f"ln_gain{k}"], self.params[f"ln_bias{k}"])
            trace.ln.append(cache)
            return z
        trace.ln.append(None)
        if kind == "minmax":
            (a, b), (lo, hi) = self.config.input_box, self.config.center_range
            return lo + (x - a) * ((hi - lo) / (b - a))
        return x

    def forward(self, x):
        cfg = self.config
        x = as_batch(x, cfg.widths[0])
        h = self.h
        trace = ForwardTrace(model_id=id(self))
        for k in range(cfg.n_layers):
            trace.x_in.append(x)
            z = self._normalize(k, x, trace)
            check_finite(z, k)
            diff = z[:, :, None] - self.centers
            phi, dr, dh = kernels.eval_all(cfg.kernel, np.abs(diff), h)
            coef = self.params[f"coef{k}"]
            bsz, d_in, nc = phi.shape
            out = phi.reshape(bsz, d_in * nc) @ coef.reshape(coef.shape[0], d_in * nc).T
            if cfg.use_residual:
                s = silu(z)
                out = out + s[0] @ self.params[f"res{k}"].T
                trace.silu.append(s)
            else:
                trace.silu.append(None)
            check_finite(out, k)
            trace.z.append(z)
            trace.sign.append(np.sign(diff))
            trace.phi.append(phi)
            trace.phi_dr.append(dr)
            trace.phi_dh.append(dh)
            x = out
        trace.out = x
        return x, trace

    def backward(self, trace: ForwardTrace, grad_out):
        if trace.model_id != id(self) or trace.out is None:
            raise DomainError("trace does not belong to this model")
        g = np.asarray(grad_out, dtype=np.float64)
        if g.ndim == 1:
            g = g[:, None]
        if g.shape != trace.out.shape:
            raise DomainError(f"grad_out shape {g.shape} does not match output {trace.out.shape}")
        cfg = self.config
        h = self.h
        grads = {}
        dtheta = 0.0
        for k in reversed(range(cfg.n_layers)):
            coef = self.params[f"coef{k}"]
            phi = trace.phi[k]
            bsz, d_in, nc = phi.shape
            d_out = coef.shape[0]
            grads[f"coef{k}"] = (g.T @ phi.reshape(bsz, d_in * nc)).reshape(d_out, d_in, nc)
            dphi = (g @ coef.reshape(d_out, d_in * nc)).reshape(bsz, d_in, nc)
            dtheta += h * float(np.einsum("bnj,bnj->", dphi, trace.phi_dh[k]))
            dz = np.einsum("bnj,bnj->bn", dphi, trace.phi_dr[k] * trace.sign[k])
            if cfg.use_residual:
                s, ds = trace.silu[k]
                w = self.params[f"res{k}"]
                grads[f"res{k}"] = g.T @ s
                dz += (g @ w) * ds
            kind = self._norm_kind(k)
            if kind == "layernorm":
                dx, dgain, dbias = layernorm_backward(dz, trace.ln[k], self.params[f"ln_gain{k}"])
                grads[f"ln_gain{k}"] = dgain
                grads[f"ln_bias{k}"] = dbias
            elif kind == "minmax":
                (a, b), (lo, hi) = cfg.input_box, cfg.center_range
                dx = dz * ((hi - lo) / (b - a))
            else:
                dx = dz
            g = dx
        grads["theta"] = np.array([dtheta])
        return {k: grads[k] for k in self.params}


def init_model(config: ModelConfig, h_init: float, trainable_h: bool = True) -> RbfKanModel:
    """Seeded initial model with theta = ln(h_init)."""
    if not (np.isfinite(h_init) and h_init > 0):
        raise DomainError("h_init must be positive and finite")
    rng = np.random.Generator(np.random.Philox(config.seed))
    nc = config.num_centers
    params = {}
    for k in range(config.n_layers):
        d_in, d_out = config.widths[k], config.widths[k + 1]
        params[f"coef{k}"] = config.coef_init_std * rng.standard_normal((d_out, d_in, nc))
        if config.use_residual:
            params[f"res{k}"] = np.ones((d_out, d_in))
        if (k == 0 and config.input_norm == "layernorm") or (k > 0 and config.use_layernorm):
            params[f"ln_gain{k}"] = np.ones(d_in)
            params[f"ln_bias{k}"] = np.zeros(d_in)
    params["theta"] = np.array([math.log(h_init)])
    return RbfKanModel(config, params, frozen=() if trainable_h else ("theta",))


def forward(model, inputs):
    return model.forward(inputs)


def backward(model, trace, output_grads):
    return model.backward(trace, output_grads)


def model_from_dict(d: dict) -> RbfKanModel:
    cfg = dict(d["config"])
    config = ModelConfig(**cfg)
    params = {k: decode_array(v) for k, v in d["params"].items()}
    return RbfKanModel(config, params, frozen=d.get("frozen", ()))
