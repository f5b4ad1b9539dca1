"""Shape-parameter initialization by leave-one-out cross-validation.

The auxiliary problem is a regularized 1D kernel interpolant on one input
coordinate.  For every candidate h the whole vector of leave-one-out errors
comes from a single factorization (Rippa's identity), and a coarse grid
followed by a fine grid around the coarse winner picks the h with the
smallest max-norm error.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import densela
from .errors import DegenerateDataError, DomainError, NumericalRankError, SearchFailedError
from .kernels import KernelSpec, parse_kernel
from . import kernels

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoocvConfig:
    h_min: float = 0.01
    h_max: float = 20.0
    n_coarse: int = 50
    n_fine: int = 20
    lam: float = 1e-9
    max_points: int = 200
    coordinate_index: int = 0

    def __post_init__(self):
        if not (0.0 < self.h_min < self.h_max and np.isfinite(self.h_max)):
            raise DomainError("need 0 < h_min < h_max")
        if self.n_coarse < 2 or self.n_fine < 2:
            raise DomainError("n_coarse and n_fine must be at least 2")
        if not self.lam > 0.0:
            raise DomainError("lam must be positive")
        if self.max_points < 10:
            raise DomainError("max_points must be at least 10")
        if self.coordinate_index < 0:
            raise DomainError("coordinate_index must be non-negative")


@dataclass
class LoocvResult:
    h_opt: float
    err_min: float
    curve: list = field(default_factory=list)  # (h, err, stage)
    stage2_halfwidth: float = 0.0
    n_points: int = 0

    def to_dict(self) -> dict:
        return {
            "h_opt": self.h_opt,
            "err_min": self.err_min,
            "stage2_halfwidth": self.stage2_halfwidth,
            "n_points": self.n_points,
            "curve": [[h, e, s] for h, e, s in self.curve],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LoocvResult":
        return cls(
            h_opt=d["h_opt"],
            err_min=d["err_min"],
            curve=[(float(h), float(e), int(s)) for h, e, s in d["curve"]],
            stage2_halfwidth=d["stage2_halfwidth"],
            n_points=d["n_points"],
        )


def _validate_1d(points, targets):
    x = np.asarray(points, dtype=np.float64).ravel()
    y = np.asarray(targets, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DomainError("points and targets differ in length")
    if x.size < 2:
        raise DomainError("need at least two points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("points and targets must be finite")
    return x, y


def _rippa(dist, y, kind, h, lam):
    a = kernels.eval_all(kind, dist, h)[0]
    a[np.diag_indices_from(a)] += lam
    try:
        fac = densela.factorize(a)
    except NumericalRankError as exc:
        raise NumericalRankError(f"interpolation matrix singular at h={h!r}", h=h) from exc
    w = densela.solve(fac, y)
    return w / densela.inverse_diagonal(fac)


def rippa_errors(points, targets, kind, h, lam=1e-9) -> np.ndarray:
    """Leave-one-out residuals e_i = w_i / (A^-1)_ii of the regularized interpolant."""
    x, y = _validate_1d(points, targets)
    kind = parse_kernel(kind)
    if not (np.isfinite(h) and h > 0):
        raise DomainError("h must be positive and finite")
    if not lam > 0:
        raise DomainError("lam must be positive")
    return _rippa(np.abs(x[:, None] - x[None, :]), y, kind, float(h), lam)


def search_h(points, targets, kind, config: LoocvConfig | None = None) -> LoocvResult:
    """Two-stage grid search for the h minimizing max_i |e_i|."""
    config = config or LoocvConfig()
    x, y = _validate_1d(points, targets)
    kind = parse_kernel(kind)
    dist = np.abs(x[:, None] - x[None, :])

    best_h, best_err = config.h_min, np.inf
    curve = []

    def score(h, stage):
        nonlocal best_h, best_err
        try:
            err = float(np.max(np.abs(_rippa(dist, y, kind, h, config.lam))))
        except NumericalRankError:
            log.debug("LOOCV candidate h=%g is singular", h)
            err = np.inf
        curve.append((h, err, stage))
        if err < best_err:
            best_h, best_err = h, err

    for h in np.linspace(config.h_min, config.h_max, config.n_coarse):
        score(float(h), 1)

    halfwidth = 2.0 * (config.h_max - config.h_min) / config.n_coarse
    lo, hi = best_h - halfwidth, best_h + halfwidth
    if lo > 0.0:
        fine = np.linspace(lo, hi, config.n_fine)
    else:
        # window crosses zero: same count, equally spaced on (0, hi]
        fine = np.linspace(0.0, hi, config.n_fine + 1)[1:]
    for h in fine:
        score(float(h), 2)

    if not np.isfinite(best_err):
        raise SearchFailedError(f"every LOOCV candidate for kernel {kind} was singular")
    return LoocvResult(best_h, best_err, curve, halfwidth, int(x.size))


def prepare_auxiliary(dataset, config: LoocvConfig | None = None):
    """1D points/targets from one coordinate of the training split.

    Duplicate coordinates are merged with their mean target; beyond
    ``max_points`` a subsample evenly spaced in sorted order is kept.
    """
    config = config or LoocvConfig()
    inputs = dataset.inputs[dataset.train_idx]
    if config.coordinate_index >= inputs.shape[1]:
        raise DomainError(f"coordinate_index {config.coordinate_index} out of range")
    x = inputs[:, config.coordinate_index]
    y = dataset.targets[dataset.train_idx]
    if x.size < 2:
        raise DegenerateDataError("need at least two training samples")
    ux, inv = np.unique(x, return_inverse=True)
    if ux.size < 2:
        raise DegenerateDataError("fewer than two distinct coordinates")
    uy = np.bincount(inv, weights=y) / np.bincount(inv)
    if ux.size > config.max_points:
        idx = np.round(np.linspace(0, ux.size - 1, config.max_points)).astype(np.intp)
        ux, uy = ux[idx], uy[idx]
    return ux, uy


__all__ = [
    "KernelSpec",
    "LoocvConfig",
    "LoocvResult",
    "rippa_errors",
    "search_h",
    "prepare_auxiliary",
]
