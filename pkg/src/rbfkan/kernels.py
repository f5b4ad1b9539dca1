"""Radial kernels phi(r; h) and their partial derivatives.

Every kernel depends on r and h only through q = r / h, so each kind is
defined by a profile f(q) and its derivative f'(q).  The partials follow:

    d phi / d r = f'(q) / h
    d phi / d h = -q f'(q) / h

All functions accept scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

import enum

import numpy as np

from .errors import DomainError

__all__ = ["KernelSpec", "KERNEL_NAMES", "eval", "eval_dr", "eval_dh", "eval_all", "parse_kernel"]


class KernelSpec(str, enum.Enum):
    GA = "GA"
    IMQ = "IMQ"
    M6 = "M6"
    M4 = "M4"
    M2 = "M2"
    W6 = "W6"
    W4 = "W4"
    W2 = "W2"

    @property
    def compact(self) -> bool:
        return self in (KernelSpec.W2, KernelSpec.W4, KernelSpec.W6)

    def __str__(self) -> str:
        return self.value


KERNEL_NAMES = tuple(k.value for k in KernelSpec)


def parse_kernel(name) -> KernelSpec:
    if isinstance(name, KernelSpec):
        return name
    try:
        return KernelSpec(str(name))
    except ValueError:
        raise DomainError(
            f"unknown kernel {name!r}; valid choices: {', '.join(KERNEL_NAMES)}"
        ) from None


def _profile(kind: KernelSpec, q):
    """Return (f(q), f'(q)) for the profile of `kind`."""
    if kind is KernelSpec.GA:
        f = np.exp(-0.5 * q * q)
        return f, -q * f
    if kind is KernelSpec.IMQ:
        s = 1.0 + q * q
        f = 1.0 / np.sqrt(s)
        return f, -q * f / s
    if kind is KernelSpec.M6:
        e = np.exp(-q)
        return e * (((q + 6.0) * q + 15.0) * q + 15.0), -q * e * ((q + 3.0) * q + 3.0)
    if kind is KernelSpec.M4:
        e = np.exp(-q)
        return e * ((q + 3.0) * q + 3.0), -q * e * (q + 1.0)
    if kind is KernelSpec.M2:
        e = np.exp(-q)
        return e * (q + 1.0), -q * e
    # Wendland: zero (with zero derivative) for q >= 1
    t = np.maximum(1.0 - q, 0.0)
    t2 = t * t
    t3 = t2 * t
    if kind is KernelSpec.W6:
        t7 = t3 * t3 * t
        return t7 * t * (((32.0 * q + 25.0) * q + 8.0) * q + 1.0), -22.0 * q * t7 * ((16.0 * q + 7.0) * q + 1.0)
    if kind is KernelSpec.W4:
        t5 = t3 * t2
        return t5 * t * ((35.0 * q + 18.0) * q + 3.0), -56.0 * q * t5 * (5.0 * q + 1.0)
    if kind is KernelSpec.W2:
        return t3 * t * (4.0 * q + 1.0), -20.0 * q * t3
    raise DomainError(f"unhandled kernel {kind!r}")


def _check(r, h):
    r = np.asarray(r, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(h))):
        raise DomainError("kernel arguments must be finite")
    if np.any(h <= 0.0):
        raise DomainError("shape parameter h must be positive")
    if np.any(r < 0.0):
        raise DomainError("distance r must be non-negative")
    return r, h


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def eval(kind, r, h):  # noqa: A001 - mirrors the operation name
    """phi(r; h)."""
    kind = parse_kernel(kind)
    r, h = _check(r, h)
    return _scalar(_profile(kind, r / h)[0])


def eval_dr(kind, r, h):
    """d phi / d r."""
    kind = parse_kernel(kind)
    r, h = _check(r, h)
    return _scalar(_profile(kind, r / h)[1] / h)


def eval_dh(kind, r, h):
    """d phi / d h."""
    kind = parse_kernel(kind)
    r, h = _check(r, h)
    q = r / h
    return _scalar(-q * _profile(kind, q)[1] / h)


def eval_all(kind, r, h):
    """Value, d/dr and d/dh in one pass; used by the training hot path.

    Skips argument validation beyond what numpy does, so callers must pass
    finite r >= 0 and h > 0.
    """
    kind = parse_kernel(kind)
    q = r / h
    f, fp = _profile(kind, q)
    dr = fp / h
    return f, dr, -q * dr
