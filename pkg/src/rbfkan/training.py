"""Full-batch Adam training with periodic test evaluation."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalDivergenceError

HISTORY_COLUMNS = ("epoch", "train_mse", "test_rel_l2", "h")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 2000
    eval_every: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise DomainError("learning_rate must be positive")
        if self.epochs < 1:
            raise DomainError("epochs must be at least 1")
        if self.eval_every < 1:
            raise DomainError("eval_every must be at least 1")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise DomainError("Adam betas must lie in (0, 1)")
        if not self.adam_eps > 0:
            raise DomainError("adam_eps must be positive")


@dataclass
class TrainRecord:
    history: list = field(default_factory=list)  # (epoch, train_mse, test_rel_l2, h)
    seconds: float = 0.0
    diverged: bool = False
    message: str = ""

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HISTORY_COLUMNS)
            for epoch, mse, rel, h in self.history:
                w.writerow([epoch, repr(mse), repr(rel), "" if h is None else repr(h)])

    @staticmethod
    def read_csv(path) -> list:
        rows = []
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                rows.append((int(r["epoch"]), float(r["train_mse"]), float(r["test_rel_l2"]),
                             float(r["h"]) if r["h"] else None))
        return rows


def mse_loss(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(targets, dtype=np.float64).ravel()
    if p.size == 0 or p.shape != y.shape:
        raise DomainError("predictions and targets must be non-empty and of equal length")
    r = p - y
    return float(np.dot(r, r) / r.size)


def relative_l2(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(targets, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise DomainError("predictions and targets must have equal length")
    ny = float(np.linalg.norm(y))
    if ny == 0.0:
        raise DomainError("relative error undefined for all-zero targets")
    return float(np.linalg.norm(p - y)) / ny


class Adam:
    """Adam with bias correction over a dict of arrays, updated in place."""

    def __init__(self, lr=1e-2, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {}
        self.v = {}

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "Adam":
        return cls(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

    def step(self, params: dict, grads: dict, keys=None) -> None:
        keys = list(params) if keys is None else keys
        for k in keys:
            if not np.all(np.isfinite(grads[k])):
                raise NumericalDivergenceError(f"non-finite gradient for {k!r}")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for k in keys:
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params[k] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def adam_step(state: Adam, params: dict, grads: dict) -> Adam:
    state.step(params, grads)
    return state


def _current_h(model):
    return model.h if "theta" in model.params else None


def train(model, dataset, config: TrainConfig | None = None, callback=None):
    """Run ``config.epochs`` full-batch Adam epochs on the training split.

    Every ``eval_every`` epochs (and never at epoch 0) a history row with
    the train MSE, test relative L2 error and current h is appended.  On
    divergence the record keeps the rows gathered so far and the error is
    re-raised with the record attached as ``exc.record``.
    """
    config = config or TrainConfig()
    x_tr, y_tr = dataset.x_train, dataset.y_train
    x_te, y_te = dataset.x_test, dataset.y_test
    n = y_tr.size
    opt = Adam.from_config(config)
    keys = model.trainable
    record = TrainRecord()
    t0 = time.perf_counter()
    epoch = 0
    try:
        # overflow surfaces as NumericalDivergenceError via check_finite
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(1, config.epochs + 1):
                out, trace = model.forward(x_tr)
                pred = out[:, 0]
                resid = pred - y_tr
                loss = float(np.dot(resid, resid) / n)
                grads = model.backward(trace, (2.0 / n) * resid)
                opt.step(model.params, grads, keys)
                if epoch % config.eval_every == 0 or epoch == config.epochs:
                    test_err = relative_l2(model.predict(x_te), y_te)
                    h = _current_h(model)
                    if not (math.isfinite(loss) and math.isfinite(test_err)) or (h is not None and not math.isfinite(h)):
                        raise NumericalDivergenceError("non-finite training metrics", epoch=epoch)
                    record.history.append((epoch, loss, test_err, h))
                    if callback is not None:
                        callback(epoch, loss, test_err, h)
    except NumericalDivergenceError as exc:
        exc.epoch = exc.epoch or epoch
        record.diverged = True
        record.message = f"diverged at epoch {exc.epoch}: {exc}"
        record.seconds = time.perf_counter() - t0
        exc.record = record
        raise
    record.seconds = time.perf_counter() - t0
    return model, record
