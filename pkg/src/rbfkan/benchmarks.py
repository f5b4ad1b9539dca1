"""Benchmark surfaces on the unit square, datasets and reconstruction grids.

Sampling uses numpy's Philox4x64-10 counter-based bit generator seeded with
the integer seed, so datasets do not depend on numpy's default generator.
Sample locations depend only on (n, seed), never on the function id, so all
four functions and every model share the same points for a given seed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

FUNCTION_IDS = ("f1", "f2", "f3", "f4")
TRAIN_FRACTION = 0.8
PRNG_NAME = "numpy.random.Philox(seed)"


def _franke(x, y):
    return (
        0.75 * np.exp(-((9 * x - 2) ** 2 + (9 * y - 2) ** 2) / 4)
        + 0.75 * np.exp(-((9 * x + 1) ** 2) / 49 - (9 * y + 1) / 10)
        + 0.5 * np.exp(-((9 * x - 7) ** 2 + (9 * y - 3) ** 2) / 4)
        - 0.2 * np.exp(-((9 * x - 4) ** 2) - (9 * y - 7) ** 2)
    )


def _step(x, y):
    return np.where(np.sqrt(x * x + y * y) >= 0.5, 1.0, 0.0)


def _oscillatory(x, y):
    return np.sin(25 * x) * np.cos(25 * y)


def _peak(x, y):
    return 1.0 / (np.sqrt((x - 0.5) ** 2 + (y - 0.5) ** 2) + 0.1)


_FUNCTIONS = {"f1": _franke, "f2": _step, "f3": _oscillatory, "f4": _peak}


def target_fn(fid: str, x, y):
    """Evaluate benchmark `fid` at (x, y); broadcasts over arrays."""
    try:
        fn = _FUNCTIONS[fid]
    except KeyError:
        raise DomainError(f"unknown function {fid!r}; valid choices: {', '.join(FUNCTION_IDS)}") from None
    out = fn(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


@dataclass
class Dataset:
    inputs: np.ndarray  # (N, 2)
    targets: np.ndarray  # (N,)
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int | None = None
    function_id: str | None = None

    @property
    def x_train(self):
        return self.inputs[self.train_idx]

    @property
    def y_train(self):
        return self.targets[self.train_idx]

    @property
    def x_test(self):
        return self.inputs[self.test_idx]

    @property
    def y_test(self):
        return self.targets[self.test_idx]

    def to_csv(self, path) -> None:
        split = np.zeros(len(self.targets), dtype=int)
        split[self.test_idx] = 1
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z", "split"])
            for (x, y), z, s in zip(self.inputs, self.targets, split):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(z)), "test" if s else "train"])

    @classmethod
    def from_csv(cls, path, function_id=None, seed=None) -> "Dataset":
        xs, zs, test = [], [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                xs.append((float(row["x"]), float(row["y"])))
                zs.append(float(row["z"]))
                test.append(row.get("split", "train") == "test")
        test = np.array(test, dtype=bool)
        return cls(
            np.array(xs, dtype=np.float64).reshape(-1, 2),
            np.array(zs, dtype=np.float64),
            np.flatnonzero(~test),
            np.flatnonzero(test),
            seed,
            function_id,
        )


def sample_points(n: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Uniform points on [0,1]^2 plus a seeded 80/20 index split."""
    if n < 10:
        raise DomainError("need at least 10 samples")
    rng = np.random.Generator(np.random.Philox(seed))
    pts = rng.random((n, 2))
    perm = rng.permutation(n)
    n_train = math.floor(TRAIN_FRACTION * n)
    return pts, np.sort(perm[:n_train]), np.sort(perm[n_train:])


def generate_dataset(fid: str, n: int = 2000, seed: int = 0) -> Dataset:
    pts, tr, te = sample_points(n, seed)
    return Dataset(pts, target_fn(fid, pts[:, 0], pts[:, 1]), tr, te, seed, fid)


@dataclass
class SurfaceGrid:
    resolution: int
    x: np.ndarray  # (R*R,)
    y: np.ndarray
    z_pred: np.ndarray
    z_true: np.ndarray

    @property
    def rel_l2(self) -> float:
        return float(np.linalg.norm(self.z_pred - self.z_true) / np.linalg.norm(self.z_true))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "z_pred", "z_true"])
            for row in zip(self.x, self.y, self.z_pred, self.z_true):
                w.writerow([repr(float(v)) for v in row])


def grid_points(resolution: int) -> np.ndarray:
    if resolution < 2:
        raise DomainError("resolution must be at least 2")
    t = np.linspace(0.0, 1.0, resolution)
    gx, gy = np.meshgrid(t, t, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


def reconstruct_surface(model, fid: str, resolution: int = 100) -> SurfaceGrid:
    """Evaluate `model` (anything with ``predict``) on a uniform R x R grid."""
    pts = grid_points(resolution)
    pred = np.asarray(model.predict(pts), dtype=np.float64).reshape(-1)
    true = target_fn(fid, pts[:, 0], pts[:, 1])
    return SurfaceGrid(resolution, pts[:, 0], pts[:, 1], pred, true)
