import math

import numpy as np
import pytest

from rbfkan.benchmarks import (
    FUNCTION_IDS,
    Dataset,
    generate_dataset,
    grid_points,
    reconstruct_surface,
    sample_points,
    target_fn,
)
from rbfkan.errors import DomainError


def test_f1_origin():
    hand = (0.75 * math.exp(-8 / 4) + 0.75 * math.exp(-1 / 49 - 1 / 10)
            + 0.5 * math.exp(-(49 + 9) / 4) - 0.2 * math.exp(-16 - 49))
    assert hand == pytest.approx(0.7664205912, abs=1e-10)
    assert target_fn("f1", 0.0, 0.0) == pytest.approx(hand, rel=1e-15)


def test_simple_values():
    assert target_fn("f2", 1.0, 1.0) == 1.0
    assert target_fn("f2", 0.1, 0.1) == 0.0
    assert target_fn("f2", 0.3, 0.4) == 1.0  # radius exactly 0.5 is outside
    assert target_fn("f3", 0.0, 0.0) == 0.0
    assert target_fn("f4", 0.5, 0.5) == pytest.approx(10.0, rel=1e-15)


def test_ranges_on_grid():
    p = grid_points(101)
    x, y = p[:, 0], p[:, 1]
    assert set(np.unique(target_fn("f2", x, y))) == {0.0, 1.0}
    f3 = target_fn("f3", x, y)
    assert f3.min() >= -1 and f3.max() <= 1
    f4 = target_fn("f4", x, y)
    assert f4.max() == pytest.approx(10.0) and np.argmax(f4) == np.flatnonzero((x == 0.5) & (y == 0.5))[0]


def test_unknown_function():
    with pytest.raises(DomainError, match="f1, f2, f3, f4"):
        target_fn("f9", 0, 0)


@pytest.mark.parametrize("n,n_train", [(2000, 1600), (10, 8), (13, 10)])
def test_split_sizes(n, n_train):
    pts, tr, te = sample_points(n, 0)
    assert pts.shape == (n, 2)
    assert tr.size == n_train and te.size == n - n_train
    assert np.intersect1d(tr, te).size == 0
    np.testing.assert_array_equal(np.sort(np.concatenate([tr, te])), np.arange(n))


def test_points_in_unit_square():
    pts, _, _ = sample_points(2000, 3)
    assert pts.min() >= 0 and pts.max() < 1


def test_sampling_deterministic_and_function_independent():
    a = generate_dataset("f1", 200, seed=7)
    b = generate_dataset("f1", 200, seed=7)
    c = generate_dataset("f3", 200, seed=7)
    d = generate_dataset("f1", 200, seed=8)
    np.testing.assert_array_equal(a.inputs, b.inputs)
    np.testing.assert_array_equal(a.targets, b.targets)
    np.testing.assert_array_equal(a.inputs, c.inputs)
    np.testing.assert_array_equal(a.test_idx, c.test_idx)
    assert not np.array_equal(a.inputs, d.inputs)


def test_too_few_samples():
    with pytest.raises(DomainError):
        sample_points(5, 0)


def test_dataset_csv_round_trip(tmp_path):
    ds = generate_dataset("f4", 50, seed=1)
    path = tmp_path / "d.csv"
    ds.to_csv(path)
    back = Dataset.from_csv(path, "f4", 1)
    np.testing.assert_array_equal(back.inputs, ds.inputs)
    np.testing.assert_array_equal(back.targets, ds.targets)
    np.testing.assert_array_equal(back.train_idx, ds.train_idx)
    np.testing.assert_array_equal(back.test_idx, ds.test_idx)


def test_grid_cardinality():
    p = grid_points(100)
    assert p.shape == (10000, 2)
    assert p.min() == 0.0 and p.max() == 1.0
    with pytest.raises(DomainError):
        grid_points(1)


class _Oracle:
    def __init__(self, fid):
        self.fid = fid

    def predict(self, x):
        return target_fn(self.fid, x[:, 0], x[:, 1])


@pytest.mark.parametrize("fid", ["f1", "f2", "f4"])
def test_perfect_oracle_surface(fid, tmp_path):
    s = reconstruct_surface(_Oracle(fid), fid, resolution=30)
    assert s.rel_l2 == 0.0
    s.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "x,y,z_pred,z_true" and len(lines) == 901


def test_function_ids():
    assert FUNCTION_IDS == ("f1", "f2", "f3", "f4")
