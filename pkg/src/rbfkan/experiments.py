"""Experiment configuration, single runs, the result matrix and file formats.

Every file written here carries a ``schema`` tag.  Reports are split in two:
``report.json`` holds everything that is a deterministic function of the
configuration, while wall-clock timings go to ``timing.json`` so that
reruns produce byte-identical reports.
"""
from __future__ import annotations

import copy
import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import baselines
from .baselines import ChebKanConfig, MlpConfig, SplineKanConfig
from .benchmarks import FUNCTION_IDS, generate_dataset, reconstruct_surface
from .errors import DomainError, NumericalDivergenceError, RbfKanError
from .kan import ModelConfig, init_model
from .kernels import KERNEL_NAMES, parse_kernel
from .loocv import LoocvConfig, LoocvResult, prepare_auxiliary, search_h
from .training import TrainConfig, TrainRecord, train

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

REPORT_SCHEMA = "rbfkan.report/1"
TIMING_SCHEMA = "rbfkan.timing/1"
LOOCV_SCHEMA = "rbfkan.loocv/1"
MATRIX_SCHEMA = "rbfkan.matrix/1"
OUTPUT_ROOT_ENV = "RBFKAN_OUTPUT_ROOT"

MODEL_KINDS = ("rbf_kan", "fastkan_fixed", "spline_kan", "cheb_kan", "mlp")
ADAPTIVE_BEST = "adaptive_best"

# Architectures per benchmark for the comparison table
TABLE_WIDTHS = {
    "rbf_kan": {"f1": (2, 8, 1), "f2": (2, 8, 1), "f3": (2, 16, 1), "f4": (2, 8, 1)},
    "cheb_kan": {"f1": (2, 8, 1), "f2": (2, 8, 1), "f3": (2, 16, 1), "f4": (2, 8, 1)},
    "spline_kan": dict.fromkeys(FUNCTION_IDS, (2, 5, 5, 1)),
    "mlp": dict.fromkeys(FUNCTION_IDS, (2, 128, 128, 128, 1)),
}
TABLE_WIDTHS["fastkan_fixed"] = TABLE_WIDTHS["rbf_kan"]


class ConfigError(RbfKanError, ValueError):
    """Malformed or inconsistent experiment configuration."""


# --------------------------------------------------------------------------
# configuration


_SECTIONS = {
    "loocv": LoocvConfig,
    "model": ModelConfig,
    "spline": SplineKanConfig,
    "cheb": ChebKanConfig,
    "mlp": MlpConfig,
    "train": TrainConfig,
}
_TOP_LEVEL = {"function", "model_kind", "kernel", "n_samples", "seed", "fixed_h", "surface_resolution", "output_dir"}
# fields filled in from the top level rather than from a section
_DERIVED = {"kernel", "seed", "widths"}


@dataclass
class ExperimentConfig:
    function: str = "f1"
    model_kind: str = "rbf_kan"
    kernel: str = "GA"
    n_samples: int = 2000
    seed: int = 0
    fixed_h: float = baselines.FASTKAN_FIXED_H
    surface_resolution: int = 100
    output_dir: str | None = None
    sections: dict = field(default_factory=dict)  # per-section overrides

    def __post_init__(self):
        if self.function not in FUNCTION_IDS:
            raise ConfigError(f"unknown function {self.function!r}; valid choices: {', '.join(FUNCTION_IDS)}")
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model_kind!r}; valid choices: {', '.join(MODEL_KINDS)}")
        try:
            self.kernel = parse_kernel(self.kernel).value
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        if self.n_samples < 10:
            raise ConfigError("n_samples must be at least 10")
        if not (self.fixed_h > 0 and math.isfinite(self.fixed_h)):
            raise ConfigError("fixed_h must be positive")
        if self.surface_resolution < 2:
            raise ConfigError("surface_resolution must be at least 2")
        for name, values in self.sections.items():
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]; valid sections: {', '.join(_SECTIONS)}")
            allowed = {f.name for f in fields(_SECTIONS[name])}
            for key in values:
                if key not in allowed or (key in _DERIVED and key != "widths"):
                    raise ConfigError(f"unknown key {key!r} in section [{name}]")
        # build once so invalid values surface at parse time
        self.loocv_config()
        self.train_config()
        self.model_config()

    # nested configs ------------------------------------------------------
    def _section(self, name, **defaults):
        try:
            return _SECTIONS[name](**{**defaults, **self.sections.get(name, {})})
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"[{name}]: {exc}") from None

    def loocv_config(self) -> LoocvConfig:
        return self._section("loocv")

    def train_config(self) -> TrainConfig:
        return self._section("train", seed=self.seed)

    def model_config(self):
        kind = self.model_kind
        widths = TABLE_WIDTHS[kind][self.function]
        if kind in ("rbf_kan", "fastkan_fixed"):
            return self._section("model", widths=widths, kernel=self.kernel, seed=self.seed)
        name = {"spline_kan": "spline", "cheb_kan": "cheb", "mlp": "mlp"}[kind]
        return self._section(name, widths=widths, seed=self.seed)

    @property
    def uses_loocv(self) -> bool:
        return self.model_kind == "rbf_kan"

    @property
    def uses_h(self) -> bool:
        return self.model_kind in ("rbf_kan", "fastkan_fixed")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in sorted(_TOP_LEVEL) if k != "output_dir"}
        d["loocv"] = _plain(self.loocv_config().__dict__)
        d["train"] = _plain(self.train_config().__dict__)
        d["model"] = self.model_config().to_dict()
        return d

    def with_overrides(self, **kw) -> "ExperimentConfig":
        new = copy.deepcopy(self)
        for k, v in kw.items():
            setattr(new, k, v)
        new.__post_init__()
        return new


def _plain(d):
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def config_from_mapping(data: dict, overrides=None) -> ExperimentConfig:
    """Build a config from a parsed document plus ``section.key=value`` overrides."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        target = data
        for p in parts[:-1]:
            target = target.setdefault(p, {})
        target[parts[-1]] = _coerce(value.strip())
    top, sections = {}, {}
    for key, value in data.items():
        if isinstance(value, dict):
            sections[key] = value
        elif key in _TOP_LEVEL:
            top[key] = value
        else:
            raise ConfigError(f"unknown top-level key {key!r}")
    try:
        return ExperimentConfig(**top, sections=sections)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_config(path=None, overrides=None) -> ExperimentConfig:
    data = load_toml(path) if path else {}
    return config_from_mapping(data, overrides)


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def default_run_dir(cfg: ExperimentConfig) -> Path:
    tag = cfg.kernel if cfg.model_kind == "rbf_kan" else cfg.model_kind
    return output_root() / f"{cfg.function}_{tag}_seed{cfg.seed}"


# --------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    config: dict
    status: str = "ok"
    message: str = ""
    h_init: float | None = None
    h_final: float | None = None
    rel_l2: float | None = None
    grid_rel_l2: float | None = None
    final_train_mse: float | None = None
    epochs: int = 0
    n_params: int = 0
    loocv_seconds: float = 0.0
    train_seconds: float = 0.0
    history_file: str = "history.csv"

    _TIMING = ("loocv_seconds", "train_seconds")

    def to_dict(self) -> dict:
        d = {"schema": REPORT_SCHEMA}
        for f in fields(self):
            if f.name not in self._TIMING:
                d[f.name] = getattr(self, f.name)
        return d

    def timing_dict(self) -> dict:
        return {"schema": TIMING_SCHEMA, **{k: getattr(self, k) for k in self._TIMING}}

    def write(self, run_dir) -> None:
        run_dir = Path(run_dir)
        _write_json(run_dir / "report.json", self.to_dict())
        _write_json(run_dir / "timing.json", self.timing_dict())

    @classmethod
    def read(cls, run_dir) -> "ExperimentReport":
        run_dir = Path(run_dir)
        d = _read_json(run_dir / "report.json", REPORT_SCHEMA)
        d.pop("schema")
        timing_path = run_dir / "timing.json"
        if timing_path.exists():
            t = _read_json(timing_path, TIMING_SCHEMA)
            t.pop("schema")
            d.update(t)
        return cls(**d)


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _read_json(path, schema) -> dict:
    with open(path) as fh:
        d = json.load(fh)
    if d.get("schema") != schema:
        raise ConfigError(f"{path}: expected schema {schema!r}, found {d.get('schema')!r}")
    return d


def write_loocv(result: LoocvResult, run_dir, kernel: str) -> None:
    run_dir = Path(run_dir)
    _write_json(run_dir / "loocv.json", {"schema": LOOCV_SCHEMA, "kernel": kernel, **result.to_dict()})
    with open(run_dir / "loocv_curve.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "err", "stage"])
        for h, e, s in result.curve:
            w.writerow([repr(h), repr(e), s])


def read_loocv(path) -> LoocvResult:
    d = _read_json(path, LOOCV_SCHEMA)
    return LoocvResult.from_dict(d)


def load_model(path):
    with open(path) as fh:
        d = json.load(fh)
    from ._nn import MODEL_SCHEMA

    if d.get("schema") != MODEL_SCHEMA:
        raise ConfigError(f"{path}: expected schema {MODEL_SCHEMA!r}")
    return baselines.model_from_dict(d)


# --------------------------------------------------------------------------
# runs


def run_loocv(cfg: ExperimentConfig, dataset=None):
    dataset = dataset if dataset is not None else generate_dataset(cfg.function, cfg.n_samples, cfg.seed)
    lcfg = cfg.loocv_config()
    pts, tgt = prepare_auxiliary(dataset, lcfg)
    return search_h(pts, tgt, cfg.kernel, lcfg)


def build_model(cfg: ExperimentConfig, h_init=None):
    mcfg = cfg.model_config()
    kind = cfg.model_kind
    if kind == "rbf_kan":
        return init_model(mcfg, h_init)
    if kind == "fastkan_fixed":
        return baselines.fastkan_fixed(mcfg, cfg.fixed_h)
    if kind == "spline_kan":
        return baselines.init_spline_kan(mcfg)
    if kind == "cheb_kan":
        return baselines.init_cheb_kan(mcfg)
    return baselines.init_mlp(mcfg)


def run_train(cfg: ExperimentConfig, run_dir=None, write=True) -> ExperimentReport:
    """LOOCV (adaptive RBF only), init, train, reconstruct; write artifacts.

    Raises NumericalDivergenceError after writing the partial history and a
    report with status "diverged".
    """
    run_dir = Path(run_dir or cfg.output_dir or default_run_dir(cfg))
    if write:
        run_dir.mkdir(parents=True, exist_ok=True)
    dataset = generate_dataset(cfg.function, cfg.n_samples, cfg.seed)
    report = ExperimentReport(config=cfg.to_dict())

    h_init = None
    if cfg.uses_loocv:
        t0 = time.perf_counter()
        lres = run_loocv(cfg, dataset)
        report.loocv_seconds = time.perf_counter() - t0
        h_init = lres.h_opt
        if write:
            write_loocv(lres, run_dir, cfg.kernel)
    elif cfg.model_kind == "fastkan_fixed":
        h_init = cfg.fixed_h

    model = build_model(cfg, h_init)
    report.h_init = h_init
    report.n_params = model.n_params()
    tcfg = cfg.train_config()
    try:
        model, record = train(model, dataset, tcfg)
    except NumericalDivergenceError as exc:
        record = getattr(exc, "record", TrainRecord())
        report.status = "diverged"
        report.message = record.message or str(exc)
        report.train_seconds = record.seconds
        _fill_from_history(report, record)
        if write:
            record.to_csv(run_dir / report.history_file)
            report.write(run_dir)
        raise
    report.train_seconds = record.seconds
    _fill_from_history(report, record)
    report.h_final = model.h if cfg.uses_h else None
    if not cfg.uses_h:
        report.h_init = None
    if write:
        record.to_csv(run_dir / report.history_file)
        model.save(run_dir / "model.json")
        grid = reconstruct_surface(model, cfg.function, cfg.surface_resolution)
        grid.to_csv(run_dir / "surface.csv")
        report.grid_rel_l2 = grid.rel_l2
        report.write(run_dir)
    return report


def _fill_from_history(report, record):
    if record.history:
        epoch, mse, rel, h = record.history[-1]
        report.epochs = epoch
        report.final_train_mse = mse
        report.rel_l2 = rel
        report.h_final = h


# --------------------------------------------------------------------------
# matrix

MATRIX_COLUMNS = (
    "function", "method", "kernel", "seed", "h_init", "h_final", "architecture",
    "rel_l2", "time_s", "status", "best",
)


@dataclass(frozen=True)
class MatrixSpec:
    functions: tuple = FUNCTION_IDS
    kernels: tuple = KERNEL_NAMES
    models: tuple = ()
    seeds: tuple = (0,)

    def __post_init__(self):
        for name in ("functions", "kernels", "models", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.functions or not (self.kernels or self.models) or not self.seeds:
            raise ConfigError("matrix needs at least one function, one kernel or model, and one seed")
        for f in self.functions:
            if f not in FUNCTION_IDS:
                raise ConfigError(f"unknown function {f!r}")
        for k in self.kernels:
            if k not in KERNEL_NAMES:
                raise ConfigError(f"unknown kernel {k!r}; valid choices: {', '.join(KERNEL_NAMES)}")
        for m in self.models:
            if m not in MODEL_KINDS + (ADAPTIVE_BEST,):
                raise ConfigError(f"unknown model {m!r}")
        if ADAPTIVE_BEST in self.models and not self.kernels:
            raise ConfigError("adaptive_best needs a non-empty kernel list")

    def cells(self):
        out = []
        for fid in self.functions:
            for seed in self.seeds:
                for k in self.kernels:
                    out.append((fid, "rbf_kan", k, seed))
                for m in self.models:
                    if m not in (ADAPTIVE_BEST, "rbf_kan"):
                        out.append((fid, m, "GA", seed))
        return out


def _run_cell(args):
    base, fid, kind, kernel, seed, run_dir = args
    cfg = base.with_overrides(function=fid, model_kind=kind, kernel=kernel, seed=seed, output_dir=None)
    row = {
        "function": fid, "method": kind, "kernel": kernel if kind in ("rbf_kan", "fastkan_fixed") else "",
        "seed": seed, "architecture": str(list(cfg.model_config().widths)),
        "h_init": None, "h_final": None, "rel_l2": None, "time_s": None, "status": "ok",
    }
    try:
        rep = run_train(cfg, run_dir, write=run_dir is not None)
    except NumericalDivergenceError as exc:
        row["status"] = "diverged"
        log.warning("cell %s/%s/%s/%d diverged: %s", fid, kind, kernel, seed, exc)
        return row
    except (RbfKanError, ArithmeticError, ValueError) as exc:
        row["status"] = f"failed: {type(exc).__name__}"
        log.warning("cell %s/%s/%s/%d failed: %s", fid, kind, kernel, seed, exc)
        return row
    row.update(h_init=rep.h_init, h_final=rep.h_final, rel_l2=rep.rel_l2,
               time_s=round(rep.loocv_seconds + rep.train_seconds, 3))
    return row


def run_matrix(spec: MatrixSpec, base: ExperimentConfig, out_dir=None, jobs: int = 1, write_runs=False):
    """Run every cell and aggregate rows; marks the best adaptive kernel per function."""
    out_dir = Path(out_dir) if out_dir else None
    tasks = []
    for fid, kind, kernel, seed in spec.cells():
        run_dir = None
        if out_dir is not None and write_runs:
            tag = kernel if kind == "rbf_kan" else kind
            run_dir = out_dir / "runs" / f"{fid}_{tag}_seed{seed}"
        tasks.append((base, fid, kind, kernel, seed, run_dir))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, tasks))
    else:
        rows = [_run_cell(t) for t in tasks]
    rows = _mark_best(rows, spec)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_matrix_csv(rows, out_dir / "matrix.csv")
        _write_json(out_dir / "matrix.json", {"schema": MATRIX_SCHEMA, "rows": _json_rows(rows)})
    return rows


def _median_error(rows):
    errs = [r["rel_l2"] for r in rows if r["rel_l2"] is not None]
    return float(np.median(errs)) if errs else math.inf


def _mark_best(rows, spec):
    out = [dict(r, best="") for r in rows]
    for fid in spec.functions:
        adaptive = [r for r in out if r["function"] == fid and r["method"] == "rbf_kan"]
        if not adaptive:
            continue
        by_kernel = {}
        for r in adaptive:
            by_kernel.setdefault(r["kernel"], []).append(r)
        best = min(by_kernel, key=lambda k: (_median_error(by_kernel[k]), KERNEL_NAMES.index(k)))
        for r in by_kernel[best]:
            r["best"] = "*"
        if ADAPTIVE_BEST in spec.models:
            for r in by_kernel[best]:
                out.append(dict(r, method=ADAPTIVE_BEST, best=""))
    return out


def _json_rows(rows):
    return [{k: r.get(k) for k in MATRIX_COLUMNS} for r in rows]


def write_matrix_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MATRIX_COLUMNS)
        for r in rows:
            w.writerow(["" if r.get(c) is None else (repr(r[c]) if isinstance(r[c], float) else r[c])
                        for c in MATRIX_COLUMNS])


def matrix_spec_from_mapping(data: dict) -> MatrixSpec:
    m = data.get("matrix")
    if not isinstance(m, dict):
        raise ConfigError("matrix config needs a [matrix] table")
    unknown = set(m) - {"functions", "kernels", "models", "seeds"}
    if unknown:
        raise ConfigError(f"unknown keys in [matrix]: {', '.join(sorted(unknown))}")
    return MatrixSpec(
        functions=m.get("functions", FUNCTION_IDS),
        kernels=m.get("kernels", ()),
        models=m.get("models", ()),
        seeds=m.get("seeds", (0,)),
    )
