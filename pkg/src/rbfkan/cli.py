"""Command-line entry point: ``rbfkan {loocv,train,matrix,eval,export-grid}``.

Configuration comes from an optional TOML file; ``--set section.key=value``
and the dedicated flags override it.  Exit codes: 0 success, 2 bad
configuration, 3 numerical failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .benchmarks import reconstruct_surface
from .errors import DegenerateDataError, DomainError, NumericalDivergenceError, NumericalRankError, SearchFailedError
from .loocv import search_h

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("rbfkan")


def _common(p):
    p.add_argument("-c", "--config", help="TOML experiment file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. train.epochs=500 (repeatable)")
    p.add_argument("-o", "--output-dir", help=f"output directory (default under ${ex.OUTPUT_ROOT_ENV} or ./runs)")


def _run_flags(p):
    p.add_argument("--function", choices=("f1", "f2", "f3", "f4"))
    p.add_argument("--kernel")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbfkan", description="Adaptive RBF-KAN experiments: LOOCV, training, matrices.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("loocv", help="two-stage LOOCV search for the initial shape parameter")
    _common(p)
    _run_flags(p)
    p.add_argument("--points", help="CSV with columns x,y (1D points and targets) instead of a benchmark")

    p = sub.add_parser("train", help="train one model and write report, model, history and surface")
    _common(p)
    _run_flags(p)
    p.add_argument("--model", choices=ex.MODEL_KINDS)

    p = sub.add_parser("matrix", help="run a functions x kernels/models matrix")
    _common(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--keep-runs", action="store_true", help="write per-cell artifacts too")

    p = sub.add_parser("eval", help="evaluate a saved model on CSV points")
    p.add_argument("model", help="model.json written by train")
    p.add_argument("points", help="CSV with columns x,y (further columns ignored)")
    p.add_argument("-o", "--output", help="output CSV (default: stdout)")

    p = sub.add_parser("export-grid", help="evaluate a saved model on a uniform grid")
    p.add_argument("model")
    p.add_argument("--function", required=True, choices=("f1", "f2", "f3", "f4"))
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("-o", "--output", required=True)
    return parser


def _load_cfg(args, **extra):
    overrides = list(args.overrides)
    for flag, key in (("function", "function"), ("kernel", "kernel"), ("seed", "seed"),
                      ("epochs", "train.epochs"), ("model", "model_kind")):
        val = getattr(args, flag, None)
        if val is not None:
            overrides.append(f"{key}={val}" if not isinstance(val, str) else f'{key}="{val}"')
    cfg = ex.load_config(args.config, overrides)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    return cfg


def _read_points(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "x" not in rows[0] or "y" not in rows[0]:
        raise ex.ConfigError(f"{path}: expected a header with columns x,y")
    try:
        return np.array([[float(r["x"]), float(r["y"])] for r in rows])
    except (TypeError, ValueError):
        raise ex.ConfigError(f"{path}: non-numeric x,y entry") from None


def cmd_loocv(args) -> int:
    cfg = _load_cfg(args)
    out = Path(cfg.output_dir or ex.output_root() / f"loocv_{cfg.function}_{cfg.kernel}_seed{cfg.seed}")
    out.mkdir(parents=True, exist_ok=True)
    if args.points:
        pts = _read_points(args.points)
        result = search_h(pts[:, 0], pts[:, 1], cfg.kernel, cfg.loocv_config())
    else:
        result = ex.run_loocv(cfg)
    ex.write_loocv(result, out, cfg.kernel)
    print(f"h_opt={result.h_opt!r} err_min={result.err_min!r} -> {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    rep = ex.run_train(cfg)
    h = "" if rep.h_final is None else f" h_init={rep.h_init:.4g} h_final={rep.h_final:.4g}"
    print(f"{cfg.function}/{cfg.model_kind}/{cfg.kernel}: rel_l2={rep.rel_l2:.4e}{h}")
    return EXIT_OK


def cmd_matrix(args) -> int:
    data = ex.load_toml(args.config) if args.config else {}
    spec = ex.matrix_spec_from_mapping(data)
    base_data = {k: v for k, v in data.items() if k != "matrix"}
    base = ex.config_from_mapping(base_data, args.overrides)
    out = Path(args.output_dir or base.output_dir or ex.output_root() / "matrix")
    rows = ex.run_matrix(spec, base, out, jobs=args.jobs, write_runs=args.keep_runs)
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} rows ({failed} failed) -> {out / 'matrix.csv'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = ex.load_model(args.model)
    pts = _read_points(args.points)
    pred = model.predict(pts)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z_pred"])
        for (x, y), z in zip(pts, pred):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(z))])
    finally:
        if args.output:
            fh.close()
    return EXIT_OK


def cmd_export_grid(args) -> int:
    model = ex.load_model(args.model)
    grid = reconstruct_surface(model, args.function, args.resolution)
    grid.to_csv(args.output)
    print(f"grid rel_l2={grid.rel_l2:.4e} -> {args.output}")
    return EXIT_OK


COMMANDS = {
    "loocv": cmd_loocv,
    "train": cmd_train,
    "matrix": cmd_matrix,
    "eval": cmd_eval,
    "export-grid": cmd_export_grid,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ex.ConfigError, DomainError, DegenerateDataError) as exc:
        print(f"rbfkan: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalDivergenceError, SearchFailedError, NumericalRankError) as exc:
        print(f"rbfkan: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"rbfkan: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
