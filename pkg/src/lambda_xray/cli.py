"""``lambda-xray <op> --config <path> [--out <dir>]``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import OPERATIONS, ExperimentConfig, load_config, with_op
from .conjugate import Covector, conjugate_chain
from .curves import UnitCircle, conjugate_locus
from .errors import ChartError, ConfigError, GridFormatError, NumericalError
from .grid import square_grid
from .io import read_grid, write_csv, write_grid, write_image, write_json
from .phantoms import generate
from .reconstruction import (analytic_backprojection, backproject, filtered_backproject, landweber,
                             relative_error)
from .transform import adjoint, forward

__all__ = ["main", "run_experiment"]

log = logging.getLogger("lambda_xray")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _input_grid(cfg: ExperimentConfig, like):
    if cfg.input is None:
        return generate(cfg.phantom, like), "phantom"
    path = Path(cfg.input)
    if not path.is_file():
        raise ConfigError(f"input grid {cfg.input} does not exist", key="grid")
    return read_grid(path), str(path)


def _weight(cfg):
    return None if cfg.weight == 1.0 else cfg.weight


def _save_grid(out: Path, prefix: str, g, meta, name="result"):
    write_grid(g, out / f"{prefix}.gfd")
    write_image(g, out / f"{prefix}.pgm")
    meta.setdefault("files", {})[name] = [f"{prefix}.gfd", f"{prefix}.pgm"]


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Run ``cfg.op`` and write its artifacts; returns the metadata dict.

    Always writes ``<prefix>.json`` with the config echo, wall time and any
    relative errors.
    """
    if cfg.op is None:
        raise ConfigError("no operation given", key="op")
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    family = cfg.family_object()
    like = square_grid(cfg.N, cfg.L)
    meta = {"op": cfg.op, "config": cfg.echo(), "version": __version__, "errors": {}}
    t0 = time.perf_counter()
    p = cfg.prefix
    op = cfg.op
    w = _weight(cfg)

    if op in ("forward", "adjoint", "backproject", "fbp"):
        f, source = _input_grid(cfg, like)
        meta["input"] = source
        if op == "forward":
            res = forward(f, family, w, cfg.n_quad)
        elif op == "adjoint":
            res = adjoint(f, family, w, cfg.n_quad)
        elif op == "backproject":
            res = backproject(f, family, w, cfg.n_quad)
            if isinstance(family, UnitCircle) and family.orientation == 1 and w is None:
                oracle = analytic_backprojection(f)
                meta["errors"]["relative_error_vs_analytic"] = relative_error(res, oracle)
                _save_grid(out, f"{p}_analytic", oracle, meta, "analytic")
        else:
            res = filtered_backproject(f, family, w, cfg.n_quad)
        if source == "phantom":
            _save_grid(out, f"{p}_input", f, meta, "input")
        _save_grid(out, p, res, meta)

    elif op == "landweber":
        if cfg.input is None:
            truth = generate(cfg.phantom, like)
            data = forward(truth, family, w, cfg.n_quad)
            meta["input"] = "phantom (global data)"
            _save_grid(out, f"{p}_truth", truth, meta, "truth")
        else:
            data, meta["input"] = _input_grid(cfg, like)
            truth = None
        rep = landweber(data, cfg.landweber, family, w, truth=truth, n_quad=cfg.n_quad)
        _save_grid(out, p, rep.result, meta)
        write_csv(out / f"{p}_residuals.csv", ["k", "residual"], enumerate(rep.residual_history))
        meta["files"]["residuals"] = f"{p}_residuals.csv"
        meta["step"] = rep.step
        meta["norm_estimate"] = rep.norm_estimate
        if rep.relative_error is not None:
            meta["errors"]["relative_error"] = rep.relative_error
        if rep.residual_history:
            meta["final_residual"] = rep.residual_history[-1]

    elif op == "conjugate-locus":
        c = cfg.conjugate
        loc = conjugate_locus(family, c.base, c.n_angles, c.t_max)
        rows = [(th, t, x, y) for th, t, (x, y) in zip(loc.thetas, loc.times, loc.points)]
        write_csv(out / f"{p}_locus.csv", ["theta", "t", "x", "y"], rows)
        meta["files"] = {"locus": f"{p}_locus.csv"}
        meta["n_found"] = int(np.sum(loc.found))

    elif op == "conjugate-chain":
        c = cfg.conjugate
        chain = conjugate_chain(family, Covector(c.base, c.eta, c.mu), c.R, c.k_max)
        kmin, kmax = chain.k_range
        rows = []
        for k, x, y, eta, mu in chain.rows():
            escaped = (k == kmax and chain.escaped_positive and k > 0) or (
                k == kmin and chain.escaped_negative and k < 0)
            rows.append((k, x, y, eta, mu, escaped))
        write_csv(out / f"{p}_chain.csv", ["k", "x", "y", "eta", "mu", "escaped"], rows)
        meta["files"] = {"chain": f"{p}_chain.csv"}
        meta["escaped_positive"] = chain.escaped_positive
        meta["escaped_negative"] = chain.escaped_negative

    elif op == "compare":
        if cfg.compare_a is None or cfg.compare_b is None:
            raise ConfigError("compare needs [input] a= and b=", key="a" if cfg.compare_a is None else "b")
        for key, path in (("a", cfg.compare_a), ("b", cfg.compare_b)):
            if not Path(path).is_file():
                raise ConfigError(f"grid {path} does not exist", key=key)
        a, b = read_grid(cfg.compare_a), read_grid(cfg.compare_b)
        if not a.same_geometry(b):
            raise ConfigError(f"grids differ in geometry: {a.geometry} vs {b.geometry}", key="b")
        meta["errors"]["relative_error"] = relative_error(a, b)

    else:  # pragma: no cover - guarded by the parser
        raise ConfigError(f"unknown operation {op!r}", key="op")

    meta["wall_time_s"] = time.perf_counter() - t0
    write_json(out / f"{p}.json", meta)
    (out / f"{p}.cfg").write_text(cfg.to_text())
    return meta


def _parser():
    ap = argparse.ArgumentParser(prog="lambda-xray", description=__doc__.splitlines()[0])
    ap.add_argument("op", choices=OPERATIONS)
    ap.add_argument("--config", required=True, help="key=value experiment file")
    ap.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = with_op(load_config(args.config), args.op)
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        meta = run_experiment(cfg)
    except (ConfigError, GridFormatError) as exc:
        print(f"lambda-xray: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ChartError) as exc:
        print(f"lambda-xray: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # invariant violations detected below the parser (e.g. phantom off the grid)
        print(f"lambda-xray: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for k, v in meta.get("errors", {}).items():
        print(f"{k} = {v:.6g}")
    print(f"wrote {cfg.out_dir}/{cfg.prefix}.json ({meta['wall_time_s']:.2f} s)")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
