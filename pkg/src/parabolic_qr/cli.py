"""Experiment driver: generate data, add noise, invert, write CSV and a report.

Configuration is a JSON object; every key is optional and unknown keys are
rejected.  ``parabolic-qr defaults`` prints the complete default config.

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import platform
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .cip import UPDATE_RULES, CipIterationError, CipProblem, cip_iterate, default_boundary, default_initial, generate_cip_data
from .errors import ConfigurationError, DataError, DomainError, PreconditionError, SolverError
from .fields import SpatialField, sample, time_derivative, write_boundary_csv, write_spatial_csv
from .forward import SCHEMES, generate_data
from .grid import GridSpec
from .noise import NoiseSpec, apply_noise
from .phantoms import PHANTOM_NAMES, eval_c_background, eval_f, get_phantom, metric_extreme_errors
from .qr_solver import QrProblem, assemble_system, solve_qr
from .sparse import write_matrix_market

__all__ = ["DEFAULT_CONFIG", "CONFIG_SCHEMA", "load_config", "resolve_config", "run", "main"]

log = logging.getLogger("parabolic_qr")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3

DEFAULT_CONFIG = {
    "grid": {"R": 1.0, "nx": 100, "nt": 60, "T": 0.2},
    "test": "test1",
    "parameters": None,
    "test2_scaled": True,
    "mode": None,
    "delta": 0.0,
    "seed": 0,
    "epsilon": 1e-8,
    "refinement": 2,
    "scheme": "crank-nicolson",
    "solver": "direct",
    "weighted_gram": False,
    "n_star": 20,
    "c0": 1.0,
    "update_rule": "background",
    "forward_refinement": 1,
    "write_data": False,
    "dump_matrix": False,
    "output": "run_output",
}

_num = {"type": "number"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "R": {"type": "number", "exclusiveMinimum": 0},
                "nx": {"type": "integer", "minimum": 2},
                "nt": {"type": "integer", "minimum": 2},
                "T": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "test": {"enum": list(PHANTOM_NAMES)},
        "parameters": {"type": ["object", "null"]},
        "test2_scaled": {"type": "boolean"},
        "mode": {"enum": ["inverse_source", "coefficient", None]},
        "delta": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "refinement": {"type": "integer", "minimum": 1},
        "scheme": {"enum": sorted(SCHEMES)},
        "solver": {"enum": ["direct", "cg"]},
        "weighted_gram": {"type": "boolean"},
        "n_star": {"type": "integer", "minimum": 1},
        "c0": _num,
        "update_rule": {"enum": list(UPDATE_RULES)},
        "forward_refinement": {"type": "integer", "minimum": 1},
        "write_data": {"type": "boolean"},
        "dump_matrix": {"type": "boolean"},
        "output": {"type": "string", "minLength": 1},
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def resolve_config(user: dict | None = None) -> dict:
    """Validate ``user`` against the schema and fill in defaults."""
    user = {} if user is None else user
    try:
        jsonschema.validate(user, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"invalid config at {where}: {exc.message}") from None
    cfg = _merge(DEFAULT_CONFIG, user)
    phantom = get_phantom(cfg["test"], cfg["test2_scaled"], cfg["parameters"])
    mode = "inverse_source" if phantom.kind == "source" else "coefficient"
    if cfg["mode"] is None:
        cfg["mode"] = mode
    elif cfg["mode"] != mode:
        raise ConfigurationError(f"test {cfg['test']!r} is a {phantom.kind} phantom; mode {cfg['mode']!r} does not apply")
    return cfg


def load_config(path) -> dict:
    """Read a JSON config file (I/O errors propagate as ``OSError``)."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from None


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_gamma(out: Path, series) -> None:
    gamma = series.l2_norm_in_space()
    _write_rows(out / "gamma.csv", ["t", "gamma"], zip(series.spec.t, gamma))


def _metric_rows(comp: SpatialField, true: SpatialField, regions, delta: float):
    rows = [(r["inclusion"], delta, r["extreme_true"], r["extreme_comp"], r["err_rel"])
            for r in metric_extreme_errors(comp, regions)]
    t_max, c_max = float(np.max(np.asarray(true))), float(np.max(np.asarray(comp)))
    rows.append(("max", delta, t_max, c_max, abs(c_max - t_max) / abs(t_max) if t_max else float("nan")))
    return rows


def _l2(spec: GridSpec, a) -> float:
    return float(np.sqrt(spec.dx**2 * np.sum(np.asarray(a, dtype=float) ** 2)))


def _run_source(cfg: dict, spec: GridSpec, phantom, out: Path, report: dict) -> None:
    t0 = time.perf_counter()
    clean = generate_data(phantom.fn, eval_f, eval_c_background, spec,
                          refinement=cfg["refinement"], scheme=cfg["scheme"])
    data = apply_noise(clean, NoiseSpec(cfg["delta"], cfg["seed"]))
    report["timings"]["data_seconds"] = time.perf_counter() - t0

    problem = QrProblem(spec, sample(eval_c_background, spec), sample(eval_f, spec, space_time=True),
                        data, cfg["epsilon"], weighted_gram=cfg["weighted_gram"], solver=cfg["solver"])
    if cfg["dump_matrix"]:
        write_matrix_market(out / "gram_matrix.mtx", assemble_system(problem).A)
    sol = solve_qr(problem)
    report["qr"] = sol.report

    p_true = sample(phantom.fn, spec)
    write_spatial_csv(out / "p_true.csv", p_true)
    write_spatial_csv(out / "p_comp.csv", sol.p)
    if cfg["write_data"]:
        write_boundary_csv(out / "data_gt.csv", data)
    _write_gamma(out, data)
    rows = _metric_rows(sol.p, p_true, phantom.regions, cfg["delta"])
    _write_rows(out / "metrics.csv", ["inclusion", "delta", "extreme_true", "extreme_comp", "err_rel"], rows)
    err = np.asarray(sol.p) - np.asarray(p_true)
    report["summary"] = {
        "max_p_true": float(np.max(np.asarray(p_true))),
        "max_p_comp": float(np.max(np.asarray(sol.p))),
        "l2_relative_error": _l2(spec, err) / _l2(spec, p_true) if _l2(spec, p_true) else None,
    }


def _run_coefficient(cfg: dict, spec: GridSpec, phantom, out: Path, report: dict) -> None:
    t0 = time.perf_counter()
    F = generate_cip_data(phantom.fn, spec, refinement=cfg["refinement"], scheme=cfg["scheme"])
    report["timings"]["data_seconds"] = time.perf_counter() - t0

    problem = CipProblem(spec, default_initial, default_boundary, F, c0=cfg["c0"], n_star=cfg["n_star"],
                         epsilon=cfg["epsilon"], noise=NoiseSpec(cfg["delta"], cfg["seed"]),
                         update_rule=cfg["update_rule"], keep_history=True,
                         weighted_gram=cfg["weighted_gram"], forward_refinement=cfg["forward_refinement"])
    state = cip_iterate(problem)
    report["cip"] = {"iterations": state.n, "qr_reports": state.reports}

    c_true = sample(phantom.fn, spec)
    write_spatial_csv(out / "c_true.csv", c_true)
    width = max(2, len(str(state.n)))
    for n, c in enumerate(state.c_history[1:], start=1):
        write_spatial_csv(out / f"c_{n:0{width}d}.csv", c)
    _write_rows(out / "e_n.csv", ["n", "e_n", "residual_norm", "forward_change"],
                zip(range(1, state.n + 1), state.e_history, state.residual_norms or [float("nan")] * state.n,
                    state.forward_changes))
    noisy = apply_noise(F, problem.noise)
    if cfg["write_data"]:
        write_boundary_csv(out / "data_F.csv", noisy)
    _write_gamma(out, time_derivative(noisy))
    rows = _metric_rows(state.c_n, c_true, phantom.regions, cfg["delta"])
    _write_rows(out / "metrics.csv", ["inclusion", "delta", "extreme_true", "extreme_comp", "err_rel"], rows)
    report["summary"] = {
        "max_c_true": float(np.max(np.asarray(c_true))),
        "max_c_comp": float(np.max(np.asarray(state.c_n))),
        "l2_errors": [_l2(spec, np.asarray(c) - np.asarray(c_true)) for c in state.c_history],
        "e_n": state.e_history,
    }


def _diagnostic(stage: str, exc: BaseException) -> None:
    print(json.dumps({"status": "error", "stage": stage, "error": type(exc).__name__, "message": str(exc)}),
          file=sys.stderr)


def run(config: dict) -> int:
    """Run one experiment described by a (possibly partial) config dict.

    Returns the process exit status; artifacts go to ``config["output"]``.
    """
    stage = "config"
    try:
        cfg = resolve_config(config)
        g = cfg["grid"]
        spec = GridSpec(g["R"], g["nx"], g["nt"], g["T"])
        phantom = get_phantom(cfg["test"], cfg["test2_scaled"], cfg["parameters"])
        stage = "output"
        out = Path(cfg["output"])
        out.mkdir(parents=True, exist_ok=True)
        report = {"version": __version__, "config": cfg, "timings": {},
                  "platform": {"python": platform.python_version(), "numpy": np.__version__,
                               "scipy": scipy.__version__}}
        stage = "solve"
        t0 = time.perf_counter()
        if cfg["mode"] == "inverse_source":
            _run_source(cfg, spec, phantom, out, report)
        else:
            _run_coefficient(cfg, spec, phantom, out, report)
        report["timings"]["total_seconds"] = time.perf_counter() - t0
        stage = "output"
        (out / "run_report.json").write_text(json.dumps(report, indent=2, default=float) + "\n")
    except ConfigurationError as exc:
        _diagnostic(stage, exc)
        return EXIT_CONFIG
    except OSError as exc:
        _diagnostic(stage, exc)
        return EXIT_IO
    except (SolverError, CipIterationError, PreconditionError, DomainError, DataError, MemoryError) as exc:
        _diagnostic(stage, exc)
        return EXIT_SOLVER
    log.info("wrote results to %s", out)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="parabolic-qr", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    ap.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("config", nargs="?", help="JSON config file (defaults used when omitted)")
    r.add_argument("--test", choices=PHANTOM_NAMES)
    r.add_argument("--delta", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--epsilon", type=float)
    r.add_argument("--nx", type=int)
    r.add_argument("--nt", type=int)
    r.add_argument("--R", type=float)
    r.add_argument("--T", type=float)
    r.add_argument("--n-star", type=int, dest="n_star")
    r.add_argument("-o", "--output")

    sub.add_parser("defaults", help="print the default config as JSON")

    p = sub.add_parser("phantom", help="export a phantom on a grid as CSV")
    p.add_argument("name", choices=[n for n in PHANTOM_NAMES if n != "custom"])
    p.add_argument("--nx", type=int, default=DEFAULT_CONFIG["grid"]["nx"])
    p.add_argument("--R", type=float, default=DEFAULT_CONFIG["grid"]["R"])
    p.add_argument("-o", "--output", required=True)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    level = logging.ERROR if args.quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "defaults":
        print(json.dumps(DEFAULT_CONFIG, indent=2))
        return EXIT_OK
    if args.command == "phantom":
        try:
            spec = GridSpec(args.R, args.nx, 2, 1.0)
            write_spatial_csv(args.output, sample(get_phantom(args.name).fn, spec))
        except ConfigurationError as exc:
            _diagnostic("config", exc)
            return EXIT_CONFIG
        except OSError as exc:
            _diagnostic("output", exc)
            return EXIT_IO
        return EXIT_OK

    try:
        user = load_config(args.config) if args.config else {}
    except ConfigurationError as exc:
        _diagnostic("config", exc)
        return EXIT_CONFIG
    except OSError as exc:
        _diagnostic("config", exc)
        return EXIT_IO
    if not isinstance(user, dict):
        _diagnostic("config", ConfigurationError("config must be a JSON object"))
        return EXIT_CONFIG
    for key in ("test", "delta", "seed", "epsilon", "n_star", "output"):
        val = getattr(args, key)
        if val is not None:
            user[key] = val
    for key in ("R", "nx", "nt", "T"):
        val = getattr(args, key)
        if val is not None:
            user.setdefault("grid", {})[key] = val
    return run(user)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
