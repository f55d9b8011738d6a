"""Command-line front end: one subcommand per experiment.

    qpiston interaction-map --sigma 0.5 --output map.csv
    qpiston adiabaticity --sigma 0.25 --output adiabatic.csv
    qpiston run-bath --sigma 0.5 --tau-p 10 --output bath.csv
    qpiston run-measurement --config measurement.yaml --cutoff 21
    qpiston sweep --config sweep.yaml

Config files (YAML or JSON) hold the same keys as the flags, with flags
taking precedence. Every output starts with a manifest of the resolved
configuration so the experiment can be re-run from the file alone.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure.
"""

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .engine import (ADVANCES, BATH, CONTACTS, MEASUREMENT, RECORD_FIELDS, STEADY_TOL,
                     STEADY_WINDOW, adiabaticity_scan, build_assets, engine_theoretical_efficiency,
                     run_engine)
from .errors import QPistonError
from .model import EngineParams
from .thermo import LEAK_ERROR, interaction_energy_map

EXPERIMENTS = ("interaction-map", "adiabaticity", "run-bath", "run-measurement", "sweep")
FORMATS = ("csv", "json")
OUTPUT_DIR_ENV = "QPISTON_OUTPUT_DIR"

PARAM_KEYS = tuple(f.name for f in fields(EngineParams))
DEFAULT_TAU_P_VALUES = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
DEFAULT_OMEGA_GRID = tuple(round(0.1 * k, 10) for k in range(1, 51))
DEFAULT_Y_GRID = tuple(0.5 * k for k in range(21))

MAP_COLUMNS = ("omega_T", "y_over_sigma", "energy")
ADIABATIC_COLUMNS = ("tau_p", "final_energy", "adiabatic_bound", "sudden_bound", "direction")
SUMMARY_KEYS = ("steady_state_index", "steady", "averaged_from", "mean_efficiency",
                "cumulative_efficiency", "mean_power", "mean_net_work", "mean_q_in",
                "mean_q_out", "theoretical_efficiency")


class ConfigError(QPistonError, ValueError):
    """Invalid or incomplete run configuration."""


@dataclass
class RunConfig:
    experiment: str
    params: EngineParams = None
    output_path: Path = None
    output_format: str = "csv"
    n_cycles: int = 80
    dtau: float = 1e-3
    omega_grid: tuple = DEFAULT_OMEGA_GRID
    y_over_sigma_grid: tuple = DEFAULT_Y_GRID
    tau_p_values: tuple = DEFAULT_TAU_P_VALUES
    directions: tuple = ("retract", "advance")
    window: int = STEADY_WINDOW
    tol: float = STEADY_TOL
    leak_error: float = LEAK_ERROR
    bath_contact: str = "retracted"
    advance: str = "adjoint"
    mode: str = BATH
    sweep: dict = field(default_factory=dict)
    workers: int = 1
    # explicitly given engine parameters; sweep points are built from these
    param_inputs: dict = field(default_factory=dict)


RUN_KEYS = tuple(f.name for f in fields(RunConfig) if f.name not in ("params", "param_inputs"))


def _positive(name, value, integer=False):
    try:
        v = int(value) if integer else float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if integer and v != float(value):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if not v > 0 or not math.isfinite(v):
        raise ConfigError(f"{name}: must be positive, got {value!r}")
    return v


def _float_list(name, values, positive=False):
    if isinstance(values, (int, float)):
        values = [values]
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a list of numbers, got {values!r}") from None
    if not out:
        raise ConfigError(f"{name}: must be non-empty")
    if positive and any(not v > 0 for v in out):
        raise ConfigError(f"{name}: every entry must be positive")
    return out


def _param_inputs(raw):
    return {k: raw[k] for k in PARAM_KEYS if k in raw and raw[k] is not None}


def _build_params(raw, required=True):
    if "sigma" not in raw:
        if required:
            raise ConfigError("sigma: missing required parameter")
        return None
    kwargs = {}
    for key in PARAM_KEYS:
        if key in raw and raw[key] is not None:
            value = raw[key]
            if key == "cutoff":
                kwargs[key] = _positive(key, value, integer=True)
            else:
                try:
                    kwargs[key] = float(value)
                except (TypeError, ValueError):
                    raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    try:
        return EngineParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config_file(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config: file {path} does not exist")
    text = path.read_text()
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config: {path} must contain a mapping")
    return data


def parse_config(source=None, **overrides):
    """Validate a configuration mapping (or file) into a ``RunConfig``.

    ``source`` is a dict, a path to a YAML/JSON file, or None. Keyword
    overrides win over the source; ``None`` overrides are ignored. Engine
    parameters may sit at the top level or under ``params``.
    """
    if source is None:
        raw = {}
    elif isinstance(source, dict):
        raw = dict(source)
    else:
        raw = load_config_file(source)
    nested = raw.pop("params", None) or {}
    if not isinstance(nested, dict):
        raise ConfigError("params: must be a mapping")
    raw = {**nested, **raw}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    raw = {k.replace("-", "_"): v for k, v in raw.items()}

    unknown = sorted(set(raw) - set(PARAM_KEYS) - set(RUN_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")

    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: expected one of {EXPERIMENTS}, got {experiment!r}")

    sweep = raw.get("sweep") or {}
    if not isinstance(sweep, dict):
        raise ConfigError("sweep: must map parameter names to lists of values")
    for key, values in sweep.items():
        if key not in PARAM_KEYS:
            raise ConfigError(f"sweep: unknown parameter {key!r}")
        _float_list(f"sweep.{key}", values)
    if experiment == "sweep" and not sweep:
        raise ConfigError("sweep: a sweep experiment needs at least one parameter list")

    params = _build_params(raw, required=not (experiment == "sweep" and "sigma" in sweep))
    inputs = _param_inputs(raw)
    if experiment == "sweep":
        for point in _sweep_grid(inputs, sweep):
            _build_params(point)
    else:
        inputs = params.as_dict()

    fmt = raw.get("output_format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"output_format: expected one of {FORMATS}, got {fmt!r}")
    mode = raw.get("mode", BATH)
    if experiment == "run-bath":
        mode = BATH
    elif experiment == "run-measurement":
        mode = MEASUREMENT
    if mode not in (BATH, MEASUREMENT):
        raise ConfigError(f"mode: expected 'bath' or 'measurement', got {mode!r}")
    directions = raw.get("directions", ("retract", "advance"))
    if isinstance(directions, str):
        directions = (directions,)
    if not directions or any(d not in ("retract", "advance") for d in directions):
        raise ConfigError(f"directions: expected 'retract' and/or 'advance', got {directions!r}")
    bath_contact = raw.get("bath_contact", "retracted")
    if bath_contact not in CONTACTS:
        raise ConfigError(f"bath_contact: expected one of {CONTACTS}, got {bath_contact!r}")
    advance = raw.get("advance", "adjoint")
    if advance not in ADVANCES:
        raise ConfigError(f"advance: expected one of {ADVANCES}, got {advance!r}")
    leak = raw.get("leak_error", LEAK_ERROR)
    leak = None if leak is None or leak == "none" else _positive("leak_error", leak)

    output = raw.get("output_path")
    if output is None:
        suffix = "json" if fmt == "json" else "csv"
        output = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / f"{experiment}.{suffix}"

    return RunConfig(
        experiment=experiment,
        params=params,
        output_path=Path(output),
        output_format=fmt,
        n_cycles=_positive("n_cycles", raw.get("n_cycles", 80), integer=True),
        dtau=_positive("dtau", raw.get("dtau", 1e-3)),
        omega_grid=_float_list("omega_grid", raw.get("omega_grid", DEFAULT_OMEGA_GRID), True),
        y_over_sigma_grid=_float_list("y_over_sigma_grid",
                                      raw.get("y_over_sigma_grid", DEFAULT_Y_GRID)),
        tau_p_values=_float_list("tau_p_values", raw.get("tau_p_values", DEFAULT_TAU_P_VALUES),
                                 True),
        directions=tuple(directions),
        window=_positive("window", raw.get("window", STEADY_WINDOW), integer=True),
        tol=_positive("tol", raw.get("tol", STEADY_TOL)),
        leak_error=leak,
        bath_contact=bath_contact,
        advance=advance,
        mode=mode,
        sweep={k: list(_float_list(k, v)) for k, v in sweep.items()},
        workers=_positive("workers", raw.get("workers", 1), integer=True),
        param_inputs=inputs,
    )


def serialize_config(config):
    """Plain mapping that ``parse_config`` turns back into ``config``."""
    out = {"experiment": config.experiment}
    if config.experiment == "sweep":
        # resolved defaults such as y_retracted depend on the swept values
        out.update(config.param_inputs)
    elif config.params is not None:
        out.update(config.params.as_dict())
    for key in RUN_KEYS:
        if key == "experiment":
            continue
        value = getattr(config, key)
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def _manifest(config):
    return {"qpiston_version": __version__, "config": serialize_config(config)}


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _csv_text(columns, rows, manifest):
    buf = io.StringIO()
    buf.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(payload):
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write_all(files):
    """Write ``{path: text}``; on failure remove whatever was written."""
    written = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.name + ".part")
            tmp.write_text(text)
            written.append(tmp)
        for tmp in written:
            tmp.replace(tmp.with_name(tmp.name[:-len(".part")]))
    except BaseException:
        for tmp in written:
            tmp.unlink(missing_ok=True)
        raise
    return list(files)


def _summary_path(path):
    return path.with_name(path.stem + ".summary.json")


def _interaction_map(config):
    p = config.params
    ys = np.asarray(config.y_over_sigma_grid) * p.sigma
    energies = interaction_energy_map(p, config.omega_grid, ys, leak_error=config.leak_error)
    rows = [(w, r, float(energies[i, k]))
            for i, w in enumerate(config.omega_grid)
            for k, r in enumerate(config.y_over_sigma_grid)]
    return MAP_COLUMNS, rows


def _adiabaticity(config):
    rows = []
    for direction in config.directions:
        scan = adiabaticity_scan(config.params, config.tau_p_values, direction, config.dtau)
        rows.extend(scan.rows())
    return ADIABATIC_COLUMNS, rows


def _engine_summary(config, params, run):
    summary = run.summary(config.window, config.tol)
    try:
        summary["theoretical_efficiency"] = engine_theoretical_efficiency(
            params, leak_error=config.leak_error).exact
    except QPistonError:
        summary["theoretical_efficiency"] = None
    return summary


def _run_engine(config, params):
    assets = build_assets(params, config.mode, config.dtau, bath_contact=config.bath_contact,
                          advance=config.advance, leak_error=config.leak_error)
    run = run_engine(params, config.mode, config.n_cycles, assets=assets,
                     leak_error=config.leak_error)
    return run, _engine_summary(config, params, run)


def _sweep_grid(inputs, sweep):
    keys = sorted(sweep)
    for values in itertools.product(*(sweep[k] for k in keys)):
        point = dict(inputs)
        point.update(zip(keys, values))
        yield point


def _sweep_points(config):
    keys = sorted(config.sweep)
    for point in _sweep_grid(config.param_inputs, config.sweep):
        yield {k: point[k] for k in keys}, _build_params(point)


def _sweep_worker(args):
    config, params = args
    run, summary = _run_engine(config, params)
    return [r.as_dict() for r in run.records], summary


def execute(config):
    """Run ``config`` and write its output files; returns the written paths."""
    manifest = _manifest(config)
    path = Path(config.output_path)
    exp = config.experiment
    if exp in ("interaction-map", "adiabaticity"):
        columns, rows = (_interaction_map if exp == "interaction-map" else _adiabaticity)(config)
        if config.output_format == "csv":
            text = _csv_text(columns, rows, manifest)
        else:
            text = _json_text({"manifest": manifest,
                               "rows": [dict(zip(columns, r)) for r in rows]})
        return _write_all({path: text})

    if exp in ("run-bath", "run-measurement"):
        run, summary = _run_engine(config, config.params)
        records = [[getattr(r, k) for k in RECORD_FIELDS] for r in run.records]
        if config.output_format == "csv":
            return _write_all({
                path: _csv_text(RECORD_FIELDS, records, manifest),
                _summary_path(path): _json_text({"manifest": manifest, "summary": summary}),
            })
        return _write_all({path: _json_text({
            "manifest": manifest, "summary": summary,
            "records": [r.as_dict() for r in run.records]})})

    points = list(_sweep_points(config))
    jobs = [(config, params) for _, params in points]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]
    keys = sorted(config.sweep)
    columns = tuple(keys) + SUMMARY_KEYS
    rows = [tuple(point[k] for k in keys) + tuple(summary[k] for k in SUMMARY_KEYS)
            for (point, _), (_, summary) in zip(points, results)]
    files = {}
    for i, (point, _) in enumerate(points):
        records = [[rec[k] for k in RECORD_FIELDS] for rec in results[i][0]]
        point_manifest = dict(manifest, sweep_point=point)
        files[path.with_name(f"{path.stem}.{i:03d}.records.csv")] = _csv_text(
            RECORD_FIELDS, records, point_manifest)
    if config.output_format == "csv":
        files[path] = _csv_text(columns, rows, manifest)
    else:
        files[path] = _json_text({"manifest": manifest,
                                  "rows": [dict(zip(columns, r)) for r in rows]})
    return _write_all(files)


def build_parser():
    parser = argparse.ArgumentParser(prog="qpiston", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML or JSON config file")
        p.add_argument("--output", dest="output_path")
        p.add_argument("--format", dest="output_format", choices=FORMATS)
        p.add_argument("--cutoff", type=int, help="Fock-space cutoff N")
        p.add_argument("--dtau", type=float, help="RK5 step in oscillator periods")
        p.add_argument("--cycles", dest="n_cycles", type=int)
        p.add_argument("--sigma", type=float)
        p.add_argument("--tau-p", dest="tau_p", type=float)
        p.add_argument("--tau-b", dest="tau_b", type=float)
        p.add_argument("--phi0", type=float)
        p.add_argument("--omega-hot", dest="omega_hot", type=float)
        p.add_argument("--omega-cold", dest="omega_cold", type=float)
        p.add_argument("--y-amp", dest="y_amp", type=float)
        p.add_argument("--bath-contact", dest="bath_contact", choices=CONTACTS,
                       help="piston position used for the bath contact unitary")
        p.add_argument("--advance", choices=ADVANCES,
                       help="run the retraction backwards (default) or integrate the advance stroke")
        p.add_argument("--leak-error", dest="leak_error",
                       help="top-state population that aborts a run, or 'none'")
        p.add_argument("--workers", type=int)
        if name == "sweep":
            p.add_argument("--mode", choices=(BATH, MEASUREMENT))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        config = parse_config(args.config, **overrides)
    except ConfigError as exc:
        print(f"qpiston: invalid configuration: {exc}", file=sys.stderr)
        return 1
    try:
        written = execute(config)
    except ConfigError as exc:
        print(f"qpiston: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except (QPistonError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"qpiston: numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qpiston: could not write output: {exc}", file=sys.stderr)
        return 2
    for p in written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
