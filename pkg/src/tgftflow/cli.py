"""Batch command-line front-end.

Usage::

    tgftflow <subcommand> [--flag value ...] [--config FILE] [--output PATH] [--format json|csv]

Every parameter can also be given in a flat ``key = value`` config file
(``#`` starts a comment); command-line flags win over the file, the file wins
over built-in defaults.  All parameters are validated before any computation.

Exit codes: 0 success, 1 output could not be written, 2 invalid input,
3 numerical failure at a directly requested point.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .equilibrium import (CutoffTooSmall, EqState, IterationDiverged, SYSTEMS, eq_fixed_points,
                          sd_rows, sd_solve_sigma, sd_summary)
from .fixedpoint import (LeftPhysicalRegion, NoConvergence, find_fixed_point,
                         locate_fixed_points)
from .flow import FlowConfig, FlowState, SingularEta, beta_functions
from .kernels import RegulatorParams
from .portrait import (TOWARD_IR, TOWARD_UV, ImmediateTermination, integrate_trajectory,
                       region_map, region_rows)
from .quadrature import NonConvergence, QuadratureSpec, mc_oracle_integral
from .scan import CSV_COLUMNS, SeedOptions, msp_scan
from .thresholds import DomainError, component_integrands, threshold_set

SCHEMA_VERSION = 1
EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


# ------------------------------------------------------------ parameters

def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _msq(x):
    return x > -1


_COMMON = {
    "rel_tol": (float, 1e-11, _pos),
    "mu2_x_power": (int, 2, lambda v: v in (1, 2)),
    "cache": (bool, True, None),
}
_REG = {
    "alpha": (float, 1.0, _nonneg),
    "beta_hat": (float, 0.0, _nonneg),
}
_SEED = {
    "msq_min": (float, -0.9, _msq),
    "msq_max": (float, 1.0, _msq),
    "lam_min": (float, 0.0, None),
    "lam_max": (float, 0.1, None),
    "seed_grid": (int, 20, lambda v: v >= 2),
}

SCHEMAS = {
    "integrals": {**_REG, **_COMMON, "msq": (float, 0.0, _msq),
                  "mc_samples": (int, 0, lambda v: v == 0 or v >= 10**4),
                  "seed": (int, 12345, _nonneg)},
    "betas": {**_REG, **_COMMON, "msq": (float, 0.0, _msq), "lam": (float, 0.0, math.isfinite)},
    "fixed-point": {**_REG, **_COMMON, **_SEED, "guess_msq": (float, None, _msq),
                    "guess_lam": (float, None, math.isfinite)},
    "scan": {**_COMMON, **_SEED,
             "alpha_min": (float, 2.0, lambda v: 0 < v <= 10),
             "alpha_max": (float, 5.0, lambda v: 0 < v <= 10),
             "alpha_count": (int, 15, lambda v: v >= 1),
             "beta_min": (float, 0.05, lambda v: 0 <= v <= 2),
             "beta_max": (float, 0.5, lambda v: 0 <= v <= 2),
             "beta_count": (int, 10, lambda v: v >= 1),
             "workers": (int, 0, _nonneg)},
    "portrait": {**_REG, **_COMMON, "msq": (float, 0.5, _msq), "lam": (float, 0.0, math.isfinite),
                 "direction": (str, TOWARD_UV, lambda v: v in (TOWARD_UV, TOWARD_IR)),
                 "t_max": (float, 1.0, _pos), "max_samples": (int, 0, _nonneg)},
    "region-map": {**_REG, **_COMMON, "msq_min": (float, -0.5, _msq), "msq_max": (float, 1.0, _msq),
                   "lam_min": (float, 0.0, None), "lam_max": (float, 0.05, None),
                   "resolution": (int, 20, lambda v: v >= 2)},
    "equilibrium": {"system": (str, "constrained", lambda v: v in SYSTEMS),
                    "msq": (float, 0.0, _msq), "lam": (float, 0.0, math.isfinite),
                    "fixed_point_check": (bool, False, None)},
    "sd": {"lam_r": (float, 1e-3, math.isfinite), "cutoff": (int, 20, lambda v: 5 <= v <= 100),
           "damping": (float, 0.5, lambda v: 0 < v <= 1), "m_r2": (float, 1.0, _pos)},
}
DEFAULT_FORMAT = {"scan": "csv", "portrait": "csv", "region-map": "csv"}


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(key, typ, raw):
    try:
        if typ is bool:
            return raw if isinstance(raw, bool) else _parse_bool(raw)
        if typ is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if typ is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"--{key.replace('_', '-')}: invalid value {raw!r}") from None


def read_config_file(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc.strerror}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"--config: {path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def resolve_config(command, cli_values, file_values=None):
    """Merge defaults < file < CLI and validate every entry."""
    schema = SCHEMAS[command]
    file_values = file_values or {}
    for k in file_values:
        if k not in schema and k not in ("output", "format"):
            raise ConfigError(f"--config: unknown key {k!r} for {command}")
    cfg = {}
    for key, (typ, default, check) in schema.items():
        if cli_values.get(key) is not None:
            raw = cli_values[key]
        elif key in file_values:
            raw = file_values[key]
        else:
            raw = default
        val = None if raw is None else _convert(key, typ, raw)
        if val is not None and check is not None and not check(val):
            raise ConfigError(f"--{key.replace('_', '-')}: value {val!r} out of range")
        cfg[key] = val
    if command == "fixed-point" and (cfg["guess_msq"] is None) != (cfg["guess_lam"] is None):
        raise ConfigError("--guess-msq and --guess-lam must be given together")
    for lo, hi in (("msq_min", "msq_max"), ("lam_min", "lam_max"),
                   ("alpha_min", "alpha_max"), ("beta_min", "beta_max")):
        if lo in cfg and not cfg[lo] <= cfg[hi]:
            raise ConfigError(f"--{lo.replace('_', '-')}: must not exceed --{hi.replace('_', '-')}")
    return cfg


def build_parser():
    parser = argparse.ArgumentParser(prog="tgftflow", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"tgftflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key = value configuration file")
        p.add_argument("--output", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        for key, (typ, default, _) in schema.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, dest=key, nargs="?", const="true", default=None,
                               help=f"boolean (default {default})")
                if key == "cache":
                    p.add_argument("--no-cache", dest=key, action="store_const", const="false")
            else:
                p.add_argument(flag, dest=key, default=None, help=f"default {default}")
    return parser


# ------------------------------------------------------------ output

def provenance():
    return {"package": "tgftflow", "build": f"v{__version__}"}


def _clean(obj):
    """Convert numpy scalars/arrays and complex numbers to JSON-able values;
    non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(float(obj.real)), "im": _clean(float(obj.imag))}
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _format_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render(result, fmt, config=None, command=None):
    """Serialize a result: dict payload for JSON, list of row dicts for CSV."""
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": command, "config": config or {},
               "provenance": provenance(), "result": result}
        return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        rows = result
        if isinstance(rows, dict):
            rows = rows.get("rows")
        if not rows:
            raise ValueError("CSV output needs at least one row")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = list(rows[0].keys())
        w.writerow(header)
        for r in rows:
            w.writerow([_format_cell(r[h]) for h in header])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def _atomic_write(text, path):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".tgftflow-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def emit_results(result, fmt, path, config=None, command=None, stream=None):
    """Write ``result`` to ``path`` (or ``stream`` when path is None).

    CSV files carry only the header and records; the effective configuration
    and provenance go to a ``<path>.meta.json`` sidecar.  Files are written
    atomically, so a failure never leaves a partial file behind.
    """
    text = render(result, fmt, config, command)
    if path is None:
        (stream or sys.stdout).write(text)
        return
    meta = None
    if fmt == "csv":
        rows = result if isinstance(result, list) else result["rows"]
        meta = render({"columns": list(rows[0].keys())}, "json", config, command)
    try:
        _atomic_write(text, path)
        if meta is not None:
            _atomic_write(meta, path + ".meta.json")
    except OSError as exc:
        if meta is not None and os.path.exists(path):
            os.remove(path)
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


# ------------------------------------------------------------ commands

def _flow_config(cfg):
    return FlowConfig(quad=QuadratureSpec(rel_tol=cfg["rel_tol"]), mu2_x_power=cfg["mu2_x_power"],
                      use_cache=cfg["cache"])


def _params(cfg):
    return RegulatorParams(cfg["alpha"], cfg["beta_hat"])


def _fp_dict(fp):
    return {"msq_star": fp.state.msq, "lam_star": fp.state.lam, "eta_star": fp.eta_star,
            "theta": list(fp.theta), "re_theta": fp.re_theta, "im_theta": fp.im_theta,
            "stability_matrix": fp.jacobian, "residual": fp.residual,
            "iterations": fp.iterations}


def cmd_integrals(cfg):
    params = _params(cfg)
    fc = _flow_config(cfg)
    ts = threshold_set(cfg["msq"], params, fc.quad, fc.mu2_x_power)
    out = {"values": ts.as_dict(), "errors": ts.errors, "evaluations": ts.evaluations}
    if cfg["mc_samples"]:
        mc = {}
        for k, (g, dim, pref) in component_integrands(cfg["msq"], params, fc.mu2_x_power).items():
            r = mc_oracle_integral(g, cfg["mc_samples"], cfg["seed"], dim=dim,
                                   x_support=None if k == "I1" else 1.0)
            mc[k] = {"value": pref * r.value, "stderr": abs(pref) * r.err_estimate}
        out["monte_carlo"] = mc
    return out


def cmd_betas(cfg):
    b = beta_functions(FlowState(cfg["msq"], cfg["lam"]), _params(cfg), _flow_config(cfg))
    return {"beta_msq": b.beta_msq, "beta_lam": b.beta_lam, "eta": b.eta,
            "kappa_bar": b.kappa_bar, "lam_prime": b.lam_prime, "eta_denominator": b.denominator}


def cmd_fixed_point(cfg):
    params = _params(cfg)
    fc = _flow_config(cfg)
    if cfg["guess_msq"] is not None:
        fps = [find_fixed_point(params, FlowState(cfg["guess_msq"], cfg["guess_lam"]), fc)]
    else:
        fps = locate_fixed_points(params, fc, (cfg["msq_min"], cfg["msq_max"]),
                                  (cfg["lam_min"], cfg["lam_max"]), cfg["seed_grid"])
        if not fps:
            raise NoConvergence("no non-Gaussian fixed point in the seed window")
    best = max(fps, key=lambda f: (f.re_theta, -f.state.msq))
    out = _fp_dict(best)
    out["all"] = [_fp_dict(f) for f in fps]
    return out


def cmd_scan(cfg):
    fc = _flow_config(cfg)
    alphas = np.linspace(cfg["alpha_min"], cfg["alpha_max"], cfg["alpha_count"])
    betas = np.linspace(cfg["beta_min"], cfg["beta_max"], cfg["beta_count"])
    seed = SeedOptions((cfg["msq_min"], cfg["msq_max"]), (cfg["lam_min"], cfg["lam_max"]),
                       cfg["seed_grid"])
    grid = msp_scan(alphas, betas, fc, seed, workers=cfg["workers"] or None)
    return {"rows": [{c: r[c] for c in CSV_COLUMNS} for r in grid.rows()]}


def cmd_portrait(cfg):
    rec = integrate_trajectory(FlowState(cfg["msq"], cfg["lam"]), cfg["direction"], _params(cfg),
                               _flow_config(cfg), t_max=cfg["t_max"],
                               max_samples=cfg["max_samples"] or None)
    return {"rows": rec.rows(), "termination": rec.termination}


def cmd_region_map(cfg):
    ms, ls, lab = region_map(((cfg["msq_min"], cfg["msq_max"]), (cfg["lam_min"], cfg["lam_max"])),
                             cfg["resolution"], _params(cfg), _flow_config(cfg))
    return {"rows": region_rows(ms, ls, lab)}


def cmd_equilibrium(cfg):
    fn = SYSTEMS[cfg["system"]]
    vals = fn(EqState(cfg["msq"], cfg["lam"]))
    out = {"beta_m": vals[0], "beta_lam": vals[1], "eta": vals[2]}
    if len(vals) > 3:
        out["constraint_residual"] = vals[3]
    if cfg["fixed_point_check"]:
        out["nontrivial_fixed_points"] = [list(x) for x in eq_fixed_points(cfg["system"])]
    return out


def cmd_sd(cfg):
    sol = sd_solve_sigma(cfg["lam_r"], cfg["cutoff"], cfg["damping"], cfg["m_r2"])
    out = sd_summary(sol)
    out["rows"] = sd_rows(sol)
    return out


COMMANDS = {"integrals": cmd_integrals, "betas": cmd_betas, "fixed-point": cmd_fixed_point,
            "scan": cmd_scan, "portrait": cmd_portrait, "region-map": cmd_region_map,
            "equilibrium": cmd_equilibrium, "sd": cmd_sd}

NUMERICAL_FAILURES = (NonConvergence, SingularEta, NoConvergence, LeftPhysicalRegion,
                      IterationDiverged, ImmediateTermination)


def run_command(argv=None, stdout=None, stderr=None):
    """Parse ``argv``, run the subcommand and return the process exit code."""
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    command = ns.command
    cli_values = {k: v for k, v in vars(ns).items()
                  if k not in ("command", "config", "output", "format")}
    try:
        file_values = read_config_file(ns.config) if ns.config else {}
        cfg = resolve_config(command, cli_values, file_values)
        fmt = ns.format or file_values.get("format") or DEFAULT_FORMAT.get(command, "json")
        if fmt not in ("json", "csv"):
            raise ConfigError(f"--format: invalid value {fmt!r}")
        output = ns.output or file_values.get("output")
        if fmt == "csv" and command in ("integrals", "betas", "fixed-point", "equilibrium"):
            raise ConfigError(f"--format: csv is not available for {command}")
    except (ConfigError, CutoffTooSmall, DomainError) as exc:
        print(f"tgftflow {command}: {exc}", file=stderr)
        return EXIT_INVALID
    try:
        result = COMMANDS[command](cfg)
    except NUMERICAL_FAILURES as exc:
        print(f"tgftflow {command}: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    except (ValueError, DomainError) as exc:
        print(f"tgftflow {command}: {exc}", file=stderr)
        return EXIT_INVALID
    if fmt == "csv":
        payload = result["rows"]
    else:
        payload = result
    try:
        emit_results(payload, fmt, output, cfg, command, stream=stdout)
    except OSError as exc:
        print(f"tgftflow {command}: {exc}", file=stderr)
        return EXIT_IO
    return EXIT_OK


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
