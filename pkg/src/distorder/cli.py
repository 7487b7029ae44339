"""Batch command-line front end.

Every subcommand reads its inputs from flags and/or a JSON config file
(flags win), writes CSV/JSON artifacts into ``--out`` atomically, and exits
with 0 on success, 2 on input or validation errors and 3 on numerical
pipeline errors.  Errors are also reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import warnings

import numpy as np

from .dode import solve_dode
from .errors import (
    AccuracyError,
    ConditioningError,
    DistOrderError,
    ExcitationError,
    RangeError,
    SolverError,
)
from .forward_spectral import dirichlet_laplacian_eigs, solve_spectral
from .forward_theta import solve_representation
from .inverse import (
    InverseProblemSpec,
    choose_sample_points,
    reconstruct_mu,
    phi_samples_from_data,
    synth_trace,
)
from .laplace import forward_laplace, kappa
from .mu_model import MuSpec, PsiParams, dumps_json, eval_phi
from .series import (
    TimeSeries,
    atomic_write_text,
    graded_grid,
    read_timeseries_csv,
    uniform_grid,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
_PIPELINE_ERRORS = (RangeError, ExcitationError, ConditioningError, AccuracyError, SolverError)

DEFAULTS = {
    "out": ".",
    "probe": 0.5,
    "kind": "interior",
    "method": "both",
    "zcount": 40,
    "reg": 1e-8,
    "noise": 0.0,
    "seed": None,
    "psi": {"c_psi": 1.0, "beta0": 0.4, "beta1": 0.8},
    "spacing": "arithmetic",
    "lam": 1.0,
    "t_max": 1.0,
    "nt": 41,
    "nx": 41,
    "grading": 1.0,
    "z": [1.0, 2.0, 5.0, 10.0],
    "u0": None,
    "g1": None,
    "n_modes": None,
}


class InputError(Exception):
    """Bad or missing input; mapped to exit code 2."""


class PipelineError(Exception):
    """Numerical failure after inputs were accepted; mapped to exit code 3."""


def _parser():
    p = argparse.ArgumentParser(prog="distorder", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with any of the options below")
    common.add_argument("--mu", help="MuSpec JSON file")
    common.add_argument("--out", help="output directory")
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--t-max", dest="t_max", type=float)
    grid.add_argument("--nt", type=int, help="number of time samples")
    grid.add_argument("--grading", type=float, help="grid exponent (1 = uniform)")

    s = sub.add_parser("phi", parents=[common], help="evaluate Phi(z)")
    s.add_argument("--z", type=float, nargs="+")
    sub.add_parser("kernel", parents=[common, grid], help="evaluate the kernel kappa(t)")
    s = sub.add_parser("dode", parents=[common, grid], help="solve the relaxation equation")
    s.add_argument("--lam", type=float)
    s = sub.add_parser("forward", parents=[common, grid], help="forward solve on [0,1]")
    s.add_argument("--method", choices=["spectral", "theta", "both"])
    s.add_argument("--u0", help="'sine:K' or CSV with columns x,value")
    s.add_argument("--g0", help="TimeSeries CSV for u(0,t)")
    s.add_argument("--g1", help="TimeSeries CSV for u(1,t)")
    s.add_argument("--nx", type=int)
    s.add_argument("--n-modes", dest="n_modes", type=int)
    s = sub.add_parser("synth", parents=[common], help="synthesise a trace or flux")
    s.add_argument("--g0", help="TimeSeries CSV for the boundary input")
    s.add_argument("--probe", type=float)
    s.add_argument("--kind", choices=["interior", "flux"])
    s.add_argument("--noise", type=float)
    s.add_argument("--seed", type=int)
    s = sub.add_parser("invert", parents=[common], help="recover mu from a trace")
    s.add_argument("--data", help="TimeSeries CSV of the measured trace")
    s.add_argument("--g0", help="TimeSeries CSV for the boundary input")
    s.add_argument("--probe", type=float)
    s.add_argument("--kind", choices=["interior", "flux"])
    s.add_argument("--zcount", type=int)
    s.add_argument("--reg", type=float)
    return p


def _resolve(args):
    """Merge defaults, config file and flags (flags win)."""
    cfg = dict(DEFAULTS)
    base = os.getcwd()
    if args.config:
        if not os.path.isfile(args.config):
            raise InputError(f"input not found: {args.config}")
        with open(args.config) as fh:
            try:
                cfg.update(json.load(fh))
            except json.JSONDecodeError as exc:
                raise InputError(f"config is not valid JSON: {exc}") from None
        base = os.path.dirname(os.path.abspath(args.config))
    for key, val in vars(args).items():
        if key not in ("config", "command") and val is not None:
            cfg[key] = val
    cfg["_base"] = base if args.config else os.getcwd()
    # paths from the config file are relative to it; flags to the working directory
    for key in ("mu", "g0", "g1", "data", "u0"):
        val = cfg.get(key)
        if isinstance(val, str) and not val.startswith("sine:"):
            from_flag = getattr(args, key, None) is not None
            root = os.getcwd() if from_flag else cfg["_base"]
            cfg[key] = val if os.path.isabs(val) else os.path.join(root, val)
    return cfg


def _need_file(cfg, key):
    path = cfg.get(key)
    if path is None:
        raise InputError(f"missing required input --{key}")
    if not os.path.isfile(path):
        raise InputError(f"input not found: {path}")
    return path


def _load_mu(cfg):
    path = _need_file(cfg, "mu")
    try:
        return MuSpec.from_json(path)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed MuSpec file {path}: {exc}") from None


def _load_series(cfg, key):
    path = _need_file(cfg, key)
    try:
        return read_timeseries_csv(path)
    except (OSError, IndexError) as exc:
        raise InputError(f"malformed time series {path}: {exc}") from None


def _out_dir(cfg):
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise InputError(f"output directory not writable: {out}")
    return out


def _time_grid(cfg):
    n = int(cfg["nt"])
    if n < 2:
        raise InputError("nt must be at least 2")
    g = float(cfg["grading"])
    t_max = float(cfg["t_max"])
    return uniform_grid(t_max, n - 1) if g == 1.0 else graded_grid(t_max, n - 1, g)


def _write_table(path, header, columns):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    np.savetxt(buf, np.column_stack(columns), fmt="%.17g", delimiter=",")
    atomic_write_text(path, buf.getvalue())


# -- commands ------------------------------------------------------------------------


def run_phi(cfg):
    mu = _load_mu(cfg)
    z = np.atleast_1d(np.asarray(cfg["z"], dtype=float))
    if np.any(~(z > 0)):
        raise InputError("phi needs z > 0")
    out = _out_dir(cfg)
    _write_table(os.path.join(out, "phi.csv"), ["z", "phi"], [z, eval_phi(mu, z)])
    return EXIT_OK


def run_kernel(cfg):
    mu = _load_mu(cfg)
    t = _time_grid(cfg)[1:]
    out = _out_dir(cfg)
    k = kappa(mu, t)
    TimeSeries(t, k).to_csv(os.path.join(out, "kernel.csv"))
    return EXIT_OK


def run_dode(cfg):
    mu = _load_mu(cfg)
    t = _time_grid(cfg)
    out = _out_dir(cfg)
    v = solve_dode(mu, float(cfg["lam"]), t)
    v.to_csv(os.path.join(out, "dode.csv"))
    return EXIT_OK


def _initial_data(cfg, x):
    u0 = cfg.get("u0")
    if u0 is None:
        return np.zeros_like(x)
    if isinstance(u0, list):
        v = np.asarray(u0, dtype=float)
        if v.shape != x.shape:
            raise InputError("u0 list must match the x grid")
        return v
    if isinstance(u0, str) and u0.startswith("sine:"):
        k = int(u0.split(":", 1)[1])
        return np.sin(k * np.pi * x)
    if not os.path.isfile(u0):
        raise InputError(f"input not found: {u0}")
    tab = np.loadtxt(u0, delimiter=",", skiprows=1, ndmin=2)
    return np.interp(x, tab[:, 0], tab[:, 1])


def _boundary(cfg, key, t):
    if cfg.get(key) is None:
        return None
    s = _load_series(cfg, key)
    return s(t)


def run_forward(cfg):
    mu = _load_mu(cfg)
    nx = int(cfg["nx"])
    if nx < 3:
        raise InputError("nx must be at least 3")
    x = np.linspace(0.0, 1.0, nx)
    t = _time_grid(cfg)
    u0 = _initial_data(cfg, x)
    g0 = _boundary(cfg, "g0", t)
    g1 = _boundary(cfg, "g1", t)
    method = cfg["method"]
    if method not in ("spectral", "theta", "both"):
        raise InputError(f"unknown method {method!r}")
    out = _out_dir(cfg)
    fields = {}
    if method in ("spectral", "both"):
        if (g0 is not None and np.any(g0)) or (g1 is not None and np.any(g1)):
            raise InputError("the spectral solver needs zero boundary data")
        eigs = dirichlet_laplacian_eigs(nx - 2, x)
        n_modes = cfg.get("n_modes") or min(64, nx - 2)
        fields["spectral"] = solve_spectral(mu, u0, None, eigs, t, n_modes=n_modes)
    if method in ("theta", "both"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fields["theta"] = solve_representation(mu, u0, g0, g1, None, x, t)
    for name, fld in fields.items():
        fname = "field.csv" if len(fields) == 1 else f"field_{name}.csv"
        fld.to_csv(os.path.join(out, fname))
    if method == "both":
        diff = fields["spectral"].max_abs_diff(fields["theta"])
        report = {"max_abs_difference": diff, "nx": nx, "nt": int(t.size)}
        atomic_write_text(os.path.join(out, "discrepancy.json"), dumps_json(report))
    return EXIT_OK


def run_synth(cfg):
    mu = _load_mu(cfg)
    g0 = _load_series(cfg, "g0")
    noise = float(cfg["noise"])
    if noise < 0:
        raise InputError("noise must be nonnegative")
    if noise > 0 and cfg.get("seed") is None:
        raise InputError("a seed is required when noise > 0")
    seed = cfg.get("seed")
    if seed is not None and int(seed) < 0:
        raise InputError("seed must be an unsigned integer")
    kind, probe = cfg["kind"], float(cfg["probe"])
    _check_probe_input(probe, kind)
    out = _out_dir(cfg)
    trace = synth_trace(mu, g0, probe, kind, noise=noise, seed=seed)
    trace.to_csv(os.path.join(out, "trace.csv"))
    return EXIT_OK


def _check_probe_input(probe, kind):
    if kind not in ("interior", "flux"):
        raise InputError(f"unknown kind {kind!r}")
    ok = 0 < probe < 1 if kind == "interior" else 0 < probe <= 1
    if not ok:
        raise InputError(f"probe {probe} out of range for kind {kind!r}")


def run_invert(cfg):
    data = _load_series(cfg, "data")
    g0 = _load_series(cfg, "g0")
    kind, probe = cfg["kind"], float(cfg["probe"])
    _check_probe_input(probe, kind)
    try:
        psi = PsiParams.from_dict(cfg["psi"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad psi parameters: {exc}") from None
    zcount = int(cfg["zcount"])
    if zcount < 2:
        raise InputError("zcount must be at least 2")
    a_grid = np.asarray(cfg.get("alpha_grid", np.linspace(0, 1, 21)), dtype=float)
    try:
        z = choose_sample_points(psi, probe, kind, zcount, cfg["spacing"])
        spec = InverseProblemSpec(kind, probe, data, g0, psi, z, float(cfg["reg"]), a_grid)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _out_dir(cfg)
    diag_csv = os.path.join(out, "diagnostics.csv")
    try:
        samples = phi_samples_from_data(spec)
        rec = reconstruct_mu(samples, spec.alpha_grid, spec.reg_weight)
    except _PIPELINE_ERRORS as exc:
        d = np.atleast_1d(forward_laplace(data, z, spec.tail_policy, rule=spec.rule))
        g = np.atleast_1d(forward_laplace(g0, z, spec.tail_policy, rule=spec.rule))
        nan = np.full(z.size, np.nan)
        _write_table(diag_csv, ["z", "d", "g", "phi", "residual"], [z, d, g, nan, nan])
        info = {
            "status": "failed",
            "error": type(exc).__name__,
            "message": str(exc),
            "sample_index": getattr(exc, "index", None),
        }
        atomic_write_text(os.path.join(out, "diagnostics.json"), dumps_json(info))
        raise PipelineError(exc) from exc
    rec.to_json(os.path.join(out, "recovered_mu.json"))
    rec.diagnostics_csv(diag_csv)
    info = {
        "status": "ok",
        "n_samples": len(samples),
        "data_residual": rec.data_residual,
        "reg_norm": rec.reg_norm,
        "flags": samples.flags,
    }
    atomic_write_text(os.path.join(out, "diagnostics.json"), dumps_json(info))
    return EXIT_OK


COMMANDS = {
    "phi": run_phi,
    "kernel": run_kernel,
    "dode": run_dode,
    "forward": run_forward,
    "synth": run_synth,
    "invert": run_invert,
}


def _fail(code, exc):
    cause = exc.__cause__ if isinstance(exc, PipelineError) and exc.__cause__ else exc
    payload = {"exit_code": code, "error": type(cause).__name__, "message": str(cause)}
    idx = getattr(cause, "index", None)
    if idx is not None:
        payload["sample_index"] = idx
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg)
    except InputError as exc:
        return _fail(EXIT_INPUT, exc)
    except PipelineError as exc:
        return _fail(EXIT_NUMERIC, exc)
    except _PIPELINE_ERRORS as exc:
        return _fail(EXIT_NUMERIC, exc)
    except (ValueError, DistOrderError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)


if __name__ == "__main__":
    sys.exit(main())
