"""Command-line front end.

    pathuq run <scenario> [--config FILE] [--out FILE.csv] [--seed N] [--threads N]
                          [--validate] [--plot] [--<param> VALUE ...]
    pathuq validate <scenario> [same options] [--paths N] [--dt DT]

Parameters come from the scenario's table in the config file (TOML or JSON),
then inline ``--<param> VALUE`` flags override them. Grid parameters accept a
comma list ``0.1,0.2,0.5``, a range ``start:stop:num`` (inclusive linspace),
or an array in the config file.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, scenarios, validate
from .errors import ConfigError, PathUQError
from .tables import CurveTable, dumps_json

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

# name -> (kind, default); kind is "float", "grid" or "bool"
SCHEMAS: dict[str, dict[str, tuple[str, object]]] = {
    "bm-cdf": {"mu": ("float", 1.0), "a": ("float", 2.0), "alpha": ("float", 0.2),
               "T": ("grid", scenarios.FIG1_T_GRID)},
    "bm-mean": {"mu": ("float", 1.0), "a": ("float", 2.0), "alpha": ("float", 0.2)},
    "nonrev": {"C": ("grid", scenarios.FIG2_C_GRID)},
    "lq-control": {"kappa": ("grid", scenarios.FIG3_KAPPA_GRID), "alpha": ("float", 0.5)},
    "queue": {"alpha": ("float", 1.0), "rho": ("float", 1.0), "delta": ("float", None),
              "epsilon": ("grid", scenarios.FIG4_EPS_GRID)},
    "vasicek": {"r": ("float", 1.25), "sigma": ("grid", (4.0,)), "gamma": ("float", 2.0),
                "sigma_tilde": ("grid", scenarios.FIG5_LEFT_GRID), "K": ("float", 1.0),
                "L": ("float", 0.5), "X0": ("float", 2.0), "strict": ("bool", True)},
    "rate-drop": {"r": ("float", 2.0), "sigma": ("float", 3.0), "K": ("float", 1.0),
                  "L": ("float", 0.5), "X0": ("float", 2.0), "dr_plus": ("float", 0.3),
                  "t_f": ("grid", scenarios.APPI_TF_GRID), "kappa_optimize": ("bool", False)},
}

# which grid is swept (for locating a failing point)
SWEEP = {"bm-cdf": "T", "nonrev": "C", "lq-control": "kappa", "queue": "epsilon",
         "rate-drop": "t_f"}

# validation point per scenario: bounds parameters forwarded to the MC runner
VALIDATE_KEYS = {
    "bm-cdf": ("mu", "a", "alpha", "T"),
    "bm-mean": ("mu", "a", "alpha"),
    "nonrev": (),
    "lq-control": ("alpha",),
    "queue": ("alpha", "rho"),
    "vasicek": ("r", "gamma", "K", "L", "X0"),
    "rate-drop": ("r", "sigma", "K", "L", "X0", "dr_plus"),
}


# ------------------------------------------------------------------ parsing

def _parse_grid(name: str, v) -> tuple[float, ...]:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (float(v),)
    if isinstance(v, dict):
        try:
            return tuple(np.linspace(float(v["start"]), float(v["stop"]), int(v["num"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"field {name!r}: range tables need start, stop, num") from exc
    if isinstance(v, (list, tuple)):
        try:
            return tuple(float(x) for x in v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field {name!r}: grid entries must be numbers") from exc
    if isinstance(v, str):
        s = v.strip()
        try:
            if ":" in s:
                start, stop, num = s.split(":")
                return tuple(np.linspace(float(start), float(stop), int(num)))
            return tuple(float(x) for x in s.split(",") if x.strip())
        except ValueError as exc:
            raise ConfigError(f"field {name!r}: cannot parse grid {v!r}") from exc
    raise ConfigError(f"field {name!r}: unsupported grid value {v!r}")


def _coerce(scenario: str, name: str, v):
    schema = SCHEMAS[scenario]
    if name not in schema:
        raise ConfigError(f"unknown parameter {name!r} for scenario {scenario!r}; "
                          f"expected one of {sorted(schema)}")
    kind = schema[name][0]
    if kind == "grid":
        g = _parse_grid(name, v)
        if not g:
            raise ConfigError(f"field {name!r}: empty grid")
        if any(not math.isfinite(x) for x in g) or any(b <= a for a, b in zip(g, g[1:])):
            raise ConfigError(f"field {name!r}: grid must be finite and strictly increasing")
        return g
    if kind == "bool":
        if isinstance(v, bool):
            return v
        if isinstance(v, str) and v.lower() in ("true", "1", "yes", "false", "0", "no"):
            return v.lower() in ("true", "1", "yes")
        raise ConfigError(f"field {name!r}: expected a boolean, got {v!r}")
    try:
        x = float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field {name!r}: expected a number, got {v!r}") from exc
    if not math.isfinite(x):
        raise ConfigError(f"field {name!r}: must be finite")
    return x


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def resolve_params(scenario: str, config: dict | None, inline: dict) -> dict:
    """Defaults, then the config file's scenario table, then inline flags."""
    if scenario not in SCHEMAS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {sorted(SCHEMAS)}")
    params = {k: d for k, (_, d) in SCHEMAS[scenario].items()}
    if config:
        table = config.get(scenario, config)
        if not isinstance(table, dict):
            raise ConfigError(f"config section [{scenario}] must be a table")
        for k, v in table.items():
            if isinstance(v, dict) and k in SCHEMAS:
                continue  # another scenario's table
            params[k] = _coerce(scenario, k, v)
    for k, v in inline.items():
        params[k] = _coerce(scenario, k, v)
    return params


def _split_inline(extra: list[str]) -> dict:
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"flag {tok!r} needs a value")
            val = extra[i + 1]
            i += 2
        out[key] = val
    return out


# ---------------------------------------------------------------- compute

def compute(scenario: str, p: dict, threads: int = 1) -> CurveTable:
    if scenario == "bm-cdf":
        return scenarios.bm_cdf_bounds(p["mu"], p["a"], p["alpha"], p["T"])
    if scenario == "bm-mean":
        return scenarios.bm_mean_bounds(p["mu"], p["a"], p["alpha"])
    if scenario == "nonrev":
        return scenarios.nonrev_bounds(p["C"])
    if scenario == "lq-control":
        return scenarios.lq_bounds(p["kappa"], p["alpha"], threads)
    if scenario == "queue":
        # delta defaults to the diagonal delta = epsilon
        delta = p["epsilon"] if p["delta"] is None else p["delta"]
        return scenarios.queue_bounds(p["alpha"], p["rho"], delta, p["epsilon"])
    if scenario == "vasicek":
        sig, st = p["sigma"], p["sigma_tilde"]
        return scenarios.vasicek_bounds(p["r"], sig if len(sig) > 1 else sig[0], p["gamma"],
                                        st if len(st) > 1 else st[0], p["K"], p["L"], p["X0"],
                                        p["strict"], threads)
    if scenario == "rate-drop":
        return scenarios.rate_drop_bounds(p["r"], p["sigma"], p["K"], p["L"], p["X0"],
                                          p["dr_plus"], p["t_f"], p["kappa_optimize"], threads)
    raise ConfigError(f"unknown scenario {scenario!r}")


def _sweep_name(scenario: str, p: dict) -> str | None:
    if scenario == "vasicek":
        return "sigma" if len(p["sigma"]) > 1 else "sigma_tilde"
    return SWEEP.get(scenario)


def locate_failure(scenario: str, p: dict) -> str:
    """Re-run point by point to name the first failing grid value."""
    name = _sweep_name(scenario, p)
    if name is None:
        return "single point"
    for g in p[name]:
        try:
            compute(scenario, {**p, name: (g,)})
        except PathUQError as exc:
            return f"{name}={g!r}: {type(exc).__name__}: {exc}"
    return "not reproducible point by point"


def run_validation(scenario: str, p: dict, seed: int, threads: int, paths: int | None,
                   dt: float | None, corrupt_eta: float = 1.0) -> list[dict]:
    cfg = replace(validate.DEFAULTS[scenario], seed=seed, threads=threads)
    if paths is not None:
        cfg = replace(cfg, n_paths=paths)
    if dt is not None:
        cfg = replace(cfg, dt=dt)
    kw = {k: p[k] for k in VALIDATE_KEYS[scenario]}
    if scenario == "bm-cdf":
        kw["T_grid"] = kw.pop("T")
    if scenario == "vasicek":
        kw["sigma"] = p["sigma"][0]
        kw["sigma_tilde"] = p["sigma_tilde"][len(p["sigma_tilde"]) // 2]
    if scenario == "lq-control":
        kw["kappa"] = 2.0
    if scenario == "queue":
        kw["epsilon"] = p["epsilon"][0] if len(p["epsilon"]) == 1 else 0.05
    if scenario == "nonrev":
        kw["C"] = 1.0
    if scenario == "rate-drop":
        kw["t_f"] = p["t_f"][len(p["t_f"]) // 2]
    if corrupt_eta != 1.0:
        if scenario not in ("bm-mean", "lq-control"):
            raise ConfigError("--corrupt-eta is only wired for bm-mean and lq-control")
        kw["corrupt_eta"] = corrupt_eta
    return validate.RUNNERS[scenario](cfg=cfg, **kw)


# -------------------------------------------------------------------- main

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pathuq", description="Goal-oriented UQ bounds on path-space QoIs.")
    ap.add_argument("--version", action="version", version=f"pathuq {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        sp = sub.add_parser(name, help=f"{name} a scenario")
        sp.add_argument("scenario", help=", ".join(SCHEMAS))
        sp.add_argument("--config", help="TOML or JSON file with one table per scenario")
        sp.add_argument("--out", help="CSV output path (stdout if omitted); sidecar JSON alongside")
        sp.add_argument("--seed", type=int, default=0, help="Monte Carlo seed (u64)")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: PATHUQ_THREADS or 1)")
        sp.add_argument("--plot", action="store_true", help="also write a PNG next to --out")
        sp.add_argument("--paths", type=int, default=None, help="Monte Carlo paths")
        sp.add_argument("--dt", type=float, default=None, help="Monte Carlo time step")
        sp.add_argument("--corrupt-eta", type=float, default=1.0, help=argparse.SUPPRESS)
        if name == "run":
            sp.add_argument("--validate", action="store_true", help="also run Monte Carlo checks")
    return ap


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("PATHUQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"PATHUQ_THREADS must be an integer, got {env!r}")
    return 1


def main(argv: list[str] | None = None) -> int:
    ap = _parser()
    args, extra = ap.parse_known_args(argv)
    t0 = time.perf_counter()
    try:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        threads = _threads(args.threads)
        config = load_config(args.config) if args.config else None
        params = resolve_params(args.scenario, config, _split_inline(extra))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    do_validate = args.command == "validate" or getattr(args, "validate", False)
    try:
        table = compute(args.scenario, params, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # constructors reject out-of-domain parameters with ValueError
        print(f"config error: invalid parameters for {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PathUQError as exc:
        where = locate_failure(args.scenario, params)
        print(f"numerical failure in {args.scenario} at {where}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC
    t_bounds = time.perf_counter() - t0

    checks = None
    if do_validate:
        try:
            checks = run_validation(args.scenario, params, args.seed, threads, args.paths, args.dt,
                                    args.corrupt_eta)
        except (ConfigError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except PathUQError as exc:
            print(f"numerical failure during validation: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
    t_total = time.perf_counter() - t0

    csv_text = table.to_csv()
    sidecar = {
        "scenario": args.scenario,
        "version": __version__,
        "config": {"file": args.config, "params": params, "seed": args.seed, "threads": threads},
        "timings": {"bounds_s": t_bounds, "total_s": t_total},
        "table": table.to_json(),
    }
    if checks is not None:
        sidecar["validation"] = checks
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv_text, encoding="utf-8", newline="\n")
        out.with_suffix(".json").write_text(dumps_json(sidecar) + "\n", encoding="utf-8")
        if args.plot:
            from .report import render
            render(table, out.with_suffix(".png"))
    else:
        sys.stdout.write(csv_text)
        if args.plot:
            print("--plot needs --out", file=sys.stderr)
    if checks is not None:
        for c in checks:
            print(f"{c['status']:<14} {args.scenario} {c['check']}: mean={c['mean']:.6g} "
                  f"se={c['stderr']:.2g} interval=[{c['lower']:.6g}, {c['upper']:.6g}] ({c['note']})",
                  file=sys.stderr)
        if validate.any_fail(checks):
            return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
