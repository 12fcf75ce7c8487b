"""Command-line interface.

Subcommands: solve (PDE density + moments), simulate (Monte Carlo
oracle), optimize-beta, backtest, convergence (RMSE study).  Runs are
configured by a flat key=value file; command-line flags override file
values.  Exit codes: 0 success, 1 numerical failure, 2 bad
configuration or input.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import mc, pipeline, realized, spectral
from .errors import (
    ConfigurationError,
    DataError,
    NumericalError,
    TailhedgeError,
)
from .models import HestonParams, JumpParams, SwapSpec, validate

__all__ = ["main", "build_parser", "load_config"]

_FLOAT_KEYS = {
    "mu", "kappa", "theta", "gamma", "rho", "v0", "lambda", "sigma_j",
    "beta", "maturity", "fixed_leg", "r_max", "v_max", "dt", "phi_max",
    "x_min", "x_max", "cost", "rebalance", "search_lo", "search_hi",
}
_INT_KEYS = {"n", "phi_count", "x_count", "seed", "paths", "steps",
             "grid_points"}
_BOOL_KEYS = {"renormalize", "multi_leg"}
_STR_KEYS = {"model", "out", "density_out", "samples", "returns", "dr_sweep"}


def load_config(path: str | None) -> dict:
    """Parse a flat key=value configuration file."""
    if path is None:
        return {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        out[key] = _coerce(key, val, f"{path}:{lineno}")
    return out


def _coerce(key: str, val, where: str):
    if not isinstance(val, str):
        return val
    try:
        if key in _FLOAT_KEYS:
            return float(val)
        if key in _INT_KEYS:
            return int(val)
        if key in _BOOL_KEYS:
            if val.lower() in ("1", "true", "yes", "on"):
                return True
            if val.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {val!r}")
        if key in _STR_KEYS:
            return val
        raise ValueError(f"unknown configuration key {key!r}")
    except ValueError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def _merged(args: argparse.Namespace) -> dict:
    """File config with flag overrides applied (flags win)."""
    cfg = load_config(getattr(args, "config", None))
    overrides = {k.replace("lambda_", "lambda"): v
                 for k, v in vars(args).items()
                 if v is not None and k not in ("config", "func", "command")}
    for key, val in overrides.items():
        cfg[key] = _coerce(key, val, "command line")
    return cfg


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigurationError(
            f"missing configuration key(s): {', '.join(missing)}")


def _model_objects(cfg: dict):
    _require(cfg, "mu", "kappa", "theta", "gamma", "rho")
    params = HestonParams(mu=cfg["mu"], kappa=cfg["kappa"],
                          theta=cfg["theta"], gamma=cfg["gamma"],
                          rho=cfg["rho"], v0=cfg.get("v0"))
    model = cfg.get("model", "heston")
    if model not in ("heston", "svjd"):
        raise ConfigurationError(f"unknown model {cfg['model']!r}")
    jumps = None
    if model == "svjd":
        _require(cfg, "lambda", "sigma_j")
        jumps = JumpParams(lambda_=cfg["lambda"], sigma_j=cfg["sigma_j"])
    spec = SwapSpec(maturity_T=cfg.get("maturity", 0.1),
                    beta=cfg.get("beta", 0.0),
                    fixed_leg=cfg.get("fixed_leg", 0.0))
    return params, jumps, spec


def _solve_config(cfg: dict) -> pipeline.SolveConfig:
    base = pipeline.SolveConfig()
    return pipeline.SolveConfig(
        r_max=cfg.get("r_max", base.r_max),
        v_max=cfg.get("v_max", base.v_max),
        n=cfg.get("n", base.n),
        dt=cfg.get("dt", base.dt),
        phi_max=cfg.get("phi_max", base.phi_max),
        phi_count=cfg.get("phi_count", base.phi_count),
        x_min=cfg.get("x_min", base.x_min),
        x_max=cfg.get("x_max", base.x_max),
        x_count=cfg.get("x_count", base.x_count),
        renormalize=cfg.get("renormalize", base.renormalize),
    )


def _emit_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _metadata(cfg: dict) -> dict:
    return {k: cfg[k] for k in sorted(cfg)}


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    params, jumps, spec = _model_objects(cfg)
    report = validate(params)
    if not report.feller_ok:
        raise ConfigurationError(
            f"Feller condition violated: 2*kappa*theta - gamma^2 = "
            f"{report.margin:.6g} <= 0")
    result = pipeline.solve_density(params, spec, jumps=jumps,
                                    config=_solve_config(cfg))
    if cfg.get("density_out"):
        _write_density(result.curve, cfg, cfg["density_out"])
    payload = dict(result.moments.as_dict())
    payload["metadata"] = {**_metadata(cfg), **result.metadata}
    _emit_json(payload, cfg.get("out"))
    return 0


def _write_density(curve: spectral.DensityCurve, cfg: dict,
                   path: str) -> None:
    with open(path, "w") as fh:
        for key in sorted(cfg):
            fh.write(f"# {key}={cfg[key]}\n")
        fh.write("x,density\n")
        for xi, pi in zip(curve.x, curve.density):
            fh.write(f"{xi:.17g},{pi:.17g}\n")


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    params, jumps, spec = _model_objects(cfg)
    report = validate(params)
    if not report.feller_ok:
        raise ConfigurationError(
            f"Feller condition violated: 2*kappa*theta - gamma^2 = "
            f"{report.margin:.6g} <= 0")
    sim = mc.SimConfig(steps=cfg.get("steps", 2000),
                       paths=cfg.get("paths", 100000),
                       seed=cfg.get("seed", 0))
    if jumps is None:
        samples = mc.simulate_heston(params, spec, sim)
    else:
        samples = mc.simulate_svjd(params, jumps, spec, sim)
    if cfg.get("samples"):
        with open(cfg["samples"], "w") as fh:
            fh.write(samples.to_csv())
    moments = mc.sample_moments(samples.x_T)
    payload = dict(moments.as_dict())
    payload["metadata"] = _metadata(cfg)
    _emit_json(payload, cfg.get("out"))
    return 0


def cmd_optimize_beta(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    if cfg.get("samples"):
        data = np.genfromtxt(cfg["samples"], delimiter=",", names=True)
        r_samples = np.atleast_1d(data["r_T"])
        y_samples = np.atleast_1d(data["y_T"])
    else:
        params, jumps, spec = _model_objects(cfg)
        report = validate(params)
        if not report.feller_ok:
            raise ConfigurationError(
                f"Feller condition violated: 2*kappa*theta - gamma^2 = "
                f"{report.margin:.6g} <= 0")
        sim = mc.SimConfig(steps=cfg.get("steps", 2000),
                           paths=cfg.get("paths", 100000),
                           seed=cfg.get("seed", 0))
        if jumps is None:
            sample_set = mc.simulate_heston(params, spec, sim)
        else:
            sample_set = mc.simulate_svjd(params, jumps, spec, sim)
        r_samples, y_samples = sample_set.r_T, sample_set.y_T
    search = (cfg.get("search_lo", 0.0), cfg.get("search_hi", 100.0))
    grid_points = cfg.get("grid_points", 51)
    beta_star = realized.optimize_hedge_number(r_samples, y_samples,
                                               search=search,
                                               grid_points=grid_points)
    payload = {"beta_star": beta_star, "metadata": _metadata(cfg)}
    _emit_json(payload, cfg.get("out"))
    return 0


def cmd_backtest(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    _require(cfg, "returns")
    try:
        with open(cfg["returns"]) as fh:
            path_obj = realized.path_from_csv(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read returns file: {exc}") from exc
    bt_cfg = realized.BacktestConfig(
        rebalance_interval=int(cfg.get("rebalance", 1)),
        cost_rate=cfg.get("cost", 0.0),
        multi_leg=cfg.get("multi_leg", False))
    maturity = cfg.get("maturity", float(path_obj.times[-1]) or 1.0)
    spec = SwapSpec(maturity_T=maturity, beta=cfg.get("beta", 0.0),
                    fixed_leg=cfg.get("fixed_leg", 0.0))
    result = realized.backtest(path_obj, spec, bt_cfg)
    out = cfg.get("out")
    if out:
        with open(out, "w") as fh:
            for key in sorted(cfg):
                fh.write(f"# {key}={cfg[key]}\n")
            fh.write(realized.backtest_to_csv(result))
    summary = {
        "final_portfolio_value": result.portfolio_value[-1],
        "final_underlying_value": result.underlying_value[-1],
        "insolvent": result.insolvent,
        "metadata": _metadata(cfg),
    }
    print(json.dumps(summary, indent=2))
    return 0


def cmd_convergence(args: argparse.Namespace) -> int:
    cfg = _merged(args)
    params, _, _ = _model_objects(cfg)
    report = validate(params)
    if not report.feller_ok:
        raise ConfigurationError(
            f"Feller condition violated: 2*kappa*theta - gamma^2 = "
            f"{report.margin:.6g} <= 0")
    if "dr_sweep" in cfg:
        try:
            dr_values = tuple(float(tok) for tok in
                              cfg["dr_sweep"].replace(",", " ").split())
        except ValueError as exc:
            raise ConfigurationError(f"bad dr_sweep: {exc}") from exc
    else:
        dr_values = (0.05, 0.02, 0.01)
    if not dr_values:
        raise ConfigurationError("dr_sweep is empty")
    results = pipeline.convergence_study(
        params, cfg.get("maturity", 0.1), dr_values=dr_values,
        dt=cfg.get("dt", 1e-3),
        phi_max=cfg.get("phi_max", 64.0),
        phi_count=cfg.get("phi_count", 65))
    lines = [f"# {k}={cfg[k]}" for k in sorted(cfg)]
    lines.append("dr,rmse")
    prev = None
    for dr, err in results:
        flag = "" if prev is None or err <= prev * 1.0001 else "  # non-monotone"
        lines.append(f"{dr:.17g},{err:.17g}{flag}")
        prev = err
    text = "\n".join(lines) + "\n"
    out = cfg.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailhedge",
        description="Tail-hedged portfolio density solver and tools")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, flags):
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        for flag in flags:
            sp.add_argument(flag)
        sp.set_defaults(func=func)
        return sp

    add("solve", cmd_solve,
        ["--model", "--beta", "--out", "--density-out", "--n", "--dt",
         "--phi-max", "--phi-count", "--r-max", "--v-max", "--maturity"])
    add("simulate", cmd_simulate,
        ["--model", "--beta", "--out", "--samples", "--seed", "--paths",
         "--steps", "--maturity"])
    add("optimize-beta", cmd_optimize_beta,
        ["--model", "--out", "--samples", "--seed", "--paths", "--steps",
         "--search-lo", "--search-hi", "--maturity", "--beta"])
    add("backtest", cmd_backtest,
        ["--returns", "--beta", "--out", "--cost", "--rebalance"])
    add("convergence", cmd_convergence,
        ["--out", "--dt", "--dr-sweep", "--phi-max", "--phi-count",
         "--maturity"])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DataError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2
    except NumericalError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1
    except TailhedgeError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
