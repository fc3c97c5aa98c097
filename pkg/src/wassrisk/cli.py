"""Command-line interface.

Subcommands wrap the library computations one-to-one: ``transform``,
``distance``, ``robust-ev``, ``es``, ``robust-es``, ``call-closed-form``,
``table1``.  Single results are emitted as JSON, sweeps and tables as
CSV.  Exit codes: 0 success, 2 invalid inputs, 1 a computation failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .errors import ValidationError, WassriskError
from .measures import (
    DiscreteMeasure,
    ProductLognormal,
    build_grid,
    lognormal_quantile,
    measure_from_dict,
    price_call,
)
from .portfolio import DEFAULT_WEIGHT_ROWS, run_table1, table_to_csv
from .pwl import PwlConvex, lambda_c_transform
from .risk import RobustEsProblem, robust_es, robust_es_call_closed_form
from .duality import robust_expected_value
from .transport import dc_discrete

__all__ = ["main"]


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _json_text(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True)


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def _resolve_baseline(config: dict, nodes, tail_mass):
    try:
        measure = measure_from_dict(config["baseline"])
    except KeyError as exc:
        raise ValidationError("config needs a 'baseline' measure spec") from exc
    if isinstance(measure, DiscreteMeasure):
        return measure, measure
    grid = build_grid(
        measure,
        nodes if nodes else config.get("nodes"),
        tail_mass if tail_mass is not None else config.get("tail_mass", 1e-7),
    )
    return measure, grid


def _resolve_payoff(config: dict) -> PwlConvex:
    try:
        return PwlConvex.from_dict(config["payoff"])
    except KeyError as exc:
        raise ValidationError("config needs a 'payoff' spec") from exc


def _parse_sweep(spec: str):
    try:
        name, rng = spec.split("=", 1)
        a, b, n = rng.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise ValidationError(f"malformed sweep spec {spec!r}, want name=a:b:n") from exc
    if name != "theta":
        raise ValidationError(f"only theta sweeps are supported, got {name!r}")
    if n < 1:
        raise ValidationError("sweep needs at least one point")
    return np.linspace(a, b, n)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("WASSRISK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValidationError(f"WASSRISK_THREADS={env!r} is not an integer") from exc
    return 1


def _report_dict(report) -> dict:
    return {
        "value": report.value,
        "alpha": report.alpha,
        "lambda": _finite_or_none(report.lam),
        "v_min": report.v_min,
        "v_max": report.v_max,
        "alpha_evaluations": report.alpha_evaluations,
        "objective_evaluations": report.objective_evaluations,
        "converged": report.converged,
    }


def _cmd_transform(args) -> int:
    payoff = PwlConvex.from_dict(_load_json(args.payoff))
    if args.lam is None:
        raise ValidationError("transform needs --lam > 0")
    out = lambda_c_transform(payoff, args.lam)
    _emit(_json_text(out.to_dict()), args.out)
    return 0


def _cmd_distance(args) -> int:
    mu = measure_from_dict(_load_json(args.mu))
    nu = measure_from_dict(_load_json(args.nu))
    if not isinstance(mu, DiscreteMeasure) or not isinstance(nu, DiscreteMeasure):
        raise ValidationError("distance needs two discrete measures")
    value, coupling = dc_discrete(mu, nu)
    idx = np.argwhere(coupling.plan > 0)
    if args.format == "json":
        plan = [[int(i), int(j), float(coupling.plan[i, j])] for i, j in idx]
        _emit(_json_text({"value": value, "plan": plan}), args.out)
    else:
        lines = [f"value,{value:.12g}", "i,j,mass"]
        lines += [f"{i},{j},{coupling.plan[i, j]:.12g}" for i, j in idx]
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_robust_ev(args) -> int:
    config = _load_json(args.config)
    payoff = _resolve_payoff(config)
    _, baseline = _resolve_baseline(config, args.nodes, args.tail_mass)
    theta = float(config.get("theta", 0.0))
    tol = args.tol if args.tol is not None else config.get("tol", 1e-8)
    report = robust_expected_value(payoff, baseline, theta, tol=tol)
    _emit(
        _json_text(
            {
                "value": report.value,
                "lambda": _finite_or_none(report.lam),
                "evaluations": report.evaluations,
                "bracket": list(report.bracket) if report.bracket else None,
                "converged": report.converged,
            }
        ),
        args.out,
    )
    return 0


def _solve_from_config(config: dict, args, theta: float):
    payoff = _resolve_payoff(config)
    _, baseline = _resolve_baseline(config, args.nodes, args.tail_mass)
    try:
        beta = float(config["beta"])
    except KeyError as exc:
        raise ValidationError("config needs 'beta'") from exc
    problem = RobustEsProblem(
        payoff=payoff,
        baseline=baseline,
        theta=theta,
        beta=beta,
        alpha_tol=args.tol if args.tol is not None else config.get("alpha_tol", 1e-6),
        lambda_rel_tol=config.get("lambda_rel_tol", 1e-7),
    )
    return robust_es(problem)


def _cmd_es(args) -> int:
    config = _load_json(args.config)
    report = _solve_from_config(config, args, theta=0.0)
    _emit(_json_text(_report_dict(report)), args.out)
    return 0


def _cmd_robust_es(args) -> int:
    config = _load_json(args.config)
    if args.sweep:
        thetas = _parse_sweep(args.sweep)
        rows = [(t, _solve_from_config(config, args, float(t)).value) for t in thetas]
        if args.format == "json":
            _emit(
                _json_text([{"theta": float(t), "robust_es": v} for t, v in rows]),
                args.out,
            )
        else:
            lines = ["theta,robust_es"]
            lines += [f"{t:.12g},{v:.12g}" for t, v in rows]
            _emit("\n".join(lines) + "\n", args.out)
        return 0
    theta = float(config.get("theta", 0.0))
    report = _solve_from_config(config, args, theta)
    _emit(_json_text(_report_dict(report)), args.out)
    return 0


def _cmd_call_closed_form(args) -> int:
    if not 0.0 < args.beta < 1.0:
        raise ValidationError("beta must lie strictly in (0, 1)")
    if args.theta < 0:
        raise ValidationError("theta must be nonnegative")
    if args.sigma <= 0:
        raise ValidationError("sigma must be positive")
    m = ProductLognormal([args.mu], [args.sigma])
    grid = build_grid(m, args.nodes, args.tail_mass if args.tail_mass else 1e-7)
    q = lognormal_quantile(m, 0, args.beta)
    call_q = price_call(m, q, grid)
    correction = math.sqrt(2.0 * args.theta / (1.0 - args.beta))
    value = robust_es_call_closed_form(args.strike, m, args.theta, args.beta, grid)
    _emit(
        _json_text(
            {
                "q_beta": q,
                "call_q_beta": call_q,
                "correction": correction,
                "value": value,
            }
        ),
        args.out,
    )
    return 0


def _cmd_table1(args) -> int:
    config = _load_json(args.config) if args.config else {}
    weights = config.get("weights", [list(w) for w in DEFAULT_WEIGHT_ROWS])
    thetas = config.get("thetas", [0.0, 1.0])
    if not weights:
        raise ValidationError("config lists no weight vectors")
    rows = run_table1(
        weight_rows=weights,
        thetas=thetas,
        beta=float(config.get("beta", 0.95)),
        nodes=args.nodes if args.nodes else int(config.get("nodes", 201)),
        tail_mass=args.tail_mass if args.tail_mass is not None
        else float(config.get("tail_mass", 1e-7)),
        premium_measure=args.premium_measure
        or config.get("premium_measure", "risk_neutral"),
        threads=_threads(args),
    )
    if args.format == "json":
        _emit(_json_text(rows), args.out)
    else:
        _emit(table_to_csv(rows), args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wassrisk",
        description="Robust expectations and Expected Shortfall over "
        "transport ambiguity balls",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, fmt_default: str) -> None:
        p.add_argument("--out", help="write output to this path instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default=fmt_default)
        p.add_argument("--nodes", type=int, help="quadrature nodes per dimension")
        p.add_argument("--tail-mass", type=float, dest="tail_mass",
                       help="truncated tail mass per side")
        p.add_argument("--tol", type=float, help="search tolerance")
        p.add_argument("--threads", type=int,
                       help="worker threads (or WASSRISK_THREADS)")

    p = sub.add_parser("transform", help="sup-transform of a payoff")
    p.add_argument("payoff", help="payoff JSON path")
    p.add_argument("--lam", type=float, help="transform parameter, > 0")
    common(p, "json")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("distance", help="transport distance between discrete measures")
    p.add_argument("mu", help="first measure JSON path")
    p.add_argument("nu", help="second measure JSON path")
    common(p, "csv")
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("robust-ev", help="worst-case expected value")
    p.add_argument("--config", required=True, help="config JSON path")
    common(p, "json")
    p.set_defaults(func=_cmd_robust_ev)

    p = sub.add_parser("es", help="Expected Shortfall under the baseline")
    p.add_argument("--config", required=True, help="config JSON path")
    common(p, "json")
    p.set_defaults(func=_cmd_es)

    p = sub.add_parser("robust-es", help="worst-case Expected Shortfall")
    p.add_argument("--config", required=True, help="config JSON path")
    p.add_argument("--sweep", help="sweep spec theta=a:b:n, emits CSV rows")
    common(p, "json")
    p.set_defaults(func=_cmd_robust_es)

    p = sub.add_parser("call-closed-form",
                       help="analytic worst-case Expected Shortfall of a call")
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--mu", type=float, required=True, help="log-space location")
    p.add_argument("--sigma", type=float, required=True, help="log-space scale")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    common(p, "json")
    p.set_defaults(func=_cmd_call_closed_form)

    p = sub.add_parser("table1", help="three-asset portfolio table")
    p.add_argument("--config", help="config JSON path (optional)")
    p.add_argument("--premium-measure", dest="premium_measure",
                   choices=("risk_neutral", "physical"))
    common(p, "csv")
    p.set_defaults(func=_cmd_table1)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WassriskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
