"""Command line front end.

    tugofwar {solve,oracle1d,simulate,analyze,study} --config PATH [--out DIR] [--seed U64] [--threads N]

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 solver did
not converge.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import _csv
from .analysis import (
    AnalysisError,
    AnalysisReport,
    BarrierParams,
    ModulusParams,
    barrier_bound_report,
    check_supersolution,
    convergence_study,
    first_stage_value,
    lipschitz_report,
    modulus_check,
    residual_summaries,
    write_reports,
)
from .config import ConfigError, ExperimentConfig, load_config
from .dpp import RunningPayoff, build_grid, solve_dpp
from .game import PLAYER_I, PLAYER_II, estimate_value, greedy_strategy, optimal_strategy_1d
from .geometry import transversality_constant
from .oracle import FULL_PAYOFF, STRIP_ONLY, Oracle1DParams, oracle_csv

log = logging.getLogger("tugofwar")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NOCONV = 0, 1, 2, 3


class _NotConverged(RuntimeError):
    pass


def _solve(cfg: ExperimentConfig, eps: float):
    grid = build_grid(cfg.domain, eps, cfg.h_for(eps), cfg.mode)
    payoff = RunningPayoff.from_variant(cfg.variant, cfg.g, eps)
    return grid, payoff, solve_dpp(grid, payoff, cfg.tol, cfg.max_iter)


def _out(cfg, name):
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def cmd_solve(cfg: ExperimentConfig, threads: int = 1) -> int:
    eps = cfg.eps[0]
    grid, _, u = _solve(cfg, eps)
    u.to_csv(_out(cfg, "value.csv"))
    try:
        L = lipschitz_report(u, eps).measured["L"]
    except AnalysisError:
        L = 0.0
    summary = {
        "eps": eps,
        "h": grid.h,
        "nodes": grid.n_nodes,
        "iterations": u.iterations,
        "residual": u.residual,
        "converged": u.converged,
        "sup_u": float(u.values.max()),
        "lipschitz": L,
    }
    with open(_out(cfg, "summary.txt"), "w") as fh:
        fh.writelines(f"{k}={_csv.fmt(v)}\n" for k, v in summary.items())
    print(" ".join(f"{k}={_csv.fmt(v)}" for k, v in summary.items()))
    if not u.converged:
        raise _NotConverged(u)
    return EXIT_OK


def cmd_oracle1d(cfg: ExperimentConfig, threads: int = 1) -> int:
    variant = {"strip_only": STRIP_ONLY, "full_payoff": FULL_PAYOFF}.get(cfg.variant)
    if variant is None:
        raise ConfigError("payoff.variant", "oracle1d supports strip_only and full_payoff")
    if cfg.domain.kind != "interval" or (cfg.domain.a, cfg.domain.b) != (0.0, 1.0):
        raise ConfigError("domain", "oracle1d is defined on the interval (0, 1)")
    try:
        p = Oracle1DParams(cfg.eps[0], cfg.g1, variant)
    except ValueError as exc:
        raise ConfigError("eps", str(exc)) from None
    oracle_csv(p, _out(cfg, "oracle.csv"))
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, threads: int = 1) -> int:
    eps = cfg.eps[0]
    grid, payoff, u = _solve(cfg, eps) if cfg.strategy == "greedy" else (None, None, None)
    if grid is None:
        grid = build_grid(cfg.domain, eps, cfg.h_for(eps), cfg.mode)
        payoff = RunningPayoff.from_variant(cfg.variant, cfg.g, eps)
        sI, sII = optimal_strategy_1d(PLAYER_I, grid), optimal_strategy_1d(PLAYER_II, grid)
    else:
        if not u.converged:
            raise _NotConverged(u)
        sI, sII = greedy_strategy(u, PLAYER_I), greedy_strategy(u, PLAYER_II)
    starts = range(grid.n_nodes) if cfg.start == "all" else cfg.start
    rows = []
    for i in starts:
        if not 0 <= i < grid.n_nodes:
            raise ConfigError("simulate.start", f"node {i} out of range")
        est = estimate_value(grid, payoff, sI, sII, int(i), cfg.episodes, cfg.seed, cfg.max_steps, threads)
        if est.warning:
            log.warning("start node %d: %s", i, est.warning)
        rows.append((int(i), *grid.nodes[i], est.mean, est.std_error, est.episodes, est.truncated_episodes))
    cols = ["node_index", "x"] + (["y"] if grid.nodes.shape[1] == 2 else []) + [
        "mean", "std_error", "episodes", "truncated"]
    _csv.write(_out(cfg, "estimates.csv"), cols, rows, {"eps": eps, "seed": cfg.seed})
    return EXIT_OK


def _failed(name, message, params=None):
    return AnalysisReport(name, False, -np.inf, None, params or {}, {"error": message.replace(" ", "_")})


def cmd_analyze(cfg: ExperimentConfig, threads: int = 1) -> int:
    a = cfg.analysis
    eps = cfg.eps[0]
    grid, payoff, u = _solve(cfg, eps)
    if not u.converged:
        raise _NotConverged(u)
    reports = []
    if a.get("lipschitz", False):
        reports.append(lipschitz_report(u, float(a.get("lipschitz_separation", eps)),
                                        bound=a.get("lipschitz_bound")))
    if a.get("modulus", False):
        slope = a.get("modulus_slope", 2 * cfg.g1 if cfg.mode == "chain_1d" else None)
        if slope is None:
            raise ConfigError("analysis.modulus_slope", "required outside chain mode")
        m = ModulusParams(float(a.get("modulus_a_eps", eps)), slope=float(slope),
                          bound=float(a.get("modulus_bound", np.inf)))
        reports.append(modulus_check(u, m))
    if a.get("barrier", False):
        x0 = np.asarray(a.get("barrier_x0", cfg.domain.centroid()), dtype=float)
        K = float(a.get("barrier_K", cfg.g1 / 2))
        c = a.get("barrier_c")
        if c is None:
            c = transversality_constant(cfg.domain, x0, int(a.get("transversality_samples", 4096)))
        try:
            p = BarrierParams(x0, K, float(c), eps)
        except AnalysisError as exc:
            reports.append(_failed("supersolution", str(exc), {"K": K, "c": float(c), "eps": eps}))
        else:
            reports.append(check_supersolution(p, grid, ball=a.get("barrier_ball", "exact")))
            if a.get("barrier_bound", False):
                v = first_stage_value(grid, K, x0, tol=cfg.tol, max_iter=cfg.max_iter)
                reports.append(barrier_bound_report(v, p))
    if a.get("residuals", False):
        reports += _residual_reports(cfg, u, a)
    path = _out(cfg, "report.txt")
    write_reports(reports, path)
    for r in reports:
        print(r.to_record())
    bad = [r for r in reports if not r.passed]
    if bad:
        worst = min(bad, key=lambda r: r.margin)
        print(f"FAILED {worst.name}: margin {worst.margin:g} at {worst.location}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _residual_reports(cfg, u, a):
    """Median finite-difference residuals; informational unless ``residual_tol`` is set."""
    h_fd = float(a.get("residual_h_fd", 2 * u.grid.h))
    ires, nres = residual_summaries(u, cfg.g, h_fd)
    tol = a.get("residual_tol")
    out = []
    for name, val in (("interior_residual", ires), ("neumann_residual", nres)):
        if np.isnan(val):
            continue
        if tol is None:
            out.append(AnalysisReport(name, True, np.inf, None, {"h_fd": h_fd}, {"median_abs": val}))
        else:
            out.append(AnalysisReport(name, bool(val <= float(tol)), float(tol) - val, None,
                                      {"h_fd": h_fd, "tol": float(tol)}, {"median_abs": val}))
    return out


def cmd_study(cfg: ExperimentConfig, threads: int = 1) -> int:
    ratio = cfg.h_ratio

    def h_rule(e):
        return cfg.h if cfg.h is not None else e * ratio

    result = convergence_study(cfg.domain, cfg.g, cfg.eps, h_rule, cfg.variant, cfg.tol, cfg.max_iter)
    result.to_csv(_out(cfg, "study.csv"))
    print(result.to_csv(), end="")
    if not all(r.converged for r in result.rows):
        return EXIT_NOCONV
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "oracle1d": cmd_oracle1d,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "study": cmd_study,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tugofwar", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="flat YAML config with dotted keys")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
    parser.add_argument("--threads", type=int, default=1, help="maximum worker count")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("threads", "must be at least 1")
        cfg = load_config(args.config, args.out, args.seed)
        return COMMANDS[args.command](cfg, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NotConverged as exc:
        u = exc.args[0]
        print(f"solver did not converge: residual {u.residual:g} after {u.iterations} iterations",
              file=sys.stderr)
        return EXIT_NOCONV


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
