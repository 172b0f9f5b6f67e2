"""Experiment configuration: a flat YAML mapping with dotted keys.

Example::

    domain.kind: interval        # interval | polygon | square | disk
    domain.a: 0.0
    domain.b: 1.0
    domain.left: dirichlet
    domain.right: neumann
    g.kind: constant             # constant | linear
    g.value: 1.0
    eps: 0.1                     # or a list for ``study``
    grid.h_rule: eps/4           # or grid.h: 0.025
    payoff.variant: strip_only   # strip_only | full_payoff | running | zero
    solver.tol: 1.0e-14
    simulate.episodes: 10000

Everything is validated by :func:`load_config` before any computation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .dpp import CHAIN_1D, LATTICE_2D, DEFAULT_MAX_ITER, DEFAULT_TOL
from .geometry import DIRICHLET, NEUMANN, Domain, DomainError

VARIANTS = ("strip_only", "full_payoff", "running", "zero")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class ExperimentConfig:
    domain: Domain
    g: Any
    g1: float
    eps: list
    h_ratio: float | None
    h: float | None
    mode: str
    variant: str
    tol: float | None
    max_iter: int | None
    episodes: int = 10000
    max_steps: int = 10**6
    start: Any = "all"
    strategy: str = "optimal_1d"
    seed: int = 0
    analysis: dict = field(default_factory=dict)
    out: str = "."
    raw: dict = field(default_factory=dict)

    def h_for(self, eps: float) -> float:
        if self.mode == CHAIN_1D:
            return eps
        return self.h if self.h is not None else eps * self.h_ratio


def _number(raw, key, default=None, kind=float):
    val = raw.get(key, default)
    if val is None:
        return None
    try:
        return kind(val)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {val!r}") from None


def _angle(val, key):
    if isinstance(val, (int, float)):
        return float(val)
    m = re.fullmatch(r"\s*([0-9.eE+-]*)\s*\*?\s*pi\s*", str(val))
    if m:
        return (float(m.group(1)) if m.group(1) else 1.0) * np.pi
    raise ConfigError(key, f"cannot parse angle {val!r}")


def _domain(raw) -> Domain:
    kind = raw.get("domain.kind", "interval")
    try:
        if kind == "interval":
            return Domain.interval(
                _number(raw, "domain.a", 0.0),
                _number(raw, "domain.b", 1.0),
                raw.get("domain.left", DIRICHLET),
                raw.get("domain.right", NEUMANN),
            )
        if kind == "square":
            return Domain.unit_square(tuple(raw.get("domain.labels", (DIRICHLET, NEUMANN, DIRICHLET, DIRICHLET))))
        if kind == "polygon":
            if "domain.vertices" not in raw:
                raise ConfigError("domain.vertices", "required for a polygon")
            return Domain.polygon(raw["domain.vertices"], raw.get("domain.labels", ()))
        if kind == "disk":
            arcs = raw.get("domain.arcs")
            if arcs is not None:
                arcs = [(_angle(s, "domain.arcs"), _angle(t, "domain.arcs"), lab) for s, t, lab in arcs]
            return Domain.disk(raw.get("domain.center", (0.0, 0.0)), _number(raw, "domain.radius", 1.0), arcs)
    except DomainError as exc:
        raise ConfigError("domain", str(exc)) from None
    raise ConfigError("domain.kind", f"unknown domain kind {kind!r}")


def _g(raw):
    kind = raw.get("g.kind", "constant")
    value = _number(raw, "g.value", 1.0)
    if kind == "constant":
        return value
    if kind == "linear":
        slope = np.asarray(raw.get("g.slope", [0.0]), dtype=float)

        def g(x, value=value, slope=slope):
            x = np.atleast_1d(x)
            return value + float(slope[: len(x)] @ x)

        return g
    raise ConfigError("g.kind", f"unknown profile {kind!r}")


def _check_eps(domain, eps_list, mode, h, h_ratio):
    for e in eps_list:
        if not e > 0:
            raise ConfigError("eps", f"must be positive, got {e}")
        if mode == CHAIN_1D:
            n = (domain.b - domain.a) / e
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ConfigError("eps", f"(b - a)/eps = {n:g} is not an integer")
        else:
            hh = h if h is not None else e * h_ratio
            if not 0 < hh <= e / 3 * (1 + 1e-12):
                raise ConfigError("grid.h", f"need 0 < h <= eps/3, got h={hh:g} for eps={e:g}")


def parse_config(raw: dict, out: str | None = None, seed: int | None = None) -> ExperimentConfig:
    raw = dict(raw or {})
    domain = _domain(raw)
    g = _g(raw)
    g1 = float(g(np.array([domain.b]))) if callable(g) and domain.kind == "interval" else (
        float(g) if not callable(g) else np.nan)
    if not callable(g) and not g > 0 and raw.get("payoff.variant") != "zero":
        raise ConfigError("g.value", "g must be positive")

    eps = raw.get("eps")
    if eps is None:
        raise ConfigError("eps", "required")
    eps_list = [float(e) for e in (eps if isinstance(eps, (list, tuple)) else [eps])]
    if not eps_list:
        raise ConfigError("eps", "empty list")
    mode = raw.get("grid.mode", CHAIN_1D if domain.kind == "interval" else LATTICE_2D)
    if mode not in (CHAIN_1D, LATTICE_2D):
        raise ConfigError("grid.mode", f"unknown mode {mode!r}")
    if mode == CHAIN_1D and domain.kind != "interval":
        raise ConfigError("grid.mode", "chain_1d needs an interval domain")
    if mode == LATTICE_2D and domain.kind == "interval":
        raise ConfigError("grid.mode", "lattice_2d needs a two-dimensional domain")
    h = _number(raw, "grid.h")
    h_ratio = None
    if h is None:
        rule = str(raw.get("grid.h_rule", "eps/4")).replace(" ", "")
        m = re.fullmatch(r"eps/([0-9.]+)", rule)
        if not m:
            raise ConfigError("grid.h_rule", f"expected 'eps/N', got {rule!r}")
        h_ratio = 1.0 / float(m.group(1))
    _check_eps(domain, eps_list, mode, h, h_ratio)

    variant = raw.get("payoff.variant", "full_payoff" if mode == CHAIN_1D else "running")
    if variant not in VARIANTS:
        raise ConfigError("payoff.variant", f"must be one of {VARIANTS}")

    tol = _number(raw, "solver.tol", DEFAULT_TOL[mode])
    if not tol > 0:
        raise ConfigError("solver.tol", "must be positive")
    max_iter = _number(raw, "solver.max_iter", DEFAULT_MAX_ITER[mode], int)
    if max_iter < 1:
        raise ConfigError("solver.max_iter", "must be at least 1")

    episodes = _number(raw, "simulate.episodes", 10000, int)
    if episodes < 1:
        raise ConfigError("simulate.episodes", "must be at least 1")
    max_steps = _number(raw, "simulate.max_steps", 10**6, int)
    if max_steps < 1:
        raise ConfigError("simulate.max_steps", "must be at least 1")
    strategy = raw.get("simulate.strategy", "optimal_1d" if mode == CHAIN_1D else "greedy")
    if strategy not in ("optimal_1d", "greedy"):
        raise ConfigError("simulate.strategy", f"unknown strategy {strategy!r}")
    if strategy == "optimal_1d" and mode != CHAIN_1D:
        raise ConfigError("simulate.strategy", "optimal_1d needs a chain_1d grid")
    start = raw.get("simulate.start", "all")
    if start != "all":
        if not isinstance(start, (list, tuple)):
            start = [start]
        try:
            start = [int(s) for s in start]
        except (TypeError, ValueError):
            raise ConfigError("simulate.start", "expected 'all' or a list of node indices") from None
    if seed is None:
        seed = _number(raw, "simulate.seed", 0, int)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")

    analysis = {k[len("analysis."):]: v for k, v in raw.items() if k.startswith("analysis.")}
    return ExperimentConfig(
        domain=domain, g=g, g1=g1, eps=eps_list, h_ratio=h_ratio, h=h, mode=mode,
        variant=variant, tol=tol, max_iter=max_iter, episodes=episodes, max_steps=max_steps,
        start=start, strategy=strategy, seed=int(seed), analysis=analysis,
        out=out or raw.get("output.dir", "."), raw=raw,
    )


def load_config(path, out: str | None = None, seed: int | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError("config", str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "expected a flat key: value mapping")
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(nested[0], "nested sections are not allowed; use dotted keys")
    return parse_config(raw, out, seed)
