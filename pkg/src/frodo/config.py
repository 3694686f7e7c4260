"""Run-config files: TOML (or JSON) with ``[run]``, ``[exp1]`` or ``[exp2]`` tables.

Every problem is reported as a :class:`ConfigError` whose message starts with
the dotted path of the offending field.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .experiments import DEFAULT_EXP2_OPTIMIZERS, FIXED_STARTS, FederatedSpec, SweepSpec
from .objectives import EXP1_FORMS, DiagonalQuadratic, exp1_objectives
from .optimizers import VARIANTS, OptimizerConfig
from .simulator import RunConfig
from .topology import from_edges, fully_connected, is_strongly_connected

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["ConfigError", "load_config", "config_kind", "build_run", "build_sweep", "build_federated"]


class ConfigError(ValueError):
    pass


def load_config(path):
    """Parse a ``.toml`` or ``.json`` file into a dict."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror or exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc


def config_kind(raw):
    kinds = [k for k in ("run", "exp1", "exp2") if k in raw]
    if len(kinds) != 1:
        raise ConfigError("config: expected exactly one of the tables [run], [exp1], [exp2]")
    return kinds[0]


def _get(table, key, prefix, kind, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"{prefix}.{key}: required")
        return default
    value = table[key]
    try:
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise ValueError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError
            return value
        if kind is str:
            if not isinstance(value, str):
                raise ValueError
            return value
        return value
    except (TypeError, ValueError):
        raise ConfigError(f"{prefix}.{key}: expected {kind.__name__}, got {value!r}") from None


def _pair(table, key, prefix, kind, default):
    value = table.get(key, default)
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{prefix}.{key}: expected a two-element list, got {value!r}")
    try:
        return tuple(kind(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{prefix}.{key}: expected numbers, got {value!r}") from None


def _vector(value, prefix, key):
    try:
        arr = [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{prefix}.{key}: expected a list of numbers, got {value!r}") from None
    if not arr:
        raise ConfigError(f"{prefix}.{key}: must not be empty")
    return arr


def _unknown(table, allowed, prefix):
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"{prefix}.{extra[0]}: unknown field")


_OPT_FIELDS = ("variant", "alpha", "beta", "lambda", "horizon", "momentum", "beta1", "beta2", "eps")


def parse_optimizer(table, prefix="optimizer", variant=None):
    """Cross-validate an optimizer table and return an :class:`OptimizerConfig`."""
    _unknown(table, _OPT_FIELDS, prefix)
    variant = variant or _get(table, "variant", prefix, str, required=True)
    if variant not in VARIANTS:
        raise ConfigError(f"{prefix}.variant: unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")
    alpha = _get(table, "alpha", prefix, float, required=True)
    if not alpha > 0:
        raise ConfigError(f"{prefix}.alpha: {alpha} must be > 0")
    kwargs = {"alpha": alpha}

    memory = variant in ("fractional", "heavy_ball")
    if "beta" in table:
        beta = _get(table, "beta", prefix, float)
        if not memory and beta != 0:
            raise ConfigError(f"{prefix}.beta: variant {variant!r} has no memory term; omit beta or set it to 0")
        if beta < 0:
            raise ConfigError(f"{prefix}.beta: {beta} must be >= 0")
        kwargs["beta"] = beta
    elif memory:
        raise ConfigError(f"{prefix}.beta: required for variant {variant!r}")

    if variant == "fractional":
        lam = _get(table, "lambda", prefix, float, required=True)
        if not 0.0 < lam < 1.0:
            raise ConfigError(f"{prefix}.lambda: {lam} outside the legal interval (0, 1)")
        horizon = _get(table, "horizon", prefix, int, required=True)
        if horizon < 1:
            raise ConfigError(f"{prefix}.horizon: {horizon} must be a positive integer")
        kwargs.update(lam=lam, horizon=horizon)
    else:
        if "lambda" in table:
            raise ConfigError(f"{prefix}.lambda: only valid for variant 'fractional', not {variant!r}")
        if variant == "heavy_ball":
            horizon = _get(table, "horizon", prefix, int, default=1)
            if horizon != 1:
                raise ConfigError(f"{prefix}.horizon: heavy_ball uses a memory of exactly 1, got {horizon}")
            kwargs["horizon"] = 1
        elif "horizon" in table:
            raise ConfigError(f"{prefix}.horizon: only valid for memory variants, not {variant!r}")

    if variant == "nesterov":
        mom = _get(table, "momentum", prefix, float, default=0.9)
        if not 0.0 <= mom < 1.0:
            raise ConfigError(f"{prefix}.momentum: {mom} outside [0, 1)")
        kwargs["momentum"] = mom
    elif "momentum" in table:
        raise ConfigError(f"{prefix}.momentum: only valid for variant 'nesterov'")

    adam_keys = {"beta1": "adam_beta1", "beta2": "adam_beta2", "eps": "adam_eps"}
    for key, name in adam_keys.items():
        if key in table:
            if variant != "adam":
                raise ConfigError(f"{prefix}.{key}: only valid for variant 'adam'")
            value = _get(table, key, prefix, float)
            if key == "eps" and not value > 0:
                raise ConfigError(f"{prefix}.eps: {value} must be > 0")
            if key != "eps" and not 0.0 <= value < 1.0:
                raise ConfigError(f"{prefix}.{key}: {value} outside [0, 1)")
            kwargs[name] = value
    try:
        return OptimizerConfig(variant, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"{prefix}.{exc}") from None


def parse_graph(table, prefix="graph"):
    _unknown(table, ("fully_connected", "include_self", "num_agents", "edges"), prefix)
    include_self = _get(table, "include_self", prefix, bool, default=True)
    if "fully_connected" in table:
        if "edges" in table:
            raise ConfigError(f"{prefix}.edges: give either fully_connected or edges, not both")
        n = _get(table, "fully_connected", prefix, int)
        if n < 1:
            raise ConfigError(f"{prefix}.fully_connected: {n} must be >= 1")
        try:
            g = fully_connected(n, include_self)
        except ValueError as exc:
            raise ConfigError(f"{prefix}.fully_connected: {exc}") from None
        return g, {"fully_connected": n, "include_self": include_self}
    if "edges" not in table:
        raise ConfigError(f"{prefix}: needs fully_connected = N or an edges list")
    n = _get(table, "num_agents", prefix, int, required=True)
    edges = table["edges"]
    if not isinstance(edges, list) or not all(isinstance(e, list) and len(e) == 2 for e in edges):
        raise ConfigError(f"{prefix}.edges: expected a list of [from, to] pairs")
    try:
        g = from_edges(n, [tuple(int(v) for v in e) for e in edges])
    except ValueError as exc:
        raise ConfigError(f"{prefix}.edges: {exc}") from None
    if not is_strongly_connected(g):
        raise ConfigError(f"{prefix}.edges: graph is not strongly connected")
    return g, {"num_agents": n, "edges": sorted([list(e) for e in g.edges])}


def parse_objectives(table, num_agents, prefix="objective"):
    _unknown(table, ("family", "f34_form", "agents"), prefix)
    family = _get(table, "family", prefix, str, required=True)
    if family == "exp1":
        form = _get(table, "f34_form", prefix, str, default="squared")
        if form not in EXP1_FORMS:
            raise ConfigError(f"{prefix}.f34_form: expected one of {EXP1_FORMS}, got {form!r}")
        if num_agents != 4:
            raise ConfigError(f"{prefix}.family: 'exp1' needs exactly 4 agents, graph has {num_agents}")
        return exp1_objectives(form), {"family": "exp1", "f34_form": form}
    if family == "quadratic":
        agents = table.get("agents")
        if not isinstance(agents, list) or len(agents) != num_agents:
            raise ConfigError(f"{prefix}.agents: need one table per agent ({num_agents})")
        objs = []
        for i, a in enumerate(agents):
            p = f"{prefix}.agents[{i}]"
            _unknown(a, ("curvature", "center", "offset"), p)
            curv = _vector(a.get("curvature"), p, "curvature")
            center = _vector(a.get("center", [0.0] * len(curv)), p, "center")
            if len(center) != len(curv):
                raise ConfigError(f"{p}.center: length {len(center)} differs from curvature length {len(curv)}")
            objs.append(DiagonalQuadratic(curv, center, _get(a, "offset", p, float, default=0.0), name=f"f{i + 1}"))
        if len({o.dim for o in objs}) != 1:
            raise ConfigError(f"{prefix}.agents: all agents must share one dimension")
        return objs, {"family": "quadratic", "agents": [o.describe() for o in objs]}
    raise ConfigError(f"{prefix}.family: unknown family {family!r}; expected 'exp1' or 'quadratic'")


def _sum_minimizer(objectives):
    """Minimizer of a sum of diagonal quadratics, or None if not strongly convex."""
    curv = sum(o.curvature for o in objectives)
    if np.any(curv <= 0):
        return None
    return (sum(o.curvature * o.center for o in objectives) / curv).tolist()


def build_run(raw, seed=None):
    """``RunConfig`` from a parsed ``[run]`` config."""
    for key in raw:
        if key not in ("run", "graph", "objective", "optimizer"):
            raise ConfigError(f"{key}: unknown table")
    run_t = raw.get("run", {})
    _unknown(run_t, ("rounds", "tolerance", "seed", "x0", "x_star", "record_trajectory"), "run")
    graph, graph_meta = parse_graph(raw.get("graph", {}))
    objectives, obj_meta = parse_objectives(raw.get("objective", {}), graph.num_agents)
    optimizer = parse_optimizer(raw.get("optimizer", {}))
    rounds = _get(run_t, "rounds", "run", int, required=True)
    if rounds < 1:
        raise ConfigError(f"run.rounds: {rounds} must be >= 1")
    tol = _get(run_t, "tolerance", "run", float, default=1e-3)
    if not tol > 0:
        raise ConfigError(f"run.tolerance: {tol} must be > 0")
    x0 = _vector(run_t.get("x0"), "run", "x0") if "x0" in run_t else None
    if x0 is None:
        raise ConfigError("run.x0: required")
    if len(x0) != objectives[0].dim:
        raise ConfigError(f"run.x0: length {len(x0)} differs from objective dimension {objectives[0].dim}")
    if "x_star" in run_t:
        x_star = _vector(run_t["x_star"], "run", "x_star")
        if len(x_star) != len(x0):
            raise ConfigError("run.x_star: length differs from x0")
    else:
        x_star = _sum_minimizer(objectives)
        if x_star is None:
            raise ConfigError("run.x_star: objective has no unique minimizer; give x_star explicitly")
    run_seed = seed if seed is not None else _get(run_t, "seed", "run", int, default=0)
    record = _get(run_t, "record_trajectory", "run", bool, default=True)
    meta = {
        "graph": graph_meta,
        "objective": obj_meta,
        "optimizer": optimizer.to_dict(),
        "rounds": rounds,
        "tolerance": tol,
        "x0": x0,
        "x_star": x_star,
        "seed": run_seed,
    }
    return RunConfig(graph=graph, objectives=objectives, optimizer=optimizer, rounds=rounds, x0=x0,
                     tolerance=tol, x_star=x_star, seed=run_seed, record_trajectory=record, meta=meta)


_SWEEP_FIELDS = ("variants", "draws", "alpha_range", "beta_divisors", "lambda_range", "horizon_range",
                 "start_points", "uniform_starts", "rounds", "tolerance", "seed", "f34_form",
                 "record_trajectory", "write_runs")


def build_sweep(raw, seed=None):
    """``(SweepSpec, options)`` from a parsed ``[exp1]`` config."""
    t = raw["exp1"]
    p = "exp1"
    _unknown(t, _SWEEP_FIELDS, p)
    variants = t.get("variants", list(SweepSpec.variants))
    if not isinstance(variants, list) or not variants:
        raise ConfigError(f"{p}.variants: expected a non-empty list")
    for v in variants:
        if v not in ("fractional", "heavy_ball", "no_memory", "plain_gd"):
            raise ConfigError(f"{p}.variants: {v!r} is not a quadratic-sweep variant")
    starts = t.get("start_points", [list(s) for s in FIXED_STARTS])
    if not isinstance(starts, list) or not all(isinstance(s, list) and len(s) == 2 for s in starts):
        raise ConfigError(f"{p}.start_points: expected a list of [x1, x2] pairs")
    kwargs = dict(
        variants=tuple(variants),
        draws=_get(t, "draws", p, int, default=100),
        alpha_range=_pair(t, "alpha_range", p, float, (0.6, 1.0)),
        beta_divisors=_pair(t, "beta_divisors", p, float, (2.5, 1.5)),
        lambda_range=_pair(t, "lambda_range", p, float, (0.1, 0.2)),
        horizon_range=_pair(t, "horizon_range", p, int, (80, 100)),
        start_points=tuple(tuple(float(v) for v in s) for s in starts),
        uniform_starts=_get(t, "uniform_starts", p, int, default=1),
        rounds=_get(t, "rounds", p, int, default=10_000),
        tolerance=_get(t, "tolerance", p, float, default=1e-3),
        seed=seed if seed is not None else _get(t, "seed", p, int, default=0),
        f34_form=_get(t, "f34_form", p, str, default="squared"),
        record_trajectory=_get(t, "record_trajectory", p, bool, default=False),
    )
    spec = SweepSpec(**kwargs)
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return spec, {"write_runs": _get(t, "write_runs", p, bool, default=True)}


_FED_FIELDS = ("variants", "repetitions", "num_agents", "hidden", "batch_size", "rounds", "samples_per_agent",
               "data_source", "mnist_dir", "n_features", "n_classes", "spread", "center_scale", "seed",
               "target_factor", "target_loss", "optimizers", "write_runs")


def build_federated(raw, seed=None):
    """``(FederatedSpec, options)`` from a parsed ``[exp2]`` config."""
    t = raw["exp2"]
    p = "exp2"
    _unknown(t, _FED_FIELDS, p)
    defaults = FederatedSpec()
    variants = t.get("variants", list(defaults.variants))
    if not isinstance(variants, list) or not variants:
        raise ConfigError(f"{p}.variants: expected a non-empty list")
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"{p}.variants: unknown variant {v!r}")
    opt_tables = t.get("optimizers", {})
    if not isinstance(opt_tables, dict):
        raise ConfigError(f"{p}.optimizers: expected a table per variant")
    optimizers = {}
    for v in variants:
        table = dict(DEFAULT_EXP2_OPTIMIZERS.get(v, {}))
        if "lam" in table:
            table["lambda"] = table.pop("lam")
        table.update(opt_tables.get(v, {}))
        cfg = parse_optimizer(table, prefix=f"{p}.optimizers.{v}", variant=v)
        params = {"alpha": cfg.alpha}
        if v in ("fractional", "heavy_ball"):
            params["beta"] = cfg.beta
        if v == "fractional":
            params.update(lam=cfg.lam, horizon=cfg.horizon)
        if v == "nesterov":
            params["momentum"] = cfg.momentum
        if v == "adam":
            params.update(adam_beta1=cfg.adam_beta1, adam_beta2=cfg.adam_beta2, adam_eps=cfg.adam_eps)
        optimizers[v] = params
    hidden = t.get("hidden", list(defaults.hidden))
    if not isinstance(hidden, list) or not all(isinstance(h, int) and h > 0 for h in hidden):
        raise ConfigError(f"{p}.hidden: expected a list of positive layer widths")
    target_loss = _get(t, "target_loss", p, float)
    kwargs = dict(
        variants=tuple(variants),
        repetitions=_get(t, "repetitions", p, int, default=defaults.repetitions),
        num_agents=_get(t, "num_agents", p, int, default=defaults.num_agents),
        hidden=tuple(hidden),
        batch_size=_get(t, "batch_size", p, int, default=defaults.batch_size),
        rounds=_get(t, "rounds", p, int, default=defaults.rounds),
        samples_per_agent=_get(t, "samples_per_agent", p, int, default=defaults.samples_per_agent),
        data_source=_get(t, "data_source", p, str, default=defaults.data_source),
        mnist_dir=_get(t, "mnist_dir", p, str),
        n_features=_get(t, "n_features", p, int, default=defaults.n_features),
        n_classes=_get(t, "n_classes", p, int, default=defaults.n_classes),
        spread=_get(t, "spread", p, float, default=defaults.spread),
        center_scale=_get(t, "center_scale", p, float, default=defaults.center_scale),
        seed=seed if seed is not None else _get(t, "seed", p, int, default=defaults.seed),
        target_factor=_get(t, "target_factor", p, float, default=defaults.target_factor),
        target_loss=target_loss,
        optimizers=optimizers,
    )
    spec = FederatedSpec(**kwargs)
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return spec, {"write_runs": _get(t, "write_runs", p, bool, default=True)}
