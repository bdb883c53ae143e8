"""Command-line entry point.

Every flag has a matching key in the optional JSON config file (dashes
become underscores). Values from ``--config`` are read first and explicit
flags override them. Output is JSON on stdout unless ``--format csv`` or
``--out`` says otherwise.

Exit codes: 0 success, 2 invalid configuration, 1 failure while running.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Callable, Sequence

import numpy as np

from .density_evolution import DEConfig, bp_threshold, local_thresholds
from .isb import ISBGraph, build_isb, evaluate_schedule, isb_to_dict, schedule_from_dict
from .protograph import (
    ConstructionError,
    CoupledProtograph,
    ProtographFormatError,
    build_generalized,
    build_scldpcl,
    design_rate,
    format_protograph,
    load_protograph,
    local_protograph,
    make_grid_partition,
    make_hyper_partition,
    make_memory_partition,
    parse_partition,
)
from .semi_global import ScheduleError, chain_balanced_schedule, sg_complexity, sg_threshold, t1_curves
from .simulator import Mode, SimulationError, TrialConfig, monte_carlo, stats_to_csv
from .varying_channel import (
    BudgetError,
    ChannelCdf,
    ChannelSpecError,
    default_partition,
    extreme_probs,
    mc_success_prob,
    one_sided_lower_bound,
    one_sided_quantized,
    p0_exact,
    quantized_lower_bound,
    recursive_lower_bound,
)


class ConfigError(ValueError):
    """Bad or inconsistent command configuration."""


CONFIG_ERRORS = (
    ConfigError,
    ConstructionError,
    ProtographFormatError,
    ChannelSpecError,
    ScheduleError,
    SimulationError,
    BudgetError,
)

COMMANDS = (
    "construct",
    "rate",
    "threshold",
    "local-thresholds",
    "sg-threshold",
    "complexity",
    "bound",
    "mc-prob",
    "simulate",
    "schedule-eval",
    "t1-curves",
    "isb",
)

DEFAULTS: dict[str, Any] = {
    "construction": "staircase",
    "T": None,
    "protograph": None,
    "partition": None,
    "allow_extreme": True,
    "format": "json",
    "out": None,
    "jobs": None,
    "max_iters": DEConfig.max_iters,
    "fixed_point_iters": DEConfig.fixed_point_iters,
    "conv_tol": DEConfig.conv_tol,
    "erasure_floor": DEConfig.erasure_floor,
    "bisect_tol": DEConfig.bisect_tol,
    "mode": "global",
    "m": None,
    "d": 0,
    "channel": None,
    "K": 40,
    "j": 2,
    "method": "quantized",
    "trials": 1000,
    "L": 100,
    "eps": None,
    "schedule": None,
    "delta_l": None,
    "delta_r": None,
    "resolution": 101,
}


# ----------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser, graph: bool = True) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with default values for any flag")
    p.add_argument("--format", choices=("json", "csv", "text"), default=S)
    p.add_argument("--out", default=S, help="write the payload to this file instead of stdout")
    p.add_argument("--seed", type=int, default=S, help="master seed (falls back to $SCLDPCL_SEED, then 0)")
    p.add_argument("--jobs", type=int, default=S, help="worker processes (default: all cores)")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=S)
    p.add_argument("--fixed-point-iters", dest="fixed_point_iters", type=int, default=S)
    p.add_argument("--conv-tol", dest="conv_tol", type=float, default=S)
    p.add_argument("--erasure-floor", dest="erasure_floor", type=float, default=S)
    p.add_argument("--bisect-tol", dest="bisect_tol", type=float, default=S)
    if graph:
        p.add_argument("--lrtm", nargs=4, type=int, metavar=("L", "R", "T", "M"), default=S,
                       help="degree, width, coupling rows and sub-block count")
        p.add_argument("--construction", choices=("staircase", "memory", "hyper", "grid"), default=S)
        p.add_argument("--T", dest="T", type=int, default=S, help="memory for hyper and grid constructions")
        p.add_argument("--protograph", default=S, help="protograph text file")
        p.add_argument("--partition", default=S, help="partition matrix text file (needs M from --lrtm)")
        p.add_argument("--strict-locality", dest="allow_extreme", action="store_false", default=S,
                       help="reject t = 0 and t = l - 1 staircase chains")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="scldpcl", description="Sub-block-local spatially coupled LDPC analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p, graph=name not in ("t1-curves",))
        if name == "threshold":
            p.add_argument("--mode", choices=("global", "local"), default=S)
            p.add_argument("--m", type=int, default=S, help="sub-block (1-based) for local mode")
        if name in ("sg-threshold", "mc-prob", "bound", "simulate"):
            p.add_argument("--m", type=int, default=S, help="target sub-block, 1-based")
            p.add_argument("--d", type=int, default=S, help="number of helpers")
        if name in ("sg-threshold", "schedule-eval", "simulate"):
            p.add_argument("--schedule", default=S, help="schedule as JSON text or a JSON file")
        if name == "complexity":
            p.add_argument("--d", type=int, default=S)
        if name in ("bound", "mc-prob", "simulate"):
            p.add_argument("--channel", default=S, help='CDF as JSON, e.g. {"kind":"uniform","a":0,"b":0.4}')
        if name == "bound":
            p.add_argument("--method", choices=("p0", "quantized", "recursive", "one-sided"), default=S)
            p.add_argument("--K", dest="K", type=int, default=S)
            p.add_argument("--j", type=int, default=S)
        if name in ("mc-prob", "simulate"):
            p.add_argument("--trials", type=int, default=S)
        if name == "simulate":
            p.add_argument("--L", dest="L", type=int, default=S, help="lifting parameter")
            p.add_argument("--eps", type=float, nargs="+", default=S)
            p.add_argument("--mode", choices=("global", "local", "semiglobal"), default=S)
        if name == "t1-curves":
            p.add_argument("--lr", nargs=2, type=int, metavar=("L", "R"), default=S)
            p.add_argument("--eps", type=float, default=S)
            p.add_argument("--delta-l", dest="delta_l", type=float, default=S)
            p.add_argument("--delta-r", dest="delta_r", type=float, default=S)
            p.add_argument("--resolution", type=int, default=S)
    return parser


def resolve_config(ns: argparse.Namespace) -> dict[str, Any]:
    """Merge defaults, the config file and explicit flags (in that order)."""
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    cfg = dict(DEFAULTS)
    cfg["seed"] = int(os.environ["SCLDPCL_SEED"]) if os.environ.get("SCLDPCL_SEED") else 0
    path = getattr(ns, "config", None)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        known = set(DEFAULTS) | {"seed", "lrtm", "lr"}
        unknown = sorted(set(loaded) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    cfg.update(flags)
    return cfg


# ----------------------------------------------------------------------------
# helpers


def _de_cfg(c: dict[str, Any]) -> DEConfig:
    try:
        return DEConfig(
            max_iters=int(c["max_iters"]),
            fixed_point_iters=int(c["fixed_point_iters"]),
            conv_tol=float(c["conv_tol"]),
            erasure_floor=float(c["erasure_floor"]),
            bisect_tol=float(c["bisect_tol"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _graph(c: dict[str, Any]) -> CoupledProtograph:
    if c.get("protograph"):
        try:
            return load_protograph(c["protograph"])
        except OSError as exc:
            raise ConfigError(str(exc)) from exc
    if "lrtm" not in c:
        raise ConfigError("give --lrtm or --protograph")
    l, r, t, M = (int(v) for v in c["lrtm"])
    if c.get("partition"):
        try:
            with open(c["partition"], encoding="utf-8") as fh:
                P = parse_partition(fh.read())
        except OSError as exc:
            raise ConfigError(str(exc)) from exc
        return build_generalized(P, M)
    kind = c["construction"]
    if kind == "staircase":
        return build_scldpcl(l, r, t, M, allow_extreme=bool(c["allow_extreme"]))
    if kind == "memory":
        return build_generalized(make_memory_partition(l, r, t), M)
    if c.get("T") is None:
        raise ConfigError(f"--T is required for the {kind} construction")
    if kind == "hyper":
        return build_generalized(make_hyper_partition(l, r, t, int(c["T"])), M)
    if t != 2:
        raise ConfigError("grid construction has t = 2")
    return build_generalized(make_grid_partition(l, r, int(c["T"])), M)


def _target(c: dict[str, Any], G: CoupledProtograph) -> int:
    if c.get("m") is None:
        raise ConfigError("--m (1-based sub-block) is required")
    m = int(c["m"]) - 1
    if not 0 <= m < G.M:
        raise ConfigError(f"--m must lie in 1..{G.M}")
    return m


def _channel(c: dict[str, Any]) -> ChannelCdf:
    spec = c.get("channel")
    if spec is None:
        raise ConfigError("--channel is required")
    if isinstance(spec, dict):
        return ChannelCdf.from_dict(spec)
    return ChannelCdf.from_json(spec)


def _schedule_spec(c: dict[str, Any]) -> dict[str, Any] | None:
    spec = c.get("schedule")
    if spec is None or isinstance(spec, dict):
        return spec
    text = spec
    if os.path.exists(spec):
        with open(spec, encoding="utf-8") as fh:
            text = fh.read()
    try:
        out = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"schedule is neither a file nor JSON: {exc}") from exc
    if not isinstance(out, dict):
        raise ConfigError("schedule must be a JSON object")
    return out


def _grid_dims(G: CoupledProtograph) -> tuple[int, int] | int:
    T = G.params.T if G.params is not None else 1
    if T > 1 and G.M % T == 0:
        return (G.M // T, T)
    return G.M


def _jobs(c: dict[str, Any]) -> int:
    return int(c["jobs"]) if c.get("jobs") else (os.cpu_count() or 1)


# ----------------------------------------------------------------------------
# commands (each returns a JSON-able payload or text)


def cmd_construct(c: dict[str, Any]) -> Any:
    G = _graph(c)
    if c["format"] == "text":
        return format_protograph(G)
    return {
        "num_cns": G.graph.num_cns,
        "num_vns": G.graph.num_vns,
        "M": G.M,
        "rate": design_rate(G),
        "adjacency": G.adjacency.tolist(),
    }


def cmd_rate(c: dict[str, Any]) -> Any:
    return {"rate": design_rate(_graph(c))}


def cmd_threshold(c: dict[str, Any]) -> Any:
    G, cfg = _graph(c), _de_cfg(c)
    if c["mode"] == "global":
        return {"threshold": bp_threshold(G, cfg=cfg)}
    return {"threshold": bp_threshold(local_protograph(G, _target(c, G)), cfg=cfg)}


def cmd_local_thresholds(c: dict[str, Any]) -> Any:
    return {"local_thresholds": local_thresholds(_graph(c), _de_cfg(c))}


def cmd_sg_threshold(c: dict[str, Any]) -> Any:
    G, cfg = _graph(c), _de_cfg(c)
    m = _target(c, G)
    spec = _schedule_spec(c)
    if spec is not None:
        sched = schedule_from_dict(spec, _grid_dims(G))
        return {"threshold": evaluate_schedule(G, sched, cfg), "helpers": sched.num_helpers}
    d = int(c["d"])
    return {"threshold": sg_threshold(G, m, d, cfg=cfg), "helpers": d}


def cmd_complexity(c: dict[str, Any]) -> Any:
    if "lrtm" not in c:
        raise ConfigError("--lrtm is required")
    l, r, t, M = (int(v) for v in c["lrtm"])
    res = sg_complexity(l, r, t, M, int(c["d"]))
    return {"chi_g": res.chi_g, "chi_sg": res.chi_sg, "reduction": res.reduction}


def cmd_bound(c: dict[str, Any]) -> Any:
    G, cfg, F = _graph(c), _de_cfg(c), _channel(c)
    if G.params is None or G.params.T != 1:
        raise ConfigError("bounds need a staircase chain given by --lrtm")
    params = (G.params.l, G.params.r, G.params.t)
    m = _target(c, G) if c.get("m") is not None else G.M // 2
    j = int(c["j"])
    ones = [1.0] * params[2]
    method = c["method"]
    if method == "p0":
        return {"bound": p0_exact(F, G, m, ones, ones, cfg), "j": 0}
    ex = extreme_probs(G, m, F, cfg)
    part = default_partition(int(c["K"]), ex.eps_l, max(ex.eps_s, ex.eps_l))
    out: dict[str, Any] = {"P_L": ex.p_l, "P_S": ex.p_s, "P_D": ex.p_d, "j": j}
    if method == "quantized":
        out["bound"] = quantized_lower_bound(params, F, part, j, cfg=cfg)
    elif method == "recursive":
        p2 = quantized_lower_bound(params, F, part, 2, cfg=cfg) if j >= 2 else None
        out["bound"] = recursive_lower_bound(ex, j, p2=p2)
    else:
        anchors = [one_sided_quantized(params, F, part, k, cfg=cfg) for k in range(min(j, 1) + 1)]
        out["bound"] = one_sided_lower_bound(ex, j, anchors=anchors)
    return out


def cmd_mc_prob(c: dict[str, Any]) -> Any:
    G, cfg, F = _graph(c), _de_cfg(c), _channel(c)
    res = mc_success_prob(G, _target(c, G), int(c["d"]), F, int(c["trials"]), int(c["seed"]), cfg, _jobs(c))
    return {"estimate": res.estimate, "std_error": res.std_error, "trials": res.trials, "successes": res.successes}


def cmd_simulate(c: dict[str, Any]) -> Any:
    G = _graph(c)
    kind = c["mode"]
    if kind == "global":
        mode = Mode.global_()
    elif kind == "local":
        mode = Mode.local(_target(c, G))
    else:
        m = _target(c, G)
        spec = _schedule_spec(c)
        if spec is not None:
            steps = schedule_from_dict(spec, _grid_dims(G)).as_lists()
        else:
            steps = chain_balanced_schedule(G.M, m, int(c["d"]))
        mode = Mode.semiglobal(m, steps)
    if c.get("channel") is not None:
        channels: list[Any] = [_channel(c)]
    elif c.get("eps"):
        channels = [float(e) for e in c["eps"]]
    else:
        raise ConfigError("give --eps or --channel")
    rows = []
    for ch in channels:
        tc = TrialConfig(int(c["L"]), ch, mode, int(c["trials"]), int(c["seed"]))
        rows.append(monte_carlo(G, tc, jobs=_jobs(c)))
    if c["format"] == "csv":
        return stats_to_csv(rows)
    return {"results": [r.summary() for r in rows]}


def cmd_schedule_eval(c: dict[str, Any]) -> Any:
    G, cfg = _graph(c), _de_cfg(c)
    spec = _schedule_spec(c)
    if spec is None:
        raise ConfigError("--schedule is required")
    sched = schedule_from_dict(spec, _grid_dims(G))
    return {
        "threshold": evaluate_schedule(G, sched, cfg),
        "helpers": sched.num_helpers,
        "steps": sched.as_lists(),
    }


def cmd_t1_curves(c: dict[str, Any]) -> Any:
    if "lr" not in c:
        raise ConfigError("--lr is required")
    l, r = (int(v) for v in c["lr"])
    for key in ("eps", "delta_l", "delta_r"):
        if c.get(key) is None:
            raise ConfigError(f"--{key.replace('_', '-')} is required")
    eps = c["eps"][0] if isinstance(c["eps"], list) else c["eps"]
    cur = t1_curves(l, r, float(eps), float(c["delta_l"]), float(c["delta_r"]), int(c["resolution"]))
    if c["format"] == "csv":
        lines = ["x1,x2,f,g"]
        n = cur.grid.size
        for i in range(n):
            for k in range(n):
                lines.append(f"{cur.grid[i]!r},{cur.grid[k]!r},{cur.f[i, k]!r},{cur.g[i, k]!r}")
        return "\n".join(lines) + "\n"
    return {
        "grid": cur.grid.tolist(),
        "f": cur.f.tolist(),
        "g": cur.g.tolist(),
        "fixed_point": list(cur.limit),
    }


def cmd_isb(c: dict[str, Any]) -> Any:
    g: ISBGraph = build_isb(_graph(c))
    out = isb_to_dict(g)
    out["degrees"] = [g.degree(m) for m in range(g.num_nodes)]
    return out


HANDLERS: dict[str, Callable[[dict[str, Any]], Any]] = {
    "construct": cmd_construct,
    "rate": cmd_rate,
    "threshold": cmd_threshold,
    "local-thresholds": cmd_local_thresholds,
    "sg-threshold": cmd_sg_threshold,
    "complexity": cmd_complexity,
    "bound": cmd_bound,
    "mc-prob": cmd_mc_prob,
    "simulate": cmd_simulate,
    "schedule-eval": cmd_schedule_eval,
    "t1-curves": cmd_t1_curves,
    "isb": cmd_isb,
}


def _render(payload: Any, fmt: str) -> str:
    if isinstance(payload, str):
        return payload
    if fmt == "csv":
        if not isinstance(payload, dict):
            raise ConfigError("csv output is not available for this command")
        keys = sorted(payload)
        vals = [json.dumps(payload[k]) if isinstance(payload[k], (list, dict)) else str(payload[k]) for k in keys]
        return ",".join(keys) + "\n" + ",".join(vals) + "\n"
    return json.dumps(_plain(payload), sort_keys=True) + "\n"


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(ns)
        text = _render(HANDLERS[ns.command](cfg), cfg["format"])
        if cfg.get("out"):
            with open(cfg["out"], "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except CONFIG_ERRORS as exc:
        print(f"scldpcl: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surfaced as exit status 1
        print(f"scldpcl: error: {exc}", file=sys.stderr)
        return 1
    return 0

if __name__ == "__main__":
    sys.exit(main())
