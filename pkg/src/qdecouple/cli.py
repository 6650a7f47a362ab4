"""Scenario-driven command line: verdict tables, traces, rank and CBH reports.

Subcommands
-----------
check             reproduce the three-row decouplability table
simulate          open- or closed-loop traces; feedback modes run the
                  paired (coupled / uncoupled) comparison
rank              control-field rank histogram and K_I-membership report
maneuver          four-segment commutator maneuver: CBH slope fit and
                  effective-direction overlap; --chain runs the
                  commutator-chain identity table instead
synthesize-audit  frame construction and (alpha, beta) synthesis report
                  at sampled states

All defaults live in DEFAULT_CONFIG and are echoed into every report.
Outputs are byte-deterministic for a fixed config and seed.  Exit codes:
0 success, 2 config error, 3 numerical abort, 4 synthesis rank
deficiency under the abort policy.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys as _sys
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import SIGMA_X, ClosureBlowupError, embed_product, field_quadrature, random_state
from .feedback import RankDeficiencyError, build_frame, commutant_basis, control_commutant_combos, synthesize
from .models import SCENARIOS, ScenarioParams, build_scenario, coherence, dfs_state
from .observation import build_c_tilde
from .report import decouplability_table, format_table
from .simulate import (
    NormDriftError,
    PulseSchedule,
    cbh_order_check,
    decoupling_pair,
    effective_direction_overlap,
    hsb_generation_search,
    maneuver_schedule,
    propagate,
    verify_commutator_chain,
)
from .spans import RealSpan, realify
from .algebra import normalize, lie_closure

DEFAULT_CONFIG = {
    "schema_version": 1,
    "scenario": "two_qubit",
    "params": {
        "omega0": 1.0,
        "omega_env": 1.0,
        "g": [0.1, 0.0],
        "w": None,
        "j1": 1.0,
        "j2": 1.0,
        "n_env": 3,
    },
    "tol": 1e-9,
    "seed": 0,
    "horizon": 10.0,
    "dt": 0.01,
    "feedback_mode": "open_loop",
    "rank_policy": "abort",
    "max_power": 5,
    "eval_states": 5,
    "rank_states": 100,
    "initial_state": "dfs",
    "schedule": None,
    "maneuver_t_list": [0.1, 0.05, 0.025, 0.0125],
    "maneuver_overlap_t": 1e-3,
}


class ConfigError(ValueError):
    pass


def _as_complex(value) -> complex:
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(value[0], value[1])
    raise ConfigError(f"cannot parse complex value {value!r} (use a number or [re, im])")


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        for key, val in user.items():
            if key == "params" and isinstance(val, dict):
                cfg["params"].update(val)
            else:
                cfg[key] = val
    for key, val in overrides.items():
        if val is not None:
            cfg[key] = val
    if cfg["scenario"] not in SCENARIOS + ("all",):
        raise ConfigError(f"unknown scenario {cfg['scenario']!r}")
    if not 0 < cfg["tol"] <= 1e-3:
        raise ConfigError("tol must lie in (0, 1e-3]")
    if cfg["horizon"] <= 0:
        raise ConfigError("horizon must be positive")
    if cfg["feedback_mode"] not in ("literal", "regularized", "oracle_cancel", "open_loop"):
        raise ConfigError(f"unknown feedback_mode {cfg['feedback_mode']!r}")
    return cfg


def scenario_params(cfg: dict) -> ScenarioParams:
    p = cfg["params"]
    try:
        return ScenarioParams(
            omega0=float(p["omega0"]),
            omega_env=float(p["omega_env"]),
            g=_as_complex(p["g"]),
            w=_as_complex(p.get("w")),
            j1=float(p["j1"]),
            j2=float(p["j2"]),
            n_env=int(p["n_env"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad params: {exc}") from exc


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist())
    return obj


def write_report(out_dir: Path, payload: dict, name: str = "report.json") -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w") as fh:
        json.dump(_sanitize(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def write_trace_csv(out_dir: Path, trace, name: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    drifts = trace.norm_drifts
    if drifts is None:
        drifts = np.full(trace.times.shape, trace.norm_drift)
    with open(path, "w") as fh:
        fh.write("t,re_y,im_y,abs_y,norm_drift\n")
        for t, y, d in zip(trace.times, trace.y_values, drifts):
            fh.write(f"{t:.17g},{y.real:.17g},{y.imag:.17g},{abs(y):.17g},{d:.17g}\n")
    return path


def write_audit_jsonl(out_dir: Path, rows: list, name: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(_sanitize(row), sort_keys=True))
            fh.write("\n")
    return path


def initial_state(sys, cfg):
    kind = cfg["initial_state"]
    if kind == "dfs":
        if sys.scenario == "single_qubit":
            kind = "plus"
        else:
            return dfs_state(sys)
    if kind == "plus":
        amps = np.zeros(sys.space.total_dim, dtype=complex)
        tail = sys.space.total_dim // 2
        amps[0] = 1.0
        amps[tail] = 1.0
        return normalize(sys.space, amps)
    if kind == "random":
        rng = np.random.default_rng(cfg["seed"])
        return random_state(sys.space, rng)
    raise ConfigError(f"unknown initial_state {kind!r}")


def schedule_from_config(sys, cfg) -> PulseSchedule:
    raw = cfg.get("schedule")
    if raw is None:
        return PulseSchedule.constant(cfg["horizon"], np.zeros(sys.n_controls))
    segments = []
    try:
        for seg in raw:
            vals = np.asarray(seg["values"], dtype=float)
            if vals.shape != (sys.n_controls,):
                raise ConfigError(
                    f"schedule segment needs {sys.n_controls} control values, got {vals.shape}"
                )
            segments.append((float(seg["duration"]), vals))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad schedule: {exc}") from exc
    return PulseSchedule(segments)


def cmd_check(cfg: dict, out_dir: Path) -> int:
    params = scenario_params(cfg)
    report = decouplability_table(
        params,
        tol=cfg["tol"],
        eval_states=cfg["eval_states"],
        seed=cfg["seed"],
        max_power=cfg["max_power"],
    )
    payload = {"command": "check", "config": cfg, "version": __version__, **report}
    write_report(out_dir, payload)
    table = format_table(report)
    (out_dir / "table.txt").write_text(table)
    print(table, end="")
    return 0


def cmd_simulate(cfg: dict, out_dir: Path, audit: bool) -> int:
    params = scenario_params(cfg)
    sys_ = build_scenario(cfg["scenario"], params, cfg["max_power"])
    xi0 = initial_state(sys_, cfg)
    sched = schedule_from_config(sys_, cfg)
    mode = cfg["feedback_mode"]
    payload = {"command": "simulate", "config": cfg, "version": __version__, "scenario": cfg["scenario"]}
    if mode == "open_loop":
        trace = propagate(sys_, sched, xi0, dt_max=cfg["dt"])
        write_trace_csv(out_dir, trace, "trace.csv")
        payload["trace"] = {"samples": len(trace.times), "norm_drift": trace.norm_drift,
                            "final_abs_y": float(abs(trace.y_values[-1]))}
    else:
        trace_g, trace_0, dev = decoupling_pair(
            sys_, sched, xi0, dt=cfg["dt"], mode=mode, policy=cfg["rank_policy"],
            collect_audit=audit,
        )
        write_trace_csv(out_dir, trace_g, "trace_g.csv")
        write_trace_csv(out_dir, trace_0, "trace_g0.csv")
        if audit:
            write_audit_jsonl(out_dir, trace_g.audit, "audit_g.jsonl")
            write_audit_jsonl(out_dir, trace_0.audit, "audit_g0.jsonl")
        payload["paired"] = {
            "max_abs_y_deviation": dev,
            "norm_drift_g": trace_g.norm_drift,
            "norm_drift_g0": trace_0.norm_drift,
            "mode": mode,
        }
        print(f"paired max |y_g - y_0| = {dev:.3e}")
    write_report(out_dir, payload)
    return 0


def cmd_rank(cfg: dict, out_dir: Path) -> int:
    params = scenario_params(cfg)
    name = cfg["scenario"] if cfg["scenario"] != "two_qubit" else "restructured"
    sys_ = build_scenario(name, params, cfg["max_power"])
    rng = np.random.default_rng(cfg["seed"])
    tol = cfg["tol"]
    try:
        algebra = lie_closure(sys_.controls, max_dim=2 * sys_.space.total_dim ** 2, tol=tol)
    except ClosureBlowupError:
        algebra = None
    field_ranks = []
    algebra_ranks = []
    res_fields = []
    res_algebra = []
    n = sys_.space.total_dim
    for _ in range(cfg["rank_states"]):
        xi = random_state(sys_.space, rng)
        rows = np.array([realify(a.matrix @ xi.amplitudes) for a in sys_.controls])
        span = RealSpan(2 * n, tol=tol)
        span.add_batch(rows)
        field_ranks.append(span.rank)
        k_i = realify(sys_.interaction.matrix @ xi.amplitudes)
        res_fields.append(span.residual(k_i))
        if algebra is not None:
            span_a = RealSpan(2 * n, tol=tol)
            span_a.add_batch(np.array([realify(a.matrix @ xi.amplitudes) for a in algebra]))
            algebra_ranks.append(span_a.rank)
            res_algebra.append(span_a.residual(k_i))
    def hist(values):
        out = {}
        for v in values:
            out[str(v)] = out.get(str(v), 0) + 1
        return out
    payload = {
        "command": "rank",
        "config": cfg,
        "version": __version__,
        "scenario": name,
        "n_controls": sys_.n_controls,
        "control_field_rank_histogram": hist(field_ranks),
        "interaction_membership_in_fields": {
            "below_tol_fraction": float(np.mean([r < tol for r in res_fields])),
            "median_residual": float(np.median(res_fields)),
        },
    }
    if algebra is not None:
        payload["control_algebra_dim"] = len(algebra)
        payload["control_algebra_rank_histogram"] = hist(algebra_ranks)
        payload["interaction_membership_in_algebra"] = {
            "below_tol_fraction": float(np.mean([r < tol for r in res_algebra])),
            "median_residual": float(np.median(res_algebra)),
        }
    write_report(out_dir, payload)
    frac = payload.get("interaction_membership_in_algebra", {}).get("below_tol_fraction")
    print(f"control-field ranks: {payload['control_field_rank_histogram']}; "
          f"K_I in control algebra at {frac if frac is not None else 'n/a'} of states")
    return 0


def cmd_maneuver(cfg: dict, out_dir: Path, i: int | None, j: int | None, chain: bool) -> int:
    params = scenario_params(cfg)
    name = cfg["scenario"] if cfg["scenario"] in ("bait", "restructured") else "bait"
    sys_ = build_scenario(name, params, cfg["max_power"])
    payload = {"command": "maneuver", "config": cfg, "version": __version__, "scenario": name}
    if chain:
        payload["chain"] = verify_commutator_chain(sys_)
        payload["hsb_generation"] = hsb_generation_search(sys_)
        write_report(out_dir, payload)
        for key, row in payload["chain"].items():
            print(f"{key}: c={row['c']:+.4f} residual={row['residual']:.2e}"
                  + (f" bait-identity dev={row['bait_identity_deviation']:.2e}"
                     if "bait_identity_deviation" in row else ""))
        return 0
    if i is None or j is None:
        raise ConfigError("maneuver needs --i and --j control indices (1-based) or --chain")
    if not (1 <= i <= sys_.n_controls and 1 <= j <= sys_.n_controls):
        raise ConfigError(f"control indices must lie in 1..{sys_.n_controls}")
    a, b = sys_.controls[i - 1], sys_.controls[j - 1]
    sched = maneuver_schedule(sys_.n_controls, i - 1, j - 1, cfg["maneuver_t_list"][0])
    rep = cbh_order_check(a, b, cfg["maneuver_t_list"])
    payload["maneuver"] = {
        "i": i,
        "j": j,
        "segments": [
            {"duration": d, "values": v.tolist()} for d, v in sched.segments
        ],
        "residuals": rep.residuals,
        "slope": rep.slope,
        "exact": rep.exact,
    }
    if name == "bait" and {i, j} == {6, 9}:
        f_w = field_quadrature(params.w, params.n_env).matrix
        target = embed_product(sys_.space, {"bait": SIGMA_X, "env": f_w}, kind="hermitian").skew()
        payload["maneuver"]["direction_overlap"] = effective_direction_overlap(
            a, b, target, cfg["maneuver_overlap_t"]
        )
        payload["maneuver"]["direction_label"] = "sigma_x(bait) x (w b† + w* b)"
    write_report(out_dir, payload)
    slope = "exact" if rep.exact else f"{rep.slope:.3f}"
    print(f"maneuver ({i},{j}): slope {slope}"
          + (f", overlap {payload['maneuver'].get('direction_overlap'):.6f}"
             if "direction_overlap" in payload["maneuver"] else ""))
    return 0


def cmd_synthesize_audit(cfg: dict, out_dir: Path) -> int:
    params = scenario_params(cfg)
    sys_ = build_scenario(cfg["scenario"], params, cfg["max_power"])
    rng = np.random.default_rng(cfg["seed"])
    commutant = commutant_basis(sys_.interaction)
    candidates = control_commutant_combos(sys_)
    rows = []
    for k in range(cfg["eval_states"]):
        xi = random_state(sys_.space, rng)
        try:
            res = build_frame(sys_, xi, commutant=commutant, control_candidates=candidates)
        except ValueError as exc:
            rows.append({"state": k, "error": str(exc)})
            continue
        row = {"state": k, "ok": res.ok, **res.report}
        if res.ok:
            law = synthesize(sys_, res.frame, mode=cfg["feedback_mode"]
                             if cfg["feedback_mode"] in ("literal", "regularized") else "literal")
            row.update(
                {
                    "cond_d": law.details["cond_d"],
                    "beta_singular": law.beta_singular,
                    "alpha": law.alpha.tolist(),
                    "beta": law.beta.tolist(),
                    "d": law.d_matrix.tolist(),
                    "S": law.s_matrix.tolist(),
                    "J": law.j_matrix.tolist(),
                }
            )
        rows.append(row)
    payload = {"command": "synthesize-audit", "config": cfg, "version": __version__, "states": rows}
    write_report(out_dir, payload)
    write_audit_jsonl(out_dir, rows, "audit_synthesis.jsonl")
    ok = sum(1 for r in rows if r.get("ok"))
    print(f"synthesis succeeded at {ok}/{len(rows)} sampled states")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdecouple",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Config defaults:\n" + json.dumps(DEFAULT_CONFIG, indent=2, sort_keys=True),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("check", "simulate", "rank", "maneuver", "synthesize-audit"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file (defaults otherwise)")
        sp.add_argument("--out", default="out", help="output directory (default: ./out)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--audit", action="store_true", help="write per-step JSON audit rows")
        sp.add_argument(
            "--feedback-mode",
            choices=("literal", "regularized", "oracle_cancel", "open_loop"),
            default=None,
        )
        sp.add_argument("--scenario", choices=SCENARIOS + ("all",), default=None)
        if name == "maneuver":
            sp.add_argument("--i", type=int, default=None, help="first control index (1-based)")
            sp.add_argument("--j", type=int, default=None, help="second control index (1-based)")
            sp.add_argument("--chain", action="store_true", help="run the commutator-chain table")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {
            "seed": args.seed,
            "feedback_mode": getattr(args, "feedback_mode", None),
            "scenario": getattr(args, "scenario", None),
        }
        cfg = load_config(args.config, overrides)
        out_dir = Path(args.out)
        if args.command == "check":
            return cmd_check(cfg, out_dir)
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir, args.audit)
        if args.command == "rank":
            return cmd_rank(cfg, out_dir)
        if args.command == "maneuver":
            return cmd_maneuver(cfg, out_dir, args.i, args.j, args.chain)
        if args.command == "synthesize-audit":
            return cmd_synthesize_audit(cfg, out_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2
    except NormDriftError as exc:
        print(f"numerical abort: {exc}", file=_sys.stderr)
        return 3
    except RankDeficiencyError as exc:
        out_dir = Path(args.out)
        write_report(out_dir, {
            "command": args.command,
            "error": "rank_deficiency",
            "report": exc.report,
        }, name="report.json")
        print(f"synthesis rank deficiency: {exc}", file=_sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
