"""Command-line front end: sweeps, optimization, Monte Carlo and figure datasets.

Internal computation is SI; output uses EE in Mbit/J, ASE in bit/s/Hz/km^2
and AP density in AP/km^2. Exit codes: 0 success, 2 configuration error,
3 infeasible problem, 4 simulation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import mc, model, optimize
from .config import KM2, ConfigError, RunConfig, SweepAxis, default_config, load_config
from .model import DomainError, ModelInconsistencyError

log = logging.getLogger("cellfree_ee")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SIMULATION = 0, 2, 3, 4
SEED_ENV = "CELLFREE_EE_SEED"

SWEEP_COLUMNS = [
    "status", "n_antennas", "n_users", "pilot_reuse", "ap_density_per_km2", "gamma0",
    "check_gamma", "sinr", "target_met", "se_bps_hz", "ase_bps_hz_km2", "apc_w_per_km2", "ee_mbit_per_j",
]
SWEEP_MODES = ("bound", "target", "constrained")


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# evaluation helpers


def _config_units(name: str, value):
    """Map a sweep value in config units to a SystemParams field value."""
    if name == "ap_density":
        return value / KM2
    if name in ("n_antennas", "n_users"):
        return int(value)
    return float(value)


def evaluate_point(params, power, gamma0, mode="bound", strict=False, apc_mode="polynomial") -> dict:
    """One sweep row in output units; infeasible points carry a status instead of numbers."""
    row = {c: "" for c in SWEEP_COLUMNS}
    row.update(n_antennas=params.n_antennas, n_users=params.n_users, pilot_reuse=params.pilot_reuse,
               ap_density_per_km2=params.ap_density * KM2, gamma0=gamma0)
    try:
        if mode == "constrained":
            z, _, _ = optimize.zeta_star(params, gamma0)
            zc = optimize.clip_zeta(params, z)
            if zc is None:
                row["status"] = "infeasible"
                return row
            params = replace(params, pilot_reuse=zc)
            row["pilot_reuse"] = zc
        gamma = None if mode == "bound" else gamma0
        br = model.energy_efficiency(params, power, apc_mode=apc_mode, strict=strict, gamma=gamma)
    except (DomainError, ModelInconsistencyError) as exc:
        row["status"] = f"invalid: {exc}"
        return row
    row.update(
        status="ok", check_gamma=br.check_gamma, sinr=br.gamma,
        target_met=bool(1.0 / br.check_gamma >= gamma0 * (1 - optimize.BOUND_RTOL)),
        se_bps_hz=br.se_per_user, ase_bps_hz_km2=br.ase * KM2, apc_w_per_km2=br.apc * KM2,
        ee_mbit_per_j=br.ee / 1e6,
    )
    return row


def run_sweep(cfg: RunConfig, axes, mode="bound", strict=False, apc_mode="polynomial") -> list:
    """Rows over the product of the axes, in lexicographic axis order."""
    base, power = cfg.params(), cfg.power_model()
    grids = [a.values() for a in axes]
    rows = []
    for combo in itertools.product(*grids):
        gamma0 = cfg.gamma0
        fields = {}
        for axis, v in zip(axes, combo):
            if axis.variable == "gamma0":
                gamma0 = float(v)
            else:
                fields[axis.variable] = _config_units(axis.variable, v)
        try:
            p = replace(base, **fields)
        except DomainError as exc:
            row = {c: "" for c in SWEEP_COLUMNS}
            row.update(status=f"invalid: {exc}", gamma0=gamma0, **{
                ("ap_density_per_km2" if k == "ap_density" else k): (v * KM2 if k == "ap_density" else v)
                for k, v in fields.items()})
            rows.append(row)
            continue
        rows.append(evaluate_point(p, power, gamma0, mode, strict, apc_mode))
    return rows


def sweep_argmax(rows, require_target=False):
    """Best row by EE; the earliest row wins ties."""
    best = None
    for r in rows:
        if r["status"] != "ok" or (require_target and not r["target_met"]):
            continue
        if best is None or r["ee_mbit_per_j"] > best["ee_mbit_per_j"]:
            best = r
    return best


# --------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def dumps_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: _jsonable(r.get(c, "")) for c in columns})
    return buf.getvalue()


def emit(text: str, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# --------------------------------------------------------------------------
# optimize


def _report_out(rep: optimize.OptimumReport) -> dict:
    d = rep.to_dict()
    d["objective_mbit_per_j"] = {k: (None if v is None else v / 1e6) for k, v in rep.objective.items()}
    del d["objective"]

    def conv(name, v):
        if v is None:
            return None
        return v * KM2 if name == "ap_density" else v

    if rep.variable == "ap_density":
        for key in ("value", "closed_form_value", "oracle_value"):
            d[key] = conv("ap_density", d[key])
        d["feasible_interval"] = [x * KM2 for x in d["feasible_interval"]]
    for key in ("value", "closed_form_value", "oracle_value"):
        if isinstance(d[key], dict):
            d[key] = {k: conv(k, v) for k, v in d[key].items()}
    d["units"] = {"ap_density": "AP/km^2", "objective": "Mbit/J", "diagnostics": "SI"}
    return d


def _grid_for(name, params, bounds: optimize.SearchBounds):
    if name == "pilot_reuse":
        lo, hi = optimize.zeta_bounds(params)
        return list(np.linspace(lo, hi, bounds.grid_points))
    if name == "ap_density":
        return list(np.linspace(*bounds.ap_density, bounds.grid_points))
    lo, hi = getattr(bounds, name)
    return list(range(int(math.ceil(lo)), int(hi) + 1))


def run_optimize(cfg: RunConfig, variables, strict=False) -> dict:
    params, power, bounds = cfg.params(), cfg.power_model(), cfg.search.to_bounds()
    gamma0 = cfg.gamma0
    if variables == ["all"]:
        names = list(optimize.VARIABLES)
    else:
        names = [optimize.canonical_variable(v) for v in variables]
    if len(names) == 1:
        rep = optimize.optimize_variable(params, power, gamma0, names[0], bounds, strict)
        out = _report_out(rep)
        best = optimize.with_fields(params, **{names[0]: rep.value})
    else:
        joint = optimize.joint_optimize(params, power, gamma0, names, bounds, strict)
        out = _report_out(joint)
        best = replace(params, **joint.value)
        free = [n for n in names if n != "pilot_reuse"] or names
        grids = {n: _grid_for(n, params, bounds) for n in free}
        size = math.prod(len(g) for g in grids.values())
        if size <= 200_000:
            try:
                brute = optimize.brute_force_optimum(params, power, gamma0, free, grids, strict)
            except optimize.InfeasibleError:
                brute = None
            joint_ee = joint.objective["final"]
            if brute is not None:
                brute_ee = brute.objective["oracle"]
                value = brute.value if len(free) > 1 else (brute.value,)
                oracle_point = dict(zip(free, value))
                out["oracle_value"] = {k: (v * KM2 if k == "ap_density" else v) for k, v in oracle_point.items()}
                out["objective_mbit_per_j"]["oracle"] = brute_ee / 1e6
                applicable = math.isfinite(joint_ee) and joint_ee >= brute_ee * (1 - optimize.ORACLE_SLACK)
                out["closed_form_applicable"] = bool(applicable)
                out["agreement"] = bool(applicable and abs(joint_ee - brute_ee) <= optimize.AGREEMENT_TOL * brute_ee)
                if not applicable:
                    best = optimize.with_fields(params, **oracle_point)
                    z, _, _ = optimize.zeta_star(best, gamma0)
                    zc = optimize.clip_zeta(best, z)
                    if zc is not None and "pilot_reuse" not in oracle_point:
                        best = replace(best, pilot_reuse=zc)
                    out["value"] = {n: (getattr(best, n) * KM2 if n == "ap_density" else getattr(best, n))
                                    for n in optimize.VARIABLES}
            elif not math.isfinite(joint_ee):
                raise optimize.InfeasibleError("no feasible point meets the SINR target")
        elif not math.isfinite(joint.objective["final"]):
            raise optimize.InfeasibleError("no feasible point meets the SINR target")
    out["gamma0"] = gamma0
    out["at_optimum"] = evaluate_point(best, power, gamma0, mode="target", strict=strict)
    return out


# --------------------------------------------------------------------------
# simulate


def run_simulate(cfg: RunConfig, seed: int, n_realizations=None, workers=None, keep_records=False) -> mc.MCResult:
    mc_cfg = cfg.mc
    return mc.mc_average_se(
        cfg.params(), n_realizations or mc_cfg.n_realizations, seed, workers=workers or mc_cfg.workers,
        policy=mc_cfg.pilot_policy, typical_only=mc_cfg.typical_user_only, keep_records=keep_records,
    )


# --------------------------------------------------------------------------
# figure datasets


def _axis(variable, lo, hi, steps):
    return SweepAxis(variable=variable, min=lo, max=hi, steps=steps)


def reproduce_fig1(cfg, strict=False, apc_mode="polynomial"):
    axes = [_axis("pilot_reuse", 1.0, 10.0, 10), _axis("ap_density", 5.0, 200.0, 40)]
    rows = run_sweep(cfg, axes, mode="bound", strict=strict, apc_mode=apc_mode)
    best = sweep_argmax(rows)
    meta = {"figure": "fig1", "mode": "bound", "argmax": best}
    return rows, SWEEP_COLUMNS, meta


FIG3_COLUMNS = ["gamma0", "ap_density_per_km2", "pilot_reuse", "feasible", "se_lower_bps_hz", "se_mc_bps_hz",
                "se_mc_stderr", "ee_lower_mbit_per_j", "ee_mc_mbit_per_j", "mc_realizations"]


def reproduce_fig3(cfg, seed, n_realizations, workers=1, strict=False):
    base, power = cfg.params(), cfg.power_model()
    rows = []
    for g0 in (1.0, 3.0, 7.0):
        for lam in np.linspace(10.0, 200.0, 20):
            p = replace(base, ap_density=lam / KM2)
            z, _, _ = optimize.zeta_star(p, g0)
            zc = optimize.clip_zeta(p, z)
            feasible = zc is not None
            if feasible:
                p = replace(p, pilot_reuse=zc)
            lower = model.energy_efficiency(p, power, strict=strict)
            res = mc.mc_average_se(p, n_realizations, seed, workers=workers,
                                   policy=cfg.mc.pilot_policy, typical_only=cfg.mc.typical_user_only)
            ase_mc = model.ase(p, res.mean_se)
            ee_mc = p.bandwidth * ase_mc / model.apc_polynomial(p, power, ase_mc, strict=strict)
            rows.append({
                "gamma0": g0, "ap_density_per_km2": float(lam), "pilot_reuse": p.pilot_reuse,
                "feasible": feasible, "se_lower_bps_hz": lower.se_per_user, "se_mc_bps_hz": res.mean_se,
                "se_mc_stderr": res.stderr, "ee_lower_mbit_per_j": lower.ee / 1e6,
                "ee_mc_mbit_per_j": ee_mc / 1e6, "mc_realizations": res.n_used,
            })
    meta = {"figure": "fig3", "seed": seed, "n_realizations": n_realizations}
    return rows, FIG3_COLUMNS, meta


def reproduce_fig4(cfg, strict=False):
    rows = []
    for K in (10, 20):
        kcfg = replace(cfg, system=replace(cfg.system, n_users=K))
        for g0 in (1.0, 3.0, 7.0):
            gcfg = replace(kcfg, gamma0=g0)
            rows += run_sweep(gcfg, [SweepAxis("ap_density", 1.0, 200.0, 200)], mode="constrained", strict=strict)
    meta = {"figure": "fig4", "mode": "constrained",
            "argmax": {f"K={k},gamma0={g}": sweep_argmax([r for r in rows if r["n_users"] == k and r["gamma0"] == g])
                       for k in (10, 20) for g in (1.0, 3.0, 7.0)}}
    return rows, SWEEP_COLUMNS, meta


def fig5_config(cfg):
    return replace(cfg, gamma0=3.0, system=replace(cfg.system, pilot_reuse=3.0, ap_density_per_km2=25.0))


def reproduce_fig5(cfg, strict=False):
    cfg = fig5_config(cfg)
    axes = [_axis("n_users", 2, 30, 29), _axis("n_antennas", 2, 64, 63)]
    rows = run_sweep(cfg, axes, mode="target", strict=strict)
    meta = {"figure": "fig5", "mode": "target", "gamma0": cfg.gamma0,
            "argmax": sweep_argmax(rows), "argmax_target_met": sweep_argmax(rows, require_target=True)}
    return rows, SWEEP_COLUMNS, meta


# --------------------------------------------------------------------------
# argument handling


def _seed(args, cfg) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return cfg.mc.seed


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _parse_axis(text):
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise argparse.ArgumentTypeError("axis is name:min:max:steps[:linear|log]")
    name = optimize.canonical_variable(parts[0]) if parts[0] != "gamma0" else "gamma0"
    return SweepAxis(name, float(parts[1]), float(parts[2]), int(parts[3]), parts[4] if len(parts) == 5 else "linear")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (default: shipped reference table)")
    common.add_argument("--seed", type=_u64, help=f"RNG seed (fallback: ${SEED_ENV}, then config)")
    common.add_argument("--out", help="output path; '-' or omitted writes to stdout")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--strict-paper", dest="strict", action="store_true",
                        help="use the power-polynomial coefficients exactly as published")
    common.add_argument("--apc-mode", choices=("polynomial", "first-principles"), default="polynomial")
    common.add_argument("--gamma0", type=float, help="SINR target override")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="cellfree-ee", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", parents=[common], help="evaluate EE over a parameter grid")
    sp.add_argument("--axis", action="append", type=_parse_axis,
                    help="name:min:max:steps[:scale]; replaces the config sweep (repeatable)")
    sp.add_argument("--mode", choices=SWEEP_MODES, default="bound",
                    help="bound: rate at the SINR bound; target: rate at gamma0; "
                         "constrained: reuse factor set by the SINR target")

    op = sub.add_parser("optimize", parents=[common], help="maximize EE under the SINR target")
    op.add_argument("--variable", default="all", help="comma list of zeta, lambda, N, K, or 'all'")

    mp = sub.add_parser("simulate", parents=[common], help="Monte Carlo average SE")
    mp.add_argument("--n-realizations", type=_positive_int)
    mp.add_argument("--workers", type=_positive_int)
    mp.add_argument("--records", help="write per-realization records as JSON lines to this path")

    rp = sub.add_parser("reproduce", parents=[common], help="write the dataset behind a figure")
    rp.add_argument("figure", choices=("fig1", "fig3", "fig4", "fig5"))
    rp.add_argument("--n-realizations", type=_positive_int, default=200)
    rp.add_argument("--workers", type=_positive_int, default=1)
    return ap


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config()
    if args.gamma0 is not None:
        if not args.gamma0 > 0:
            raise ConfigError("gamma0 must be positive")
        cfg = replace(cfg, gamma0=args.gamma0)
    return cfg


def _write_table(rows, columns, meta, args, default_format):
    fmt = args.format or default_format
    if fmt == "csv":
        emit(dumps_csv(rows, columns), args.out)
    else:
        emit(dumps_json({"meta": meta, "rows": rows}), args.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    apc_mode = args.apc_mode.replace("-", "_")
    try:
        cfg = _load(args)
        if args.command == "sweep":
            axes = args.axis or list(cfg.sweep)
            if not axes:
                raise UsageError("no sweep axes in config or on the command line")
            rows = run_sweep(cfg, axes, args.mode, args.strict, apc_mode)
            meta = {"mode": args.mode, "argmax": sweep_argmax(rows)}
            _write_table(rows, SWEEP_COLUMNS, meta, args, cfg.output.format)
        elif args.command == "optimize":
            variables = [v for v in args.variable.split(",") if v]
            rep = run_optimize(cfg, variables, args.strict)
            emit(dumps_json(rep), args.out)
        elif args.command == "simulate":
            seed = _seed(args, cfg)
            res = run_simulate(cfg, seed, args.n_realizations, args.workers, keep_records=bool(args.records))
            if args.records:
                Path(args.records).write_text("".join(json.dumps(_jsonable(r), sort_keys=True) + "\n"
                                                      for r in res.records))
            summary = res.summary()
            summary["seed"] = seed
            emit(dumps_json(summary), args.out)
        elif args.command == "reproduce":
            if args.figure == "fig1":
                rows, cols, meta = reproduce_fig1(cfg, args.strict, apc_mode)
            elif args.figure == "fig3":
                rows, cols, meta = reproduce_fig3(cfg, _seed(args, cfg), args.n_realizations, args.workers,
                                                  args.strict)
            elif args.figure == "fig4":
                rows, cols, meta = reproduce_fig4(cfg, args.strict)
            else:
                rows, cols, meta = reproduce_fig5(cfg, args.strict)
            if args.out and args.out != "-" and Path(args.out).suffix == "":
                out_dir = Path(args.out)
                out_dir.mkdir(parents=True, exist_ok=True)
                (out_dir / f"{args.figure}.csv").write_text(dumps_csv(rows, cols))
                (out_dir / f"{args.figure}.json").write_text(dumps_json(meta))
            else:
                _write_table(rows, cols, meta, args, "csv")
    except (ConfigError, UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except optimize.InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (mc.SimulationError, ModelInconsistencyError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
