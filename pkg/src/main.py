#!/usr/bin/env python3
"""
Event-Triggered LP Simulator - Main Entry Point

Command-line front end for the distributed saddle-point LP solver with
event-triggered broadcasts. Each phase can be invoked on its own:

    python -m src.main solve-oracle   [problem flags] [--gamma G] [--probe]
    python -m src.main preprocess     [problem flags] [--write PATH]
    python -m src.main gen-assignment --N 3 [--seed S] [--write PATH]
    python -m src.main simulate       [problem flags] [run flags] [--config ECHO] [--sweep K]
    python -m src.main audit          --run-dir DIR

Exit codes: 0 success, 1 validation/format/IO error, 2 zeno-abort,
3 divergence, 4 oracle failure.
"""

import argparse
import json
import logging
import multiprocessing as mp
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.config import RunConfig, build_config
from src.dynamics.lyapunov import LagrangianParams, default_penalty, penalty_bound
from src.errors import LPSimError, OracleError
from src.ingestion.assignment import AssignmentSpec, default_spec, generate_assignment
from src.ingestion.problem_file import load_problem, save_problem
from src.lp.kkt import kkt_check_lp, kkt_check_qp
from src.lp.oracle import exactness_probe, exactness_threshold, oracle_solve_lp, oracle_solve_qp
from src.lp.problem import RegularizedQP, StandardLP
from src.network.scaling import max_consensus_scale
from src.pipeline import RunOutcome, execute_run, prepare_run
from src.settings import configure_logging
from src.sim.audit import lyapunov_audit, mode_mismatch_audit, sample_lie_bounds
from src.sim.export import load_trajectory

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ZENO = 2
EXIT_DIVERGENCE = 3
EXIT_ORACLE = 4
EXIT_AUDIT = 5

STATUS_EXIT = {"ok": EXIT_OK, "zeno-abort": EXIT_ZENO, "divergence": EXIT_DIVERGENCE}
PROBE_GAMMAS = [2.0 ** k for k in range(11)]
LIE_SAMPLE_TARGET = 2000
AUDIT_FILE = "audit.json"
SWEEP_FILE = "sweep.csv"


def _problem_from_args(args: argparse.Namespace) -> StandardLP:
    if getattr(args, "problem", None):
        return load_problem(args.problem)
    if getattr(args, "assignment_n", None):
        benefits = json.loads(args.benefits) if args.benefits else None
        return generate_assignment(AssignmentSpec(N=args.assignment_n, benefits=benefits,
                                                  seed=args.assignment_seed))
    return generate_assignment(default_spec())


def _fmt(vec: np.ndarray) -> str:
    return "(" + ", ".join(f"{v:.6g}" for v in np.asarray(vec).reshape(-1)) + ")"


def cmd_solve_oracle(args: argparse.Namespace) -> int:
    lp = _problem_from_args(args)
    print(f"🔍 Oracle solve: {lp.name} (n={lp.n}, m={lp.m})")

    point = oracle_solve_lp(lp)
    print(f"   ✅ LP optimum x* = {_fmt(point.x_star)}")
    print(f"      dual z* = {_fmt(point.z_star)}")
    print(f"      objective = {lp.objective(point.x_star):.10g}, KKT ok = {kkt_check_lp(lp, point)}")

    if args.gamma is not None:
        qp = RegularizedQP(lp, args.gamma)
        qp_point = oracle_solve_qp(qp)
        print(f"   ✅ QP optimum (gamma={args.gamma:g}) x = {_fmt(qp_point.x_star)}")
        print(f"      KKT ok = {kkt_check_qp(qp, qp_point)}")

    if args.probe:
        probe = exactness_probe(lp, PROBE_GAMMAS)
        threshold = exactness_threshold(probe)
        print("📊 Exactness probe:")
        for gamma, matches in probe:
            print(f"   gamma={gamma:<8g} {'✅' if matches else '❌'}")
        print(f"   threshold: {threshold if threshold is not None else 'none found'}")
    return EXIT_OK


def cmd_preprocess(args: argparse.Namespace) -> int:
    lp = _problem_from_args(args)
    result = max_consensus_scale(lp)
    print(f"🔧 Preprocessing {lp.name}")
    print(f"   Gershgorin estimates: {_fmt(result.estimates)}")
    print(f"   Max-consensus: rho* = {result.rho_star:.6g} after {result.rounds} round(s)")
    print(f"   Spectral radius of A^T A: {result.rho_before:.6g} -> {result.rho_after:.6g}")
    if args.write:
        path = save_problem(result.scaled, args.write)
        print(f"💾 Saved scaled problem to: {path}")
    return EXIT_OK


def cmd_gen_assignment(args: argparse.Namespace) -> int:
    benefits = json.loads(args.benefits) if args.benefits else None
    lp = generate_assignment(AssignmentSpec(N=args.N, benefits=benefits, seed=args.seed))
    if args.write:
        path = save_problem(lp, args.write)
        print(f"💾 Saved {lp.name} (n={lp.n}, m={lp.m}) to: {path}")
    else:
        coo = lp.A.tocoo()
        print(json.dumps({
            "name": lp.name, "n": lp.n, "m": lp.m, "c": lp.c.tolist(), "b": lp.b.tolist(),
            "A": [{"row": int(r), "col": int(k), "value": float(v)} for r, k, v in zip(coo.row, coo.col, coo.data)],
        }, indent=2))
    return EXIT_OK


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Start from --config (if given) and override with explicitly passed flags."""
    values: Dict[str, Any] = {}
    if args.config:
        values = RunConfig.from_echo(args.config).model_dump(mode="json")
    overrides = {
        "problem": args.problem,
        "mode": args.mode,
        "mu": args.mu,
        "tau_scale": args.tau_scale,
        "rmin_scale": args.rmin_scale,
        "gamma": args.gamma,
        "t_max": args.t_max,
        "j_max": args.j_max,
        "noise_std": args.noise_std,
        "seed": args.seed,
        "out": args.out,
        "sample_every": args.sample_every,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if args.assignment_n:
        benefits = json.loads(args.benefits) if args.benefits else None
        values["assignment"] = {"N": args.assignment_n, "benefits": benefits, "seed": args.assignment_seed}
        values["problem"] = None
    if args.problem:
        values["assignment"] = None
    if args.no_preprocess:
        values["preprocess"] = False
    return build_config(**values)


def _print_outcome(outcome: RunOutcome) -> None:
    metrics = outcome.metrics
    out = outcome.prepared.config.out
    icon = {"ok": "✅", "zeno-abort": "⚠️", "divergence": "❌"}.get(outcome.status, "⚠️")
    print(f"\n📊 RUN COMPLETE {icon} status={outcome.status}")
    print(f"   Problem: {metrics.get('problem', outcome.prepared.problem.name)} "
          f"| mode={outcome.prepared.trigger_config.mode.value}")
    print(f"   Simulated time: {metrics.get('t_end', 0.0):.6g} | jumps: {metrics.get('jumps', 0)} "
          f"| broadcasts: {metrics.get('broadcasts', 0)}")
    if "broadcasts_by_cause" in metrics:
        print(f"   By cause: {metrics['broadcasts_by_cause']}")
    if "persistence" in metrics:
        print(f"   Persistence: {metrics['persistence']}")
    if "final_error_inf" in metrics:
        print(f"   Final |x - x*|_inf: {metrics['final_error_inf']:.3e} "
              f"(rounded matches oracle: {metrics['rounded_matches_oracle']})")
    if "V_final" in metrics:
        print(f"   V: {metrics['V_initial']:.6g} -> {metrics['V_final']:.6g}")
    if outcome.error:
        print(f"   {outcome.error}")
    print(f"💾 Results in: {out}")


def run(config: RunConfig) -> int:
    """Execute one configured run, write its artifacts and return the exit status."""
    outcome = execute_run(config)
    _print_outcome(outcome)
    return STATUS_EXIT.get(outcome.status, EXIT_INVALID)


def _sweep_worker(config_json: str) -> Dict[str, Any]:
    config = RunConfig.model_validate_json(config_json)
    try:
        outcome = execute_run(config)
    except LPSimError as exc:
        return {"seed": config.seed, "status": exc.code, "out": str(config.out)}
    m = outcome.metrics
    return {
        "seed": config.seed,
        "status": outcome.status,
        "broadcasts": m.get("broadcasts"),
        "final_error_inf": m.get("final_error_inf"),
        "rounded_matches_oracle": m.get("rounded_matches_oracle"),
        "persistence": m.get("persistence"),
        "out": str(config.out),
    }


def run_sweep(config: RunConfig, count: int, processes: Optional[int] = None) -> int:
    """Run seeds seed..seed+count-1 in a process pool, one output subdirectory per seed."""
    base = Path(config.out)
    configs = [config.model_copy(update={"seed": config.seed + k, "out": base / f"seed-{config.seed + k}"})
               for k in range(count)]
    print(f"🔄 Sweep: {count} run(s) over seeds {config.seed}..{config.seed + count - 1}")
    with mp.Pool(processes or min(count, mp.cpu_count())) as pool:
        rows = pool.map(_sweep_worker, [c.model_dump_json() for c in configs])
    table = pd.DataFrame(rows)
    base.mkdir(parents=True, exist_ok=True)
    table.to_csv(base / SWEEP_FILE, index=False)
    print(table.to_string(index=False))
    print(f"💾 Sweep summary: {base / SWEEP_FILE}")
    codes = [STATUS_EXIT.get(status, EXIT_INVALID) for status in table["status"]]
    return max(codes, default=EXIT_OK)


def cmd_simulate(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    if args.sweep and args.sweep > 1:
        return run_sweep(config, args.sweep)
    return run(config)


def cmd_audit(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    config = RunConfig.from_echo(run_dir)
    prepared = prepare_run(config)
    traj = load_trajectory(run_dir)
    traj.noise_enabled = config.noise_enabled
    traj.attach_diagnostics(prepared.flow_lp, prepared.saddle)
    print(f"🔍 Auditing {run_dir} ({len(traj.samples)} samples, {len(traj.events)} broadcasts)")

    report: Dict[str, Any] = {}
    passed = True
    if prepared.saddle is not None:
        k = default_penalty(penalty_bound(prepared.flow_lp, traj.X, traj.Z))
        params = LagrangianParams(K=k, saddle=prepared.saddle)
        lyap = lyapunov_audit(traj, prepared.flow_lp, params)
        report["lyapunov_audit"] = lyap.summary()
        passed = passed and lyap.passed
        print(f"   {'✅' if lyap.passed else '❌'} Lyapunov: {len(lyap.increases)} increase(s), "
              f"{len(lyap.gain_violations)} gain violation(s)")
        stride = max(1, len(traj.samples) // LIE_SAMPLE_TARGET)
        lie = sample_lie_bounds(traj, prepared.flow_lp, params, stride=stride)
        report["lie_bound"] = lie.as_dict()
        print(f"   📈 Lie bound: held {lie.held}/{lie.checked} (skipped {lie.skipped}), "
              f"worst excess {lie.worst_excess:.3e}")
    else:
        print("   ⚠️ No saddle reference; Lyapunov audit skipped")

    if prepared.trigger_config.distributed:
        mismatch = mode_mismatch_audit(traj, prepared.flow_lp, prepared.graph, prepared.trigger_config)
        report["mismatch_audit"] = mismatch.summary()
        passed = passed and mismatch.passed
        print(f"   {'✅' if mismatch.passed else '❌'} Mode mismatch: {len(mismatch.intervals)} interval(s), "
              f"{len(mismatch.violations)} violation(s), {mismatch.stale_positive} stale-positive")

    path = run_dir / AUDIT_FILE
    path.write_text(json.dumps(report, indent=2, default=str))
    print(f"💾 Audit report: {path}")
    return EXIT_OK if passed else EXIT_AUDIT


def _add_problem_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--problem", type=Path, help="JSON problem file (standard form)")
    parser.add_argument("--assignment-n", type=int, dest="assignment_n", help="generate an N x N assignment LP")
    parser.add_argument("--benefits", help="benefit table as JSON (with --assignment-n)")
    parser.add_argument("--assignment-seed", type=int, dest="assignment_seed", help="seed for random benefits")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Event-triggered distributed LP simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    oracle = sub.add_parser("solve-oracle", help="solve with the enumeration oracles")
    _add_problem_flags(oracle)
    oracle.add_argument("--gamma", type=float, help="also solve the regularized QP")
    oracle.add_argument("--probe", action="store_true", help="probe exact regularization over gamma = 2^0..2^10")
    oracle.set_defaults(handler=cmd_solve_oracle)

    pre = sub.add_parser("preprocess", help="max-consensus spectral scaling")
    _add_problem_flags(pre)
    pre.add_argument("--write", type=Path, help="save the scaled problem")
    pre.set_defaults(handler=cmd_preprocess)

    gen = sub.add_parser("gen-assignment", help="generate an assignment LP")
    gen.add_argument("--N", type=int, default=2)
    gen.add_argument("--benefits", help="benefit table as JSON")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--write", type=Path, help="output file (default: stdout)")
    gen.set_defaults(handler=cmd_gen_assignment)

    sim = sub.add_parser("simulate", help="run the event-triggered simulation")
    _add_problem_flags(sim)
    sim.add_argument("--config", type=Path, help="load a config.echo; flags override its fields")
    sim.add_argument("--mode", choices=["centralized", "distributed"])
    sim.add_argument("--gamma", type=float)
    sim.add_argument("--t-max", type=float, dest="t_max")
    sim.add_argument("--j-max", type=int, dest="j_max")
    sim.add_argument("--noise-std", type=float, dest="noise_std")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", type=Path)
    sim.add_argument("--mu", type=float)
    sim.add_argument("--tau-scale", type=float, dest="tau_scale")
    sim.add_argument("--rmin-scale", type=float, dest="rmin_scale")
    sim.add_argument("--sample-every", type=float, dest="sample_every")
    sim.add_argument("--no-preprocess", action="store_true", dest="no_preprocess")
    sim.add_argument("--sweep", type=int, help="run K seeds concurrently")
    sim.set_defaults(handler=cmd_simulate)

    audit = sub.add_parser("audit", help="audit a saved run directory")
    audit.add_argument("--run-dir", type=Path, required=True, dest="run_dir")
    audit.set_defaults(handler=cmd_audit)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch and map errors to exit codes."""
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except OracleError as exc:
        print(f"❌ Oracle failure: {exc}")
        return EXIT_ORACLE
    except (LPSimError, OSError, json.JSONDecodeError) as exc:
        print(f"❌ {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
