#!/usr/bin/env python3
"""
Acceptance Run - long scenarios on the assignment instance and random LPs

Usage: python scripts/acceptance_run.py [--out DIR] [--t-max T] [--seeds K]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import sparse

# Repository root on the path so `src.` imports resolve
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.config import build_config  # noqa: E402
from src.dynamics.lyapunov import LagrangianParams, compute_saddle  # noqa: E402
from src.ingestion.assignment import DEFAULT_OPTIMUM, default_spec, generate_assignment  # noqa: E402
from src.lp.oracle import exactness_probe, exactness_threshold, oracle_solve_lp  # noqa: E402
from src.lp.problem import StandardLP  # noqa: E402
from src.network.scaling import gershgorin_estimates, max_consensus_scale  # noqa: E402
from src.network.topology import build_graph  # noqa: E402
from src.pipeline import execute_run  # noqa: E402
from src.settings import configure_logging  # noqa: E402
from src.sim.audit import lyapunov_audit, mode_mismatch_audit, sample_lie_bounds  # noqa: E402
from src.sim.executor import Horizon, simulate  # noqa: E402
from src.triggers.config import TriggerMode, default_config  # noqa: E402
from src.triggers.state import synchronized_state  # noqa: E402

RANDOM_LPS = 20
EXACTNESS_LPS = 50
SPECTRAL_MATRICES = 100
LIE_SAMPLES_REQUIRED = 10_000
RANDOM_T_MAX = 20.0


def random_lp(rng: np.random.Generator, n_max: int = 8, m_max: int = 4) -> StandardLP:
    """Feasible LP with a planted, bounded optimum."""
    m = int(rng.integers(1, m_max + 1))
    n = int(rng.integers(m + 1, n_max + 1))
    A = np.hstack([np.eye(m) + 0.2 * rng.uniform(-1.0, 1.0, size=(m, m)), rng.uniform(-1.0, 1.0, size=(m, n - m))])
    perm = rng.permutation(n)
    A = A[:, perm]
    x0 = np.zeros(n)
    x0[:m] = rng.uniform(0.5, 1.5, size=m)
    x0 = x0[perm]
    d = np.where(x0 > 0.0, 0.0, rng.uniform(1.0, 2.0, size=n))
    c = A.T @ rng.uniform(-1.0, 1.0, size=m) + d
    return StandardLP(c=c, A=sparse.csr_matrix(A), b=A @ x0, name=f"random-{n}x{m}")


def main() -> int:
    parser = argparse.ArgumentParser(description="Run the long acceptance scenarios")
    parser.add_argument("--out", type=Path, default=Path("runs/acceptance"))
    parser.add_argument("--t-max", type=float, default=200.0, dest="t_max")
    parser.add_argument("--seeds", type=int, default=10)
    args = parser.parse_args()
    configure_logging()

    print("\n🎉 ACCEPTANCE RUN")
    print("=" * 50)
    results = {}
    lie_checked = lie_held = 0
    lie_worst = 0.0

    # 1. Assignment run (distributed, noiseless)
    print("📈 Assignment run (distributed)...")
    try:
        start = time.perf_counter()
        outcome = execute_run(build_config(t_max=args.t_max, out=args.out / "assignment"))
        wall = time.perf_counter() - start
        m, traj, prepared = outcome.metrics, outcome.trajectory, outcome.prepared

        results["convergence"] = outcome.status == "ok" and m["final_error_inf"] <= 0.05
        results["lyapunov (assignment)"] = m["lyapunov_audit"]["increases"] == 0
        results["mode mismatch"] = m["mismatch_audit"]["bound_violations"] == 0 \
            and m["mismatch_audit"]["duration_violations"] == 0
        results["no zeno"] = outcome.status != "zeno-abort" and m["min_inter_event_time"] >= 1e-6
        results["linear broadcasts"] = m["broadcast_r2"] >= 0.9

        params = LagrangianParams(K=m["K"], saddle=prepared.saddle)
        lie = sample_lie_bounds(traj, prepared.flow_lp, params)
        lie_checked, lie_held, lie_worst = lie.checked, lie.held, lie.worst_excess

        print(f"   ✅ final |x - x*|_inf = {m['final_error_inf']:.3e} in {wall:.1f}s wall-clock")
        print(f"   📊 {m['broadcasts']} broadcasts, persistence {m['persistence']}, R^2 = {m['broadcast_r2']:.3f}")
    except Exception as e:
        print(f"   ❌ Error: {e}")
        results["convergence"] = False

    # 2. Noise robustness
    print("\n🔊 Noise robustness (std 1)...")
    recovered = 0
    for seed in range(args.seeds):
        try:
            config = build_config(t_max=args.t_max, noise_std=1.0, seed=seed, out=args.out / f"noise-{seed}")
            outcome = execute_run(config)
            ok = bool(outcome.metrics.get("rounded_matches_oracle"))
            recovered += ok
            print(f"   {'✅' if ok else '⚠️'} seed {seed}: rounded x = {outcome.metrics.get('rounded_x')}")
        except Exception as e:
            print(f"   ❌ seed {seed}: {e}")
    results["noise rounding"] = recovered >= int(np.ceil(0.9 * args.seeds))

    # 3. Random LPs: Lyapunov audit and Lie samples
    print("\n🎲 Random LP audits...")
    rng = np.random.default_rng(2024)
    monotone = 0
    for k in range(RANDOM_LPS):
        lp = random_lp(rng)
        try:
            scaled = max_consensus_scale(lp).scaled
            graph = build_graph(scaled)
            saddle = compute_saddle(scaled)
            init = synchronized_state(np.full(lp.n, 0.5), np.zeros(lp.m))
            traj = simulate(scaled, graph, default_config(graph), init, Horizon(RANDOM_T_MAX, 1_000_000), saddle=saddle)
            params = LagrangianParams(saddle=saddle)
            report = lyapunov_audit(traj, scaled, params)
            monotone += not report.increases
            lie = sample_lie_bounds(traj, scaled, params)
            lie_checked += lie.checked
            lie_held += lie.held
            lie_worst = max(lie_worst, lie.worst_excess)
        except Exception as e:
            print(f"   ❌ {lp.name}: {e}")
    print(f"   📊 monotone V on {monotone}/{RANDOM_LPS} random LPs")
    results["lyapunov (random)"] = monotone == RANDOM_LPS

    rate = lie_held / lie_checked if lie_checked else 0.0
    print(f"   📈 Lie bound held on {lie_held}/{lie_checked} samples, worst excess {lie_worst:.3e}")
    results["lie bound"] = lie_checked >= LIE_SAMPLES_REQUIRED and rate >= 0.99 and lie_worst <= 1e-4

    # 4. Exact regularization
    print("\n🔍 Exact regularization probe...")
    gammas = [2.0 ** k for k in range(11)]
    found = 0
    for _ in range(EXACTNESS_LPS):
        lp = random_lp(rng, n_max=6, m_max=3)
        found += exactness_threshold(exactness_probe(lp, gammas)) is not None
    print(f"   📊 threshold found on {found}/{EXACTNESS_LPS}")
    results["exact regularization"] = found == EXACTNESS_LPS

    # 5. Preprocessing
    print("\n🔧 Preprocessing...")
    lp = generate_assignment(default_spec())
    scaling = max_consensus_scale(lp)
    same = np.allclose(oracle_solve_lp(scaling.scaled).x_star, DEFAULT_OPTIMUM, atol=1e-8)
    spectral_ok = 0
    for _ in range(SPECTRAL_MATRICES):
        m_rows, n_cols = int(rng.integers(1, 8)), int(rng.integers(1, 12))
        dense = rng.uniform(-3.0, 3.0, size=(m_rows, n_cols)) * (rng.uniform(size=(m_rows, n_cols)) < 0.4)
        result = max_consensus_scale(StandardLP(c=np.zeros(n_cols), A=sparse.csr_matrix(dense), b=np.zeros(m_rows)))
        spectral_ok += result.rho_after <= 1.0 + 1e-9
    results["preprocessing"] = bool(np.allclose(gershgorin_estimates(lp), 4.0) and scaling.rho_star == 4.0
                                    and scaling.rho_after <= 1.0 + 1e-9 and same
                                    and spectral_ok == SPECTRAL_MATRICES)
    print(f"   ✅ rho* = {scaling.rho_star:g}, scaled radius {scaling.rho_after:.6g}, "
          f"{spectral_ok}/{SPECTRAL_MATRICES} random matrices within bound")

    # 6. Centralized comparison
    print("\n🏛️ Centralized comparison...")
    try:
        outcome = execute_run(build_config(mode=TriggerMode.CENTRALIZED, t_max=args.t_max,
                                           out=args.out / "centralized"))
        m = outcome.metrics
        results["centralized convergence"] = m["final_error_inf"] <= 0.05
        print(f"   ✅ final |x - x*|_inf = {m['final_error_inf']:.3e}, {m['jumps']} jumps")
    except Exception as e:
        print(f"   ❌ Error: {e}")
        results["centralized convergence"] = False

    summary = pd.DataFrame([(name, "PASS" if ok else "FAIL") for name, ok in results.items()],
                           columns=["criterion", "result"])
    print("\n" + "=" * 50)
    print(summary.to_string(index=False))
    return 0 if all(results.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
