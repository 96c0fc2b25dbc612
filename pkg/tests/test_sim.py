import logging

import numpy as np
import pytest

from src.dynamics.flow import PrimalDualPoint, active_mask, flow_f
from src.dynamics.lyapunov import LagrangianParams, compute_saddle, default_penalty
from src.errors import PreconditionError
from src.network.topology import build_graph
from src.sim import GUARD, Horizon, NoiseSpec, forecast_events, load_trajectory, lyapunov_audit, next_event_time, \
    simulate, write_trajectory
from src.sim.audit import mode_mismatch_audit, sample_lie_bounds
from src.sim.events import EventForecast, flow_state
from src.sim.executor import ZENO_STREAK, ZenoMonitor, _advance, default_cadence
from src.sim.trajectory import HybridTrajectory, Persistence, SampleKind
from src.triggers import Cause, TriggerConfig, TriggerMode, TriggerVerdict, default_config, synchronized_state
from src.triggers.centralized import broadcast_at_equilibrium, centralized_check, error_trigger_margin
from src.triggers.distributed import cause_masks, distributed_check
from src.triggers.state import Bookkeeping, BroadcastState, NetworkState, broadcast_rates


def _unit_config(mode=TriggerMode.DISTRIBUTED):
    return TriggerConfig(mode=mode, mu=[1.0 / 256.0] * 2, tau=[0.01] * 2, r_min=[0.005] * 2)


def _run(lp, mode, t_max, j_max=100_000, x0=0.5, noise=None):
    graph = build_graph(lp)
    cfg = default_config(graph, mode)
    init = synchronized_state(np.full(lp.n, x0), np.zeros(lp.m))
    return simulate(lp, graph, cfg, init, Horizon(t_max, j_max), noise=noise, saddle=compute_saddle(lp))


def test_next_event_from_origin(unit_lp):
    """f_hat = 1 and g_hat = -1: both errors reach sqrt(mu) |level| at t = sqrt(mu)."""
    graph = build_graph(unit_lp)
    dt, imminent = next_event_time(unit_lp, graph, _unit_config(), synchronized_state([0.0], [0.0]))

    assert dt == pytest.approx(1.0 / 16.0)
    assert imminent.causes == {0: frozenset({Cause.E}), 1: frozenset({Cause.E})}, f"Got {imminent.causes}"


def test_no_event_at_equilibrium(unit_lp):
    graph = build_graph(unit_lp)
    dt, imminent = next_event_time(unit_lp, graph, _unit_config(), synchronized_state([1.0], [-1.0]))
    assert dt == np.inf
    assert not imminent


def test_zero_crossing_time(unit_lp):
    """x = 2 falls at rate f_hat = -3 and reaches zero at t = 2/3."""
    graph = build_graph(unit_lp)
    forecast = forecast_events(unit_lp, graph, _unit_config(), synchronized_state([2.0], [0.0]))
    assert forecast.zero_crossings[0] == pytest.approx(2.0 / 3.0)
    assert forecast.dt == pytest.approx(1.0 / 16.0), "Error trigger comes first"


def test_centralized_error_root(scaled_assignment_lp):
    """With g_hat = 0 the margin is 40 t^2 |f_hat|^2 - 1/4 |f_hat|^2, zero at t = 1/sqrt(160)."""
    graph = build_graph(scaled_assignment_lp)
    cfg = default_config(graph, TriggerMode.CENTRALIZED)
    forecast = forecast_events(scaled_assignment_lp, graph, cfg, synchronized_state(np.full(4, 0.5), np.zeros(4)))

    assert forecast.dt == pytest.approx(1.0 / np.sqrt(160.0))
    assert forecast.imminent.fired == frozenset(range(8))
    assert forecast.imminent.all_causes() == frozenset({Cause.E})


def test_forecast_brackets_error_events(scaled_assignment_lp):
    """No error trigger before the forecast time; the imminent ones fire just past it."""
    graph = build_graph(scaled_assignment_lp)
    cfg = default_config(graph)
    rng = np.random.default_rng(2024)
    for trial in range(20):
        state = synchronized_state(rng.uniform(0.1, 1.0, size=4), rng.normal(0.0, 1.0, size=4))
        rates = broadcast_rates(scaled_assignment_lp, state.hat)
        forecast = forecast_events(scaled_assignment_lp, graph, cfg, state, rates)
        assert forecast.dt > 0.0, f"trial {trial}: event already due"

        before = cause_masks(scaled_assignment_lp, cfg, flow_state(state, rates, cfg, 0.5 * forecast.dt), rates)
        assert not before[Cause.E].any(), f"trial {trial}: error trigger before dt"

        after = cause_masks(scaled_assignment_lp, cfg, flow_state(state, rates, cfg, forecast.dt * (1 + 1e-9)), rates)
        for agent, causes in forecast.imminent.causes.items():
            if Cause.E in causes:
                assert after[Cause.E][agent], f"trial {trial}: agent {agent} expected to fire"


def test_saddle_start_is_persistent_flow(unit_lp):
    """Starting at the saddle nothing ever fires and the run ends in an endless flow."""
    graph = build_graph(unit_lp)
    init = synchronized_state([1.0], [-1.0])
    traj = simulate(unit_lp, graph, _unit_config(), init, Horizon(5.0, 100), saddle=compute_saddle(unit_lp))

    assert traj.events == []
    assert traj.final_dt_inf
    assert traj.persistence.kind is Persistence.PFI
    assert traj.t_end == 5.0
    assert traj.kinds[0] is SampleKind.INIT


def test_distributed_run_invariants(scaled_assignment_lp):
    traj = _run(scaled_assignment_lp, TriggerMode.DISTRIBUTED, t_max=0.5)

    assert traj.X.min() >= 0.0, "Primal state left the nonnegative orthant"
    assert traj.X_hat.min() >= 0.0
    assert np.all(np.diff(traj.t) >= 0.0) and np.all(np.diff(traj.j) >= 0)
    assert traj.j[-1] == traj.n_jumps
    assert len(traj.jump_times) == traj.n_jumps
    assert traj.t_end == 0.5
    assert len(traj.events) >= traj.n_jumps
    assert not traj.truncated


def test_runs_are_deterministic(scaled_assignment_lp):
    a = _run(scaled_assignment_lp, TriggerMode.DISTRIBUTED, t_max=0.3)
    b = _run(scaled_assignment_lp, TriggerMode.DISTRIBUTED, t_max=0.3)

    assert a.events == b.events
    assert np.array_equal(a.X, b.X) and np.array_equal(a.t, b.t)


def test_noisy_runs_follow_the_seed(scaled_assignment_lp):
    noise = NoiseSpec(enabled=True, std_dev=0.01, seed=4)
    a = _run(scaled_assignment_lp, TriggerMode.DISTRIBUTED, t_max=0.3, noise=noise)
    b = _run(scaled_assignment_lp, TriggerMode.DISTRIBUTED, t_max=0.3, noise=noise)

    assert a.noise_enabled
    assert np.array_equal(a.X_hat, b.X_hat)
    assert a.X_hat.min() >= 0.0


def test_centralized_run_decreases_v(scaled_assignment_lp):
    traj = _run(scaled_assignment_lp, TriggerMode.CENTRALIZED, t_max=1.0)
    params = LagrangianParams(K=default_penalty(1.0), saddle=traj.saddle)
    report = lyapunov_audit(traj, scaled_assignment_lp, params)

    assert traj.n_jumps > 0
    assert report.increases == [], f"V increased at samples {report.increases}"
    assert report.v[-1] < report.v[0]


def test_lie_bound_on_centralized_samples(scaled_assignment_lp):
    traj = _run(scaled_assignment_lp, TriggerMode.CENTRALIZED, t_max=0.5)
    params = LagrangianParams(saddle=traj.saddle)
    summary = sample_lie_bounds(traj, scaled_assignment_lp, params)

    assert summary.checked > 0
    assert summary.held == summary.checked, f"Lie bound failed: {summary.as_dict()}"


def test_jump_budget_truncates(scaled_assignment_lp):
    traj = _run(scaled_assignment_lp, TriggerMode.DISTRIBUTED, t_max=10.0, j_max=5)

    assert traj.truncated
    assert traj.n_jumps == 5
    assert traj.t_end < 10.0


def test_simulate_requires_synchronized_start(unit_lp):
    graph = build_graph(unit_lp)
    state = synchronized_state([1.0], [0.0])
    state.x[0] = 2.0
    with pytest.raises(PreconditionError):
        simulate(unit_lp, graph, _unit_config(), state, Horizon(1.0, 10))


def test_horizon_validation():
    with pytest.raises(PreconditionError):
        Horizon(0.0, 10)
    with pytest.raises(PreconditionError):
        Horizon(1.0, -1)


def test_zeno_monitor():
    monitor = ZenoMonitor()
    monitor.add(0.0)
    for _ in range(ZENO_STREAK - 1):
        monitor.add(0.0)
    assert not monitor.suspected
    monitor.add(1.0)
    assert monitor.streak == 0 and not monitor.suspected

    for _ in range(ZENO_STREAK):
        monitor.add(1.0)
    assert monitor.suspected, "A long run of coincident jumps must raise the flag"


def test_default_cadence(assignment_lp):
    cfg = default_config(build_graph(assignment_lp))
    assert default_cadence(200.0, cfg) == pytest.approx(0.1)
    assert default_cadence(1e-3, cfg) == pytest.approx(cfg.tau.min() / 4.0)


def test_export_round_trip(scaled_assignment_lp, tmp_path):
    traj = _run(scaled_assignment_lp, TriggerMode.DISTRIBUTED, t_max=0.2)
    write_trajectory(traj, tmp_path)
    loaded = load_trajectory(tmp_path)

    assert (tmp_path / "trajectory.csv").exists() and (tmp_path / "events.csv").exists()
    assert np.array_equal(loaded.t, traj.t)
    assert np.array_equal(loaded.X, traj.X) and np.array_equal(loaded.Z_hat, traj.Z_hat)
    assert loaded.events == traj.events
    assert loaded.n_jumps == traj.n_jumps


def _frozen_broadcast_trajectory(lp, slope):
    """
    x stays clamped at 0 while the broadcast (x_hat, z_hat) = (0, 2) is frozen.

    z falls at rate 1 until f = 1 - z reaches 0 at t = 1, then at `slope`, so
    the true active set contains 0 on [1, 1.3] while the broadcast one does
    not. A broadcast at t = 1.3 closes the mismatch.
    """
    traj = HybridTrajectory(n=1, m=1)
    hat = BroadcastState([0.0], [2.0])

    def z_at(t):
        return 2.0 - t if t <= 1.0 else 1.0 - slope * (t - 1.0)

    plan = [(0.0, SampleKind.INIT), (0.5, SampleKind.CADENCE), (1.0, SampleKind.BREAKPOINT),
            (1.1, SampleKind.CADENCE), (1.2, SampleKind.CADENCE), (1.3, SampleKind.CADENCE)]
    for t, kind in plan:
        traj.record(t, 0, NetworkState(np.zeros(1), np.array([z_at(t)]), hat, Bookkeeping.fresh(2)), kind)
    z_end = np.array([z_at(1.3)])
    traj.record(1.3, 1, NetworkState(np.zeros(1), z_end, BroadcastState([0.0], z_end), Bookkeeping.fresh(2)),
                SampleKind.JUMP)
    traj.log_jump(1.3, 1, {0: "REQUEST", 1: "SEND"})
    traj.attach_diagnostics(lp, None)
    return traj


def _mismatch_ratios(lp, traj, start, end):
    """f_0^2 / (8 (t - start)^2 B) on samples inside the interval, B = |A x_hat - b|^2 from the frozen broadcast."""
    b = float(np.sum((lp.A @ traj.X_hat[0] - lp.b) ** 2))
    ratios = []
    for k, t in enumerate(traj.t):
        if start < t < end or (t == end and traj.kinds[k] is not SampleKind.JUMP):
            f = flow_f(lp, PrimalDualPoint(traj.X[k], traj.Z[k]))[0]
            ratios.append(f * f / (8.0 * (t - start) ** 2 * b))
    return ratios


@pytest.mark.parametrize("slope, bound_ok", [(1.0, True), (4.0, False)])
def test_mode_mismatch_forced_fixture(unit_lp, slope, bound_ok):
    """The audit finds the forced interval, reports the directly evaluated ratio and judges the bound."""
    traj = _frozen_broadcast_trajectory(unit_lp, slope)
    cfg = TriggerConfig(mode=TriggerMode.DISTRIBUTED, mu=[1.0 / 256.0] * 2, tau=[0.5] * 2, r_min=[0.25] * 2)

    report = mode_mismatch_audit(traj, unit_lp, build_graph(unit_lp), cfg)

    assert len(report.intervals) == 1, f"Expected one mismatch interval, got {report.intervals}"
    interval = report.intervals[0]
    assert interval.agent == 0
    assert interval.start == pytest.approx(1.0)
    assert interval.end == pytest.approx(1.3)

    ratios = _mismatch_ratios(unit_lp, traj, interval.start, interval.end)
    assert len(ratios) == 3
    assert interval.worst_ratio == pytest.approx(max(ratios)), f"Audit {interval.worst_ratio} vs direct {ratios}"
    assert interval.worst_ratio == pytest.approx(slope * slope / 8.0)
    assert interval.bound_ok is bound_ok
    assert interval.duration <= cfg.tau[0]
    assert interval.duration_ok
    assert report.stale_positive == 0


def test_mode_mismatch_duration_limit(unit_lp):
    """The same interval outlasts a tau of 0.2."""
    traj = _frozen_broadcast_trajectory(unit_lp, 1.0)
    cfg = TriggerConfig(mode=TriggerMode.DISTRIBUTED, mu=[1.0 / 256.0] * 2, tau=[0.2] * 2, r_min=[0.1] * 2)

    report = mode_mismatch_audit(traj, unit_lp, build_graph(unit_lp), cfg)

    assert not report.passed
    assert report.summary()["duration_violations"] == 1
    assert report.summary()["bound_violations"] == 0


BISECTION_HORIZON = 50.0
LPS_PER_SWEEP = 10


def _first_time(holds, horizon=BISECTION_HORIZON):
    """Bisection for the first t in (0, horizon] where a monotone predicate holds, inf if it never does."""
    if not holds(horizon):
        return np.inf
    lo, hi = 0.0, horizon
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi
        if holds(mid):
            hi = mid
        else:
            lo = mid


def _assert_root(actual, expected, label):
    if np.isfinite(expected):
        assert abs(actual - expected) <= 1e-9 * max(1.0, expected), f"{label}: closed form {actual}, bisection {expected}"
    else:
        assert actual > BISECTION_HORIZON, f"{label}: closed form {actual} but the trigger never holds"


def _quiet_random_state(lp, graph, cfg, rng):
    """
    Random state that fires nothing yet.

    Broadcast values have some clamped zeros; errors stay below half of the
    distributed thresholds; clocks sit below tau. When the perturbed state
    already fires, its synchronized version is used.
    """
    n, m = lp.n, lp.m
    x_hat = np.where(rng.uniform(size=n) < 0.3, 0.0, rng.uniform(0.05, 1.5, size=n))
    hat = BroadcastState(x_hat, rng.normal(0.0, 1.0, size=m))
    rates = broadcast_rates(lp, hat)
    scale = 0.5 * np.sqrt(cfg.mu)
    e_x = rng.uniform(-1.0, 1.0, size=n) * scale[:n] * np.abs(rates.f_hat)
    e_x = np.where(x_hat > 0.0, np.maximum(e_x, -0.5 * x_hat), 0.0)
    e_z = rng.uniform(-1.0, 1.0, size=m) * scale[n:] * np.abs(rates.g_hat)
    book = Bookkeeping(rng.uniform(0.0, 1.0, size=n + m) * cfg.tau, -np.ones(n + m))

    state = NetworkState(hat.x_hat + e_x, hat.z_hat + e_z, hat, book)
    if cfg.distributed:
        firing = distributed_check(lp, graph, cfg, state, rates)
    else:
        firing = centralized_check(lp, state.point, hat, rates)
    if firing:
        state = NetworkState(hat.x_hat.copy(), hat.z_hat.copy(), hat, book)
    return state, rates


def _distributed_oracle(lp, graph, cfg, state, rates, tally):
    n, size = lp.n, lp.n + lp.m
    forecast = forecast_events(lp, graph, cfg, state, rates)

    def mask(cause, i):
        return lambda t: bool(cause_masks(lp, cfg, flow_state(state, rates, cfg, t), rates)[cause][i])

    def zero(i):
        return lambda t: bool(state.hat.x_hat[i] > 0.0 and flow_state(state, rates, cfg, t).x[i] <= 0.0)

    times = []
    for i in range(size):
        expected = _first_time(mask(Cause.E, i))
        times.append(expected)
        if i < n:
            _assert_root(forecast.roots[Cause.E][i], expected, f"E, agent {i}")
        tally[Cause.E] += bool(np.isfinite(expected))
    for i in range(n):
        for cause, holds in ((Cause.ZERO, zero(i)), (Cause.REQUEST, mask(Cause.REQUEST, i))):
            expected = _first_time(holds)
            _assert_root(forecast.roots[cause][i], expected, f"{cause.value}, agent {i}")
            times.append(expected)
            tally[cause] += bool(np.isfinite(expected))
    return min(times)


def _centralized_oracle(lp, graph, cfg, state, rates, tally):
    forecast = forecast_events(lp, graph, cfg, state, rates)
    clamped = (state.x == 0.0) & (rates.x_dot == 0.0)
    sigma0 = active_mask(state.x, flow_f(lp, state.point))

    def error(t):
        moved = flow_state(state, rates, cfg, t)
        return not broadcast_at_equilibrium(rates) and error_trigger_margin(rates, moved.e_x, moved.e_z) >= 0.0

    def sigma(t):
        moved = flow_state(state, rates, cfg, t)
        return bool(np.any(active_mask(moved.x, flow_f(lp, moved.point))[clamped] != sigma0[clamped]))

    def zero(t):
        return bool(np.any((state.hat.x_hat > 0.0) & (flow_state(state, rates, cfg, t).x <= 0.0)))

    times = []
    for cause, holds in ((Cause.E, error), (Cause.SIGMA, sigma), (Cause.ZERO, zero)):
        expected = _first_time(holds)
        _assert_root(float(forecast.roots[cause][0]), expected, f"centralized {cause.value}")
        times.append(expected)
        tally[cause] += bool(np.isfinite(expected))
    return min(times)


def _bisection_sweep(random_lp, mode, count, seed):
    rng = np.random.default_rng(seed)
    tally = {cause: 0 for cause in Cause}
    lp = graph = cfg = None
    for trial in range(count):
        if trial % max(1, count // LPS_PER_SWEEP) == 0:
            lp, _ = random_lp(rng)
            graph = build_graph(lp)
            cfg = default_config(graph, mode)
        state, rates = _quiet_random_state(lp, graph, cfg, rng)
        oracle = _distributed_oracle if cfg.distributed else _centralized_oracle
        expected = oracle(lp, graph, cfg, state, rates, tally)

        dt, _ = next_event_time(lp, graph, cfg, state)
        _assert_root(dt, max(expected, GUARD) if np.isfinite(expected) else expected, f"trial {trial}: next event")
    return tally


EXPECTED_CAUSES = {
    TriggerMode.DISTRIBUTED: (Cause.E, Cause.ZERO, Cause.REQUEST),
    TriggerMode.CENTRALIZED: (Cause.E, Cause.SIGMA, Cause.ZERO),
}


@pytest.mark.parametrize("mode", [TriggerMode.DISTRIBUTED, TriggerMode.CENTRALIZED])
def test_event_roots_match_bisection(random_lp, mode):
    """Closed-form roots agree with bisection on the trigger predicates for every cause."""
    tally = _bisection_sweep(random_lp, mode, count=100, seed=31)
    for cause in EXPECTED_CAUSES[mode]:
        assert tally[cause] > 0, f"No finite {cause.value} root exercised: {tally}"


@pytest.mark.slow
@pytest.mark.parametrize("mode", [TriggerMode.DISTRIBUTED, TriggerMode.CENTRALIZED])
def test_event_roots_match_bisection_long(random_lp, mode):
    tally = _bisection_sweep(random_lp, mode, count=1000, seed=32)
    for cause in EXPECTED_CAUSES[mode]:
        assert tally[cause] > 0, f"No finite {cause.value} root exercised: {tally}"


def test_advance_snaps_forecast_zero_crossing_silently(unit_lp, caplog):
    """x_dot = -6 from x = 1: flowing to the forecast root lands exactly on 0."""
    state = synchronized_state([1.0], [5.0])
    rates = broadcast_rates(unit_lp, state.hat)
    forecast = forecast_events(unit_lp, build_graph(unit_lp), _unit_config(), state, rates)
    step = float(forecast.zero_crossings[0])

    with caplog.at_level(logging.WARNING, logger="src.sim.executor"):
        moved = _advance(state, rates, _unit_config(), forecast, step)

    assert step == pytest.approx(1.0 / 6.0)
    assert moved.x[0] == 0.0
    assert not caplog.records, f"Unexpected warnings: {[r.getMessage() for r in caplog.records]}"


def test_advance_warns_on_missed_zero_crossing(unit_lp, caplog):
    """A step past an unforecast zero-crossing still clamps, but says so."""
    state = synchronized_state([1.0], [5.0])
    rates = broadcast_rates(unit_lp, state.hat)
    blind = EventForecast(1.0, TriggerVerdict(), np.array([np.inf]))

    with caplog.at_level(logging.WARNING, logger="src.sim.executor"):
        moved = _advance(state, rates, _unit_config(), blind, 1.0)

    assert moved.x[0] == 0.0
    assert any("zero-crossing missed" in r.getMessage() for r in caplog.records)
