import numpy as np
import pytest

from src.errors import ConfigValidationError, PreconditionError
from src.network.topology import build_graph
from src.triggers import (
    Bookkeeping,
    BroadcastState,
    Cause,
    NetworkState,
    TriggerConfig,
    TriggerEngine,
    TriggerMode,
    TriggerVerdict,
    apply_jump,
    centralized_check,
    default_config,
    distributed_check,
    synchronized_state,
    tau_bounds,
    validate_config,
)
from src.triggers.centralized import broadcast_at_equilibrium, error_trigger_margin
from src.triggers.state import broadcast_rates


def _unit_config(mode=TriggerMode.DISTRIBUTED):
    return TriggerConfig(mode=mode, mu=[1.0 / 256.0] * 2, tau=[0.01] * 2, r_min=[0.005] * 2)


def _state(x, z, x_hat, z_hat, s=None, r=None, q=frozenset()):
    size = len(x) + len(z)
    book = Bookkeeping(
        s=np.zeros(size) if s is None else np.asarray(s, dtype=float),
        r=-np.ones(size) if r is None else np.asarray(r, dtype=float),
        q=frozenset(q),
    )
    return NetworkState(np.asarray(x, dtype=float), np.asarray(z, dtype=float), BroadcastState(x_hat, z_hat), book)


def test_error_trigger_exact_boundary(unit_lp):
    """f_hat = 1 and mu = 1/256: |e_x| = 1/16 sits exactly on the threshold and fires."""
    graph = build_graph(unit_lp)
    cfg = _unit_config()

    on_boundary = _state([1.0 / 16.0], [0.0], [0.0], [0.0])
    verdict = distributed_check(unit_lp, graph, cfg, on_boundary)
    assert verdict.causes == {0: frozenset({Cause.E})}, f"Got {verdict.causes}"

    inside = _state([1.0 / 32.0], [0.0], [0.0], [0.0])
    assert not distributed_check(unit_lp, graph, cfg, inside)


def test_error_trigger_ignores_zero_flow(unit_lp):
    """At f_hat = 0 the error trigger stays silent; ZERO catches x reaching zero."""
    graph = build_graph(unit_lp)
    state = _state([0.0], [0.0], [0.5], [0.0])

    verdict = distributed_check(unit_lp, graph, _unit_config(), state)
    assert verdict.causes == {0: frozenset({Cause.ZERO})}, f"Got {verdict.causes}"
    assert verdict.codes(0) == "ZERO"


def test_request_then_send(unit_lp):
    """A clamped agent past tau requests; its neighbor answers on the next check."""
    graph = build_graph(unit_lp)
    cfg = _unit_config()
    state = _state([0.0], [0.0], [0.0], [0.0], s=[0.01, 0.0])

    first = distributed_check(unit_lp, graph, cfg, state)
    assert first.causes == {0: frozenset({Cause.REQUEST})}, f"Got {first.causes}"

    after = apply_jump(graph, cfg, state, first)
    assert after.book.q == frozenset({(1, 0)})
    assert after.book.s[0] == 0.0 and after.book.r[0] == -1.0

    second = distributed_check(unit_lp, graph, cfg, after)
    assert second.causes == {1: frozenset({Cause.SEND})}, f"Got {second.causes}"

    serviced = apply_jump(graph, cfg, after, second)
    assert serviced.book.q == frozenset()


def test_synch_after_close_broadcast(unit_lp):
    """A neighbor broadcast within r_min of the own one forces a synchronizing broadcast."""
    graph = build_graph(unit_lp)
    cfg = _unit_config()

    close = _state([0.0], [0.0], [0.0], [0.0], s=[0.01, 0.003])
    after = apply_jump(graph, cfg, close, distributed_check(unit_lp, graph, cfg, close))
    assert after.book.r[1] == 0.003
    verdict = distributed_check(unit_lp, graph, cfg, after)
    assert verdict.has(1, Cause.SYNCH) and verdict.has(1, Cause.SEND)
    assert verdict.codes(1) == "SEND,SYNCH"

    far = _state([0.0], [0.0], [0.0], [0.0], s=[0.01, 0.008])
    after = apply_jump(graph, cfg, far, distributed_check(unit_lp, graph, cfg, far))
    verdict = distributed_check(unit_lp, graph, cfg, after)
    assert not verdict.has(1, Cause.SYNCH)


def test_check_is_pure(scaled_assignment_lp):
    graph = build_graph(scaled_assignment_lp)
    cfg = default_config(graph)
    state = synchronized_state(np.full(4, 0.5), np.zeros(4))
    state.x[0] = 0.9
    before = state.copy()

    first = distributed_check(scaled_assignment_lp, graph, cfg, state)
    second = distributed_check(scaled_assignment_lp, graph, cfg, state)

    assert first == second
    assert np.array_equal(state.x, before.x) and np.array_equal(state.hat.x_hat, before.hat.x_hat)
    assert np.array_equal(state.book.s, before.book.s)


def test_jump_is_local(scaled_assignment_lp):
    """Only the fired agent broadcasts; only its neighbors record r."""
    graph = build_graph(scaled_assignment_lp)
    cfg = default_config(graph)
    state = synchronized_state(np.full(4, 0.5), np.zeros(4))
    state.x[:] = [0.7, 0.4, 0.3, 0.6]
    state.z[:] = 0.1
    state.book.s[:] = 0.002

    after = apply_jump(graph, cfg, state, TriggerVerdict({0: frozenset({Cause.E})}))

    assert after.hat.x_hat.tolist() == [0.7, 0.5, 0.5, 0.5]
    assert after.hat.z_hat.tolist() == [0.0] * 4
    assert np.array_equal(after.x, state.x), "Jumps never move the true state"
    assert after.book.s[0] == 0.0 and after.book.r[0] == -1.0
    for j in (1, 2, 4, 6):
        assert after.book.r[j] == 0.002, f"Neighbor {j} should record the broadcast"
    for j in (3, 5, 7):
        assert after.book.r[j] == -1.0, f"Agent {j} is not a neighbor of 0"


def test_full_broadcast_clears_errors(scaled_assignment_lp):
    graph = build_graph(scaled_assignment_lp)
    cfg = default_config(graph)
    state = synchronized_state(np.full(4, 0.5), np.zeros(4))
    state.x[:] = [0.7, 0.4, 0.3, 0.6]
    state.z[:] = [0.1, -0.2, 0.3, 0.0]

    after = apply_jump(graph, cfg, state, TriggerVerdict.everyone(graph.n_agents, [Cause.E]))

    assert np.all(after.e_x == 0.0) and np.all(after.e_z == 0.0)
    assert np.all(after.book.s == 0.0) and np.all(after.book.r == -1.0)


def test_noisy_jump(scaled_assignment_lp):
    """Receivers get corrupted values; senders keep their exact record."""
    graph = build_graph(scaled_assignment_lp)
    cfg = default_config(graph)
    state = synchronized_state(np.full(4, 0.5), np.zeros(4))
    state.x[:] = [0.0, 0.4, 0.3, 0.6]
    verdict = TriggerVerdict.everyone(graph.n_agents, [Cause.E])

    a = apply_jump(graph, cfg, state, verdict, rng=np.random.default_rng(9), noise_std=0.1)
    b = apply_jump(graph, cfg, state, verdict, rng=np.random.default_rng(9), noise_std=0.1)

    assert np.array_equal(a.hat.x_hat, b.hat.x_hat) and np.array_equal(a.hat.z_hat, b.hat.z_hat)
    assert a.hat.x_hat.min() >= 0.0
    assert not np.array_equal(a.hat.z_hat, state.z)
    assert np.array_equal(a.hat.x_sent, state.x)
    assert np.all(a.e_x == 0.0)


def test_empty_verdict_rejected(unit_lp):
    graph = build_graph(unit_lp)
    with pytest.raises(PreconditionError):
        apply_jump(graph, _unit_config(), synchronized_state([1.0], [0.0]), TriggerVerdict())


def test_centralized_quiet_after_broadcast(scaled_assignment_lp):
    state = synchronized_state(np.full(4, 0.5), np.zeros(4))
    verdict = centralized_check(scaled_assignment_lp, state.point, state.hat)
    assert not verdict


def test_centralized_error_trigger_fires_everyone(scaled_assignment_lp):
    """40 |e_x|^2 = 360 exceeds 1/4 |f_hat|^2 = 175.25."""
    state = synchronized_state(np.full(4, 0.5), np.zeros(4))
    state.x[0] = 3.5
    rates = broadcast_rates(scaled_assignment_lp, state.hat)
    assert error_trigger_margin(rates, state.e_x, state.e_z) == pytest.approx(360.0 - 175.25)

    verdict = centralized_check(scaled_assignment_lp, state.point, state.hat)
    assert verdict.fired == frozenset(range(8))
    assert verdict.all_causes() == frozenset({Cause.E})


def test_centralized_sigma_trigger(unit_lp):
    """x leaves zero while the broadcast copy is clamped with f_hat < 0."""
    state = _state([0.01], [5.0], [0.0], [5.0])
    verdict = centralized_check(unit_lp, state.point, state.hat)
    assert verdict.all_causes() == frozenset({Cause.SIGMA}), f"Got {verdict.causes}"
    assert verdict.fired == frozenset({0, 1})


def test_centralized_silent_at_equilibrium(unit_lp):
    state = synchronized_state([1.0], [-1.0])
    rates = broadcast_rates(unit_lp, state.hat)
    assert broadcast_at_equilibrium(rates)
    assert not centralized_check(unit_lp, state.point, state.hat, rates)


def test_validate_config_reports_violations(assignment_lp):
    graph = build_graph(assignment_lp)
    bounds = tau_bounds(graph)
    good = default_config(graph)
    assert validate_config(graph, good) == []
    assert np.all(good.tau < bounds) and np.all(good.r_min <= good.tau)

    bad = TriggerConfig(mode=TriggerMode.DISTRIBUTED, mu=good.mu.copy(), tau=good.tau.copy(), r_min=good.r_min.copy())
    bad.mu[0] = 0.01
    bad.tau[1] = bounds[1]
    bad.r_min[2] = 2.0 * bad.tau[2]
    violations = validate_config(graph, bad)
    assert {(v.agent, v.parameter) for v in violations} == {(0, "mu"), (1, "tau"), (2, "r_min")}

    with pytest.raises(ConfigValidationError) as info:
        TriggerEngine(assignment_lp, graph, bad)
    assert len(info.value.violations) == 3


def test_validate_config_length(assignment_lp):
    graph = build_graph(assignment_lp)
    short = TriggerConfig(mode=TriggerMode.CENTRALIZED, mu=[0.001] * 3, tau=[0.001] * 8, r_min=[0.0005] * 8)
    violations = validate_config(graph, short)
    assert [v.parameter for v in violations] == ["mu"]


def test_engine_dispatch_and_cache(scaled_assignment_lp):
    graph = build_graph(scaled_assignment_lp)
    engine = TriggerEngine(scaled_assignment_lp, graph, default_config(graph, TriggerMode.CENTRALIZED))
    state = synchronized_state(np.full(4, 0.5), np.zeros(4))

    assert engine.mode is TriggerMode.CENTRALIZED
    assert engine.rates(state) is engine.rates(state)
    state.x[0] = 3.5
    verdict = engine.check(state)
    after = engine.jump(state, verdict)
    assert engine.rates(after) is not engine.rates(state)
    assert np.all(after.e_x == 0.0)
