from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgemig.availability import step_chain
from edgemig.engine import (
    SimulationEngine,
    TinyInstance,
    TinyUe,
    TraceSink,
    brute_force_expected_cost,
    day_rows,
    run_scenario,
)
from edgemig.estimator import decide_sync, expected_outage_time, opportunity_cost_ue
from edgemig.histogram import HistogramDensity
from edgemig.mobility import CoverageEpisode, aggregate_stats
from edgemig.rngtools import CHAIN, derive_stream
from edgemig.world import SimClock

from conftest import STATIC, make_config, make_vnf


def all_static_config(**overrides):
    only_static = replace(STATIC, share=1.0)
    base = dict(
        classes=(only_static,),
        density_km2=5.0,  # ~20 UEs over the 4 km^2 world
        days=1,
    )
    base.update(overrides)
    return make_config(**base)


# ---------------------------------------------------------------- brute force


def test_brute_force_sync_optimal_case():
    ue = TinyUe(HistogramDensity.point_mass(0.0), HistogramDensity.point_mass(600.0))
    inst = TinyInstance((ue,), p_o=0.1, migration_cost=50.0, loss_rate=1.0, period_s=3600.0)
    e_sync, e_skip = brute_force_expected_cost(inst)
    assert (e_sync, e_skip) == (50.0, 60.0)
    assert decide_sync(50.0, 60.0, "F", 0).synchronize


def test_brute_force_skip_optimal_case():
    ue = TinyUe(HistogramDensity.point_mass(0.0), HistogramDensity.point_mass(600.0))
    inst = TinyInstance((ue,), p_o=0.1, migration_cost=70.0, loss_rate=1.0, period_s=3600.0)
    e_sync, e_skip = brute_force_expected_cost(inst)
    assert (e_sync, e_skip) == (70.0, 60.0)
    assert not decide_sync(70.0, 60.0, "F", 0).synchronize


def test_brute_force_tie_synchronizes():
    ue = TinyUe(HistogramDensity.point_mass(0.0), HistogramDensity.point_mass(600.0))
    inst = TinyInstance((ue,), p_o=0.1, migration_cost=60.0, loss_rate=1.0, period_s=3600.0)
    e_sync, e_skip = brute_force_expected_cost(inst)
    assert e_sync == e_skip == 60.0
    assert decide_sync(60.0, 60.0, "F", 0).synchronize


def test_brute_force_rejects_multi_atom_density():
    spread = HistogramDensity(60.0, np.array([0.5, 0.5]))
    ue = TinyUe(spread, HistogramDensity.point_mass(600.0))
    inst = TinyInstance((ue,), p_o=0.1, migration_cost=60.0, loss_rate=1.0, period_s=3600.0)
    with pytest.raises(ValueError):
        brute_force_expected_cost(inst)


def random_tiny_instance(rng, period=3600.0):
    n_ue = int(rng.integers(1, 4))
    ues = []
    for _ in range(n_ue):
        arrival = float(rng.uniform(0.0, 1.2 * period))
        stay = float(rng.uniform(1.0, 1.5 * period))
        duty = float(rng.uniform(0.0, 1.0))
        ues.append(
            TinyUe(HistogramDensity.point_mass(arrival), HistogramDensity.point_mass(stay), duty)
        )
    p_o = float(rng.uniform(0.0, 1.0))
    l = float(rng.uniform(0.1, 10.0))
    # half the instances probe near the decision boundary
    _, e_skip = brute_force_expected_cost(
        TinyInstance(tuple(ues), p_o, 0.0, l, period)
    )
    if rng.random() < 0.5 and e_skip > 0:
        c_m = float(e_skip * rng.uniform(0.5, 1.5))
    else:
        c_m = float(rng.uniform(0.0, 2.0 * period))
    return TinyInstance(tuple(ues), p_o, c_m, l, period)


def production_route_cost(inst: TinyInstance):
    times = [
        expected_outage_time(inst.p_o, ue.duty, ue.f_arr, ue.f_stay, inst.period_s)
        for ue in inst.ues
    ]
    return opportunity_cost_ue(times, inst.loss_rate)


def test_decision_agrees_with_brute_force_on_random_instances():
    rng = np.random.default_rng(77)
    disagreements = 0
    checked = 0
    for _ in range(300):
        inst = random_tiny_instance(rng)
        e_sync, e_skip = brute_force_expected_cost(inst)
        c_o = production_route_cost(inst)
        decision = decide_sync(inst.migration_cost, c_o, "F", 0)
        gap = abs(e_sync - e_skip) / max(e_sync, e_skip, 1e-300)
        if gap <= 1e-9:
            continue
        checked += 1
        optimal_sync = e_skip >= e_sync
        if decision.synchronize != optimal_sync:
            disagreements += 1
    assert checked > 200
    assert disagreements == 0


# ------------------------------------------------------------------- periods


def test_never_policy_full_period_outage_loss():
    """Chain pinned down, static in-coverage UEs, eta = l = 1: the never
    policy loses exactly 3600 cost units per in-coverage UE."""
    config = all_static_config(
        vnfs=(make_vnf(lambda_down=0.0, lambda_up=0.0, initial_state="down"),),
        policies=("never", "always"),
    )
    engine = SimulationEngine(config)
    n_in = int(engine.pop.in_cov.sum())
    assert n_in > 0
    reports = engine.run_period()
    acc_never = reports["never"].accounts["V"]
    acc_always = reports["always"].accounts["V"]
    assert acc_never.outage_loss == n_in * 3600.0
    assert acc_never.outage_seconds == 3600.0
    assert acc_never.c_m_charged == 0.0
    # synchronized redundancy absorbs the whole period's loss
    assert acc_always.outage_loss == 0.0
    assert acc_always.c_m_charged == config.vnfs[0].migration_cost
    assert acc_always.outage_seconds == 3600.0


def test_island_skips_when_outage_impossible():
    """lambda_down = 0 from the up state makes p_o = 0, so the island policy
    must skip and account exactly like never."""
    config = all_static_config(
        vnfs=(make_vnf(lambda_down=0.0, lambda_up=0.0, initial_state="up"),),
    )
    engine = SimulationEngine(config)
    for _ in range(3):
        reports = engine.run_period()
        island = reports["island"].accounts["V"]
        never = reports["never"].accounts["V"]
        assert island.decision == "skip"
        assert island.c_o_est == 0.0
        assert (island.c_m_charged, island.outage_loss) == (never.c_m_charged, never.outage_loss)


def test_zero_migration_cost_island_matches_always():
    config = all_static_config(vnfs=(make_vnf(migration_cost=0.0, lambda_down=1e-3),))
    engine = SimulationEngine(config)
    for _ in range(3):
        reports = engine.run_period()
        island = reports["island"].accounts["V"]
        always = reports["always"].accounts["V"]
        assert island.decision == "synchronize"
        assert (island.c_m_charged, island.outage_loss) == (always.c_m_charged, always.outage_loss)


def test_common_random_numbers_share_outage_and_ue_counts(small_config):
    config = replace(small_config, vnfs=(make_vnf(lambda_down=2e-3, lambda_up=1e-3),))
    engine = SimulationEngine(config)
    for _ in range(4):
        reports = engine.run_period()
        outage = {rep.accounts["V"].outage_seconds for rep in reports.values()}
        assert len(outage) == 1  # identical realized outage across policies
        assert len({rep.ue_count for rep in reports.values()}) == 1
        assert len({rep.mean_in_coverage for rep in reports.values()}) == 1


def test_island_is_a_selector_between_baseline_accounts(small_config):
    config = replace(small_config, vnfs=(make_vnf(lambda_down=2e-3, lambda_up=1e-3),))
    engine = SimulationEngine(config)
    for _ in range(6):
        reports = engine.run_period()
        island = reports["island"].accounts["V"]
        never = reports["never"].accounts["V"]
        always = reports["always"].accounts["V"]
        island_pair = (island.c_m_charged, island.outage_loss)
        assert island_pair in ((never.c_m_charged, never.outage_loss),
                               (always.c_m_charged, always.outage_loss))


def test_duty_thinning_halves_loss_roughly():
    full = all_static_config(
        vnfs=(make_vnf(lambda_down=0.0, lambda_up=0.0, initial_state="down"),),
        policies=("never",),
        density_km2=60.0,
    )
    half = replace(
        full, vnfs=(make_vnf(duty_rate=0.5, lambda_down=0.0, lambda_up=0.0, initial_state="down"),)
    )
    loss_full = SimulationEngine(full).run_period()["never"].accounts["V"].outage_loss
    loss_half = SimulationEngine(half).run_period()["never"].accounts["V"].outage_loss
    assert loss_half < loss_full
    assert 0.45 < loss_half / loss_full < 0.55


def test_engine_chain_matches_step_chain_sequence(small_config):
    """The engine's inline chain update must track availability.step_chain
    draw for draw on the same derived stream."""
    config = replace(small_config, vnfs=(make_vnf(lambda_down=5e-3, lambda_up=5e-3),), density_km2=2.0)
    engine = SimulationEngine(config)
    engine.run_period()
    from edgemig.availability import AvailabilityChain

    ref = AvailabilityChain(5e-3, 5e-3, state="up")
    rng = derive_stream(config.seed, CHAIN, 0)
    for _ in range(config.clock.ticks_per_period):
        ref = step_chain(ref, config.clock.dt_s, rng)
    assert ref.state == engine.chain(0).state
    assert ref.state_age_s == engine.chain(0).state_age_s


def test_engine_rolling_stats_match_aggregate_stats(small_config):
    """The engine's windowed estimator context equals the spec-level
    aggregate_stats over episodes reconstructed from the tick trace."""

    class Recorder(TraceSink):
        def __init__(self):
            self.flags = []

        def on_tick(self, tick, pop):
            self.flags.append(pop.in_cov.copy())

    config = replace(small_config, stats_window=4)
    rec = Recorder()
    engine = SimulationEngine(config, trace=rec)
    periods = 3
    for _ in range(periods):
        engine.run_period()

    flags = np.array(rec.flags)  # (ticks, n) pre-step states
    episodes = []
    n = flags.shape[1]
    for ue in range(n):
        col = flags[:, ue]
        open_ep = None
        if col[0]:
            open_ep = CoverageEpisode(ue_id=ue, arrival_tick=0)
        for t in range(1, len(col)):
            if col[t] and not col[t - 1]:
                open_ep = CoverageEpisode(ue_id=ue, arrival_tick=t)
            elif not col[t] and col[t - 1]:
                episodes.append(replace(open_ep, departure_tick=t))
                open_ep = None
        if open_ep is not None:
            episodes.append(open_ep)

    clock = SimClock(
        dt_s=config.clock.dt_s, period_s=config.clock.period_s,
        tick=engine.tick, period=engine.period,
    )
    spec_stats = aggregate_stats(episodes, config.stats_window, clock, bins=config.bins_per_period)
    engine_stats = engine.current_stats()
    assert engine_stats.n_bar == spec_stats.n_bar
    assert np.allclose(engine_stats.f_stay.masses, spec_stats.f_stay.masses, atol=1e-12)
    assert engine_stats.f_stay.tail_mass == pytest.approx(spec_stats.f_stay.tail_mass)


def test_ue_driven_island_runs_and_audits(small_config):
    config = replace(
        small_config,
        vnfs=(make_vnf(estimator="ue-driven", lambda_down=1e-3, migration_cost=100.0),),
        density_km2=8.0,
        rollout_samples=8,
        rollout_dt_s=60.0,
    )
    engine = SimulationEngine(config)
    reports = engine.run_period()
    island = reports["island"].accounts["V"]
    assert island.audit["method"] == "ue-driven"
    assert island.audit["ue_count"] == engine.pop.n
    assert island.c_o_est >= 0.0


# ------------------------------------------------------------------ scenario


def test_day_totals_equal_period_sums(small_config):
    config = replace(small_config, vnfs=(make_vnf(lambda_down=2e-3, lambda_up=1e-3),))
    collected = []

    class Sink:
        def on_run_start(self, config, seed):
            pass

        def on_period(self, period, reports):
            collected.append(reports)

        def on_day(self, day, rows):
            pass

        def on_run_end(self, report):
            pass

    report = run_scenario(config, sink=Sink())
    assert len(collected) == config.periods_per_day * config.days
    for row in report.days:
        mig = 0.0
        loss = 0.0
        out_s = 0.0
        for reports in collected[row.day * 24:(row.day + 1) * 24]:
            acc = reports[row.policy].accounts[row.vnf]
            mig += acc.c_m_charged
            loss += acc.outage_loss
            out_s += acc.outage_seconds
        assert row.migration_cost == mig
        assert row.outage_loss == loss
        assert row.outage_seconds == out_s
        assert row.total_cost == mig + loss


def test_scenario_deterministic_per_seed(small_config):
    a = run_scenario(small_config)
    b = run_scenario(small_config)
    assert a.days == b.days
    assert a.realized_availability == b.realized_availability
    assert a.mean_in_coverage == b.mean_in_coverage


def test_scenario_availability_consistent(small_config):
    config = replace(small_config, vnfs=(make_vnf(lambda_down=2e-3, lambda_up=2e-3),))
    report = run_scenario(config)
    total_s = config.days * 86400.0
    down_from_days = sum(r.outage_seconds for r in report.days if r.policy == "never")
    assert report.realized_availability["V"] == pytest.approx(1.0 - down_from_days / total_s)


@pytest.mark.property
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_run_period_invariants_property(seed):
    """Per-period invariants on tiny scenarios: always has no loss, never
    pays no migration, island selects a baseline's accounting."""
    config = make_config(
        seed=seed,
        density_km2=3.0,
        vnfs=(make_vnf(lambda_down=3e-3, lambda_up=2e-3),),
    )
    engine = SimulationEngine(config)
    for _ in range(2):
        reports = engine.run_period()
        never = reports["never"].accounts["V"]
        always = reports["always"].accounts["V"]
        island = reports["island"].accounts["V"]
        assert always.outage_loss == 0.0
        assert never.c_m_charged == 0.0
        assert never.outage_seconds == always.outage_seconds == island.outage_seconds
        pair = (island.c_m_charged, island.outage_loss)
        assert pair in (
            (never.c_m_charged, never.outage_loss),
            (always.c_m_charged, always.outage_loss),
        )
