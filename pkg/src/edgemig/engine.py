"""Closed-loop simulation engine and per-policy cost accounting.

One engine run evolves a single world (mobility, availability chains) and
accounts every requested policy against that shared realization, so policy
comparisons use common random numbers: realized outage seconds are
identical across policies by construction and only the accounting branches.

Timing convention: state indexed by tick k is the state at time k*dt; the
interval [k*dt, (k+1)*dt) accrues loss according to that state, then the
world advances to tick k+1. Period p covers ticks p*tpp .. (p+1)*tpp - 1,
so the state a period-boundary decision observes is exactly the first state
the new period accrues. A synchronized VNF accrues no outage loss for that
whole period; redundancy expires at the next boundary.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import warnings

from edgemig.availability import (
    RATE_DT_WARN,
    AvailabilityChain,
    predict_outage_rate,
    tick_transition_prob,
)
from edgemig.estimator import (
    SKIP,
    SYNCHRONIZE,
    SyncDecision,
    decide_sync,
    expected_outage_time,
    opportunity_cost_edge,
    opportunity_cost_ue,
)
from edgemig.histogram import HistogramDensity
from edgemig.mobility import (
    ClassArrays,
    MobilityStats,
    StepWorkspace,
    rollout_densities_batch,
    step_population,
)
from edgemig.rngtools import CHAIN, DUTY, MOBILITY, ROLLOUT, SPAWN, derive_stream
from edgemig.world import (
    POLICY_ALWAYS,
    POLICY_ISLAND,
    POLICY_NEVER,
    UE_DRIVEN,
    ConfigError,
    Population,
    ScenarioConfig,
    SimClock,
    spawn_population_arrays,
    validate_config,
)


@dataclass(frozen=True)
class Policy:
    """never: skip every period; always: synchronize every period; island:
    decide per period from the configured estimator's opportunity cost."""

    kind: str
    estimator_overrides: dict = field(default_factory=dict)  # vnf id -> estimator kind

    def estimator_for(self, vnf) -> str:
        return self.estimator_overrides.get(vnf.vnf_id, vnf.estimator)


@dataclass
class VnfPeriodAccount:
    vnf_id: str
    decision: str
    c_o_est: float
    c_m_charged: float
    outage_loss: float
    outage_seconds: float
    audit: dict = field(default_factory=dict)


@dataclass
class PeriodReport:
    period: int
    policy: str
    accounts: dict  # vnf id -> VnfPeriodAccount
    ue_count: int  # distinct UEs with >= 1 in-coverage tick this period
    mean_in_coverage: float


@dataclass(frozen=True)
class DayRow:
    day: int
    policy: str
    vnf: str
    sync_count: int
    migration_cost: float
    outage_loss: float
    total_cost: float
    outage_seconds: float
    ue_periods: int


@dataclass
class ScenarioReport:
    seed: int
    config: ScenarioConfig
    days: list
    realized_availability: dict  # vnf id -> uptime fraction over the run
    mean_in_coverage: float  # time-average in-coverage UE count
    total_periods: int


class RunSink:
    """Reporting callback contract; the engine itself never writes output."""

    def on_run_start(self, config: ScenarioConfig, seed: int) -> None:
        pass

    def on_period(self, period: int, reports: dict) -> None:
        pass

    def on_day(self, day: int, rows: list) -> None:
        pass

    def on_run_end(self, report: ScenarioReport) -> None:
        pass


class TraceSink:
    """Per-tick trajectory hook; column order is (tick, ue id, x, y, in_coverage)."""

    def on_tick(self, tick: int, pop: Population) -> None:
        pass


class SimulationEngine:
    def __init__(
        self,
        config: ScenarioConfig,
        policies: Optional[list[Policy]] = None,
        trace: Optional[TraceSink] = None,
    ):
        violations = validate_config(config)
        if violations:
            raise ConfigError(violations)
        self.config = config
        self.policies = tuple(policies) if policies is not None else tuple(
            Policy(kind=p) for p in config.policies
        )
        self.trace = trace

        seed = config.seed
        self.pop = spawn_population_arrays(config, derive_stream(seed, SPAWN))
        self.params = ClassArrays.from_classes(config.classes)
        self.rng_mobility = derive_stream(seed, MOBILITY)
        self.rng_chain = [derive_stream(seed, CHAIN, i) for i in range(len(config.vnfs))]
        self.rng_duty = [derive_stream(seed, DUTY, i) for i in range(len(config.vnfs))]

        # chain state kept as plain scalars; the per-tick rule and rng
        # consumption match availability.step_chain draw for draw
        dt = config.clock.dt_s
        self.chain_down = [f.initial_state == "down" for f in config.vnfs]
        self.chain_age = [0.0 for _ in config.vnfs]
        self._p_fail = [tick_transition_prob(f.lambda_down, dt) for f in config.vnfs]
        self._p_repair = [tick_transition_prob(f.lambda_up, dt) for f in config.vnfs]
        worst = max(
            (max(f.lambda_down, f.lambda_up) for f in config.vnfs), default=0.0
        )
        if worst * dt > RATE_DT_WARN:
            warnings.warn(
                f"max(rate)*dt = {worst * dt:.3g} > {RATE_DT_WARN}; "
                "tick too coarse for the single-transition rule",
                stacklevel=2,
            )

        self.tick = 0
        self.period = 0
        self.arrival_tick = np.where(self.pop.in_cov, 0, -1).astype(np.int64)
        self._prev_in = self.pop.in_cov.copy()
        self._seen = np.zeros(self.pop.n, dtype=bool)
        self._ws = StepWorkspace(self.pop.n)

        # rolling estimator context over the stats window
        self.stay_window: deque = deque(maxlen=config.stats_window)
        self.seen_window: deque = deque(maxlen=config.stats_window)

        # run-level tallies
        self.down_seconds = [0.0 for _ in config.vnfs]
        self.sum_in_cov = 0.0

    @property
    def clock(self) -> SimClock:
        return SimClock(
            dt_s=self.config.clock.dt_s,
            period_s=self.config.clock.period_s,
            tick=self.tick,
            period=self.period,
        )

    def chain(self, vi: int) -> AvailabilityChain:
        f = self.config.vnfs[vi]
        return AvailabilityChain(
            lambda_down=f.lambda_down,
            lambda_up=f.lambda_up,
            state="down" if self.chain_down[vi] else "up",
            state_age_s=self.chain_age[vi],
        )

    def current_stats(self) -> MobilityStats:
        """Aggregate mobility context from the rolling window of completed
        periods; same definitions as mobility.aggregate_stats."""
        cfg = self.config
        bins = cfg.bins_per_period
        width = cfg.clock.period_s / bins
        if not self.seen_window:
            return MobilityStats(0.0, HistogramDensity(width, np.zeros(bins)), {}, empty=True)
        n_bar = float(np.mean(self.seen_window))
        if self.stay_window:
            durations = np.concatenate([d for d in self.stay_window])
        else:
            durations = np.zeros(0)
        f_stay = HistogramDensity.from_samples(durations, width, bins)
        return MobilityStats(n_bar=n_bar, f_stay=f_stay, per_ue={}, empty=False)

    def _ue_density_functionals(self) -> np.ndarray:
        """Per-UE double-integral value with p_o = duty = 1; scaling by the
        actual p_o and duty afterwards is exact because the estimate and its
        clamp are both linear in that product."""
        cfg = self.config
        rng = derive_stream(cfg.seed, ROLLOUT, self.period)
        pairs = rollout_densities_batch(
            self.pop, cfg, cfg.clock.period_s, cfg.rollout_samples, rng
        )
        return np.array([
            expected_outage_time(1.0, 1.0, fa, fs, cfg.clock.period_s) for fa, fs in pairs
        ])

    def _decide(self) -> dict:
        """Period-boundary decisions for every policy and VNF, using only
        state observable at this instant (no lookahead)."""
        cfg = self.config
        period_s = cfg.clock.period_s
        stats = None
        functionals = None
        need_edge = any(
            pol.kind == POLICY_ISLAND and pol.estimator_for(f) != UE_DRIVEN
            for pol in self.policies for f in cfg.vnfs
        )
        need_ue = any(
            pol.kind == POLICY_ISLAND and pol.estimator_for(f) == UE_DRIVEN
            for pol in self.policies for f in cfg.vnfs
        )
        if need_edge:
            stats = self.current_stats()
        if need_ue:
            functionals = self._ue_density_functionals()

        decisions = {}
        for pol in self.policies:
            per_vnf = {}
            for vi, vnf in enumerate(cfg.vnfs):
                if pol.kind == POLICY_NEVER:
                    dec = SyncDecision(SKIP, vnf.migration_cost, 0.0, vnf.vnf_id, self.period)
                    audit = {"policy": POLICY_NEVER}
                elif pol.kind == POLICY_ALWAYS:
                    dec = SyncDecision(
                        SYNCHRONIZE, vnf.migration_cost, 0.0, vnf.vnf_id, self.period
                    )
                    audit = {"policy": POLICY_ALWAYS}
                else:
                    pred = predict_outage_rate(self.chain(vi), period_s)
                    if pol.estimator_for(vnf) == UE_DRIVEN:
                        times = pred.p_o * vnf.duty_rate * functionals
                        cost = opportunity_cost_ue(times, vnf.loss_rate)
                    else:
                        cost = opportunity_cost_edge(
                            stats, vnf.duty_rate, pred.p_o, period_s, vnf.loss_rate
                        )
                    dec = decide_sync(vnf.migration_cost, cost, vnf.vnf_id, self.period)
                    audit = {
                        "policy": POLICY_ISLAND,
                        "method": cost.method,
                        "p_o": pred.p_o,
                        "chain_state": pred.conditioning_state,
                        "inputs": cost.inputs,
                        "flags": list(cost.flags),
                        "ue_count": cost.ue_count,
                    }
                per_vnf[vnf.vnf_id] = (dec, audit)
            decisions[pol.kind] = per_vnf
        return decisions

    def run_period(self) -> dict:
        """Advance one full period; returns {policy kind: PeriodReport}.

        Every policy is accounted against the same realized mobility and
        outage path; only loss attribution differs.
        """
        cfg = self.config
        dt = cfg.clock.dt_s
        tpp = cfg.clock.ticks_per_period
        vnfs = cfg.vnfs
        nv = len(vnfs)
        decisions = self._decide()
        synced = {
            pol.kind: [decisions[pol.kind][f.vnf_id][0].synchronize for f in vnfs]
            for pol in self.policies
        }

        loss = {pol.kind: [0.0] * nv for pol in self.policies}
        outage_s = [0.0] * nv
        duty_is_full = [f.duty_rate >= 1.0 for f in vnfs]
        duty_rate = [f.duty_rate for f in vnfs]
        loss_per_duty_tick = [f.loss_rate * dt for f in vnfs]
        period_durations = []
        self._seen[:] = False
        sum_in_cov_period = 0
        pop = self.pop
        nm = pop.n_mobile
        # unsynced loss accumulators, flattened for the hot loop
        open_loss = [
            [loss[pol.kind] for pol in self.policies if not synced[pol.kind][vi]]
            for vi in range(nv)
        ]
        chain_down = self.chain_down
        chain_age = self.chain_age
        p_fail, p_repair = self._p_fail, self._p_repair
        rng_chain = self.rng_chain
        in_cov = pop.in_cov
        in_cov_mobile = in_cov[:nm]
        prev_mobile = self._prev_in[:nm]
        seen_mobile = self._seen[:nm]
        n_static_in = int(np.count_nonzero(in_cov[nm:]))
        self._seen[nm:] |= in_cov[nm:]
        region, params, ws = cfg.region, self.params, self._ws
        rng_mobility = self.rng_mobility
        trace = self.trace

        for _ in range(tpp):
            n_in = np.count_nonzero(in_cov_mobile) + n_static_in
            sum_in_cov_period += n_in
            np.logical_or(seen_mobile, in_cov_mobile, out=seen_mobile)

            for vi in range(nv):
                if chain_down[vi]:
                    outage_s[vi] += dt
                    if n_in and not duty_is_full[vi]:
                        # Bernoulli duty thinning, shared across policies
                        on_duty = int(
                            (self.rng_duty[vi].random(n_in) < duty_rate[vi]).sum()
                        )
                    else:
                        on_duty = n_in
                    if on_duty:
                        tick_loss = loss_per_duty_tick[vi] * on_duty
                        for acc in open_loss[vi]:
                            acc[vi] += tick_loss

            if trace is not None:
                trace.on_tick(self.tick, pop)

            # advance world to the next tick; chain rule matches step_chain
            for vi in range(nv):
                if rng_chain[vi].random() < (p_repair[vi] if chain_down[vi] else p_fail[vi]):
                    chain_down[vi] = not chain_down[vi]
                    chain_age[vi] = 0.0
                else:
                    chain_age[vi] += dt
            np.copyto(prev_mobile, in_cov_mobile)
            step_population(pop, region, params, dt, rng_mobility, ws)
            self.tick += 1
            changed = in_cov_mobile != prev_mobile
            if changed.any():
                dep = np.flatnonzero(changed & prev_mobile)
                if dep.size:
                    period_durations.append((self.tick - self.arrival_tick[dep]) * dt)
                    self.arrival_tick[dep] = -1
                arr = np.flatnonzero(changed & in_cov_mobile)
                if arr.size:
                    self.arrival_tick[arr] = self.tick

        ue_count = int(self._seen.sum())
        mean_in_cov = sum_in_cov_period / tpp
        self.sum_in_cov += sum_in_cov_period
        for vi in range(nv):
            self.down_seconds[vi] += outage_s[vi]
        self.seen_window.append(ue_count)
        self.stay_window.append(
            np.concatenate(period_durations) if period_durations else np.zeros(0)
        )

        reports = {}
        for pol in self.policies:
            accounts = {}
            for vi, vnf in enumerate(vnfs):
                dec, audit = decisions[pol.kind][vnf.vnf_id]
                is_sync = dec.synchronize
                accounts[vnf.vnf_id] = VnfPeriodAccount(
                    vnf_id=vnf.vnf_id,
                    decision=dec.decision,
                    c_o_est=dec.c_o,
                    c_m_charged=vnf.migration_cost if is_sync else 0.0,
                    outage_loss=0.0 if is_sync else loss[pol.kind][vi],
                    outage_seconds=outage_s[vi],
                    audit=audit,
                )
            reports[pol.kind] = PeriodReport(
                period=self.period,
                policy=pol.kind,
                accounts=accounts,
                ue_count=ue_count,
                mean_in_coverage=mean_in_cov,
            )
        self.period += 1
        return reports


def day_rows(day: int, reports_by_period: list, policies, vnfs) -> list[DayRow]:
    """Aggregate one day's PeriodReports into per-(policy, vnf) totals."""
    rows = []
    for pol in policies:
        for vnf in vnfs:
            sync_count = 0
            mig = 0.0
            out_loss = 0.0
            out_s = 0.0
            ue_periods = 0
            for reports in reports_by_period:
                acc = reports[pol.kind].accounts[vnf.vnf_id]
                sync_count += 1 if acc.decision == SYNCHRONIZE else 0
                mig += acc.c_m_charged
                out_loss += acc.outage_loss
                out_s += acc.outage_seconds
                ue_periods += reports[pol.kind].ue_count
            rows.append(
                DayRow(
                    day=day,
                    policy=pol.kind,
                    vnf=vnf.vnf_id,
                    sync_count=sync_count,
                    migration_cost=mig,
                    outage_loss=out_loss,
                    total_cost=mig + out_loss,
                    outage_seconds=out_s,
                    ue_periods=ue_periods,
                )
            )
    return rows


def run_scenario(
    config: ScenarioConfig,
    sink: Optional[RunSink] = None,
    policies: Optional[list[Policy]] = None,
    trace: Optional[TraceSink] = None,
) -> ScenarioReport:
    """Run the full scenario: spawn, iterate periods, aggregate days.

    Deterministic per config and seed; all output flows through the sink
    callbacks and the returned report.
    """
    sink = sink or RunSink()
    engine = SimulationEngine(config, policies=policies, trace=trace)
    sink.on_run_start(config, config.seed)

    all_day_rows = []
    ppd = config.periods_per_day
    for day in range(config.days):
        day_reports = []
        for _ in range(ppd):
            reports = engine.run_period()
            day_reports.append(reports)
            sink.on_period(engine.period - 1, reports)
        rows = day_rows(day, day_reports, engine.policies, config.vnfs)
        all_day_rows.extend(rows)
        sink.on_day(day, rows)

    total_s = engine.tick * config.clock.dt_s
    availability = {
        f.vnf_id: 1.0 - engine.down_seconds[i] / total_s
        for i, f in enumerate(config.vnfs)
    }
    report = ScenarioReport(
        seed=config.seed,
        config=config,
        days=all_day_rows,
        realized_availability=availability,
        mean_in_coverage=engine.sum_in_cov / engine.tick,
        total_periods=engine.period,
    )
    sink.on_run_end(report)
    return report


@dataclass(frozen=True)
class TinyUe:
    f_arr: HistogramDensity
    f_stay: HistogramDensity
    duty: float = 1.0


@dataclass(frozen=True)
class TinyInstance:
    """Enumerable decision instance: point-mass densities only."""

    ues: tuple
    p_o: float
    migration_cost: float
    loss_rate: float
    period_s: float


def brute_force_expected_cost(instance: TinyInstance) -> tuple[float, float]:
    """Exact (expected cost of sync, expected cost of skip) by enumeration.

    Requires every density to be a point mass (at most one nonzero bin);
    stay tails are rejected unless the tail provably cannot contribute
    (last edge at or past the period). Test oracle for decide_sync.
    """
    if len(instance.ues) > 3:
        raise ValueError("tiny instances only: at most 3 UEs")
    e_skip = 0.0
    for ue in instance.ues:
        t_arr, q_arr = ue.f_arr.as_single_atom()
        tau, q_stay = ue.f_stay.as_single_atom()
        if ue.f_stay.tail_mass > 0 and ue.f_stay.last_edge < instance.period_s:
            raise ValueError("stay tail below the period bound is not enumerable")
        if t_arr <= instance.period_s and tau <= instance.period_s - t_arr:
            e_skip += (
                instance.loss_rate * instance.p_o * ue.duty * q_arr * q_stay * tau
            )
    return instance.migration_cost, e_skip
