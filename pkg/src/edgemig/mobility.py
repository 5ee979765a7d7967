"""Random-waypoint mobility, coverage episodes, and stay/arrival statistics.

The vectorized array kernel is the single implementation of the motion
model; the per-UE step and the Monte-Carlo rollouts are thin wrappers over
it, so scalar and batched paths cannot diverge.

Motion model: move toward the waypoint at the drawn speed; on reaching it,
draw a pause from the class pause range, then a fresh uniform waypoint and a
fresh speed from the class speed range (one draw point, in that order).
Movement resumes at the tick after the pause expires. Static classes
(v_max = 0) never move and never consume random draws.

Internally each UE carries a velocity vector and an event timer: while
moving the timer holds the remaining travel time to the waypoint, while
paused the remaining pause. Integration is a single linear update per tick,
with the rare waypoint events fixed up on small index sets; positions on
the arrival tick snap to the waypoint exactly, so the arrival tick equals
ceil(distance / (speed * dt)) ticks after the leg started.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from edgemig.histogram import HistogramDensity
from edgemig.world import (
    GeoRegion,
    Population,
    ScenarioConfig,
    SimClock,
    UeState,
    _leg_vectors,
    population_to_states,
    state_to_population,
)


@dataclass(frozen=True)
class ClassArrays:
    """Per-class parameter vectors, gathered once per scenario."""

    v_min: np.ndarray
    v_max: np.ndarray
    pause_min: np.ndarray
    pause_max: np.ndarray

    @classmethod
    def from_classes(cls, classes) -> "ClassArrays":
        return cls(
            v_min=np.array([c.v_min for c in classes], dtype=float),
            v_max=np.array([c.v_max for c in classes], dtype=float),
            pause_min=np.array([c.pause_min for c in classes], dtype=float),
            pause_max=np.array([c.pause_max for c in classes], dtype=float),
        )


class StepWorkspace:
    """Scratch buffers so the per-tick kernel allocates nothing."""

    def __init__(self, n: int):
        self.f1 = np.empty(n)
        self.f2 = np.empty(n)
        self.b1 = np.empty(n, dtype=bool)
        self.b2 = np.empty(n, dtype=bool)


def set_leg_velocity(pop: Population, idx: np.ndarray) -> None:
    """Point the given UEs at their waypoints: velocity from the stored
    speed and direction, timer = remaining travel time."""
    vx, vy, timer = _leg_vectors(
        pop.x[idx], pop.y[idx], pop.wp_x[idx], pop.wp_y[idx], pop.speed[idx]
    )
    pop.vx[idx] = vx
    pop.vy[idx] = vy
    pop.timer[idx] = timer
    pop.paused[idx] = False


def step_population(
    pop: Population,
    region: GeoRegion,
    params: ClassArrays,
    dt: float,
    rng: np.random.Generator,
    ws: Optional[StepWorkspace] = None,
) -> None:
    """Advance every UE by one tick, in place.

    Random draws happen only for UEs that reach their waypoint this tick,
    in index order: pauses, then waypoints, then speeds. Static UEs live in
    the tail block [n_mobile:] and are never touched.
    """
    nm = pop.n_mobile
    if nm == 0:
        return
    if ws is None:
        ws = StepWorkspace(nm)
    x = pop.x[:nm]
    y = pop.y[:nm]
    timer = pop.timer[:nm]
    paused = pop.paused[:nm]
    f1, b1, b2 = ws.f1[:nm], ws.b1[:nm], ws.b2[:nm]

    np.multiply(pop.vx[:nm], dt, out=f1)
    np.add(x, f1, out=x)
    np.multiply(pop.vy[:nm], dt, out=f1)
    np.add(y, f1, out=y)
    np.subtract(timer, dt, out=timer)

    np.less_equal(timer, 0.0, out=b1)
    if b1.any():
        # arrivals: snap, then draw pause -> waypoint -> speed
        np.logical_and(b1, ~paused, out=b2)
        arr = np.flatnonzero(b2)
        if arr.size:
            x[arr] = pop.wp_x[arr]
            y[arr] = pop.wp_y[arr]
            ci = pop.class_idx[arr]
            pop.timer[arr] = rng.uniform(params.pause_min[ci], params.pause_max[ci])
            w = region.world
            pop.wp_x[arr] = rng.uniform(w.x_min, w.x_max, size=arr.size)
            pop.wp_y[arr] = rng.uniform(w.y_min, w.y_max, size=arr.size)
            pop.speed[arr] = rng.uniform(params.v_min[ci], params.v_max[ci])
            pop.paused[arr] = True
            pop.vx[arr] = 0.0
            pop.vy[arr] = 0.0
        # pause expiries: head for the waypoint drawn at arrival
        np.logical_and(b1, paused, out=b2)
        unp = np.flatnonzero(b2)
        if unp.size:
            set_leg_velocity(pop, unp)

    # coverage membership; the static tail keeps its spawn-time flags
    np.subtract(x, region.center_x, out=f1)
    np.multiply(f1, f1, out=f1)
    f2 = ws.f2[:nm]
    np.subtract(y, region.center_y, out=f2)
    np.multiply(f2, f2, out=f2)
    np.add(f1, f2, out=f1)
    np.less_equal(f1, region.radius_m * region.radius_m, out=pop.in_cov[:nm])


def step_ue(ue: UeState, dt: float, rng: np.random.Generator, config: ScenarioConfig) -> UeState:
    """Single-UE step; runs the array kernel on a batch of one."""
    pop = state_to_population(ue, config)
    params = ClassArrays.from_classes(config.classes)
    step_population(pop, config.region, params, dt, rng)
    out = population_to_states(pop, config)[0]
    out.uid = ue.uid
    return out


@dataclass
class CoverageEpisode:
    """One contiguous in-coverage interval of a UE, in ticks."""

    ue_id: int
    arrival_tick: int
    departure_tick: Optional[int] = None  # None while the episode is open

    def duration_s(self, dt: float, now_tick: Optional[int] = None) -> float:
        end = self.departure_tick if self.departure_tick is not None else now_tick
        if end is None:
            raise ValueError("open episode needs now_tick to compute a duration")
        return (end - self.arrival_tick) * dt

    @property
    def closed(self) -> bool:
        return self.departure_tick is not None


def record_coverage_events(
    previous: UeState,
    current: UeState,
    clock: SimClock,
    open_episode: Optional[CoverageEpisode] = None,
) -> tuple[Optional[CoverageEpisode], Optional[CoverageEpisode]]:
    """Update episode bookkeeping for one UE over one tick.

    Returns (open_episode, closed_episode): out->in opens an episode at the
    current tick, in->out closes the open one. Episodes are the sole source
    of empirical stay data.
    """
    if previous.uid != current.uid:
        raise ValueError("states must describe the same UE")
    was_in, now_in = previous.in_coverage, current.in_coverage
    if not was_in and now_in:
        return CoverageEpisode(ue_id=current.uid, arrival_tick=clock.tick), None
    if was_in and not now_in:
        if open_episode is None:
            raise ValueError("departure without an open episode")
        return None, replace(open_episode, departure_tick=clock.tick)
    return open_episode, None


@dataclass
class MobilityStats:
    """Aggregate context for the edge-cloud-driven estimator."""

    n_bar: float  # mean distinct UEs served per period over the window
    f_stay: HistogramDensity  # stay-time density from closed episodes
    per_ue: dict  # ue id -> (f_arr, f_stay) cache, filled by rollouts
    empty: bool = False  # EMPTY_HISTORY: no episode data in the window


EMPTY_HISTORY = "EMPTY_HISTORY"


def aggregate_stats(
    episodes: list[CoverageEpisode],
    window: int,
    clock: SimClock,
    bins: int = 60,
) -> MobilityStats:
    """Fold episodes from the last `window` completed periods into stats.

    n_bar counts distinct UEs with at least one in-coverage tick per period
    (open episodes count for every period they span); f_stay bins only
    closed-episode durations, with durations past one period in the tail.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    tpp = clock.ticks_per_period
    first_period = max(0, clock.period - window)
    periods = range(first_period, clock.period)

    if not episodes or not len(periods):
        return MobilityStats(
            n_bar=0.0,
            f_stay=HistogramDensity(clock.period_s / bins, np.zeros(bins)),
            per_ue={},
            empty=True,
        )

    seen: dict[int, set] = {p: set() for p in periods}
    durations = []
    for ep in episodes:
        end_tick = ep.departure_tick if ep.closed else clock.tick
        p_lo = ep.arrival_tick // tpp
        p_hi = max((end_tick - 1) // tpp, p_lo)
        for p in range(max(p_lo, first_period), min(p_hi, clock.period - 1) + 1):
            seen[p].add(ep.ue_id)
        if ep.closed and first_period * tpp <= ep.departure_tick < clock.period * tpp:
            durations.append(ep.duration_s(clock.dt_s))

    n_bar = float(np.mean([len(seen[p]) for p in periods]))
    f_stay = HistogramDensity.from_samples(durations, clock.period_s / bins, bins)
    return MobilityStats(n_bar=n_bar, f_stay=f_stay, per_ue={}, empty=False)


def rollout_first_episode(
    pop: Population,
    region: GeoRegion,
    params: ClassArrays,
    horizon: float,
    dt: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Step a batch forward over the horizon, recording per entry the first
    arrival time into coverage and the departure time of that first episode.

    Returns (arrival, departure) arrays in seconds with NaN for events that
    did not happen within the horizon. Entries starting inside coverage have
    arrival 0.
    """
    n = pop.n
    arrival = np.where(pop.in_cov, 0.0, np.nan)
    departure = np.full(n, np.nan)
    ws = StepWorkspace(n)
    steps = int(np.ceil(horizon / dt - 1e-12))
    t = 0.0
    for _ in range(steps):
        t += dt
        step_population(pop, region, params, dt, rng, ws)
        newly_in = np.isnan(arrival) & pop.in_cov
        arrival[newly_in] = t
        newly_out = ~np.isnan(arrival) & np.isnan(departure) & ~pop.in_cov
        departure[newly_out] = t
    return arrival, departure


def densities_from_rollout(
    arrival: np.ndarray,
    departure: np.ndarray,
    horizon: float,
    bins: int,
) -> tuple[HistogramDensity, HistogramDensity]:
    """Bin first-arrival times and first-episode stay durations.

    f_arr tail is the fraction of rollouts that never arrived; f_stay is
    normalized over arrived rollouts, episodes still open at the horizon
    going to the tail. With no arrivals f_stay is the zero density.
    """
    w = horizon / bins
    n = arrival.shape[0]
    arrived = ~np.isnan(arrival)
    # np.histogram puts values equal to the last edge into the last bin
    counts, _ = np.histogram(arrival[arrived], bins=bins, range=(0.0, horizon))
    f_arr = HistogramDensity(w, counts / n, tail_mass=float((n - arrived.sum()) / n))

    n_arr = int(arrived.sum())
    if n_arr == 0:
        return f_arr, HistogramDensity(w, np.zeros(bins))
    closed = arrived & ~np.isnan(departure)
    stay = departure[closed] - arrival[closed]
    counts_s, _ = np.histogram(stay, bins=bins, range=(0.0, horizon))
    f_stay = HistogramDensity(w, counts_s / n_arr, tail_mass=float((n_arr - stay.size) / n_arr))
    return f_arr, f_stay


def rollout_densities(
    ue: UeState,
    horizon: float,
    samples: int,
    rng: np.random.Generator,
    config: ScenarioConfig,
    dt: Optional[float] = None,
    bins: Optional[int] = None,
) -> tuple[HistogramDensity, HistogramDensity]:
    """Monte-Carlo (f_arr, f_stay) for one UE from its current state.

    Pass a dedicated rng stream: rollouts must never perturb the main
    simulation trajectory.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    dt = dt if dt is not None else config.effective_rollout_dt
    bins = bins if bins is not None else config.bins_per_period
    pop = state_to_population(ue, config).repeat(samples)
    params = ClassArrays.from_classes(config.classes)
    arrival, departure = rollout_first_episode(pop, config.region, params, horizon, dt, rng)
    return densities_from_rollout(arrival, departure, horizon, bins)


def rollout_densities_batch(
    pop: Population,
    config: ScenarioConfig,
    horizon: float,
    samples: int,
    rng: np.random.Generator,
    dt: Optional[float] = None,
    bins: Optional[int] = None,
) -> list[tuple[HistogramDensity, HistogramDensity]]:
    """Per-UE (f_arr, f_stay) for a whole population in one fused batch.

    Sample axis is innermost: entry i*samples+j is rollout j of UE i.
    """
    dt = dt if dt is not None else config.effective_rollout_dt
    bins = bins if bins is not None else config.bins_per_period
    params = ClassArrays.from_classes(config.classes)
    batch = pop.repeat(samples)
    arrival, departure = rollout_first_episode(batch, config.region, params, horizon, dt, rng)
    out = []
    for i in range(pop.n):
        sl = slice(i * samples, (i + 1) * samples)
        out.append(densities_from_rollout(arrival[sl], departure[sl], horizon, bins))
    return out
