"""Scenario domain types: geometry, mobility classes, UEs, VNFs, clock, config.

Everything here is a plain value object. The simulation engine owns the only
mutable state (UE positions and the clock); all other types are frozen after
construction and safe to share.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from edgemig.rngtools import SPAWN, derive_stream

UE_DRIVEN = "ue-driven"
EDGE_DRIVEN = "edge-driven"
ESTIMATOR_KINDS = (UE_DRIVEN, EDGE_DRIVEN)

POLICY_NEVER = "never"
POLICY_ALWAYS = "always"
POLICY_ISLAND = "island"
POLICY_KINDS = (POLICY_NEVER, POLICY_ALWAYS, POLICY_ISLAND)

CHAIN_UP = "up"
CHAIN_DOWN = "down"

SHARE_TOL = 1e-9
SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class WorldBounds:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @property
    def area_km2(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min) / 1e6

    def contains(self, x, y):
        return (x >= self.x_min) & (x <= self.x_max) & (y >= self.y_min) & (y <= self.y_max)


@dataclass(frozen=True)
class GeoRegion:
    """Circular edge-coverage disc inside a rectangular world."""

    center_x: float
    center_y: float
    radius_m: float
    world: WorldBounds

    @property
    def disc_area_km2(self) -> float:
        return np.pi * self.radius_m**2 / 1e6

    def in_coverage(self, x, y):
        dx = np.asarray(x) - self.center_x
        dy = np.asarray(y) - self.center_y
        return dx * dx + dy * dy <= self.radius_m**2

    def disc_inside_world(self) -> bool:
        w = self.world
        return (
            self.center_x - self.radius_m >= w.x_min
            and self.center_x + self.radius_m <= w.x_max
            and self.center_y - self.radius_m >= w.y_min
            and self.center_y + self.radius_m <= w.y_max
        )


@dataclass(frozen=True)
class MobilityClass:
    name: str
    v_min: float  # m/s
    v_max: float  # m/s
    pause_min: float  # s
    pause_max: float  # s
    share: float

    @property
    def is_static(self) -> bool:
        return self.v_max == 0.0


@dataclass
class UeState:
    """One user terminal. Mutated only by the mobility stepper."""

    uid: int
    x: float
    y: float
    wp_x: float
    wp_y: float
    speed: float  # m/s toward current waypoint
    pause_s: float  # remaining pause at waypoint
    mobility_class: MobilityClass
    in_coverage: bool


@dataclass(frozen=True)
class VnfSpec:
    vnf_id: str
    migration_cost: float  # cost units per synchronized period
    duty_rate: float  # fraction of served time the VNF is exercised
    loss_rate: float  # cost units per second of per-UE outage
    estimator: str  # UE_DRIVEN or EDGE_DRIVEN
    lambda_down: float  # 1/s, up -> down
    lambda_up: float  # 1/s, down -> up
    initial_state: str = CHAIN_UP


@dataclass(frozen=True)
class SimClock:
    """Tick/period timing. The period must be a whole number of ticks."""

    dt_s: float
    period_s: float
    tick: int = 0
    period: int = 0

    @property
    def ticks_per_period(self) -> int:
        return int(round(self.period_s / self.dt_s))

    def period_is_tick_multiple(self) -> bool:
        if self.dt_s <= 0 or self.period_s <= 0:
            return False
        ratio = self.period_s / self.dt_s
        return abs(ratio - round(ratio)) < 1e-9 and round(ratio) >= 1


@dataclass(frozen=True)
class ScenarioConfig:
    region: GeoRegion
    classes: tuple[MobilityClass, ...]
    density_km2: float  # target UE density, applied uniformly to the world
    vnfs: tuple[VnfSpec, ...]
    clock: SimClock
    days: int
    seed: int
    policies: tuple[str, ...] = (POLICY_NEVER, POLICY_ALWAYS, POLICY_ISLAND)
    stats_window: int = 24  # past periods feeding the aggregate estimator
    rollout_samples: int = 32
    rollout_dt_s: float = 0.0  # 0 means period_s / bins_per_period
    bins_per_period: int = 60

    @property
    def periods_per_day(self) -> int:
        return int(round(SECONDS_PER_DAY / self.clock.period_s))

    @property
    def effective_rollout_dt(self) -> float:
        if self.rollout_dt_s > 0:
            return self.rollout_dt_s
        return self.clock.period_s / self.bins_per_period


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} [{self.where}]: {self.message}"


def validate_config(config: ScenarioConfig) -> list[Violation]:
    """Check every domain invariant; returns the complete violation list
    (empty means the config is valid as-is)."""
    v: list[Violation] = []

    def bad(code, where, message):
        v.append(Violation(code, where, message))

    r = config.region
    if r.radius_m <= 0:
        bad("RADIUS_NOT_POSITIVE", "world", f"disc radius {r.radius_m} must be > 0")
    if r.world.x_max <= r.world.x_min or r.world.y_max <= r.world.y_min:
        bad("WORLD_BOUNDS_EMPTY", "world", "world rectangle has nonpositive extent")
    elif r.radius_m > 0 and not r.disc_inside_world():
        bad("DISC_OUTSIDE_WORLD", "world", "coverage disc must lie fully inside world bounds")
    if config.density_km2 < 0:
        bad("DENSITY_NEGATIVE", "world", f"density {config.density_km2} must be >= 0")

    if not config.classes:
        bad("NO_CLASSES", "mobility", "at least one mobility class required")
    share_sum = 0.0
    seen_names = set()
    for c in config.classes:
        where = f"mobility.classes.{c.name}"
        if c.name in seen_names:
            bad("DUPLICATE_CLASS_NAME", where, "class names must be unique")
        seen_names.add(c.name)
        if c.v_min < 0 or c.v_min > c.v_max:
            bad("SPEED_RANGE_INVALID", where, f"need 0 <= v_min <= v_max, got [{c.v_min}, {c.v_max}]")
        if c.pause_min < 0 or c.pause_min > c.pause_max:
            bad("PAUSE_RANGE_INVALID", where, f"need 0 <= p_min <= p_max, got [{c.pause_min}, {c.pause_max}]")
        if not 0.0 <= c.share <= 1.0:
            bad("SHARE_OUT_OF_RANGE", where, f"share {c.share} must be in [0, 1]")
        share_sum += c.share
    if config.classes and abs(share_sum - 1.0) > SHARE_TOL:
        bad("SHARES_NOT_NORMALIZED", "mobility", f"class shares sum to {share_sum!r}, expected 1")

    if not config.vnfs:
        bad("NO_VNFS", "vnf", "at least one VNF required")
    seen_ids = set()
    for f in config.vnfs:
        where = f"vnf.{f.vnf_id}"
        if f.vnf_id in seen_ids:
            bad("DUPLICATE_VNF_ID", where, "VNF ids must be unique")
        seen_ids.add(f.vnf_id)
        if f.migration_cost < 0:
            bad("NEGATIVE_COST", where, f"migration cost {f.migration_cost} must be >= 0")
        if f.loss_rate < 0:
            bad("NEGATIVE_LOSS_RATE", where, f"loss rate {f.loss_rate} must be >= 0")
        if not 0.0 <= f.duty_rate <= 1.0:
            bad("DUTY_OUT_OF_RANGE", where, f"duty rate {f.duty_rate} must be in [0, 1]")
        if f.lambda_down < 0 or f.lambda_up < 0:
            bad("NEGATIVE_RATE", where, "availability rates must be >= 0")
        if f.estimator not in ESTIMATOR_KINDS:
            bad("BAD_ESTIMATOR", where, f"estimator {f.estimator!r} not one of {ESTIMATOR_KINDS}")
        if f.initial_state not in (CHAIN_UP, CHAIN_DOWN):
            bad("BAD_INITIAL_STATE", where, f"initial state {f.initial_state!r} must be up or down")

    clk = config.clock
    if clk.dt_s <= 0:
        bad("BAD_TICK", "clock", f"dt {clk.dt_s} must be > 0")
    if clk.period_s <= 0:
        bad("BAD_PERIOD", "clock", f"period {clk.period_s} must be > 0")
    if clk.dt_s > 0 and clk.period_s > 0 and not clk.period_is_tick_multiple():
        bad("PERIOD_NOT_MULTIPLE", "clock", f"period {clk.period_s} s is not a multiple of dt {clk.dt_s} s")
    if clk.period_s > 0:
        ppd = SECONDS_PER_DAY / clk.period_s
        if abs(ppd - round(ppd)) > 1e-9 or round(ppd) < 1:
            bad("DAY_NOT_MULTIPLE", "clock", f"one day is not a whole number of {clk.period_s} s periods")

    if config.days < 1:
        bad("DURATION_TOO_SHORT", "run", f"days {config.days} must be >= 1")
    if not config.policies:
        bad("NO_POLICIES", "run", "at least one policy required")
    for p in config.policies:
        if p not in POLICY_KINDS:
            bad("POLICY_UNKNOWN", "run", f"policy {p!r} not one of {POLICY_KINDS}")
    if config.stats_window < 1:
        bad("BAD_STATS_WINDOW", "run", f"stats window {config.stats_window} must be >= 1")
    if config.rollout_samples < 1:
        bad("BAD_ROLLOUT_SAMPLES", "run", f"rollout samples {config.rollout_samples} must be >= 1")
    if config.rollout_dt_s < 0:
        bad("BAD_ROLLOUT_DT", "run", f"rollout dt {config.rollout_dt_s} must be >= 0")
    if config.bins_per_period < 1:
        bad("BAD_BINS", "run", f"bins per period {config.bins_per_period} must be >= 1")

    return v


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(x) for x in self.violations))


@dataclass
class Population:
    """Structure-of-arrays view of all UEs; the fast path for stepping.

    UEs of static classes occupy the tail block [n_mobile:] so the stepper
    can skip them wholesale. Each UE carries a velocity vector plus an event
    timer: remaining travel time while moving, remaining pause while paused
    (infinite for static UEs).
    """

    x: np.ndarray
    y: np.ndarray
    wp_x: np.ndarray
    wp_y: np.ndarray
    speed: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    timer: np.ndarray
    paused: np.ndarray
    class_idx: np.ndarray
    in_cov: np.ndarray
    n_mobile: int

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    def copy(self) -> "Population":
        return Population(
            self.x.copy(), self.y.copy(), self.wp_x.copy(), self.wp_y.copy(),
            self.speed.copy(), self.vx.copy(), self.vy.copy(), self.timer.copy(),
            self.paused.copy(), self.class_idx.copy(), self.in_cov.copy(),
            self.n_mobile,
        )

    def repeat(self, k: int) -> "Population":
        return Population(
            np.repeat(self.x, k), np.repeat(self.y, k),
            np.repeat(self.wp_x, k), np.repeat(self.wp_y, k),
            np.repeat(self.speed, k), np.repeat(self.vx, k), np.repeat(self.vy, k),
            np.repeat(self.timer, k), np.repeat(self.paused, k),
            np.repeat(self.class_idx, k), np.repeat(self.in_cov, k),
            self.n_mobile * k,
        )


def population_size(config: ScenarioConfig) -> int:
    return int(round(config.density_km2 * config.region.world.area_km2))


def _leg_vectors(x, y, wp_x, wp_y, speed):
    """Velocity and travel-time arrays for legs from (x, y) toward the
    waypoints at the given speeds; zero-length legs get timer 0."""
    dx = wp_x - x
    dy = wp_y - y
    dist = np.hypot(dx, dy)
    ok = (dist > 0.0) & (speed > 0.0)
    inv = np.zeros_like(dist)
    np.divide(speed, dist, out=inv, where=ok)
    timer = np.full(dist.shape, np.inf)
    np.divide(dist, speed, out=timer, where=speed > 0.0)
    timer[dist == 0.0] = 0.0
    return dx * inv, dy * inv, timer


def spawn_population_arrays(config: ScenarioConfig, rng: np.random.Generator) -> Population:
    """Place UEs uniformly over world bounds. The expected count inside the
    coverage disc is density * disc area because the disc lies inside the
    uniformly populated world. Draw order is fixed: class, position,
    waypoint, speed; UE ids are assigned after moving static UEs to the
    tail block."""
    n = population_size(config)
    k = len(config.classes)
    shares = np.array([c.share for c in config.classes], dtype=float)
    shares = shares / shares.sum() if n else shares
    w = config.region.world

    class_idx = rng.choice(k, size=n, p=shares) if n else np.zeros(0, dtype=np.int64)
    class_idx = class_idx.astype(np.int64)
    x = rng.uniform(w.x_min, w.x_max, size=n)
    y = rng.uniform(w.y_min, w.y_max, size=n)
    wp_x = rng.uniform(w.x_min, w.x_max, size=n)
    wp_y = rng.uniform(w.y_min, w.y_max, size=n)
    v_min = np.array([c.v_min for c in config.classes], dtype=float)
    v_max = np.array([c.v_max for c in config.classes], dtype=float)
    speed = rng.uniform(v_min[class_idx], v_max[class_idx]) if n else np.zeros(0)

    static = np.array([c.is_static for c in config.classes], dtype=bool)
    is_static = static[class_idx] if n else np.zeros(0, dtype=bool)
    wp_x[is_static] = x[is_static]
    wp_y[is_static] = y[is_static]
    speed[is_static] = 0.0

    order = np.argsort(is_static, kind="stable")
    x, y, wp_x, wp_y = x[order], y[order], wp_x[order], wp_y[order]
    speed, class_idx, is_static = speed[order], class_idx[order], is_static[order]
    n_mobile = int(n - is_static.sum())

    vx, vy, timer = _leg_vectors(x, y, wp_x, wp_y, speed)
    vx[is_static] = 0.0
    vy[is_static] = 0.0
    timer[is_static] = np.inf

    in_cov = np.asarray(config.region.in_coverage(x, y), dtype=bool)
    if in_cov.ndim == 0:
        in_cov = in_cov.reshape(0)
    return Population(
        x=x, y=y, wp_x=wp_x, wp_y=wp_y, speed=speed,
        vx=vx, vy=vy, timer=timer, paused=is_static.copy(),
        class_idx=class_idx, in_cov=in_cov, n_mobile=n_mobile,
    )


def population_to_states(pop: Population, config: ScenarioConfig) -> list[UeState]:
    out = []
    for i in range(pop.n):
        paused = bool(pop.paused[i])
        timer = float(pop.timer[i])
        pause_s = timer if paused and np.isfinite(timer) else 0.0
        out.append(
            UeState(
                uid=i,
                x=float(pop.x[i]), y=float(pop.y[i]),
                wp_x=float(pop.wp_x[i]), wp_y=float(pop.wp_y[i]),
                speed=float(pop.speed[i]), pause_s=max(pause_s, 0.0),
                mobility_class=config.classes[int(pop.class_idx[i])],
                in_coverage=bool(pop.in_cov[i]),
            )
        )
    return out


def state_to_population(ue: UeState, config: ScenarioConfig) -> Population:
    cidx = next(i for i, c in enumerate(config.classes) if c.name == ue.mobility_class.name)
    static = config.classes[cidx].is_static
    x = np.array([ue.x])
    y = np.array([ue.y])
    wp_x = np.array([ue.wp_x])
    wp_y = np.array([ue.wp_y])
    speed = np.array([0.0 if static else ue.speed])
    if static:
        vx, vy, timer = np.zeros(1), np.zeros(1), np.array([np.inf])
        paused = np.array([True])
    elif ue.pause_s > 0:
        vx, vy, timer = np.zeros(1), np.zeros(1), np.array([ue.pause_s])
        paused = np.array([True])
    else:
        vx, vy, timer = _leg_vectors(x, y, wp_x, wp_y, speed)
        paused = np.array([False])
    return Population(
        x=x, y=y, wp_x=wp_x, wp_y=wp_y, speed=speed,
        vx=vx, vy=vy, timer=timer, paused=paused,
        class_idx=np.array([cidx], dtype=np.int64),
        in_cov=np.array([ue.in_coverage]),
        n_mobile=0 if static else 1,
    )


def spawn_population(config: ScenarioConfig, rng: Optional[np.random.Generator] = None) -> list[UeState]:
    """Spec-facing spawn: list of UeState values, deterministic per stream."""
    if rng is None:
        rng = derive_stream(config.seed, SPAWN)
    return population_to_states(spawn_population_arrays(config, rng), config)
