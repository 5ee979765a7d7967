"""Two-state up/down availability chain per VNF and its outage predictor.

The chain is a continuous-time Markov process with failure rate lambda_down
(up to down) and repair rate lambda_up (down to up), simulated on the tick
grid: the active rate's transition fires with probability 1 - exp(-rate*dt)
per tick. That single-transition-per-tick rule needs max(rate)*dt small;
step_chain warns above 0.1.

predict_outage_rate gives the expected fraction of the next period spent
down, conditioned on the current state, from the exact transient solution.
With s = lambda_down + lambda_up, pi_d = lambda_down / s and
phi(x) = (1 - exp(-x)) / x:

    P(down at t | up)   = pi_d * (1 - exp(-s t))
    P(down at t | down) = pi_d + (1 - pi_d) * exp(-s t)

    p_o | up   = (1/T) integral_0^T P(down | up) dt   = pi_d * (1 - phi(sT))
    p_o | down = (1/T) integral_0^T P(down | down) dt = pi_d + (1 - pi_d) * phi(sT)

When both rates are zero the state never changes: p_o is 0 if up, 1 if down.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from edgemig.world import CHAIN_DOWN, CHAIN_UP

RATE_DT_WARN = 0.1


@dataclass(frozen=True)
class AvailabilityChain:
    lambda_down: float  # 1/s, up -> down
    lambda_up: float  # 1/s, down -> up
    state: str = CHAIN_UP
    state_age_s: float = 0.0  # time since entering the current state

    def __post_init__(self):
        if self.lambda_down < 0 or self.lambda_up < 0:
            raise ValueError("rates must be >= 0")
        if self.state not in (CHAIN_UP, CHAIN_DOWN):
            raise ValueError(f"state must be {CHAIN_UP!r} or {CHAIN_DOWN!r}")

    @property
    def is_down(self) -> bool:
        return self.state == CHAIN_DOWN


@dataclass(frozen=True)
class OutagePrediction:
    p_o: float  # expected downtime fraction of the next period, in [0, 1]
    horizon_s: float
    conditioning_state: str


def tick_transition_prob(rate: float, dt: float) -> float:
    return -math.expm1(-rate * dt)


def step_chain(chain: AvailabilityChain, dt: float, rng: np.random.Generator) -> AvailabilityChain:
    """One tick of the chain; deterministic given the rng stream."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if max(chain.lambda_down, chain.lambda_up) * dt > RATE_DT_WARN:
        warnings.warn(
            f"max(rate)*dt = {max(chain.lambda_down, chain.lambda_up) * dt:.3g} > {RATE_DT_WARN}; "
            "tick too coarse for the single-transition rule",
            stacklevel=2,
        )
    active = chain.lambda_up if chain.is_down else chain.lambda_down
    if rng.random() < tick_transition_prob(active, dt):
        new_state = CHAIN_UP if chain.is_down else CHAIN_DOWN
        return replace(chain, state=new_state, state_age_s=0.0)
    return replace(chain, state_age_s=chain.state_age_s + dt)


def _phi(x: float) -> float:
    # (1 - exp(-x)) / x, stable for small x
    return -math.expm1(-x) / x


def predict_outage_rate(chain: AvailabilityChain, horizon_s: float) -> OutagePrediction:
    """Expected downtime fraction over the next horizon given the current state."""
    if horizon_s <= 0:
        raise ValueError("horizon must be > 0")
    s = chain.lambda_down + chain.lambda_up
    if s == 0.0:
        p = 1.0 if chain.is_down else 0.0
        return OutagePrediction(p_o=p, horizon_s=horizon_s, conditioning_state=chain.state)
    pi_d = chain.lambda_down / s
    phi = _phi(s * horizon_s)
    if chain.is_down:
        p = pi_d + (1.0 - pi_d) * phi
    else:
        p = pi_d * (1.0 - phi)
    p = min(max(p, 0.0), 1.0)
    return OutagePrediction(p_o=p, horizon_s=horizon_s, conditioning_state=chain.state)


def step_chain_batch(
    down: np.ndarray,
    lambda_down: float,
    lambda_up: float,
    dt: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized tick update of many independent chains with shared rates.

    Same per-tick rule as step_chain; used by the Monte-Carlo downtime
    oracle and the long-run stationarity checks.
    """
    p_fail = tick_transition_prob(lambda_down, dt)
    p_repair = tick_transition_prob(lambda_up, dt)
    u = rng.random(down.shape[0])
    flip = np.where(down, u < p_repair, u < p_fail)
    return down ^ flip


def downtime_fraction_mc(
    lambda_down: float,
    lambda_up: float,
    start_down: bool,
    horizon_s: float,
    dt: float,
    paths: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte-Carlo estimate (mean, standard error) of the downtime fraction
    over the horizon, stepping `paths` chains on the tick grid."""
    steps = int(round(horizon_s / dt))
    down = np.full(paths, bool(start_down))
    down_ticks = np.zeros(paths, dtype=np.int64)
    for _ in range(steps):
        down = step_chain_batch(down, lambda_down, lambda_up, dt, rng)
        down_ticks += down
    frac = down_ticks * (dt / horizon_s)
    se = float(frac.std(ddof=1) / math.sqrt(paths)) if paths > 1 else float("nan")
    return float(frac.mean()), se
