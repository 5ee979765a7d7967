"""Opportunity-cost estimation and the sync/skip decision rule.

Two estimation routes produce the opportunity cost c_o of leaving a VNF
unsynchronized for the next period:

  * per-UE route: expected per-UE outage time from individual arrival and
    stay densities, summed over UEs and priced at the loss rate;
  * aggregate route: expected served-UE count times average duty, outage
    rate, and the truncated mean stay time.

The decision synchronizes exactly when the migration cost does not exceed
the opportunity cost (ties synchronize).
"""

from dataclasses import dataclass, field

import numpy as np

from edgemig.histogram import HistogramDensity
from edgemig.mobility import MobilityStats

UE_METHOD = "ue-driven"
EDGE_METHOD = "edge-driven"

SYNCHRONIZE = "synchronize"
SKIP = "skip"


@dataclass(frozen=True)
class OpportunityCost:
    value: float
    method: str
    ue_count: int = 0  # contributing UEs; meaningful for the per-UE route
    inputs: dict = field(default_factory=dict)  # snapshot for audit output
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class SyncDecision:
    decision: str  # SYNCHRONIZE or SKIP
    c_m: float
    c_o: float
    vnf_id: str
    period_index: int

    @property
    def synchronize(self) -> bool:
        return self.decision == SYNCHRONIZE


def expected_outage_time(
    p_o: float,
    duty: float,
    f_arr: HistogramDensity,
    f_stay: HistogramDensity,
    period_s: float,
) -> float:
    """Expected seconds of outage a UE suffers in the next period.

    Evaluates p_o * duty * sum_t f_arr(t) * sum_{tau <= T - t} f_stay(tau) * tau
    by the midpoint rule over histogram bins. Stay mass beyond the inner
    limit contributes nothing (stays outlasting the period are excluded, not
    clamped); tail masses therefore never contribute. The inner sum is a
    cumulative array, so the cost is linear in the bin count.
    """
    if not 0.0 <= p_o <= 1.0 or not 0.0 <= duty <= 1.0:
        raise ValueError("p_o and duty must be in [0, 1]")
    if period_s <= 0:
        raise ValueError("period must be > 0")
    f_arr.check_valid()
    f_stay.check_valid()

    t = f_arr.midpoints
    keep = t <= period_s
    if not keep.any():
        return 0.0
    tau = f_stay.midpoints
    inner = np.concatenate(([0.0], np.cumsum(f_stay.masses * tau)))
    limits = period_s - t[keep]
    idx = np.searchsorted(tau, limits, side="right")
    value = p_o * duty * float(np.dot(f_arr.masses[keep], inner[idx]))
    return min(max(value, 0.0), p_o * duty * period_s)


def opportunity_cost_ue(outage_times_s, loss_rate: float) -> OpportunityCost:
    """Per-UE route: c_o = loss_rate * sum of expected per-UE outage times."""
    if loss_rate < 0:
        raise ValueError("loss rate must be >= 0")
    times = np.asarray(list(outage_times_s), dtype=float)
    value = loss_rate * float(times.sum())
    return OpportunityCost(
        value=value,
        method=UE_METHOD,
        ue_count=int(times.size),
        inputs={"loss_rate": loss_rate, "sum_outage_s": float(times.sum())},
    )


def opportunity_cost_edge(
    stats: MobilityStats,
    duty_avg: float,
    p_o: float,
    period_s: float,
    loss_rate: float,
) -> OpportunityCost:
    """Aggregate route: c_o = l * N_bar * duty * p_o * E[min(stay, T)].

    The stay integrand carries the stay time itself (truncated mean), so the
    result is the homogeneous-population specialization of the per-UE route
    with immediate arrival; tail mass beyond the period contributes the full
    period per unit mass. An empty history yields zero with a flag rather
    than an error.
    """
    if not 0.0 <= duty_avg <= 1.0 or not 0.0 <= p_o <= 1.0:
        raise ValueError("duty and p_o must be in [0, 1]")
    if loss_rate < 0:
        raise ValueError("loss rate must be >= 0")
    inputs = {
        "n_bar": stats.n_bar,
        "duty_avg": duty_avg,
        "p_o": p_o,
        "period_s": period_s,
        "loss_rate": loss_rate,
    }
    if stats.empty:
        return OpportunityCost(0.0, EDGE_METHOD, inputs=inputs, flags=("EMPTY_HISTORY",))
    stats.f_stay.check_valid()
    mean_stay = stats.f_stay.mean(truncate_at=period_s)
    inputs["mean_stay_s"] = mean_stay
    value = loss_rate * stats.n_bar * duty_avg * p_o * mean_stay
    return OpportunityCost(value=value, method=EDGE_METHOD, inputs=inputs)


def decide_sync(c_m: float, c_o, vnf_id: str, period_index: int) -> SyncDecision:
    """Synchronize iff c_m <= c_o; ties synchronize."""
    if c_m < 0:
        raise ValueError("migration cost must be >= 0")
    value = c_o.value if isinstance(c_o, OpportunityCost) else float(c_o)
    decision = SYNCHRONIZE if c_m <= value else SKIP
    return SyncDecision(decision=decision, c_m=c_m, c_o=value, vnf_id=vnf_id, period_index=period_index)
