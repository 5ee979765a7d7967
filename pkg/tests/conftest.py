"""Shared fixtures: small, fast scenario configs for engine-level tests."""

from dataclasses import replace

import pytest

from edgemig.world import (
    GeoRegion,
    MobilityClass,
    ScenarioConfig,
    SimClock,
    VnfSpec,
    WorldBounds,
)

PEDESTRIAN = MobilityClass("pedestrian", 0.5, 1.5, 0.0, 120.0, 0.5)
VEHICLE = MobilityClass("vehicle", 8.0, 16.0, 0.0, 30.0, 0.3)
STATIC = MobilityClass("static", 0.0, 0.0, 0.0, 0.0, 0.2)


def make_region(radius=500.0, half_side=1000.0):
    return GeoRegion(
        center_x=0.0,
        center_y=0.0,
        radius_m=radius,
        world=WorldBounds(-half_side, half_side, -half_side, half_side),
    )


def make_vnf(
    vnf_id="V",
    migration_cost=1000.0,
    duty_rate=1.0,
    loss_rate=1.0,
    estimator="edge-driven",
    lambda_down=1e-4,
    lambda_up=4e-4,
    initial_state="up",
):
    return VnfSpec(
        vnf_id=vnf_id,
        migration_cost=migration_cost,
        duty_rate=duty_rate,
        loss_rate=loss_rate,
        estimator=estimator,
        lambda_down=lambda_down,
        lambda_up=lambda_up,
        initial_state=initial_state,
    )


def make_config(**overrides) -> ScenarioConfig:
    base = dict(
        region=make_region(),
        classes=(PEDESTRIAN, VEHICLE, STATIC),
        density_km2=30.0,
        vnfs=(make_vnf(),),
        clock=SimClock(dt_s=5.0, period_s=3600.0),
        days=1,
        seed=42,
        policies=("never", "always", "island"),
        stats_window=24,
        rollout_samples=16,
        rollout_dt_s=30.0,
        bins_per_period=60,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


@pytest.fixture
def small_config():
    return make_config()


@pytest.fixture
def reference_config_path():
    from pathlib import Path

    return Path(__file__).resolve().parent.parent / "configs" / "reference.ini"


@pytest.fixture
def small_config_ini(tmp_path):
    """Small scenario as an INI file for CLI tests."""
    text = """\
[world]
disc_center_x_m = 0.0
disc_center_y_m = 0.0
disc_radius_m = 500.0
world_x_min_m = -1000.0
world_x_max_m = 1000.0
world_y_min_m = -1000.0
world_y_max_m = 1000.0
ue_density_per_km2 = 30.0

[clock]
dt_s = 10.0
period_s = 3600.0

[mobility]
stats_window_periods = 24
bins_per_period = 60

[mobility.classes.pedestrian]
v_min_mps = 0.5
v_max_mps = 1.5
pause_min_s = 0.0
pause_max_s = 120.0
share = 0.5

[mobility.classes.vehicle]
v_min_mps = 8.0
v_max_mps = 16.0
pause_min_s = 0.0
pause_max_s = 30.0
share = 0.3

[mobility.classes.static]
v_min_mps = 0.0
v_max_mps = 0.0
pause_min_s = 0.0
pause_max_s = 0.0
share = 0.2

[vnf.V1]
migration_cost = 1000.0
duty_rate = 1.0
loss_rate_per_s = 1.0
estimator = edge-driven
lambda_down_per_s = 1e-4
lambda_up_per_s = 4e-4

[run]
days = 1
seed = 42
policies = never, always, island
rollout_samples = 16
rollout_dt_s = 30.0
"""
    path = tmp_path / "small.ini"
    path.write_text(text)
    return path
