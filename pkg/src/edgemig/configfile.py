"""Scenario configuration files: strict INI with nested section names.

Sections are [world], [clock], [mobility], [mobility.classes.<name>],
[vnf.<id>] and [run]. Unknown sections or keys are hard errors so typos
cannot silently fall back to defaults; optional keys have documented
defaults. The full schema with units lives in the README.
"""

import configparser
import hashlib
from pathlib import Path

from edgemig.world import (
    GeoRegion,
    MobilityClass,
    ScenarioConfig,
    SimClock,
    Violation,
    VnfSpec,
    WorldBounds,
)

WORLD_KEYS = {
    "disc_center_x_m": (float, True, None),
    "disc_center_y_m": (float, True, None),
    "disc_radius_m": (float, True, None),
    "world_x_min_m": (float, True, None),
    "world_x_max_m": (float, True, None),
    "world_y_min_m": (float, True, None),
    "world_y_max_m": (float, True, None),
    "ue_density_per_km2": (float, True, None),
}
CLOCK_KEYS = {
    "dt_s": (float, True, None),
    "period_s": (float, True, None),
}
MOBILITY_KEYS = {
    "stats_window_periods": (int, False, 24),
    "bins_per_period": (int, False, 60),
}
CLASS_KEYS = {
    "v_min_mps": (float, True, None),
    "v_max_mps": (float, True, None),
    "pause_min_s": (float, True, None),
    "pause_max_s": (float, True, None),
    "share": (float, True, None),
}
VNF_KEYS = {
    "migration_cost": (float, True, None),
    "duty_rate": (float, True, None),
    "loss_rate_per_s": (float, True, None),
    "estimator": (str, True, None),
    "lambda_down_per_s": (float, True, None),
    "lambda_up_per_s": (float, True, None),
    "initial_state": (str, False, "up"),
}
RUN_KEYS = {
    "days": (int, True, None),
    "seed": (int, True, None),
    "policies": (str, False, "never, always, island"),
    "rollout_samples": (int, False, 32),
    "rollout_dt_s": (float, False, 0.0),
}


def _parse_section(parser, section, schema, violations):
    out = {}
    present = parser[section] if parser.has_section(section) else {}
    for key in present:
        if key not in schema:
            violations.append(Violation("UNKNOWN_KEY", section, f"unknown key {key!r}"))
    for key, (typ, required, default) in schema.items():
        if key in present:
            raw = present[key]
            try:
                out[key] = typ(raw)
            except ValueError:
                violations.append(
                    Violation("BAD_VALUE", section, f"{key}={raw!r} is not a valid {typ.__name__}")
                )
        elif required:
            violations.append(Violation("MISSING_KEY", section, f"required key {key!r} missing"))
        else:
            out[key] = default
    return out


def parse_config(text: str) -> tuple[ScenarioConfig | None, list[Violation]]:
    """Parse config text; returns (config, violations). The config is None
    whenever any violation prevents construction."""
    violations: list[Violation] = []
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), strict=True)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        violations.append(Violation("PARSE_ERROR", "file", str(exc).replace("\n", " ")))
        return None, violations

    known_fixed = {"world", "clock", "mobility", "run"}
    class_sections = []
    vnf_sections = []
    for section in parser.sections():
        if section in known_fixed:
            continue
        if section.startswith("mobility.classes.") and len(section) > len("mobility.classes."):
            class_sections.append(section)
        elif section.startswith("vnf.") and len(section) > len("vnf."):
            vnf_sections.append(section)
        else:
            violations.append(Violation("UNKNOWN_SECTION", section, "unknown section"))

    for required in ("world", "clock", "run"):
        if not parser.has_section(required):
            violations.append(Violation("MISSING_SECTION", required, "required section missing"))
    if not class_sections:
        violations.append(Violation("NO_CLASSES", "mobility", "no [mobility.classes.<name>] sections"))
    if not vnf_sections:
        violations.append(Violation("NO_VNFS", "vnf", "no [vnf.<id>] sections"))

    world = _parse_section(parser, "world", WORLD_KEYS, violations)
    clock = _parse_section(parser, "clock", CLOCK_KEYS, violations)
    mobility = _parse_section(parser, "mobility", MOBILITY_KEYS, violations)
    run = _parse_section(parser, "run", RUN_KEYS, violations)

    classes = []
    for section in class_sections:
        name = section[len("mobility.classes."):]
        vals = _parse_section(parser, section, CLASS_KEYS, violations)
        if len(vals) == len(CLASS_KEYS):
            classes.append(
                MobilityClass(
                    name=name,
                    v_min=vals["v_min_mps"],
                    v_max=vals["v_max_mps"],
                    pause_min=vals["pause_min_s"],
                    pause_max=vals["pause_max_s"],
                    share=vals["share"],
                )
            )

    vnfs = []
    for section in vnf_sections:
        vnf_id = section[len("vnf."):]
        vals = _parse_section(parser, section, VNF_KEYS, violations)
        if len(vals) == len(VNF_KEYS):
            vnfs.append(
                VnfSpec(
                    vnf_id=vnf_id,
                    migration_cost=vals["migration_cost"],
                    duty_rate=vals["duty_rate"],
                    loss_rate=vals["loss_rate_per_s"],
                    estimator=vals["estimator"],
                    lambda_down=vals["lambda_down_per_s"],
                    lambda_up=vals["lambda_up_per_s"],
                    initial_state=vals["initial_state"],
                )
            )

    if violations:
        return None, violations

    policies = tuple(p.strip() for p in run["policies"].split(",") if p.strip())
    config = ScenarioConfig(
        region=GeoRegion(
            center_x=world["disc_center_x_m"],
            center_y=world["disc_center_y_m"],
            radius_m=world["disc_radius_m"],
            world=WorldBounds(
                x_min=world["world_x_min_m"],
                x_max=world["world_x_max_m"],
                y_min=world["world_y_min_m"],
                y_max=world["world_y_max_m"],
            ),
        ),
        classes=tuple(classes),
        density_km2=world["ue_density_per_km2"],
        vnfs=tuple(vnfs),
        clock=SimClock(dt_s=clock["dt_s"], period_s=clock["period_s"]),
        days=run["days"],
        seed=run["seed"],
        policies=policies,
        stats_window=mobility["stats_window_periods"],
        rollout_samples=run["rollout_samples"],
        rollout_dt_s=run["rollout_dt_s"],
        bins_per_period=mobility["bins_per_period"],
    )
    return config, []


def load_config(path) -> tuple[ScenarioConfig | None, list[Violation]]:
    """Read and parse a config file; schema violations only, run
    validate_config afterwards for the domain invariants."""
    p = Path(path)
    if not p.is_file():
        return None, [Violation("CONFIG_NOT_FOUND", str(p), "config file not found")]
    return parse_config(p.read_text())


def config_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
