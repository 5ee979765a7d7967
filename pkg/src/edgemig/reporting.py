"""CSV emission, run manifests, and integrity checks for the CLI layer.

All files are written atomically (temp file then rename) so an interrupted
run never leaves a manifest pointing at partial output. The manifest lists
every output file with its SHA-256 and records the schema version; readers
refuse unknown schema versions instead of guessing.
"""

import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1

PERIOD_COLUMNS = (
    "period", "policy", "vnf", "decision", "c_o_est", "c_m_charged",
    "outage_loss", "outage_seconds", "ue_count",
)
DAY_COLUMNS = (
    "day", "policy", "vnf", "sync_count", "migration_cost", "outage_loss",
    "total_cost", "outage_seconds", "ue_periods",
)
SWEEP_COLUMNS = (
    "parameter", "value", "seed", "policy", "vnf", "day",
    "migration_cost", "outage_loss",
)

MANIFEST_NAME = "manifest.json"


class ReportError(RuntimeError):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


def write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv_atomic(path: Path, columns, rows) -> None:
    write_text_atomic(path, csv_text(columns, rows))


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def period_rows(reports_by_period, vnf_ids):
    """Flatten engine PeriodReports into period CSV rows."""
    rows = []
    for reports in reports_by_period:
        for policy, rep in reports.items():
            for vnf_id in vnf_ids:
                acc = rep.accounts[vnf_id]
                rows.append((
                    rep.period, policy, vnf_id, acc.decision, acc.c_o_est,
                    acc.c_m_charged, acc.outage_loss, acc.outage_seconds,
                    rep.ue_count,
                ))
    return rows


def day_csv_rows(day_rows_list):
    return [
        (r.day, r.policy, r.vnf, r.sync_count, r.migration_cost, r.outage_loss,
         r.total_cost, r.outage_seconds, r.ue_periods)
        for r in day_rows_list
    ]


@dataclass
class RunManifest:
    config_path: str
    config_sha256: str
    seeds: list
    tool_version: str
    created_utc: str
    schema_version: int = SCHEMA_VERSION
    outputs: dict = field(default_factory=dict)  # relative path -> sha256
    runs: list = field(default_factory=list)  # one entry per completed run

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": self.schema_version,
                "config_path": self.config_path,
                "config_sha256": self.config_sha256,
                "seeds": self.seeds,
                "tool_version": self.tool_version,
                "created_utc": self.created_utc,
                "outputs": self.outputs,
                "runs": self.runs,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"

    @classmethod
    def new(cls, config_path, seeds, tool_version) -> "RunManifest":
        return cls(
            config_path=str(config_path),
            config_sha256=sha256_file(config_path),
            seeds=list(seeds),
            tool_version=tool_version,
            created_utc=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        )

    def add_output(self, out_dir: Path, path: Path) -> None:
        self.outputs[str(path.relative_to(out_dir))] = sha256_file(path)

    def write(self, out_dir: Path) -> None:
        write_text_atomic(Path(out_dir) / MANIFEST_NAME, self.to_json())


def load_manifest(out_dir) -> dict:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.is_file():
        raise ReportError("MANIFEST_MISSING", f"no {MANIFEST_NAME} in {out_dir}")
    data = json.loads(path.read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ReportError(
            "UNKNOWN_SCHEMA",
            f"schema version {data.get('schema_version')!r}, this tool reads {SCHEMA_VERSION}",
        )
    return data


def verify_outputs(out_dir, manifest: dict) -> None:
    for rel, digest in manifest.get("outputs", {}).items():
        path = Path(out_dir) / rel
        if not path.is_file():
            raise ReportError("OUTPUT_MISSING", f"listed output {rel} missing")
        actual = sha256_file(path)
        if actual != digest:
            raise ReportError("HASH_MISMATCH", f"{rel}: manifest {digest[:12]}…, file {actual[:12]}…")


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ReportError("EMPTY_CSV", str(path))
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:] if line]
