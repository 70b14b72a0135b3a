"""Run-report assembly, validation, and serialization (JSON or flat CSV)."""

from __future__ import annotations

import csv
import json

from .errors import ContractError

SCHEMA_VERSION = 1

# top-level key -> required type (None means any JSON value, key still required)
_SCHEMA: dict[str, type | None] = {
    "schema_version": int,
    "config": dict,
    "checks": list,
    "params": dict,
    "flops": dict,
    "scaling": dict,
    "training": dict,
}


def new_report(config: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "checks": [],
        "params": {},
        "flops": {},
        "scaling": {},
        "training": {},
    }


def validate_report(report: dict) -> None:
    """Raise ContractError when the report does not match the schema."""
    if not isinstance(report, dict):
        raise ContractError(f"report must be a mapping, got {type(report).__name__}")
    for key, expected in _SCHEMA.items():
        if key not in report:
            raise ContractError(f"report missing required key {key!r}")
        if expected is not None and not isinstance(report[key], expected):
            raise ContractError(
                f"report key {key!r} must be {expected.__name__}, "
                f"got {type(report[key]).__name__}"
            )
    if report["schema_version"] != SCHEMA_VERSION:
        raise ContractError(
            f"unsupported schema_version {report['schema_version']}, "
            f"expected {SCHEMA_VERSION}"
        )
    for entry in report["checks"]:
        for field in ("name", "max_abs_diff", "threshold", "passed", "seeds_run"):
            if field not in entry:
                raise ContractError(f"check entry missing field {field!r}: {entry}")


def write_report(path, report: dict) -> None:
    validate_report(report)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path) as fh:
        report = json.load(fh)
    validate_report(report)
    return report


def _flatten(prefix: str, value, rows: list) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], rows)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, value))


def report_to_rows(report: dict) -> list[tuple[str, object]]:
    """Dotted-key flattening of the full report, for CSV output."""
    rows: list[tuple[str, object]] = []
    _flatten("", report, rows)
    return rows


def write_report_csv(path, report: dict) -> None:
    validate_report(report)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key", "value"])
        writer.writerows(report_to_rows(report))
