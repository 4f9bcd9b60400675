"""Run report assembly, schema validation, and serialization.

Reports are deterministic: the same command, config and seed produce
byte-identical JSON once timestamps are suppressed.  Keys are sorted on
serialization so dict construction order never leaks into the output.
"""

from __future__ import annotations

import datetime as _dt
import importlib.resources
import json
from typing import Optional

import jsonschema

from . import __version__

REPORT_VERSION = 1


def load_schema() -> dict:
    text = importlib.resources.files("cauchycert").joinpath("report_schema.json").read_text()
    return json.loads(text)


_SCHEMA: Optional[dict] = None


def validate_report(report: dict) -> None:
    """Raise jsonschema.ValidationError if the report violates the schema."""
    global _SCHEMA
    if _SCHEMA is None:
        _SCHEMA = load_schema()
    jsonschema.validate(report, _SCHEMA)


def build_report(
    command: str,
    config_echo: dict,
    results: dict,
    seed: int,
    include_timestamp: bool = True,
    elapsed: Optional[float] = None,
) -> dict:
    """Assemble the envelope around per-command results.

    The config echo is self-contained: re-running it with the recorded seed
    reproduces the report bit-for-bit.  ``include_timestamp=False`` drops both
    the timestamp and the timing field, which is what byte-identity tests
    rely on.
    """
    report = {
        "report_version": REPORT_VERSION,
        "tool": {"name": "cauchycert", "version": __version__},
        "command": command,
        "seed": seed,
        "config": config_echo,
        "results": results,
    }
    if include_timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        if elapsed is not None:
            report["timing_seconds"] = elapsed
    validate_report(report)
    return report


def dump_report(report: dict, out_path: Optional[str] = None) -> str:
    """Serialize with sorted keys; write to ``out_path`` or return the text."""
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_path is not None:
        with open(out_path, "w") as fh:
            fh.write(text)
    return text
