"""Run configuration (JSON), config digests, sweep CSVs and the run ledger."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from .experiment import Noise, RunConfig, SetupRef, SweepRow

CONFIG_KEYS = {"setup", "hypothesis", "trials", "seed", "noise"}
SETUP_KEYS = {"kind", "r_v", "r_u", "q"}
NOISE_KEYS = {"phase", "splitting", "polarization", "dark_count"}
OUT_DIR_ENV = "QREADING_OUT"
LEDGER_NAME = "ledger.jsonl"


class ConfigError(ValueError):
    pass


def _reject_unknown(section: str, data: Mapping[str, Any], allowed: set[str]):
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(extra)}")


def parse_run_config(data: Mapping[str, Any]) -> RunConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("run config must be a JSON object")
    _reject_unknown("config", data, CONFIG_KEYS)
    for key in ("setup", "hypothesis"):
        if key not in data:
            raise ConfigError(f"missing required key {key!r}")
    setup = data["setup"]
    _reject_unknown("setup", setup, SETUP_KEYS)
    noise = data.get("noise", {})
    _reject_unknown("noise", noise, NOISE_KEYS)
    kwargs = {k: data[k] for k in ("trials", "seed") if k in data}
    try:
        return RunConfig(SetupRef(**setup), data["hypothesis"], noise=Noise(**noise), **kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_run_config(path: str | os.PathLike) -> RunConfig:
    with open(path) as fh:
        return parse_run_config(json.load(fh))


def run_config_to_dict(config: RunConfig) -> dict:
    return asdict(config)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_digest(data: Any) -> str:
    """SHA-256 of the canonical JSON form; insensitive to key order."""
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "qreading_out"))


def _fmt(value: float, decimals: int | None) -> str:
    return repr(float(value)) if decimals is None else f"{value:.{decimals}f}"


def write_sweep_csv(rows: list[SweepRow], path: str | os.PathLike, decimals: int | None = 3) -> Path:
    """Write ``R_v,p_*,f_*`` columns; ``decimals=None`` writes round-trippable full precision."""
    path = Path(path)
    if not rows:
        raise ValueError("no rows to write")
    header = list(rows[0].as_dict())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(_fmt(v, decimals) for v in row.as_dict().values())
    return path


def read_sweep_csv(path: str | os.PathLike) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in rec.items()} for rec in csv.DictReader(fh)]


@dataclass(frozen=True)
class RunLedgerEntry:
    timestamp: str
    config_digest: str
    seed: int
    output_path: str
    tool_version: str

    @classmethod
    def now(cls, config: Any, seed: int, output_path: str | os.PathLike) -> "RunLedgerEntry":
        from . import __version__

        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return cls(stamp, config_digest(config), seed, str(output_path), __version__)


def append_ledger(out_dir: str | os.PathLike, entry: RunLedgerEntry) -> Path:
    path = Path(out_dir) / LEDGER_NAME
    with open(path, "a") as fh:
        fh.write(canonical_json(asdict(entry)) + "\n")
    return path
