"""Run configuration, deterministic seeding, manifests and atomic output.

A run is a pure function of its configuration and the tool version. CSV
bodies never contain timestamps or timings; those live in the manifest
next to the configuration hash, so reruns are byte-comparable.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__


class ConfigError(ValueError):
    """Configuration violates the schema; message carries the key path."""


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    if path.suffix.lower() in (".toml", ".tml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib

        return tomllib.loads(text)
    raise ConfigError(f"{path}: unsupported config format (use .toml or .json)")


def canonical_json(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


# ----- schema helpers ---------------------------------------------------------


def require(config: dict, key: str, kind, default=None, path: str = ""):
    """Typed lookup with a path-precise error message."""
    where = f"{path}.{key}" if path else key
    if key not in config:
        if default is not None:
            return default
        raise ConfigError(f"missing required key {where!r}")
    value = config[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(
            f"{where!r} must be {getattr(kind, '__name__', kind)}, got {type(value).__name__}"
        )
    return value


def grid_from(config, key, path=""):
    """A grid is a list of numbers or {start, stop, step} inclusive."""
    where = f"{path}.{key}" if path else key
    raw = config.get(key)
    if raw is None:
        raise ConfigError(f"missing required key {where!r}")
    if isinstance(raw, list):
        if not raw or not all(isinstance(v, (int, float)) for v in raw):
            raise ConfigError(f"{where!r} must be a nonempty list of numbers")
        return [float(v) for v in raw]
    if isinstance(raw, dict):
        start = require(raw, "start", (int, float), path=where)
        stop = require(raw, "stop", (int, float), path=where)
        step = require(raw, "step", (int, float), path=where)
        if step <= 0 or stop < start:
            raise ConfigError(f"{where!r}: need step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    raise ConfigError(f"{where!r} must be a list or a start/stop/step table")


# ----- deterministic seeding ----------------------------------------------------


def seed_derive(master_seed: int, task_index: int) -> int:
    """Counter-based child seed: Philox keyed by (master, index), first draw.

    Distinct (master, index) pairs give distinct Philox keys, hence
    independent streams; the derivation is stable across processes.
    """
    key = ((int(master_seed) & 0xFFFFFFFFFFFFFFFF) << 64) | (
        int(task_index) & 0xFFFFFFFFFFFFFFFF
    )
    gen = np.random.Generator(np.random.Philox(key=key))
    return int(gen.integers(0, 2**63 - 1))


def derive_rng(master_seed: int, task_index: int) -> np.random.Generator:
    key = ((int(master_seed) & 0xFFFFFFFFFFFFFFFF) << 64) | (
        int(task_index) & 0xFFFFFFFFFFFFFFFF
    )
    return np.random.Generator(np.random.Philox(key=key))


def default_workers() -> int:
    env = os.environ.get("GHLAB_WORKERS", "")
    try:
        return max(int(env), 1)
    except ValueError:
        return 1


def run_tasks(fn, tasks, workers: int = 1):
    """Order-preserving parallel map; results identical for any worker count."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ----- output ------------------------------------------------------------------


def format_value(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> str:
    """RFC-4180 CSV with a fixed header; returns the body written."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(row.get(col)) for col in header))
    body = "\r\n".join(lines) + "\r\n"
    atomic_write_text(path, body)
    return body


def write_manifest(path, config: dict, outputs, started: float, extra=None):
    manifest = {
        "tool": "ghlab",
        "tool_version": __version__,
        "config": config,
        "config_hash": config_hash(config),
        "outputs": [str(o) for o in outputs],
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "duration_s": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
