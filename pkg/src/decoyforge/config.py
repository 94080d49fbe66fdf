"""Scenario configuration files.

A config is flat ``key = value`` text (a TOML subset: no tables), one key
per line, ``#`` comments.  Keys mirror ``ScenarioConfig``:

    name, protocol, source, mu1,
    loss_grid (array) or loss_min / loss_max / loss_step,
    p_d, e_d, e_0, f_ec, eta_v, p_dv, zeta,
    grid_points, tol, mu_hi, min_gap, k_max, seed

Any key can be overridden from the environment as ``DECOYFORGE_<KEY>``
(upper case); the value is parsed as a TOML value and falls back to a bare
string.  Errors name the offending field and its line.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import sys
from dataclasses import asdict
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .channel import ChannelParams
from .errors import ConfigError
from .protocol import OptimizerSettings, ScenarioConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "BUILTIN_SCENARIOS",
    "ENV_PREFIX",
    "KEYS",
    "parse_config",
    "load_config",
    "config_to_dict",
    "config_hash",
]

ENV_PREFIX = "DECOYFORGE_"
BUILTIN_SCENARIOS = ("bb84_wcs", "bb84_hsps", "mdi_wcs", "mdi_hsps")

_FLOAT = ("mu1", "loss_min", "loss_max", "loss_step", "p_d", "e_d", "e_0", "f_ec", "eta_v", "p_dv", "zeta", "tol", "mu_hi", "min_gap")
_INT = ("grid_points", "k_max", "seed")
_STR = ("name", "protocol", "source")
KEYS = _STR + _FLOAT + _INT + ("loss_grid",)
_CHANNEL_KEYS = ("p_d", "e_d", "e_0", "f_ec", "eta_v", "p_dv", "zeta")
_OPTIMIZER_KEYS = ("grid_points", "tol", "mu_hi", "min_gap")


def _line_of(text: str, key: str) -> int | None:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return i
    return None


def _coerce(key: str, value: Any, line: int | None) -> Any:
    if key in _STR:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key, line)
        return value
    if key in _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key, line)
        return value
    if key in _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key, line)
        return float(value)
    if key == "loss_grid":
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError("expected an array of numbers", key, line)
        return [float(v) for v in value]
    raise ConfigError("unknown key", key, line)


def _env_overrides(env: Mapping[str, str]) -> dict[str, Any]:
    out = {}
    for key in KEYS:
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is None:
            continue
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw
        out[key] = _coerce(key, value, None)
    return out


def parse_config(text: str, env: Mapping[str, str] | None = None) -> ScenarioConfig:
    """Build a ``ScenarioConfig`` from config text plus environment overrides.

    Raises:
        ConfigError: syntax error, unknown key, wrong type or invalid value.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = re.search(r"line (\d+)", str(exc))
        where = int(match.group(1)) if match else max(len(text.splitlines()), 1)
        raise ConfigError(f"syntax error: {exc}", line=where) from None
    values = {}
    for key, value in raw.items():
        line = _line_of(text, key)
        if isinstance(value, dict):
            raise ConfigError("tables are not allowed; use flat keys", key, line)
        values[key] = _coerce(key, value, line)
    values.update(_env_overrides(os.environ if env is None else env))
    return _build(values, text)


def _build(values: dict[str, Any], text: str) -> ScenarioConfig:
    def line(key: str) -> int | None:
        return _line_of(text, key)

    for key in ("protocol",):
        if key not in values:
            raise ConfigError("missing required key", key)
    protocol = values["protocol"]
    source = values.get("source", "wcs")
    try:
        base = ScenarioConfig.preset(protocol, source)
    except ValueError as exc:
        bad = "protocol" if "protocol" in str(exc) else "source"
        raise ConfigError(str(exc), bad, line(bad)) from None

    if "loss_grid" in values:
        if any(k in values for k in ("loss_min", "loss_max", "loss_step")):
            raise ConfigError("give either loss_grid or loss_min/max/step, not both", "loss_grid", line("loss_grid"))
        grid = tuple(values["loss_grid"])
    elif any(k in values for k in ("loss_min", "loss_max", "loss_step")):
        lo = values.get("loss_min", 0.0)
        hi = values.get("loss_max", base.loss_grid[-1])
        step = values.get("loss_step", 1.0)
        if not step > 0:
            raise ConfigError("must be positive", "loss_step", line("loss_step"))
        if hi < lo:
            raise ConfigError("must not be below loss_min", "loss_max", line("loss_max"))
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        grid = tuple(float(lo + i * step) for i in range(count))
    else:
        grid = base.loss_grid

    channel_kw = {k: values[k] for k in _CHANNEL_KEYS if k in values}
    try:
        channel = ChannelParams(**{**asdict(base.channel), **channel_kw})
    except ValueError as exc:
        key = next((k for k in channel_kw if k in str(exc)), None)
        raise ConfigError(str(exc), key, line(key) if key else None) from None
    opt_kw = {k: values[k] for k in _OPTIMIZER_KEYS if k in values}
    try:
        optimizer = OptimizerSettings(**{**asdict(base.optimizer), **opt_kw})
    except ValueError as exc:
        key = next((k for k in opt_kw if k in str(exc)), None)
        raise ConfigError(str(exc), key, line(key) if key else None) from None
    try:
        return ScenarioConfig(
            protocol=protocol,
            source_kind=source,
            channel=channel,
            mu1=values.get("mu1", base.mu1),
            loss_grid=grid,
            optimizer=optimizer,
            k_max=values.get("k_max", base.k_max),
            seed=values.get("seed", 0),
            name=values.get("name", base.name),
        )
    except ValueError as exc:
        message = str(exc)
        key = next((k for k in ("mu1", "loss_grid", "k_max") if k in message), None)
        if key is None and "MDI sources" in message:
            key = "k_max"
        raise ConfigError(message, key, line(key) if key else None) from None


def load_config(scenario: str, env: Mapping[str, str] | None = None) -> ScenarioConfig:
    """Load a built-in scenario by name or a config file by path.

    Raises:
        ConfigError: unreadable or malformed config; the message names the path.
    """
    if scenario in BUILTIN_SCENARIOS:
        text = resources.files("decoyforge").joinpath("scenarios", f"{scenario}.toml").read_text()
        origin = f"built-in scenario {scenario}"
    else:
        path = Path(scenario)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {str(path)!r}: {exc.strerror or exc}") from None
        origin = str(path)
    try:
        return parse_config(text, env)
    except ConfigError as exc:
        raise ConfigError(f"{origin}: {exc}") from None


def config_to_dict(config: ScenarioConfig) -> dict[str, Any]:
    """Flat key/value view using the config-file keys."""
    out: dict[str, Any] = {
        "name": config.name,
        "protocol": config.protocol,
        "source": config.source_kind,
        "mu1": config.mu1,
        "loss_grid": list(config.loss_grid),
    }
    channel = asdict(config.channel)
    out.update({k: channel[k] for k in _CHANNEL_KEYS})
    opt = asdict(config.optimizer)
    out.update({k: opt[k] for k in _OPTIMIZER_KEYS})
    out.update(k_max=config.k_max, seed=config.seed)
    return out


def config_hash(config: ScenarioConfig) -> str:
    payload = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()
