"""Run configuration, learning-regime presets and the TOML config file format."""

from __future__ import annotations

import dataclasses
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

METHODS = ("sac", "redq", "dea")


@dataclass(frozen=True)
class Regime:
    ensemble_size: int
    total_steps: int
    utd: int
    warmup_steps: int
    hidden_size: int


# Full-scale presets first, then desk-scale ones sized for a single CPU core.
REGIMES = {
    "interactive": Regime(2, 1_000_000, 1, 10_000, 256),
    "sample-efficient": Regime(10, 300_000, 20, 10_000, 256),
    "desk-interactive": Regime(2, 30_000, 1, 1_000, 64),
    "desk-sample-efficient": Regime(10, 10_000, 20, 1_000, 64),
}


@dataclass
class RunConfig:
    """One training run. ``None`` fields fall back to the regime preset."""

    env: str = "pendulum"
    method: str = "dea"
    regime: str = "desk-interactive"
    seed: int = 1
    gamma: float = 0.99
    tau: float = 5e-3
    batch_size: int = 256
    warmup_steps: int | None = None
    lr: float = 3e-4
    lr_kappa_bar: float | None = None
    lr_kappa: float | None = None
    alpha_init: float = 0.2
    h_target_scale: float = 0.5
    kappa_bar_init: float = -0.8
    kappa_init: float = 0.0
    freeze_kappa_bar: bool = False
    freeze_kappa: bool = False
    eval_interval: int = 1000
    eval_episodes: int = 5
    out_dir: str | None = None
    ensemble_size: int | None = None
    total_steps: int | None = None
    utd: int | None = None
    hidden_size: int | None = None
    hidden_layers: int = 2
    buffer_size: int = 1_000_000

    def resolved(self) -> "RunConfig":
        """Copy with every preset-backed field filled in, after validation."""
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}; choose from {sorted(REGIMES)}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {list(METHODS)}")
        preset = REGIMES[self.regime]
        cfg = dataclasses.replace(
            self,
            ensemble_size=preset.ensemble_size if self.ensemble_size is None else self.ensemble_size,
            total_steps=preset.total_steps if self.total_steps is None else self.total_steps,
            utd=preset.utd if self.utd is None else self.utd,
            warmup_steps=preset.warmup_steps if self.warmup_steps is None else self.warmup_steps,
            hidden_size=preset.hidden_size if self.hidden_size is None else self.hidden_size,
            lr_kappa_bar=self.lr if self.lr_kappa_bar is None else self.lr_kappa_bar,
            lr_kappa=self.lr if self.lr_kappa is None else self.lr_kappa,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        positive = ["batch_size", "lr", "lr_kappa_bar", "lr_kappa", "alpha_init", "eval_interval",
                    "eval_episodes", "ensemble_size", "total_steps", "utd", "hidden_size",
                    "hidden_layers", "buffer_size"]
        for name in positive:
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ConfigError(f"{name} must be positive, got {value!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")
        if self.warmup_steps is not None and self.warmup_steps < 0:
            raise ConfigError("warmup_steps must be >= 0")
        for name in ("kappa_bar_init", "kappa_init"):
            if not -1.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie strictly inside (-1, 1)")
        if self.ensemble_size is not None and self.ensemble_size < 2:
            raise ConfigError("ensemble_size must be at least 2")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)} | {"seeds"}


def _key_line(text: str, key: str) -> int | None:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for lineno, line in enumerate(text.splitlines(), 1):
        if pattern.match(line):
            return lineno
    return None


def _coerce(name: str, value: Any, text: str, path: str) -> Any:
    ftype = {f.name: f.type for f in dataclasses.fields(RunConfig)}.get(name)
    where = _key_line(text, name)
    loc = f"{path}:{where}" if where else path
    if ftype is None:
        return value
    expect_int = ftype.startswith("int")
    expect_float = ftype.startswith("float")
    expect_bool = ftype == "bool"
    if value is None:
        return value
    if expect_bool and not isinstance(value, bool):
        raise ConfigError(f"{loc}: {name} must be true or false")
    if expect_int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{loc}: {name} must be an integer")
    if expect_float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{loc}: {name} must be a number")
        value = float(value)
    return value


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a flat TOML document into a dict of validated RunConfig overrides.

    ``env`` and ``method`` may be strings or lists (lists are expanded by sweeps);
    ``seeds`` is a list of integers. Errors carry ``path:line``.
    """
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    out: dict[str, Any] = {}
    for key, value in doc.items():
        if key not in CONFIG_KEYS:
            line = _key_line(text, key)
            loc = f"{path}:{line}" if line else path
            raise ConfigError(f"{loc}: unknown config key {key!r}")
        if isinstance(value, dict):
            raise ConfigError(f"{path}:{_key_line(text, key) or '?'}: tables are not supported")
        if key in ("env", "method") and isinstance(value, list):
            if not value or not all(isinstance(v, str) for v in value):
                raise ConfigError(f"{path}:{_key_line(text, key)}: {key} list must hold strings")
            out[key] = value
        elif key == "seeds":
            if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
                raise ConfigError(f"{path}:{_key_line(text, key)}: seeds must be a list of integers")
            out[key] = value
        else:
            out[key] = _coerce(key, value, text, path)
    return out


def config_from_dict(values: dict[str, Any]) -> RunConfig:
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return RunConfig(**values)
