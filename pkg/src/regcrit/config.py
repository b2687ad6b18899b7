"""Flat key-value run configuration.

One ``key = value`` assignment per line, ``#`` comments, blank lines ignored.
Recognized keys:

    grid.n                 points per axis (int, required)
    grid.length            box side (float, default 2*pi)
    fluid.mu               viscosity (float, required)
    time.dt                timestep (float, required for simulate)
    time.t_end             final time (float, required for simulate)
    init.kind              taylor_green | beltrami | random_divfree
    init.amplitude         float, default 1.0
    init.seed              int, default 0 (random_divfree)
    init.spectrum_slope    float, default -2.0 (random_divfree)
    monitors.pairs         comma-separated p:s entries, "inf" accepted for p
                           (default "6:4")
    monitors.stride        evaluate monitors every k steps (default 1)
    monitors.identity_stride   steps between identity quadratures (default 1)
    monitors.oversample_linf   true|false (default false)
    monitors.calibration   path to a calibration record (relative to the
                           config file); enables the Gronwall column
    snapshots.stride       write snapshots every k steps (default 100)
    output.dir             run directory (required)
    calibration.seeds      corpus seeds, "0..99" or comma list (calibrate)
    calibration.p          exponent list, e.g. "4,5,6,inf" (calibrate)
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

from .criteria import CalibrationRecord, CriterionConfig, SerrinPair
from .solver import InitSpec, SolverConfig
from .spectral import Grid, TWO_PI


class ConfigError(ValueError):
    """Invalid configuration; carries the offending key and source line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        loc = ""
        if key is not None:
            loc += f" (key {key!r}"
            loc += f", line {line})" if line is not None else ")"
        elif line is not None:
            loc += f" (line {line})"
        super().__init__(message + loc)
        self.key = key
        self.line = line


@dataclass
class RawConfig:
    path: str
    values: dict[str, str]
    lines: dict[str, int]

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.values.get(key, default)

    def require(self, key: str) -> str:
        if key not in self.values:
            raise ConfigError(f"missing required key", key=key)
        return self.values[key]

    def _convert(self, key: str, conv, default):
        if key not in self.values:
            if default is None:
                raise ConfigError("missing required key", key=key)
            return default
        raw = self.values[key]
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(str(exc), key=key, line=self.lines.get(key)) from exc

    def get_int(self, key: str, default: int | None = None) -> int:
        return self._convert(key, int, default)

    def get_float(self, key: str, default: float | None = None) -> float:
        return self._convert(key, _parse_float, default)

    def get_bool(self, key: str, default: bool) -> bool:
        return self._convert(key, _parse_bool, default)


def _parse_float(raw: str) -> float:
    if raw.strip().lower() == "inf":
        return math.inf
    return float(raw)


def _parse_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def parse_config(path: str) -> RawConfig:
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", line=i)
        key, _, val = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError("empty key", line=i)
        if key in values:
            raise ConfigError("duplicate key", key=key, line=i)
        values[key] = val.strip()
        lines[key] = i
    return RawConfig(path=path, values=values, lines=lines)


def parse_pairs(raw: str, key: str = "monitors.pairs") -> tuple[SerrinPair, ...]:
    pairs = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(f"pair entry {chunk!r} is not p:s", key=key)
        ps, _, ss = chunk.partition(":")
        try:
            pairs.append(SerrinPair(_parse_float(ps), _parse_float(ss)))
        except ValueError as exc:
            raise ConfigError(str(exc), key=key) from exc
    if not pairs:
        raise ConfigError("no pairs given", key=key)
    return tuple(pairs)


def parse_seed_list(raw: str, key: str = "calibration.seeds") -> tuple[int, ...]:
    """Either "a..b" (inclusive range) or a comma list of integers."""
    raw = raw.strip()
    try:
        if ".." in raw:
            lo, _, hi = raw.partition("..")
            a, b = int(lo), int(hi)
            if b < a:
                raise ValueError(f"empty seed range {raw!r}")
            return tuple(range(a, b + 1))
        return tuple(int(s) for s in raw.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(str(exc), key=key) from exc


def build_solver_config(raw: RawConfig) -> SolverConfig:
    grid = Grid(raw.get_int("grid.n"), raw.get_float("grid.length", TWO_PI))
    kind = raw.require("init.kind")
    try:
        init = InitSpec(
            kind=kind,
            amplitude=raw.get_float("init.amplitude", 1.0),
            seed=raw.get_int("init.seed", 0),
            spectrum_slope=raw.get_float("init.spectrum_slope", -2.0),
        )
        return SolverConfig(
            grid=grid,
            mu=raw.get_float("fluid.mu"),
            dt=raw.get_float("time.dt"),
            t_end=raw.get_float("time.t_end"),
            init=init,
            monitor_stride=raw.get_int("monitors.stride", 1),
            snapshot_stride=raw.get_int("snapshots.stride", 100),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_calibration(raw: RawConfig) -> CalibrationRecord | None:
    rel = raw.get("monitors.calibration")
    if rel is None:
        return None
    path = rel if os.path.isabs(rel) else os.path.join(os.path.dirname(raw.path), rel)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return CalibrationRecord.from_text(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(
            f"cannot load calibration record {path}: {exc}", key="monitors.calibration"
        ) from exc


def build_criterion_config(raw: RawConfig) -> CriterionConfig:
    pairs = parse_pairs(raw.get("monitors.pairs", "6:4"))
    try:
        return CriterionConfig(
            pairs=pairs,
            mu=raw.get_float("fluid.mu"),
            calibration=load_calibration(raw),
            oversample_linf=raw.get_bool("monitors.oversample_linf", False),
            identity_stride=raw.get_int("monitors.identity_stride", 1),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
