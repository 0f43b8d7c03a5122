"""Domain types for the discrete wolf-sheep world.

Holds the agent/world state model, run configuration (with its flat
``key = value`` file format), world initialization, and the outcome
classification shared by the engine and the batch runner.

Outcome taxonomy: E1 = prey extinct (predators doomed to follow), E2 =
predators extinct with prey surviving, E3 = both species alive at the
horizon.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Union

import numpy as np


class ConfigError(ValueError):
    """Invalid run configuration or malformed config file."""


class Species(Enum):
    SHEEP = "sheep"
    WOLF = "wolf"


class OutcomeClass(Enum):
    E1 = "E1"  # sheep extinct (wolves extinct or extinct-bound)
    E2 = "E2"  # wolves extinct, sheep surviving
    E3 = "E3"  # coexistence at the horizon


@dataclass(frozen=True)
class Agent:
    """One sheep or wolf. Sheep carry no energy; no rule ever reads it."""

    id: int
    species: Species
    x: int
    y: int
    heading: float  # degrees CCW from +x, in [0, 360)
    energy: float = 0.0


class PopulationHistory:
    """(tick, sheep_count, wolf_count) triples, one per completed tick."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[int, int, int]] = ()):
        self._entries: list[tuple[int, int, int]] = list(entries)

    def append(self, tick: int, sheep: int, wolves: int) -> None:
        if self._entries:
            expected = self._entries[-1][0] + 1
            if tick != expected:
                raise ValueError(f"history tick {tick}, expected {expected}")
        elif tick != 0:
            raise ValueError("history starts at tick 0")
        if sheep < 0 or wolves < 0:
            raise ValueError("negative population count")
        self._entries.append((tick, sheep, wolves))

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, i) -> tuple[int, int, int]:
        return self._entries[i]

    def __iter__(self) -> Iterator[tuple[int, int, int]]:
        return iter(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, PopulationHistory) and self._entries == other._entries

    def deltas(self) -> tuple[int, int]:
        """(d_sheep, d_wolves) over the last completed tick; (0, 0) until
        two entries exist."""
        if len(self._entries) < 2:
            return 0, 0
        _, s1, w1 = self._entries[-1]
        _, s0, w0 = self._entries[-2]
        return s1 - s0, w1 - w0

    def downsampled(self, every: int) -> "PopulationHistory":
        """Every ``every``-th entry, always keeping the first and last."""
        if every < 1:
            raise ValueError("sample interval must be >= 1")
        if not self._entries:
            return PopulationHistory()
        kept = [e for e in self._entries if e[0] % every == 0]
        if kept[-1] != self._entries[-1]:
            kept.append(self._entries[-1])
        return PopulationHistory(kept)

    def as_array(self) -> np.ndarray:
        return np.asarray(self._entries, dtype=np.int64).reshape(-1, 3)


def _default_strategies():
    from .strategies import StrategySet

    return StrategySet()


@dataclass
class SimConfig:
    """Full parameterization of one discrete run.

    Defaults follow the no-grass wolf-sheep reference model: 51x51 torus,
    100 sheep / 50 wolves, reproduction 4% / 5%, wolves gain 20 energy per
    meal and burn 1 per tick. ``sheep_cap`` bounds predator-free runs whose
    classification is already determined. There is no hard density cap:
    any number of agents may share a cell, and initial populations are
    normally well under a couple of agents per cell.
    """

    grid_width: int = 51
    grid_height: int = 51
    initial_sheep: int = 100
    initial_wolves: int = 50
    sheep_reproduce_rate: float = 0.04
    wolf_reproduce_rate: float = 0.05
    wolf_gain_from_food: float = 20.0
    wolf_energy_loss_per_tick: float = 1.0
    max_ticks: int = 5000
    sheep_cap: int = 10_000
    seed: int = 0
    strategies: "StrategySet" = field(default_factory=_default_strategies)

    def validate(self) -> None:
        if self.grid_width < 1 or self.grid_height < 1:
            raise ConfigError("grid dimensions must be positive")
        if self.initial_sheep < 0 or self.initial_wolves < 0:
            raise ConfigError("initial populations must be non-negative")
        for name in ("sheep_reproduce_rate", "wolf_reproduce_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{name} must be a probability in [0, 1]")
        if not self.wolf_gain_from_food > 0:
            raise ConfigError("wolf_gain_from_food must be > 0")
        if self.wolf_energy_loss_per_tick < 0:
            raise ConfigError("wolf_energy_loss_per_tick must be >= 0")
        if self.max_ticks < 1:
            raise ConfigError("max_ticks must be a positive integer")
        if self.sheep_cap < 1:
            raise ConfigError("sheep_cap must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if 2 * self.strategies.flock_radius >= min(self.grid_width, self.grid_height):
            raise ConfigError("flock_radius must be under half the grid size")
        try:
            self.strategies.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # -- flat key = value persistence ----------------------------------

    def as_flat_dict(self) -> dict[str, Union[int, float, bool]]:
        d: dict[str, Union[int, float, bool]] = {}
        for key, (owner, kind) in _CONFIG_SCHEMA.items():
            obj = self if owner == "config" else self.strategies
            value = getattr(obj, key)
            d[key] = kind(value)
        return d

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> "SimConfig":
        from .strategies import StrategySet

        cfg_kwargs: dict[str, object] = {}
        strat_kwargs: dict[str, object] = {}
        for key, raw in mapping.items():
            if key not in _CONFIG_SCHEMA:
                raise ConfigError(f"unknown config key: {key!r}")
            owner, kind = _CONFIG_SCHEMA[key]
            try:
                value = _coerce(raw, kind)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
            (cfg_kwargs if owner == "config" else strat_kwargs)[key] = value
        config = cls(strategies=StrategySet(**strat_kwargs), **cfg_kwargs)
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "SimConfig":
        return cls.from_mapping(parse_config_text(Path(path).read_text()))

    def to_file(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text())

    def to_text(self) -> str:
        lines = ["# pplab run configuration"]
        for key, value in self.as_flat_dict().items():
            lines.append(f"{key} = {_format_value(value)}")
        return "\n".join(lines) + "\n"


def _strategy_field_names() -> tuple[str, ...]:
    from .strategies import StrategySet

    return tuple(f.name for f in dataclasses.fields(StrategySet))


# key -> (owning dataclass, python type); built lazily to avoid import cycles
_CONFIG_SCHEMA: dict[str, tuple[str, type]] = {}


def _build_schema() -> None:
    if _CONFIG_SCHEMA:
        return
    for f in dataclasses.fields(SimConfig):
        if f.name == "strategies":
            continue
        _CONFIG_SCHEMA[f.name] = ("config", type(getattr(SimConfig(), f.name)))
    from .strategies import StrategySet

    defaults = StrategySet()
    for name in _strategy_field_names():
        _CONFIG_SCHEMA[name] = ("strategies", type(getattr(defaults, name)))


def config_keys() -> tuple[str, ...]:
    """All recognized flat config keys, in canonical order."""
    _build_schema()
    return tuple(_CONFIG_SCHEMA)


def config_key_type(key: str) -> type:
    _build_schema()
    return _CONFIG_SCHEMA[key][1]


def _coerce(raw: object, kind: type):
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("true", "false"):
            return text == "true"
        raise ValueError("expected true or false")
    if kind is int:
        if isinstance(raw, bool):
            raise ValueError("expected an integer")
        if isinstance(raw, int):
            return raw
        text = str(raw).strip()
        return int(text, 0)
    if kind is float:
        if isinstance(raw, bool):
            raise ValueError("expected a number")
        return float(raw)  # type: ignore[arg-type]
    raise TypeError(f"unsupported config type {kind}")


def _format_value(value: Union[int, float, bool]) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment; blank lines ok."""
    out: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        out[key] = value
    return out


# --- world state ------------------------------------------------------------

_INT = np.int64
_FLOAT = np.float64


class WorldState:
    """Mutable state of one run: per-species agent arrays plus bookkeeping.

    Agents live in struct-of-arrays form for the engine's sake; the
    :attr:`agents` view materializes :class:`Agent` records on demand.
    A world is owned by exactly one run and is never shared.
    """

    __slots__ = (
        "grid_width",
        "grid_height",
        "tick",
        "sheep_x",
        "sheep_y",
        "sheep_heading",
        "sheep_id",
        "wolf_x",
        "wolf_y",
        "wolf_heading",
        "wolf_energy",
        "wolf_id",
        "next_id",
        "history",
        "rng",
    )

    def __init__(
        self,
        grid_width: int,
        grid_height: int,
        rng: np.random.Generator,
        tick: int = 0,
    ):
        self.grid_width = int(grid_width)
        self.grid_height = int(grid_height)
        self.tick = int(tick)
        self.sheep_x = np.empty(0, _INT)
        self.sheep_y = np.empty(0, _INT)
        self.sheep_heading = np.empty(0, _FLOAT)
        self.sheep_id = np.empty(0, _INT)
        self.wolf_x = np.empty(0, _INT)
        self.wolf_y = np.empty(0, _INT)
        self.wolf_heading = np.empty(0, _FLOAT)
        self.wolf_energy = np.empty(0, _FLOAT)
        self.wolf_id = np.empty(0, _INT)
        self.next_id = 0
        self.history = PopulationHistory()
        self.rng = rng

    @property
    def sheep_count(self) -> int:
        return self.sheep_x.size

    @property
    def wolf_count(self) -> int:
        return self.wolf_x.size

    @property
    def agents(self) -> tuple[Agent, ...]:
        """All agents, sheep first then wolves, each in array order."""
        sheep = tuple(
            Agent(int(i), Species.SHEEP, int(x), int(y), float(h))
            for i, x, y, h in zip(
                self.sheep_id, self.sheep_x, self.sheep_y, self.sheep_heading
            )
        )
        wolves = tuple(
            Agent(int(i), Species.WOLF, int(x), int(y), float(h), float(e))
            for i, x, y, h, e in zip(
                self.wolf_id, self.wolf_x, self.wolf_y, self.wolf_heading,
                self.wolf_energy,
            )
        )
        return sheep + wolves

    @classmethod
    def from_agents(
        cls,
        grid_width: int,
        grid_height: int,
        agents: Iterable[Agent],
        seed: int = 0,
        tick: int = 0,
    ) -> "WorldState":
        """Build a world from explicit agents (test and tooling hook)."""
        world = cls(grid_width, grid_height, _new_rng(seed), tick)
        sheep = [a for a in agents if a.species is Species.SHEEP]
        wolves = [a for a in agents if a.species is Species.WOLF]
        world.sheep_x = np.array([a.x for a in sheep], _INT)
        world.sheep_y = np.array([a.y for a in sheep], _INT)
        world.sheep_heading = np.array([a.heading for a in sheep], _FLOAT)
        world.sheep_id = np.array([a.id for a in sheep], _INT)
        world.wolf_x = np.array([a.x for a in wolves], _INT)
        world.wolf_y = np.array([a.y for a in wolves], _INT)
        world.wolf_heading = np.array([a.heading for a in wolves], _FLOAT)
        world.wolf_energy = np.array([a.energy for a in wolves], _FLOAT)
        world.wolf_id = np.array([a.id for a in wolves], _INT)
        world.next_id = max((a.id for a in agents), default=-1) + 1
        world.history.append(tick, len(sheep), len(wolves))
        return world

    def serialize(self) -> bytes:
        """Canonical byte snapshot; equal worlds serialize identically."""
        parts = [
            struct.pack(
                "<qqqqq",
                self.grid_width,
                self.grid_height,
                self.tick,
                self.next_id,
                len(self.history),
            )
        ]
        for arr in (
            self.sheep_id,
            self.sheep_x,
            self.sheep_y,
            self.sheep_heading,
            self.wolf_id,
            self.wolf_x,
            self.wolf_y,
            self.wolf_heading,
            self.wolf_energy,
        ):
            parts.append(struct.pack("<q", arr.size))
            parts.append(arr.tobytes())
        parts.append(self.history.as_array().tobytes())
        parts.append(json.dumps(self.rng.bit_generator.state, sort_keys=True).encode())
        return b"".join(parts)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()


def _new_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def init_world(config: SimConfig) -> WorldState:
    """Seeded initial world: agents at uniform random cells and headings.

    Wolf energies are uniform on [0, 2 * wolf_gain_from_food). All draws
    come from one PCG64 generator keyed by ``config.seed``, in a fixed
    order (sheep x, y, heading; wolf x, y, heading, energy), so equal
    configs yield bit-identical worlds.
    """
    config.validate()
    rng = _new_rng(config.seed)
    world = WorldState(config.grid_width, config.grid_height, rng)
    ns, nw = config.initial_sheep, config.initial_wolves
    world.sheep_x = rng.integers(0, config.grid_width, ns, dtype=_INT)
    world.sheep_y = rng.integers(0, config.grid_height, ns, dtype=_INT)
    world.sheep_heading = rng.random(ns) * 360.0
    world.sheep_id = np.arange(ns, dtype=_INT)
    world.wolf_x = rng.integers(0, config.grid_width, nw, dtype=_INT)
    world.wolf_y = rng.integers(0, config.grid_height, nw, dtype=_INT)
    world.wolf_heading = rng.random(nw) * 360.0
    world.wolf_energy = rng.random(nw) * (2.0 * config.wolf_gain_from_food)
    world.wolf_id = np.arange(ns, ns + nw, dtype=_INT)
    world.next_id = ns + nw
    world.history.append(0, ns, nw)
    return world


def classify(world: WorldState, config: SimConfig) -> Optional[OutcomeClass]:
    """Outcome of the run at the current tick boundary, or None if running.

    E1 as soon as the sheep count is 0 (wolf decay is then inevitable: no
    rule creates agents of an extinct species). E2 as soon as wolves are
    extinct with sheep alive, or as soon as the sheep population reaches
    ``sheep_cap`` -- the reference model's runaway-prey stop, which keeps
    runtime bounded when prey growth has escaped predation for good. E3
    when both species are alive, below the cap, at the horizon.
    """
    sheep, wolves = world.sheep_count, world.wolf_count
    if sheep == 0:
        return OutcomeClass.E1
    if wolves == 0 or sheep >= config.sheep_cap:
        return OutcomeClass.E2
    if world.tick >= config.max_ticks:
        return OutcomeClass.E3
    return None


@dataclass(frozen=True)
class RunOutcome:
    """Classified terminal state of one seeded run."""

    outcome: OutcomeClass
    final_sheep: int
    final_wolves: int
    absorption_tick: int
    seed: int
    trajectory_summary: tuple[tuple[int, int, int], ...] = ()

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "final_sheep": self.final_sheep,
            "final_wolves": self.final_wolves,
            "absorption_tick": self.absorption_tick,
            "seed": self.seed,
            "trajectory": [list(t) for t in self.trajectory_summary],
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True).encode()
