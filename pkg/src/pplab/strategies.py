"""Behavioral rules for the wolf-sheep world.

Every rule is an independent toggle in :class:`StrategySet`. Rules either
reshape a species' reproduction probability (fraction, altruistic,
predictive) or its movement (sheep flocking, sheep sacrifice). With all
flags off, the baseline model is recovered exactly: reproduction at the
configured base rate, movement by random wiggle.

All operations here are pure functions of their inputs; the engine owns
the tick schedule and the run RNG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .core import Species

if TYPE_CHECKING:
    from .core import Agent, WorldState


@dataclass
class StrategySet:
    """Which behavioral rules are active, plus their coefficients.

    The fraction and predictive rules replace a species' base reproduction
    probability, so enabling both for the same species is rejected. The
    altruistic gate composes with whatever rule is underneath it.
    """

    sheep_flocking: bool = False
    wolves_fraction_reproduce: bool = False
    sheep_fraction_reproduce: bool = False
    wolves_altruistic: bool = False
    sheep_altruistic: bool = False
    wolves_predictive: bool = False
    sheep_predictive: bool = False
    predictive_scale: float = 1.0
    flock_radius: int = 3
    flock_cohere_turn: float = 20.0

    def validate(self) -> None:
        if self.wolves_fraction_reproduce and self.wolves_predictive:
            raise ValueError(
                "wolves_fraction_reproduce and wolves_predictive are mutually "
                "exclusive: each replaces the base reproduction probability"
            )
        if self.sheep_fraction_reproduce and self.sheep_predictive:
            raise ValueError(
                "sheep_fraction_reproduce and sheep_predictive are mutually "
                "exclusive: each replaces the base reproduction probability"
            )
        if not self.predictive_scale > 0:
            raise ValueError("predictive_scale must be > 0")
        if self.flock_radius < 1:
            raise ValueError("flock_radius must be >= 1 cell")
        if not 0.0 <= self.flock_cohere_turn <= 180.0:
            raise ValueError("flock_cohere_turn must be in [0, 180] degrees")


@dataclass(frozen=True)
class ReproductionContext:
    """Start-of-tick population snapshot feeding the reproduction rules.

    ``dn_other`` is the other species' count change over the previous tick
    (current minus previous). Before two history entries exist it is 0 by
    convention, so trend rules see no phantom trend on the first tick.
    """

    n_self: int
    n_other: int
    dn_other: int
    base_rate: float


def reproduction_probability(
    ctx: ReproductionContext, species: Species, strategies: StrategySet
) -> float:
    """Per-agent reproduction probability for ``species`` this tick.

    Rule precedence for the agent's species:

    1. altruistic gate -- 0 if the species outnumbers the other, otherwise
       fall through to the underlying rule;
    2. fraction rule -- base_rate scaled by the other species' share of
       all animals (0 when both counts are 0);
    3. predictive rule -- the base rate shifted by the other species'
       one-step relative trend, ``clamp(base + k * dn / max(1, n_prev), 0, 1)``
       where ``n_prev`` is the other species' count on the previous tick;
    4. otherwise the base rate unchanged.

    The result always lies in [0, 1].
    """
    wolf = species is Species.WOLF
    altruistic = strategies.wolves_altruistic if wolf else strategies.sheep_altruistic
    fraction = (
        strategies.wolves_fraction_reproduce
        if wolf
        else strategies.sheep_fraction_reproduce
    )
    predictive = strategies.wolves_predictive if wolf else strategies.sheep_predictive

    if altruistic and ctx.n_self > ctx.n_other:
        return 0.0
    if fraction:
        total = ctx.n_self + ctx.n_other
        if total == 0:
            return 0.0
        return ctx.base_rate * ctx.n_other / total
    if predictive:
        n_prev = max(1, ctx.n_other - ctx.dn_other)
        p = ctx.base_rate + strategies.predictive_scale * ctx.dn_other / n_prev
        return min(1.0, max(0.0, p))
    return ctx.base_rate


# --- torus geometry helpers -------------------------------------------------

def torus_delta(a, b, size: int):
    """Wrapped difference b - a on a ring of ``size`` cells, in [-size/2, size/2)."""
    half = size // 2
    return (np.asarray(b) - np.asarray(a) + half) % size - half


def heading_step(heading_deg):
    """Integer cell step (dx, dy) for advancing one cell along a heading.

    Headings are degrees counterclockwise from the +x axis; the step is the
    rounded unit vector, so movement is on the 8-cell Moore neighborhood.
    """
    rad = np.radians(heading_deg)
    dx = np.rint(np.cos(rad)).astype(np.int64)
    dy = np.rint(np.sin(rad)).astype(np.int64)
    return dx, dy


def turn_toward(heading: float, bearing: float, max_turn: float) -> float:
    """Turn ``heading`` toward ``bearing`` by at most ``max_turn`` degrees."""
    delta = (bearing - heading + 180.0) % 360.0 - 180.0
    if delta > max_turn:
        delta = max_turn
    elif delta < -max_turn:
        delta = -max_turn
    return (heading + delta) % 360.0


def _neighbor_offsets(radius: int) -> np.ndarray:
    """All nonzero integer cell offsets within Euclidean ``radius``."""
    r = int(math.floor(radius))
    ox, oy = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    keep = (ox * ox + oy * oy <= radius * radius) & ~((ox == 0) & (oy == 0))
    return np.stack([ox[keep], oy[keep]], axis=1)


def flocking_headings(
    sx: np.ndarray,
    sy: np.ndarray,
    headings: np.ndarray,
    width: int,
    height: int,
    radius: int,
    max_turn: float,
) -> np.ndarray:
    """Flock-adjusted headings for every sheep at once.

    Each sheep turns by at most ``max_turn`` degrees toward the centroid of
    the other sheep within ``radius`` (torus metric). Sheep with no
    neighbors, or whose neighborhood centroid sits on their own cell, keep
    their heading. Positions are integers, so all sheep in a neighboring
    cell share one wrapped offset and the centroid reduces to a
    count-weighted sum over cell offsets.
    """
    n = sx.size
    if n == 0:
        return headings.copy()
    offsets = _neighbor_offsets(radius)
    counts = np.bincount(sy * width + sx, minlength=width * height)

    ncx = (sx[:, None] + offsets[:, 0]) % width
    ncy = (sy[:, None] + offsets[:, 1]) % height
    nb = counts[ncy * width + ncx]  # (n, n_offsets)

    total = nb.sum(axis=1) + counts[sy * width + sx] - 1  # others only
    cx = nb @ offsets[:, 0].astype(np.float64)
    cy = nb @ offsets[:, 1].astype(np.float64)

    out = headings.copy()
    active = (total > 0) & ((cx != 0.0) | (cy != 0.0))
    if not active.any():
        return out
    bearing = np.degrees(np.arctan2(cy[active], cx[active]))
    delta = (bearing - headings[active] + 180.0) % 360.0 - 180.0
    np.clip(delta, -max_turn, max_turn, out=delta)
    out[active] = (headings[active] + delta) % 360.0
    return out


def flocking_heading(
    agent: Agent, world: WorldState, strategies: StrategySet
) -> float:
    """Flock-adjusted heading for a single sheep (see :func:`flocking_headings`)."""
    idx = int(np.nonzero(world.sheep_id == agent.id)[0][0])
    adjusted = flocking_headings(
        world.sheep_x,
        world.sheep_y,
        world.sheep_heading,
        world.grid_width,
        world.grid_height,
        strategies.flock_radius,
        strategies.flock_cohere_turn,
    )
    return float(adjusted[idx])


# --- sheep sacrifice (rule pairing with the sheep altruistic gate) ----------

def sacrifice_target(world: WorldState) -> Optional[tuple[int, float, int, int]]:
    """The sacrificial move for the current tick, if the rule is active.

    Active only while exactly one wolf survives and more than one sheep
    remains. Returns ``(sheep_index, heading, dx, dy)`` for the sheep
    nearest the wolf (torus Euclidean metric, ties broken by lowest agent
    id): it advances one cell toward the wolf, one sign-step per axis,
    instead of making its normal move.
    """
    if world.wolf_count != 1 or world.sheep_count <= 1:
        return None
    ddx = torus_delta(world.sheep_x, world.wolf_x[0], world.grid_width)
    ddy = torus_delta(world.sheep_y, world.wolf_y[0], world.grid_height)
    dist2 = ddx * ddx + ddy * ddy
    best = np.flatnonzero(dist2 == dist2.min())
    idx = int(best[np.argmin(world.sheep_id[best])])
    dx, dy = int(np.sign(ddx[idx])), int(np.sign(ddy[idx]))
    heading = math.degrees(math.atan2(ddy[idx], ddx[idx])) % 360.0
    return idx, heading, dx, dy


def sacrifice_move(world: WorldState, strategies: StrategySet) -> Optional[int]:
    """Apply the sacrificial step to ``world`` in place.

    No-op (returns None) unless ``sheep_altruistic`` is set and the
    single-wolf conditions of :func:`sacrifice_target` hold; otherwise
    moves the chosen sheep and returns its agent id.
    """
    if not strategies.sheep_altruistic:
        return None
    target = sacrifice_target(world)
    if target is None:
        return None
    idx, heading, dx, dy = target
    world.sheep_x[idx] = (world.sheep_x[idx] + dx) % world.grid_width
    world.sheep_y[idx] = (world.sheep_y[idx] + dy) % world.grid_height
    world.sheep_heading[idx] = heading
    return int(world.sheep_id[idx])
