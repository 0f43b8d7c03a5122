"""The tick loop for a single seeded run.

Schedule per tick:

1. tick-global strategy hooks (the sheep sacrifice step);
2. sheep phase: every sheep moves (flock-adjusted heading when enabled,
   random wiggle otherwise), then reproduces with the tick's frozen
   probability;
3. wolf phase: every wolf moves, burns energy, eats at most one sheep on
   its cell (gaining ``wolf_gain_from_food``), starves below zero energy,
   and otherwise reproduces, handing half its energy to the offspring;
4. the tick counter advances and the population counts are appended to
   the history.

Reproduction probabilities are frozen at the start of the tick, moves are
independent random wiggles, and newborns act from the next tick on, so
agents within a phase interact only through predation. The engine
therefore processes each phase as one array batch; predation contention
is resolved by a seeded wolf priority order (each wolf in priority order
eats one still-available sheep on its cell), which reproduces the
per-agent sequential schedule exactly. All randomness comes from the
world's own generator in a fixed per-tick draw order, making every run a
pure function of (config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    OutcomeClass,
    RunOutcome,
    SimConfig,
    Species,
    WorldState,
    classify,
    init_world,
)
from .strategies import (
    ReproductionContext,
    flocking_headings,
    heading_step,
    reproduction_probability,
    sacrifice_target,
)

_INT = np.int64


@dataclass(frozen=True)
class TickReport:
    """Per-tick bookkeeping; births minus deaths reconciles the counts."""

    tick: int
    sheep_births: int
    sheep_deaths: int
    wolf_births: int
    wolf_deaths: int
    predation_events: int


def _rank_in_sorted_groups(sorted_keys: np.ndarray) -> np.ndarray:
    """0-based rank of each element within its run of equal keys."""
    n = sorted_keys.size
    if n == 0:
        return np.empty(0, _INT)
    idx = np.arange(n, dtype=_INT)
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    np.not_equal(sorted_keys[1:], sorted_keys[:-1], out=new_group[1:])
    group_start = np.maximum.accumulate(np.where(new_group, idx, 0))
    return idx - group_start


def _wiggle(rng: np.random.Generator, headings: np.ndarray) -> np.ndarray:
    """Reference-model wiggle: right U[0, 50) then left U[0, 40) degrees."""
    turns = rng.random((2, headings.size))
    return (headings - turns[0] * 50.0 + turns[1] * 40.0) % 360.0


def step(world: WorldState, config: SimConfig) -> tuple[WorldState, TickReport]:
    """Advance ``world`` by one tick in place; also returns it for chaining.

    Raises RuntimeError if the run is already classified.
    """
    if classify(world, config) is not None:
        raise RuntimeError("stepping a finished run")
    strat = config.strategies
    rng = world.rng
    width, height = world.grid_width, world.grid_height
    ncells = width * height
    tick = world.tick + 1

    n_sheep0, n_wolves0 = world.sheep_count, world.wolf_count
    d_sheep, d_wolves = world.history.deltas()
    p_sheep = reproduction_probability(
        ReproductionContext(n_sheep0, n_wolves0, d_wolves, config.sheep_reproduce_rate),
        Species.SHEEP,
        strat,
    )
    p_wolf = reproduction_probability(
        ReproductionContext(n_wolves0, n_sheep0, d_sheep, config.wolf_reproduce_rate),
        Species.WOLF,
        strat,
    )

    override = None
    if strat.sheep_altruistic:
        override = sacrifice_target(world)

    # --- sheep phase: move, then reproduce ---
    if strat.sheep_flocking:
        headings = flocking_headings(
            world.sheep_x,
            world.sheep_y,
            world.sheep_heading,
            width,
            height,
            strat.flock_radius,
            strat.flock_cohere_turn,
        )
    else:
        headings = _wiggle(rng, world.sheep_heading)
    dx, dy = heading_step(headings)
    if override is not None:
        idx, o_heading, o_dx, o_dy = override
        headings[idx] = o_heading
        dx[idx] = o_dx
        dy[idx] = o_dy
    sx = (world.sheep_x + dx) % width
    sy = (world.sheep_y + dy) % height

    born = rng.random(n_sheep0) < p_sheep
    n_sheep_born = int(np.count_nonzero(born))
    if n_sheep_born:
        lamb_heading = rng.random(n_sheep_born) * 360.0
        ldx, ldy = heading_step(lamb_heading)
        sx = np.concatenate([sx, (sx[born] + ldx) % width])
        sy = np.concatenate([sy, (sy[born] + ldy) % height])
        headings = np.concatenate([headings, lamb_heading])
        sheep_id = np.concatenate(
            [world.sheep_id,
             np.arange(world.next_id, world.next_id + n_sheep_born, dtype=_INT)]
        )
        world.next_id += n_sheep_born
    else:
        sheep_id = world.sheep_id
    n_sheep1 = sx.size

    # --- wolf phase: move, burn energy, eat, starve, reproduce ---
    priority = rng.permutation(n_wolves0)
    w_headings = _wiggle(rng, world.wolf_heading)
    dx, dy = heading_step(w_headings)
    wx = (world.wolf_x + dx) % width
    wy = (world.wolf_y + dy) % height
    energy = world.wolf_energy - config.wolf_energy_loss_per_tick

    wolf_cells = wy * width + wx
    sheep_cells = sy * width + sx
    sheep_per_cell = np.bincount(sheep_cells, minlength=ncells)

    order = np.lexsort((priority, wolf_cells))
    eats = np.empty(n_wolves0, dtype=bool)
    eats[order] = (
        _rank_in_sorted_groups(wolf_cells[order]) < sheep_per_cell[wolf_cells[order]]
    )
    n_eaten = int(np.count_nonzero(eats))
    if n_eaten:
        energy[eats] += config.wolf_gain_from_food
        eaten_per_cell = np.bincount(wolf_cells[eats], minlength=ncells)
        victim_priority = rng.permutation(n_sheep1)
        vorder = np.lexsort((victim_priority, sheep_cells))
        eaten = np.empty(n_sheep1, dtype=bool)
        eaten[vorder] = (
            _rank_in_sorted_groups(sheep_cells[vorder])
            < eaten_per_cell[sheep_cells[vorder]]
        )
        survivors = ~eaten
        sx, sy = sx[survivors], sy[survivors]
        headings, sheep_id = headings[survivors], sheep_id[survivors]

    starved = energy < 0.0
    n_starved = int(np.count_nonzero(starved))
    alive = ~starved

    reproduced = alive & (rng.random(n_wolves0) < p_wolf)
    n_wolves_born = int(np.count_nonzero(reproduced))
    energy[reproduced] *= 0.5  # offspring takes the other half

    wx, wy = wx[alive], wy[alive]
    w_headings, energy = w_headings[alive], energy[alive]
    wolf_id = world.wolf_id[alive]
    if n_wolves_born:
        pup_heading = rng.random(n_wolves_born) * 360.0
        pdx, pdy = heading_step(pup_heading)
        parents = reproduced[alive]
        wx = np.concatenate([wx, (wx[parents] + pdx) % width])
        wy = np.concatenate([wy, (wy[parents] + pdy) % height])
        w_headings = np.concatenate([w_headings, pup_heading])
        energy = np.concatenate([energy, energy[parents]])
        wolf_id = np.concatenate(
            [wolf_id,
             np.arange(world.next_id, world.next_id + n_wolves_born, dtype=_INT)]
        )
        world.next_id += n_wolves_born

    world.sheep_x, world.sheep_y = sx, sy
    world.sheep_heading, world.sheep_id = headings, sheep_id
    world.wolf_x, world.wolf_y = wx, wy
    world.wolf_heading, world.wolf_energy, world.wolf_id = w_headings, energy, wolf_id
    world.tick = tick
    world.history.append(tick, world.sheep_count, world.wolf_count)

    report = TickReport(
        tick=tick,
        sheep_births=n_sheep_born,
        sheep_deaths=n_eaten,
        wolf_births=n_wolves_born,
        wolf_deaths=n_starved,
        predation_events=n_eaten,
    )
    assert world.sheep_count == n_sheep0 + n_sheep_born - n_eaten
    assert world.wolf_count == n_wolves0 + n_wolves_born - n_starved
    return world, report


def run_single(config: SimConfig, trajectory_every: int = 100) -> RunOutcome:
    """One full seeded run: init, step to absorption or the horizon.

    ``trajectory_every`` sets the down-sampling interval of the population
    trajectory kept on the outcome (first and last ticks always included).
    """
    world = init_world(config)
    outcome = classify(world, config)
    while outcome is None:
        step(world, config)
        outcome = classify(world, config)
    return RunOutcome(
        outcome=outcome,
        final_sheep=world.sheep_count,
        final_wolves=world.wolf_count,
        absorption_tick=world.tick,
        seed=config.seed,
        trajectory_summary=tuple(world.history.downsampled(trajectory_every)),
    )
