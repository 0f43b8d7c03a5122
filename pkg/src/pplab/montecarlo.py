"""Batch execution over many seeds and outcome-fraction aggregation.

Run ``i`` of a batch uses ``derive_seed(base_seed, i)``, a SplitMix64
step: the mix function applied to ``base_seed + (i + 1) * GOLDEN_GAMMA``
(all mod 2**64). The gamma is odd, so seeds are injective over run
indices for a fixed base seed, and runs need no coordination.

Aggregation is a pure fold over outcomes in run-index order, so the
reported statistics are byte-identical no matter how many workers ran
the batch or in which order they finished.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .core import OutcomeClass, RunOutcome, SimConfig
from .engine import run_single

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """The SplitMix64 finalizer (Steele, Lea & Flood 2014); a 64-bit bijection."""
    z = (state + _GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Seed for run ``index``; injective in ``index`` for a fixed base."""
    return splitmix64((base_seed + index * _GOLDEN_GAMMA) & _MASK64)


def default_parallelism() -> int:
    """Worker count hint: PPLAB_THREADS if set, else the CPU count."""
    env = os.environ.get("PPLAB_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValueError(f"PPLAB_THREADS must be an integer, got {env!r}") from exc
        if value >= 1:
            return value
        raise ValueError("PPLAB_THREADS must be >= 1")
    return os.cpu_count() or 1


@dataclass
class BatchSpec:
    """A batch: one config run under ``n_runs`` derived seeds."""

    config: SimConfig
    n_runs: int
    base_seed: int = 0
    parallelism: Optional[int] = None  # None -> default_parallelism()
    trajectory_every: int = 100

    def validate(self) -> None:
        self.config.validate()
        if self.n_runs < 1:
            raise ValueError("n_runs must be a positive integer")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must fit in 64 unsigned bits")
        if self.parallelism is not None and self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class BatchStats:
    """Outcome fractions and mean final populations over one batch.

    Fractions sit on integer counts that sum to ``n_runs`` exactly.
    Coexistence means are reported both over all runs and over E3 runs
    only (the paper-style average); E3-only fields are None when no run
    coexisted. ``ci95_*`` are Wilson 95% half-widths for the fractions.
    """

    n_runs: int
    count_e1: int
    count_e2: int
    count_e3: int
    fraction_e1: float
    fraction_e2: float
    fraction_e3: float
    ci95_e1: float
    ci95_e2: float
    ci95_e3: float
    mean_final_sheep: float
    mean_final_wolves: float
    mean_final_sheep_e3: Optional[float]
    mean_final_wolves_e3: Optional[float]
    mean_absorption_e1: Optional[float]
    mean_absorption_e2: Optional[float]
    mean_absorption_e3: Optional[float]

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "fractions": {
                "e1": self.fraction_e1,
                "e2": self.fraction_e2,
                "e3": self.fraction_e3,
            },
            "ci95": {"e1": self.ci95_e1, "e2": self.ci95_e2, "e3": self.ci95_e3},
            "mean_final": {
                "sheep": self.mean_final_sheep,
                "wolves": self.mean_final_wolves,
                "sheep_e3_only": self.mean_final_sheep_e3,
                "wolves_e3_only": self.mean_final_wolves_e3,
            },
            "mean_absorption": {
                "e1": self.mean_absorption_e1,
                "e2": self.mean_absorption_e2,
            },
        }


def wilson_halfwidth(successes: int, n: int, z: float = 1.959963984540054) -> float:
    """Half-width of the Wilson score interval for a binomial fraction."""
    if n == 0:
        return 0.0
    p = successes / n
    denom = 1.0 + z * z / n
    return (z / denom) * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))


def _run_indexed(args: tuple[SimConfig, int, int, int]) -> tuple[int, RunOutcome]:
    config, index, base_seed, trajectory_every = args
    seeded = replace(config, seed=derive_seed(base_seed, index))
    return index, run_single(seeded, trajectory_every=trajectory_every)


def run_outcomes(spec: BatchSpec) -> list[RunOutcome]:
    """All run outcomes of the batch, ordered by run index."""
    spec.validate()
    workers = spec.parallelism if spec.parallelism is not None else default_parallelism()
    payloads = [
        (spec.config, i, spec.base_seed, spec.trajectory_every)
        for i in range(spec.n_runs)
    ]
    results: list[Optional[RunOutcome]] = [None] * spec.n_runs
    if workers == 1 or spec.n_runs == 1:
        for payload in payloads:
            index, outcome = _run_indexed(payload)
            results[index] = outcome
    else:
        chunk = max(1, spec.n_runs // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, outcome in pool.map(_run_indexed, payloads, chunksize=chunk):
                results[index] = outcome
    return results  # type: ignore[return-value]


def aggregate(outcomes: Sequence[RunOutcome]) -> BatchStats:
    """Order-insensitive fold of run outcomes into batch statistics."""
    n = len(outcomes)
    if n == 0:
        raise ValueError("cannot aggregate an empty batch")
    by_class: dict[OutcomeClass, list[RunOutcome]] = {c: [] for c in OutcomeClass}
    for outcome in outcomes:
        by_class[outcome.outcome].append(outcome)
    k1, k2, k3 = (len(by_class[c]) for c in OutcomeClass)

    def mean(values: Sequence[float]) -> Optional[float]:
        return sum(values) / len(values) if values else None

    e3 = by_class[OutcomeClass.E3]
    return BatchStats(
        n_runs=n,
        count_e1=k1,
        count_e2=k2,
        count_e3=k3,
        fraction_e1=k1 / n,
        fraction_e2=k2 / n,
        fraction_e3=k3 / n,
        ci95_e1=wilson_halfwidth(k1, n),
        ci95_e2=wilson_halfwidth(k2, n),
        ci95_e3=wilson_halfwidth(k3, n),
        mean_final_sheep=sum(o.final_sheep for o in outcomes) / n,
        mean_final_wolves=sum(o.final_wolves for o in outcomes) / n,
        mean_final_sheep_e3=mean([o.final_sheep for o in e3]),
        mean_final_wolves_e3=mean([o.final_wolves for o in e3]),
        mean_absorption_e1=mean([o.absorption_tick for o in by_class[OutcomeClass.E1]]),
        mean_absorption_e2=mean([o.absorption_tick for o in by_class[OutcomeClass.E2]]),
        mean_absorption_e3=mean([o.absorption_tick for o in e3]),
    )


def run_batch(spec: BatchSpec) -> BatchStats:
    """Execute the batch and aggregate it."""
    return aggregate(run_outcomes(spec))


def compare_strategies(
    named_specs: Sequence[tuple[str, BatchSpec]]
) -> list[tuple[str, BatchStats]]:
    """One batch per named spec, in order; needs at least two specs."""
    if len(named_specs) < 2:
        raise ValueError("compare_strategies needs at least two specs")
    return [(name, run_batch(spec)) for name, spec in named_specs]


# --- emitters ---------------------------------------------------------------

def batch_json(stats: BatchStats, config: SimConfig) -> str:
    """Batch summary JSON; embeds the fully resolved config first."""
    payload = {"config": config.as_flat_dict()}
    payload.update(stats.to_dict())
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def per_run_csv(outcomes: Sequence[RunOutcome], config: SimConfig) -> str:
    """Per-run log CSV, one row per run index, config echoed in comments."""
    buf = io.StringIO()
    for key, value in config.as_flat_dict().items():
        buf.write(f"# {key} = {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["run_index", "seed", "outcome", "absorption_tick", "final_sheep",
         "final_wolves"]
    )
    for index, o in enumerate(outcomes):
        writer.writerow(
            [index, o.seed, o.outcome.value, o.absorption_tick, o.final_sheep,
             o.final_wolves]
        )
    return buf.getvalue()


def comparison_csv(rows: Sequence[tuple[str, BatchStats]]) -> str:
    """Strategy comparison table mirroring the outcome-fraction summaries."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["name", "n_runs", "fraction_e1", "fraction_e2", "fraction_e3",
         "mean_final_sheep", "mean_final_wolves", "mean_final_sheep_e3",
         "mean_final_wolves_e3"]
    )
    for name, stats in rows:
        writer.writerow(
            [name, stats.n_runs, stats.fraction_e1, stats.fraction_e2,
             stats.fraction_e3, stats.mean_final_sheep, stats.mean_final_wolves,
             stats.mean_final_sheep_e3, stats.mean_final_wolves_e3]
        )
    return buf.getvalue()
