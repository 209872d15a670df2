"""Experiment runner: repeated island runs, CSV output, and run comparison.

An :class:`ExperimentConfig` pins one experimental cell -- task, island
count, capacity, breeding strategy, migration policy, landscape and base
seed.  :func:`run_experiment` repeats it for the configured number of
iterations (seeding every island and the transport from the base seed, so
reruns are byte-identical) and yields per-generation statistics rows plus
across-iteration aggregates.

:func:`compare_runs` reduces two result sets to the first generation at
which the across-iteration mean of the best fitness clears a threshold, and
reports the improvement ratio ``1 - treatment / baseline``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import random
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import feed as feed_app
from . import localisation as loc_app
from .evolution import (
    EvolutionStrategy,
    HelperGuard,
    google_reader_strategy,
    island_strategy,
    localisation_strategy,
    strategy_from_dict,
)
from .islands import (
    GenerationStats,
    IslandSpec,
    MigrationMode,
    MigrationPolicy,
    Transport,
    UdpBroadcastTransport,
    run_islands,
)
from .trees import ConfigurationError, PrimitiveSet

DEFAULT_MAX_DEPTH = 3

CSV_COLUMNS = [f.name for f in dataclasses.fields(GenerationStats)]


@dataclass
class ExperimentConfig:
    app: str
    islands: int = 2
    capacity: int = 10
    generations: int = 20
    iterations: int = 15
    interval: int = 5
    rate: float = 0.1
    mode: str = "migrate"
    landscape: str = "homo"
    seed: int | str = 0
    transport: str = "sim"
    loss: float = 0.0
    strategy: str = "auto"
    helper: bool = True
    max_depth: int = DEFAULT_MAX_DEPTH
    app_config: Optional[str] = None
    udp_base_port: int = 47500

    def validate(self) -> None:
        if self.app not in ("feed", "localisation"):
            raise ConfigurationError(f"unknown app {self.app!r}")
        if self.islands < 1:
            raise ConfigurationError("need at least one island")
        if self.capacity < 1 or self.generations < 1 or self.iterations < 1:
            raise ConfigurationError("capacity, generations and iterations must be positive")
        if self.mode not in ("migrate", "random", "none"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.landscape not in ("homo", "hetero"):
            raise ConfigurationError(f"unknown landscape {self.landscape!r}")
        if self.app == "localisation" and self.landscape != "homo":
            raise ConfigurationError(
                "the heterogeneous landscape is defined for the feed app only")
        if self.transport not in ("sim", "udp"):
            raise ConfigurationError(f"unknown transport {self.transport!r}")
        if not 0.0 <= self.loss <= 1.0:
            raise ConfigurationError("loss probability must lie in [0, 1]")
        if self.transport == "udp" and self.loss > 0.0:
            raise ConfigurationError("--loss applies to the simulated transport only")
        if self.max_depth < 1:
            raise ConfigurationError("max_depth must be at least 1")

    def policy(self) -> MigrationPolicy:
        return MigrationPolicy(self.interval, self.rate, MigrationMode(self.mode))


def resolve_strategy(config: ExperimentConfig) -> EvolutionStrategy:
    """Named preset, ``auto`` (pick by task and capacity), or a JSON file."""
    name = config.strategy
    if name == "auto":
        if config.app == "feed" and config.capacity == 5:
            name = "gr"
        elif config.app == "localisation" and config.capacity == 12:
            name = "localisation"
        else:
            name = "island"
    if name == "gr":
        strategy = google_reader_strategy()
    elif name == "localisation":
        strategy = localisation_strategy()
    elif name == "island":
        strategy = island_strategy(config.capacity)
    elif os.path.exists(name):
        with open(name, "r", encoding="utf-8") as handle:
            strategy = strategy_from_dict(json.load(handle))
    else:
        raise ConfigurationError(f"unknown strategy {name!r} (not a preset or a file)")
    if strategy.total() != config.capacity:
        raise ConfigurationError(
            f"strategy produces {strategy.total()} members per generation, "
            f"capacity is {config.capacity}")
    return strategy


@dataclass
class _TaskSetup:
    prims: PrimitiveSet
    function_bias: float
    guard: Optional[HelperGuard]
    make_evaluator: "object"


def _task_setup(config: ExperimentConfig) -> _TaskSetup:
    if config.app == "feed":
        if config.app_config:
            catalog, base_user = feed_app.load_feed_config(config.app_config)
        else:
            catalog, base_user = feed_app.default_catalog(), None

        def make_feed_evaluator(island: int, seed: str):
            if base_user is not None and config.landscape == "homo":
                user = base_user
            else:
                user = feed_app.landscape_user(catalog, config.landscape, island)
            return feed_app.FeedEvaluator(catalog, user, random.Random(f"{seed}:eval"))

        return _TaskSetup(feed_app.feed_primitives(catalog),
                          feed_app.FEED_FUNCTION_BIAS, None, make_feed_evaluator)

    world_config = (loc_app.load_world_config(config.app_config)
                    if config.app_config else loc_app.WorldConfig())
    guard = HelperGuard(loc_app.localisation_helper) if config.helper else None

    def make_loc_evaluator(island: int, seed: str):
        return loc_app.LocalisationEvaluator(world_config, random.Random(f"{seed}:eval"))

    return _TaskSetup(loc_app.localisation_primitives(),
                      loc_app.LOC_FUNCTION_BIAS, guard, make_loc_evaluator)


@dataclass(frozen=True)
class SummaryRow:
    """Across-iteration aggregates for one (generation, island) cell."""

    generation: int
    island: int
    max_fitness_mean: float
    max_fitness_sd: float
    max_fitness_se: float
    mean_fitness_mean: float
    mean_fitness_sd: float
    mean_fitness_se: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[GenerationStats]
    summary: list[SummaryRow]


def _summarize(config: ExperimentConfig, rows: Sequence[GenerationStats]) -> list[SummaryRow]:
    summary = []
    for generation in range(config.generations):
        for island in range(config.islands):
            cell = [r for r in rows if r.generation == generation and r.island == island]
            maxes = np.array([r.max_fitness for r in cell])
            means = np.array([r.mean_fitness for r in cell])
            ddof = 1 if len(cell) > 1 else 0
            summary.append(SummaryRow(
                generation=generation, island=island,
                max_fitness_mean=float(maxes.mean()),
                max_fitness_sd=float(maxes.std(ddof=ddof)),
                max_fitness_se=float(maxes.std(ddof=ddof) / np.sqrt(len(cell))),
                mean_fitness_mean=float(means.mean()),
                mean_fitness_sd=float(means.std(ddof=ddof)),
                mean_fitness_se=float(means.std(ddof=ddof) / np.sqrt(len(cell))),
            ))
    return summary


def _udp_transports(config: ExperimentConfig) -> list[Transport]:
    ports = [config.udp_base_port + k for k in range(config.islands)]
    return [
        UdpBroadcastTransport(
            bind_port=port,
            peers=[("127.0.0.1", other) for other in ports if other != port])
        for port in ports
    ]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every iteration of the configured cell and aggregate the rows."""
    config.validate()
    strategy = resolve_strategy(config)
    setup = _task_setup(config)
    policy = config.policy()
    rows: list[GenerationStats] = []
    for iteration in range(config.iterations):
        specs = []
        for island in range(config.islands):
            seed = f"{config.seed}:it{iteration}:is{island}"
            specs.append(IslandSpec(
                strategy=strategy,
                evaluator=setup.make_evaluator(island, seed),
                seed=seed,
                guard=setup.guard,
            ))
        transports = _udp_transports(config) if config.transport == "udp" else None
        try:
            history = run_islands(
                specs, setup.prims, config.capacity, config.max_depth, policy,
                config.generations, transports=transports,
                transport_seed=f"{config.seed}:it{iteration}",
                loss=config.loss, function_bias=setup.function_bias)
        finally:
            for transport in transports or []:
                transport.close()
        for island_rows in history:
            rows.extend(dataclasses.replace(r, iteration=iteration) for r in island_rows)
    rows.sort(key=lambda r: (r.iteration, r.generation, r.island))
    return ExperimentResult(config, rows, _summarize(config, rows))


# ---------------------------------------------------------------------------
# CSV output

def write_rows_csv(result: ExperimentResult, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow([getattr(row, column) for column in CSV_COLUMNS])


def summary_path_for(path: str) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}_summary{ext or '.csv'}"


def write_summary_csv(result: ExperimentResult, path: str) -> None:
    columns = [f.name for f in dataclasses.fields(SummaryRow)]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in result.summary:
            writer.writerow([getattr(row, column) for column in columns])


# ---------------------------------------------------------------------------
# comparisons

@dataclass(frozen=True)
class ComparisonReport:
    threshold: float
    baseline_generation: Optional[int]
    treatment_generation: Optional[int]
    improvement: Optional[float]


def best_fitness_curve(result: ExperimentResult) -> list[float]:
    """Across-iteration mean of the per-generation best fitness anywhere."""
    curve = []
    for generation in range(result.config.generations):
        per_iteration = []
        for iteration in range(result.config.iterations):
            cell = [r.max_fitness for r in result.rows
                    if r.generation == generation and r.iteration == iteration]
            per_iteration.append(max(cell))
        curve.append(float(np.mean(per_iteration)))
    return curve


def generations_to_threshold(result: ExperimentResult, threshold: float) -> Optional[int]:
    for generation, value in enumerate(best_fitness_curve(result)):
        if value >= threshold:
            return generation
    return None


def compare_runs(baseline: ExperimentResult, treatment: ExperimentResult,
                 threshold: float) -> ComparisonReport:
    """First threshold crossing of each run plus the improvement ratio.

    Identical runs improve by 0; a treatment crossing at generation 4 against
    a baseline crossing at 12 improves by 1 - 4/12.  The ratio is ``None``
    when either run never crosses (or the baseline crosses immediately, which
    leaves nothing to improve on).
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    if (baseline.config.app, baseline.config.capacity) != \
            (treatment.config.app, treatment.config.capacity):
        raise ValueError("compared runs must share the task and capacity")
    base_gen = generations_to_threshold(baseline, threshold)
    treat_gen = generations_to_threshold(treatment, threshold)
    if base_gen is None or treat_gen is None:
        improvement = None
    elif base_gen == treat_gen:
        improvement = 0.0
    elif base_gen == 0:
        improvement = None
    else:
        improvement = 1.0 - treat_gen / base_gen
    return ComparisonReport(threshold, base_gen, treat_gen, improvement)
