"""Generational evolution over typed trees.

A population breeds through a declarative :class:`EvolutionStrategy`: an
ordered list of steps, each binding a named roulette-wheel selector to one of
the four operators (COPY, MUTATION, CROSSOVER, RANDOM) with a count.  Step
counts must sum to the population capacity, so every breed conserves size.

An optional :class:`HelperGuard` screens every newly generated tree; rejected
candidates are rebuilt (with freshly drawn parents) up to a bounded number of
attempts, after which the last candidate is admitted anyway so breeding can
never stall.  Rejections are counted into the generation statistics.
"""

from __future__ import annotations

import enum
import logging
import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .trees import (
    ConfigurationError,
    Individual,
    Origin,
    PrimitiveSet,
    ProgramTree,
    build_random_tree,
    grow_subtree,
    iter_nodes,
    replace_subtree,
    tree_depth,
)

log = logging.getLogger(__name__)

CROSSOVER_RETRIES = 16
DEFAULT_REBUILD_ATTEMPTS = 64

FitnessFn = Callable[[Individual], float]


class Operator(enum.Enum):
    COPY = "COPY"
    MUTATION = "MUTATION"
    CROSSOVER = "CROSSOVER"
    RANDOM = "RANDOM"


@dataclass
class Population:
    members: list[Individual]
    capacity: int
    generation: int = 0
    helper_rejections: int = 0
    guard_fallbacks: int = 0

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ConfigurationError("population capacity must be at least 1")


@dataclass(frozen=True)
class SelectorBinding:
    """A named selector: a roulette wheel over the pool's fitness values.

    ``pool_best`` restricts the wheel to the n fittest members; ``None``
    spins over the whole population.
    """

    name: str
    kind: str = "wheel"
    pool_best: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind != "wheel":
            raise ConfigurationError(f"unknown selector kind {self.kind!r}")
        if self.pool_best is not None and self.pool_best < 1:
            raise ConfigurationError("pool_best must be at least 1")

    def pool(self, pop: Population) -> list[Individual]:
        if self.pool_best is None:
            return list(pop.members)
        return n_best(pop, min(self.pool_best, len(pop.members)))

    def pick(self, pop: Population, rng: random.Random) -> Individual:
        return select_wheel(self.pool(pop), rng)


@dataclass(frozen=True)
class StrategyStep:
    operator: Operator
    count: int
    selector: Optional[str] = None

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ConfigurationError("step count cannot be negative")


@dataclass
class EvolutionStrategy:
    """Ordered breeding steps plus the selector bindings they reference."""

    selectors: dict[str, SelectorBinding]
    steps: list[StrategyStep]

    def __post_init__(self) -> None:
        for step in self.steps:
            if step.operator is Operator.RANDOM:
                continue
            if step.selector is None:
                raise ConfigurationError(f"{step.operator.value} step needs a selector")
            if step.selector not in self.selectors:
                raise ConfigurationError(f"unknown selector {step.selector!r}")

    def total(self) -> int:
        return sum(step.count for step in self.steps)


def strategy_from_dict(data: dict) -> EvolutionStrategy:
    """Build a strategy from its declarative form::

        {"selectors": {"HR": {"kind": "wheel", "pool_best": 3}},
         "steps": [{"operator": "MUTATION", "selector": "HR", "count": 3}, ...]}
    """
    try:
        selectors = {
            name: SelectorBinding(name, spec.get("kind", "wheel"), spec.get("pool_best"))
            for name, spec in data["selectors"].items()
        }
        steps = [
            StrategyStep(Operator(str(step["operator"]).upper()), int(step["count"]),
                         step.get("selector"))
            for step in data["steps"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad strategy config: {exc}") from exc
    return EvolutionStrategy(selectors, steps)


def google_reader_strategy() -> EvolutionStrategy:
    """The five-program feed-ranking setup: one elite copy from a 1-best
    wheel, two mutations and two crossovers from a 3-best wheel."""
    return EvolutionStrategy(
        selectors={
            "HR": SelectorBinding("HR", pool_best=3),
            "Leader": SelectorBinding("Leader", pool_best=1),
        },
        steps=[
            StrategyStep(Operator.COPY, 1, "Leader"),
            StrategyStep(Operator.MUTATION, 2, "HR"),
            StrategyStep(Operator.CROSSOVER, 2, "HR"),
        ],
    )


def localisation_strategy() -> EvolutionStrategy:
    """Twelve programs: elite, four mutations, five crossovers, two random."""
    return EvolutionStrategy(
        selectors={
            "HR": SelectorBinding("HR", pool_best=3),
            "Leader": SelectorBinding("Leader", pool_best=1),
        },
        steps=[
            StrategyStep(Operator.COPY, 1, "Leader"),
            StrategyStep(Operator.MUTATION, 4, "HR"),
            StrategyStep(Operator.CROSSOVER, 5, "HR"),
            StrategyStep(Operator.RANDOM, 2),
        ],
    )


def island_strategy(capacity: int = 10) -> EvolutionStrategy:
    """Collaborative-run setup: elite, three mutations from a 3-best wheel,
    and crossovers over the whole breeding pool for the remainder."""
    if capacity < 5:
        raise ConfigurationError("island strategy needs capacity of at least 5")
    return EvolutionStrategy(
        selectors={
            "HR": SelectorBinding("HR", pool_best=3),
            "Leader": SelectorBinding("Leader", pool_best=1),
            "Pool": SelectorBinding("Pool", pool_best=None),
        },
        steps=[
            StrategyStep(Operator.COPY, 1, "Leader"),
            StrategyStep(Operator.MUTATION, 3, "HR"),
            StrategyStep(Operator.CROSSOVER, capacity - 4, "Pool"),
        ],
    )


@dataclass
class HelperGuard:
    """Task-supplied acceptance predicate applied to every generated tree."""

    predicate: Callable[[ProgramTree], bool]
    max_rebuild_attempts: int = DEFAULT_REBUILD_ATTEMPTS

    def accepts(self, tree: ProgramTree) -> bool:
        return bool(self.predicate(tree))


# ---------------------------------------------------------------------------
# selection

def _need_fitness(members: Sequence[Individual]) -> None:
    for m in members:
        if m.fitness is None:
            raise ValueError("selection over unevaluated members")


def select_wheel(pool: Sequence[Individual], rng: random.Random) -> Individual:
    """Fitness-proportionate draw; a zero-total pool degrades to uniform."""
    if not pool:
        raise ValueError("cannot select from an empty pool")
    _need_fitness(pool)
    total = 0.0
    cumulative = []
    for m in pool:
        total += m.fitness
        cumulative.append(total)
    if total <= 0.0:
        return pool[rng.randrange(len(pool))]
    return pool[bisect_right(cumulative, rng.random() * total)]


def n_best(pop: Population, n: int) -> list[Individual]:
    """The ``n`` fittest members; equal fitness keeps the earlier index first."""
    if n < 0 or n > len(pop.members):
        raise ValueError(f"n_best({n}) over {len(pop.members)} members")
    _need_fitness(pop.members)
    order = sorted(range(len(pop.members)), key=lambda i: (-pop.members[i].fitness, i))
    return [pop.members[i] for i in order[:n]]


# ---------------------------------------------------------------------------
# variation operators

def mutate(tree: ProgramTree, prims: PrimitiveSet, max_depth: int, rng: random.Random,
           function_bias: float = 0.5) -> ProgramTree:
    """Replace one uniformly chosen node with a freshly grown subtree of the
    same sort, sized so the result stays within ``max_depth``."""
    nodes = list(iter_nodes(tree))
    index = rng.randrange(len(nodes))
    node, depth = nodes[index]
    budget = max(1, max_depth - depth + 1)
    replacement = grow_subtree(prims, node.kind.result_sort, budget, rng, function_bias)
    return replace_subtree(tree, index, replacement)


def crossover(a: ProgramTree, b: ProgramTree, max_depth: int,
              rng: random.Random) -> ProgramTree:
    """Graft a sort-compatible subtree of ``b`` onto a copy of ``a``.

    Retries a bounded number of times when the picked pair is incompatible or
    would blow the depth limit; falls back to a copy of ``a`` (trees are
    immutable, so the copy is free).
    """
    a_nodes = list(iter_nodes(a))
    b_nodes = list(iter_nodes(b))
    for _ in range(CROSSOVER_RETRIES):
        index = rng.randrange(len(a_nodes))
        target, depth = a_nodes[index]
        donors = [n for n, _ in b_nodes if n.kind.result_sort is target.kind.result_sort]
        if not donors:
            continue
        donor = donors[rng.randrange(len(donors))]
        if depth - 1 + tree_depth(donor) <= max_depth:
            return replace_subtree(a, index, donor)
    return a


# ---------------------------------------------------------------------------
# breeding and evaluation

def _build_guarded(make: Callable[[], ProgramTree], guard: Optional[HelperGuard],
                   counters: dict) -> ProgramTree:
    if guard is None:
        return make()
    candidate = make()
    for _ in range(guard.max_rebuild_attempts):
        if guard.accepts(candidate):
            return candidate
        counters["rejections"] += 1
        candidate = make()
    counters["fallbacks"] += 1
    return candidate


def initial_population(prims: PrimitiveSet, capacity: int, max_depth: int,
                       rng: random.Random, guard: Optional[HelperGuard] = None,
                       function_bias: float = 0.5) -> Population:
    """Generation 0: ``capacity`` fresh random programs, guard-screened."""
    counters = {"rejections": 0, "fallbacks": 0}
    members = [
        Individual.from_tree(
            _build_guarded(lambda: build_random_tree(prims, max_depth, rng, function_bias),
                           guard, counters))
        for _ in range(capacity)
    ]
    return Population(members, capacity, generation=0,
                      helper_rejections=counters["rejections"],
                      guard_fallbacks=counters["fallbacks"])


def breed_next_generation(pop: Population, strategy: EvolutionStrategy,
                          prims: PrimitiveSet, max_depth: int, rng: random.Random,
                          guard: Optional[HelperGuard] = None,
                          function_bias: float = 0.5) -> Population:
    """Produce the next generation by running the strategy steps in order.

    The source population may be over capacity (appended immigrants take part
    in selection); the new population has exactly ``capacity`` members.
    """
    if strategy.total() != pop.capacity:
        raise ConfigurationError(
            f"strategy produces {strategy.total()} members, capacity is {pop.capacity}")
    _need_fitness(pop.members)
    counters = {"rejections": 0, "fallbacks": 0}
    members: list[Individual] = []
    for step in strategy.steps:
        selector = strategy.selectors.get(step.selector) if step.selector else None
        for _ in range(step.count):
            if step.operator is Operator.COPY:
                src = selector.pick(pop, rng)
                members.append(Individual.from_tree(src.tree, Origin.ELITE_COPY, src.fitness))
            elif step.operator is Operator.RANDOM:
                tree = _build_guarded(
                    lambda: build_random_tree(prims, max_depth, rng, function_bias),
                    guard, counters)
                members.append(Individual.from_tree(tree, Origin.RANDOM_INJECTED))
            elif step.operator is Operator.MUTATION:
                def make_mutant() -> ProgramTree:
                    parent = selector.pick(pop, rng)
                    return mutate(parent.tree, prims, max_depth, rng, function_bias)
                members.append(Individual.from_tree(_build_guarded(make_mutant, guard, counters)))
            else:  # CROSSOVER
                def make_child() -> ProgramTree:
                    first = selector.pick(pop, rng)
                    second = selector.pick(pop, rng)
                    return crossover(first.tree, second.tree, max_depth, rng)
                members.append(Individual.from_tree(_build_guarded(make_child, guard, counters)))
    return Population(members, pop.capacity, generation=pop.generation + 1,
                      helper_rejections=counters["rejections"],
                      guard_fallbacks=counters["fallbacks"])


@dataclass(frozen=True)
class EvalStats:
    max_fitness: float
    mean_fitness: float
    mean_size: float
    mean_depth: float
    helper_rejections: int


def _safe_fitness(evaluator: FitnessFn, member: Individual) -> float:
    try:
        value = float(evaluator(member))
    except Exception:
        log.exception("evaluator failed; assigning fitness 0")
        return 0.0
    if math.isnan(value):
        return 0.0
    return min(1.0, max(0.0, value))


def population_stats(pop: Population) -> EvalStats:
    _need_fitness(pop.members)
    count = len(pop.members)
    return EvalStats(
        max_fitness=max(m.fitness for m in pop.members),
        mean_fitness=sum(m.fitness for m in pop.members) / count,
        mean_size=sum(m.size for m in pop.members) / count,
        mean_depth=sum(m.depth for m in pop.members) / count,
        helper_rejections=pop.helper_rejections,
    )


def evaluate_population(pop: Population, evaluator: FitnessFn) -> EvalStats:
    """Score every member (elite copies are re-scored too) and summarize.

    A failing evaluator zeroes that member's fitness and never aborts the
    generation.
    """
    for member in pop.members:
        member.fitness = _safe_fitness(evaluator, member)
    return population_stats(pop)


def evaluate_new_members(pop: Population, evaluator: FitnessFn) -> int:
    """Score only members that have no fitness yet (late arrivals)."""
    scored = 0
    for member in pop.members:
        if member.fitness is None:
            member.fitness = _safe_fitness(evaluator, member)
            scored += 1
    return scored
