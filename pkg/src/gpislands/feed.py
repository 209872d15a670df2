"""Feed-ranking benchmark: evolve a scoring program for a news-feed screen.

The screen holds ``desired_qty`` items drawn from seven feeds, four tech and
three not.  A program is executed once per feed (its terminals are bound to
that feed's attributes) to produce a score; feeds scoring above zero are
ranked and their unread items fill the screen round-robin, best feed first,
until the screen is full or every positive feed is exhausted.  A synthetic
user then clicks each displayed item with a per-feed probability, and fitness
is the fill ratio times the click-through ratio:

    fitness = min(displayed / desired, 1) * (clicked / displayed)

with fitness 0 when nothing is displayed.  A program killed by the
supervisor displays nothing.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .interpreter import Environment, SupervisorPolicy, execute
from .trees import (
    ConfigurationError,
    Individual,
    PrimitiveSet,
    ProgramTree,
    Sort,
    arithmetic_kinds,
    if_greater_kind,
    terminal,
)

TECH_GROUP = "tech"

#: Per-feed unread items.  Small enough that no single feed can fill the
#: screen on its own, so good programs have to pull in the whole tech group.
DEFAULT_UNREAD = 3
DEFAULT_DESIRED_QTY = 10
DEFAULT_MAX_STEPS = 512
#: How readily the grow builder nests functions when building feed programs.
FEED_FUNCTION_BIAS = 0.75

DEFAULT_FEED_IDS_TECH = ("techcrunch", "techland", "engadget", "digitaltrends")
DEFAULT_FEED_IDS_OTHER = ("visualloop", "breakvideos", "businessgreen")


@dataclass(frozen=True)
class Feed:
    feed_id: str
    group: str
    unread: int

    @property
    def is_tech(self) -> bool:
        return self.group == TECH_GROUP


@dataclass(frozen=True)
class FeedCatalog:
    feeds: tuple[Feed, ...]

    def __post_init__(self) -> None:
        if len({f.feed_id for f in self.feeds}) != len(self.feeds):
            raise ConfigurationError("feed ids must be unique")


def default_catalog(unread: int = DEFAULT_UNREAD) -> FeedCatalog:
    feeds = [Feed(fid, TECH_GROUP, unread) for fid in DEFAULT_FEED_IDS_TECH]
    feeds += [Feed(fid, "other", unread) for fid in DEFAULT_FEED_IDS_OTHER]
    return FeedCatalog(tuple(feeds))


@dataclass(frozen=True)
class UserModel:
    """Click probability per feed id."""

    click_prob: dict[str, float]

    def probability(self, feed_id: str) -> float:
        return self.click_prob.get(feed_id, 0.0)


def homogeneous_user(catalog: FeedCatalog, tech_prob: float = 0.9,
                     other_prob: float = 0.1) -> UserModel:
    """The group-level reader: loves tech feeds, skims the rest."""
    return UserModel({f.feed_id: tech_prob if f.is_tech else other_prob
                      for f in catalog.feeds})


def preference_user(catalog: FeedCatalog, preferred: Sequence[str],
                    liked_prob: float = 0.9, other_prob: float = 0.1) -> UserModel:
    """A reader who clicks a specific set of feeds, whatever their group."""
    wanted = set(preferred)
    unknown = wanted - {f.feed_id for f in catalog.feeds}
    if unknown:
        raise ConfigurationError(f"unknown feeds in preferences: {sorted(unknown)}")
    return UserModel({f.feed_id: liked_prob if f.feed_id in wanted else other_prob
                      for f in catalog.feeds})


#: Per-island reader tastes for the split-landscape experiments.
HETEROGENEOUS_PREFERENCES = (
    ("techcrunch", "engadget"),
    ("breakvideos", "digitaltrends"),
)


def landscape_user(catalog: FeedCatalog, landscape: str, island: int) -> UserModel:
    if landscape == "homo":
        return homogeneous_user(catalog)
    if landscape == "hetero":
        prefs = HETEROGENEOUS_PREFERENCES[island % len(HETEROGENEOUS_PREFERENCES)]
        return preference_user(catalog, prefs)
    raise ConfigurationError(f"unknown landscape {landscape!r}")


def feed_primitives(catalog: FeedCatalog,
                    constant_range: tuple[float, float] = (-10.0, 10.0)) -> PrimitiveSet:
    """Scoring vocabulary: feed attributes, identity tests and arithmetic."""
    kinds = arithmetic_kinds()
    kinds.append(if_greater_kind(Sort.NUMBER))
    kinds.append(terminal("group_is_tech", Sort.NUMBER))
    kinds.append(terminal("unread_count", Sort.NUMBER))
    for feed in catalog.feeds:
        kinds.append(terminal(f"is_{feed.feed_id}", Sort.NUMBER))
    lo, hi = constant_range
    return PrimitiveSet(kinds, Sort.NUMBER,
                        constant_sources={Sort.NUMBER: lambda rng: rng.uniform(lo, hi)})


def _feed_environment(feed: Feed, catalog: FeedCatalog) -> Environment:
    bindings = {
        "group_is_tech": lambda: 1.0 if feed.is_tech else 0.0,
        "unread_count": lambda: float(feed.unread),
    }
    for other in catalog.feeds:
        bindings[f"is_{other.feed_id}"] = (
            lambda match=(other.feed_id == feed.feed_id): 1.0 if match else 0.0)
    return Environment(bindings=bindings)


@dataclass
class FeedReport:
    """What one evaluation put on the screen and what got clicked."""

    desired_qty: int
    scores: dict[str, float] = field(default_factory=dict)
    displayed: list[tuple[str, int]] = field(default_factory=list)
    clicked: list[tuple[str, int]] = field(default_factory=list)

    def displayed_by_group(self, catalog: FeedCatalog) -> dict[str, int]:
        groups = {f.feed_id: f.group for f in catalog.feeds}
        counts = {f.group: 0 for f in catalog.feeds}
        for feed_id, _ in self.displayed:
            counts[groups[feed_id]] += 1
        return counts


def run_feed_program(tree: ProgramTree, catalog: FeedCatalog,
                     desired_qty: int = DEFAULT_DESIRED_QTY,
                     policy: Optional[SupervisorPolicy] = None) -> FeedReport:
    """Score every feed with ``tree`` and fill the screen round-robin.

    Feeds scoring <= 0 contribute nothing.  Ties rank by catalog position.
    If any per-feed run is killed, the whole report is empty.
    """
    policy = policy or SupervisorPolicy(max_steps=DEFAULT_MAX_STEPS)
    report = FeedReport(desired_qty=desired_qty)
    for feed in catalog.feeds:
        outcome = execute(tree, _feed_environment(feed, catalog), policy)
        if outcome.killed:
            return FeedReport(desired_qty=desired_qty)
        report.scores[feed.feed_id] = float(outcome.value)
    order = {f.feed_id: i for i, f in enumerate(catalog.feeds)}
    ranked = [f for f in sorted(
        catalog.feeds,
        key=lambda f: (-report.scores[f.feed_id], order[f.feed_id]))
        if report.scores[f.feed_id] > 0.0]
    cursors = {f.feed_id: 0 for f in ranked}
    while len(report.displayed) < desired_qty:
        progressed = False
        for feed in ranked:
            if len(report.displayed) >= desired_qty:
                break
            if cursors[feed.feed_id] < feed.unread:
                report.displayed.append((feed.feed_id, cursors[feed.feed_id]))
                cursors[feed.feed_id] += 1
                progressed = True
        if not progressed:
            break
    return report


def simulate_clicks(report: FeedReport, user: UserModel, rng: random.Random) -> FeedReport:
    """Bernoulli click per displayed item at the user's per-feed probability."""
    report.clicked = [item for item in report.displayed
                      if rng.random() < user.probability(item[0])]
    return report


def feed_fitness(report: FeedReport) -> float:
    if not report.displayed:
        return 0.0
    count_ratio = min(len(report.displayed) / report.desired_qty, 1.0)
    click_ratio = len(report.clicked) / len(report.displayed)
    return count_ratio * click_ratio


class FeedEvaluator:
    """Fitness callback: one screen fill plus one simulated reading session."""

    def __init__(self, catalog: FeedCatalog, user: UserModel, rng: random.Random,
                 desired_qty: int = DEFAULT_DESIRED_QTY,
                 policy: Optional[SupervisorPolicy] = None) -> None:
        self.catalog = catalog
        self.user = user
        self.rng = rng
        self.desired_qty = desired_qty
        self.policy = policy or SupervisorPolicy(max_steps=DEFAULT_MAX_STEPS)

    def evaluate_report(self, tree: ProgramTree) -> tuple[float, FeedReport]:
        report = run_feed_program(tree, self.catalog, self.desired_qty, self.policy)
        simulate_clicks(report, self.user, self.rng)
        return feed_fitness(report), report

    def __call__(self, member: Individual) -> float:
        fitness, _ = self.evaluate_report(member.tree)
        return fitness


# ---------------------------------------------------------------------------
# config files

def catalog_from_dict(data: dict) -> FeedCatalog:
    try:
        feeds = tuple(Feed(f["id"], f["group"], int(f.get("unread", DEFAULT_UNREAD)))
                      for f in data["feeds"])
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"bad catalog config: {exc}") from exc
    return FeedCatalog(feeds)


def user_from_dict(data: dict, catalog: FeedCatalog) -> UserModel:
    probs = data.get("click_prob")
    if probs is None:
        return homogeneous_user(catalog)
    return UserModel({str(k): float(v) for k, v in probs.items()})


def load_feed_config(path: str) -> tuple[FeedCatalog, UserModel]:
    """Read ``{"feeds": [...], "click_prob": {...}}`` from a JSON file."""
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    catalog = catalog_from_dict(data)
    return catalog, user_from_dict(data, catalog)
