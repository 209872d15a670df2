"""The feed-ranking benchmark: screen filling, clicks, fitness, configs."""
import itertools
import json
import random
import statistics

import pytest

from gpislands.feed import (
    DEFAULT_DESIRED_QTY,
    FeedCatalog,
    FeedEvaluator,
    FeedReport,
    HETEROGENEOUS_PREFERENCES,
    default_catalog,
    feed_fitness,
    feed_primitives,
    homogeneous_user,
    landscape_user,
    load_feed_config,
    preference_user,
    run_feed_program,
    simulate_clicks,
)
from gpislands.interpreter import SupervisorPolicy
from gpislands.trees import (
    ConfigurationError,
    Individual,
    ProgramTree,
    Sort,
    build_random_tree,
    constant_kind_name,
)


@pytest.fixture
def catalog():
    return default_catalog()


def program(prims, name):
    return ProgramTree(prims.kind(name))


def const_program(prims, value):
    return ProgramTree(prims.kind(constant_kind_name(Sort.NUMBER)), value=value)


def expected_fitness(report, user):
    """Deterministic expectation: count ratio times mean click probability."""
    if not report.displayed:
        return 0.0
    count_ratio = min(len(report.displayed) / report.desired_qty, 1.0)
    return count_ratio * statistics.mean(user.probability(fid)
                                         for fid, _ in report.displayed)


# ---------------------------------------------------------------------------
# catalog and users

def test_default_catalog_composition(catalog):
    assert len(catalog.feeds) == 7
    groups = [f.group for f in catalog.feeds]
    assert groups.count("tech") == 4 and groups.count("other") == 3
    assert all(f.unread == 3 for f in catalog.feeds)


def test_duplicate_feed_ids_rejected():
    from gpislands.feed import Feed
    with pytest.raises(ConfigurationError):
        FeedCatalog((Feed("a", "tech", 1), Feed("a", "other", 1)))


def test_homogeneous_user_probabilities(catalog):
    user = homogeneous_user(catalog)
    for f in catalog.feeds:
        assert user.probability(f.feed_id) == (0.9 if f.is_tech else 0.1)


def test_preference_user_rejects_unknown_feeds(catalog):
    with pytest.raises(ConfigurationError):
        preference_user(catalog, ["techcrunch", "nosuchfeed"])


def test_heterogeneous_islands_get_disjoint_tastes(catalog):
    lhs = landscape_user(catalog, "hetero", 0)
    rhs = landscape_user(catalog, "hetero", 1)
    lhs_liked = {fid for fid in lhs.click_prob if lhs.probability(fid) > 0.5}
    rhs_liked = {fid for fid in rhs.click_prob if rhs.probability(fid) > 0.5}
    assert lhs_liked == set(HETEROGENEOUS_PREFERENCES[0])
    assert rhs_liked == set(HETEROGENEOUS_PREFERENCES[1])
    assert not lhs_liked & rhs_liked
    with pytest.raises(ConfigurationError):
        landscape_user(catalog, "diagonal", 0)


# ---------------------------------------------------------------------------
# screen filling

def test_uniform_scores_fill_round_robin(catalog, feed_prims):
    report = run_feed_program(const_program(feed_prims, 1.0), catalog)
    assert len(report.displayed) == 10
    first_round = [fid for fid, _ in report.displayed[:7]]
    assert first_round == [f.feed_id for f in catalog.feeds]  # ties by position
    assert [fid for fid, _ in report.displayed[7:]] == first_round[:3]


def test_zero_scores_display_nothing(catalog, feed_prims):
    report = run_feed_program(const_program(feed_prims, 0.0), catalog)
    assert report.displayed == []
    assert feed_fitness(report) == 0.0


def test_negative_scores_are_excluded(catalog, feed_prims):
    report = run_feed_program(program(feed_prims, "group_is_tech"), catalog)
    assert len(report.displayed) == 10
    assert report.displayed_by_group(catalog) == {"tech": 10, "other": 0}


def test_higher_scores_rank_first(catalog, feed_prims):
    # unread_count is constant here, so use a per-feed identity: one feed wins
    report = run_feed_program(program(feed_prims, "is_breakvideos"), catalog)
    assert {fid for fid, _ in report.displayed} == {"breakvideos"}
    assert len(report.displayed) == 3  # supply exhausted below desired qty


def test_killed_run_empties_the_screen(catalog, feed_prims):
    tree = build_random_tree(feed_prims, 3, random.Random(1), function_bias=1.0)
    report = run_feed_program(tree, catalog, policy=SupervisorPolicy(max_steps=1))
    assert report.displayed == []
    assert report.scores == {}


def test_item_indices_are_distinct_per_feed(catalog, feed_prims):
    report = run_feed_program(const_program(feed_prims, 2.0), catalog)
    assert len(set(report.displayed)) == len(report.displayed)


# ---------------------------------------------------------------------------
# clicks and fitness

def test_click_extremes(catalog, feed_prims):
    report = run_feed_program(const_program(feed_prims, 1.0), catalog)
    eager = simulate_clicks(report, preference_user(catalog, [f.feed_id for f in catalog.feeds], 1.0, 1.0), random.Random(0))
    assert eager.clicked == eager.displayed
    report = run_feed_program(const_program(feed_prims, 1.0), catalog)
    bored = simulate_clicks(report, preference_user(catalog, [], 0.9, 0.0), random.Random(0))
    assert bored.clicked == []


def test_click_rate_monte_carlo(catalog, feed_prims):
    user = preference_user(catalog, [f.feed_id for f in catalog.feeds], 0.5, 0.5)
    rng = random.Random(2718)
    tree = const_program(feed_prims, 1.0)
    clicks = []
    for _ in range(10000):
        report = simulate_clicks(run_feed_program(tree, catalog), user, rng)
        clicks.append(len(report.clicked))
    assert abs(statistics.mean(clicks) - 5.0) < 0.15


def make_report(displayed, desired, clicked):
    items = [("feed", i) for i in range(displayed)]
    return FeedReport(desired_qty=desired, displayed=items, clicked=items[:clicked])


@pytest.mark.parametrize("displayed,desired,clicked,expected", [
    (10, 10, 10, 1.0),
    (5, 10, 5, 0.5),
    (12, 10, 6, 0.5),
    (0, 10, 0, 0.0),
])
def test_fitness_tabulated_cases(displayed, desired, clicked, expected):
    assert feed_fitness(make_report(displayed, desired, clicked)) == pytest.approx(
        expected, abs=1e-12)


def test_fitness_bounded_and_count_monotone():
    rng = random.Random(31)
    for _ in range(500):
        displayed = rng.randrange(0, 25)
        clicked = rng.randrange(0, displayed + 1) if displayed else 0
        fit = feed_fitness(make_report(displayed, 10, clicked))
        assert 0.0 <= fit <= 1.0
    # same click fraction, more coverage: count factor never decreases
    for displayed in range(1, 10):
        lo = feed_fitness(make_report(displayed, 10, displayed // 2))
        hi = feed_fitness(make_report(displayed + 1, 10, (displayed + 1) // 2))
        if displayed % 2 == 1:  # matching fractions only
            continue
        assert hi >= lo - 1e-12


def test_evaluator_is_seed_deterministic(catalog, feed_prims):
    tree = build_random_tree(feed_prims, 3, random.Random(5))
    member = Individual.from_tree(tree)
    a = FeedEvaluator(catalog, homogeneous_user(catalog), random.Random("e"))(member)
    b = FeedEvaluator(catalog, homogeneous_user(catalog), random.Random("e"))(member)
    assert a == b
    fitness, report = FeedEvaluator(catalog, homogeneous_user(catalog),
                                    random.Random("e")).evaluate_report(tree)
    assert fitness == feed_fitness(report)


# ---------------------------------------------------------------------------
# the depth-2 exhaustive oracle

def enumerate_depth2(prims, const_values=(-1.0, 0.5, 2.0)):
    leaves = [ProgramTree(k) for k in prims.leaves_for(Sort.NUMBER)
              if k.name != constant_kind_name(Sort.NUMBER)]
    leaves += [const_program(prims, v) for v in const_values]
    yield from leaves
    for kind in prims.functions_for(Sort.NUMBER):
        for combo in itertools.product(leaves, repeat=kind.arity):
            yield ProgramTree(kind, combo)


def test_depth2_brute_force_optimum_is_all_tech(catalog, feed_prims):
    """Exhaustive search over shallow programs: nothing beats a full screen
    of tech items, and the best score is exactly the tech click rate."""
    user = homogeneous_user(catalog)
    best, best_report = -1.0, None
    for tree in enumerate_depth2(feed_prims):
        report = run_feed_program(tree, catalog)
        value = expected_fitness(report, user)
        if value > best:
            best, best_report = value, report
    assert best == pytest.approx(0.9, abs=1e-12)
    assert len(best_report.displayed) >= DEFAULT_DESIRED_QTY
    groups = best_report.displayed_by_group(catalog)
    assert groups["other"] == 0 and groups["tech"] >= 10


# ---------------------------------------------------------------------------
# config files

def test_config_round_trip(tmp_path):
    config = {
        "feeds": [{"id": "alpha", "group": "tech", "unread": 2},
                  {"id": "beta", "group": "news"}],
        "click_prob": {"alpha": 0.8, "beta": 0.2},
    }
    path = tmp_path / "feeds.json"
    path.write_text(json.dumps(config))
    catalog, user = load_feed_config(str(path))
    assert [f.feed_id for f in catalog.feeds] == ["alpha", "beta"]
    assert catalog.feeds[0].unread == 2
    assert catalog.feeds[1].unread == 3  # default fills in
    assert user.probability("alpha") == 0.8
    prims = feed_primitives(catalog)
    assert prims.kind("is_alpha") is not None


def test_config_without_clicks_defaults_to_group_reader(tmp_path):
    path = tmp_path / "feeds.json"
    path.write_text(json.dumps({"feeds": [{"id": "a", "group": "tech"}]}))
    _, user = load_feed_config(str(path))
    assert user.probability("a") == 0.9


def test_bad_config_raises(tmp_path):
    path = tmp_path / "feeds.json"
    path.write_text(json.dumps({"feeds": [{"group": "tech"}]}))
    with pytest.raises(ConfigurationError):
        load_feed_config(str(path))
