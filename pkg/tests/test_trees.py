"""Typed tree construction, measurement, serialization and validation."""
import random

import pytest

from gpislands.feed import FEED_FUNCTION_BIAS, default_catalog, feed_primitives
from gpislands.trees import (
    Category,
    ConfigurationError,
    Individual,
    NodeKind,
    Origin,
    PrimitiveSet,
    ProgramTree,
    Sort,
    TreeError,
    TreeParseError,
    TreeValidationError,
    arithmetic_kinds,
    build_random_tree,
    constant_kind_name,
    deserialize,
    function,
    iter_nodes,
    replace_subtree,
    serialize,
    terminal,
    tree_depth,
    tree_size,
    validate_tree,
)

GOLDEN = "tests/data/feed_tree_seed42.txt"


def leaf(prims, name):
    return ProgramTree(prims.kind(name))


def const(prims, value, sort=Sort.NUMBER):
    return ProgramTree(prims.kind(constant_kind_name(sort)), value=value)


# ---------------------------------------------------------------------------
# construction and typing

def test_node_kind_arity_and_categories():
    lat = terminal("lat", Sort.NUMBER)
    assert lat.arity == 0 and lat.category is Category.TERMINAL
    add = function("add", (Sort.NUMBER, Sort.NUMBER), Sort.NUMBER, lambda a, b: a + b)
    assert add.arity == 2 and add.category is Category.FUNCTION


def test_function_kind_requires_arguments_and_fn():
    with pytest.raises(ConfigurationError):
        NodeKind("nop", (), Sort.NUMBER, Category.FUNCTION, fn=lambda: 0.0)
    with pytest.raises(ConfigurationError):
        NodeKind("f", (Sort.NUMBER,), Sort.NUMBER, Category.FUNCTION)


def test_tree_rejects_wrong_arity_and_child_sort(geo_prims):
    add = geo_prims.kind("add")
    with pytest.raises(TreeValidationError):
        ProgramTree(add, (leaf(geo_prims, "lat"),))
    bool_leaf = ProgramTree(terminal("flag", Sort.BOOLEAN))
    with pytest.raises(TreeValidationError):
        ProgramTree(add, (leaf(geo_prims, "lat"), bool_leaf))


def test_constant_payload_required(geo_prims):
    kind = geo_prims.kind(constant_kind_name(Sort.NUMBER))
    with pytest.raises(TreeValidationError):
        ProgramTree(kind)  # missing payload
    with pytest.raises(TreeValidationError):
        ProgramTree(geo_prims.kind("lat"), value=1.0)  # payload on a terminal


def test_protected_division_total():
    div = next(k for k in arithmetic_kinds(include_div=True) if k.name == "div")
    assert div.fn(1.0, 0.0) == 1.0
    assert div.fn(6.0, 3.0) == 2.0


def test_duplicate_kind_names_rejected():
    with pytest.raises(ConfigurationError):
        PrimitiveSet([terminal("x", Sort.NUMBER), terminal("x", Sort.NUMBER)],
                     Sort.NUMBER)


def test_ensure_generable_needs_a_leaf_per_reachable_sort():
    prims = PrimitiveSet(arithmetic_kinds(), Sort.NUMBER)
    with pytest.raises(ConfigurationError):
        prims.ensure_generable()


# ---------------------------------------------------------------------------
# measurements

def test_size_and_depth_of_single_leaf(geo_prims):
    t = leaf(geo_prims, "lat")
    assert tree_size(t) == 1
    assert tree_depth(t) == 1


def test_size_and_depth_nested(geo_prims):
    t = ProgramTree(geo_prims.kind("add"), (
        ProgramTree(geo_prims.kind("mul"), (leaf(geo_prims, "lat"),
                                            leaf(geo_prims, "lon"))),
        const(geo_prims, 2.5),
    ))
    assert tree_size(t) == 5
    assert tree_depth(t) == 3


def test_iter_nodes_is_preorder_with_depths(geo_prims):
    t = ProgramTree(geo_prims.kind("add"), (leaf(geo_prims, "lat"),
                                            leaf(geo_prims, "lon")))
    walked = [(node.kind.name, depth) for node, depth in iter_nodes(t)]
    assert walked == [("add", 1), ("lat", 2), ("lon", 2)]


def test_replace_subtree_rebuilds_without_mutating(geo_prims):
    t = ProgramTree(geo_prims.kind("add"), (leaf(geo_prims, "lat"),
                                            leaf(geo_prims, "lon")))
    swapped = replace_subtree(t, 2, const(geo_prims, 7.0))
    assert serialize(t) == "(add (lat) (lon))"
    assert serialize(swapped) == "(add (lat) (const:Number 7.0))"
    whole = replace_subtree(t, 0, leaf(geo_prims, "lat"))
    assert serialize(whole) == "(lat)"
    with pytest.raises(ValueError):
        replace_subtree(t, 3, leaf(geo_prims, "lat"))


# ---------------------------------------------------------------------------
# random generation

def test_build_random_tree_respects_depth_bound(geo_prims):
    rng = random.Random(7)
    for _ in range(500):
        t = build_random_tree(geo_prims, 3, rng)
        assert 1 <= tree_depth(t) <= 3
        validate_tree(t, geo_prims, max_depth=3)


def test_function_bias_extremes(geo_prims):
    rng = random.Random(11)
    for _ in range(50):
        assert tree_depth(build_random_tree(geo_prims, 3, rng, function_bias=0.0)) == 1
        assert tree_depth(build_random_tree(geo_prims, 3, rng, function_bias=1.0)) == 3


def test_constants_are_frozen_at_generation(geo_prims):
    rng = random.Random(3)
    values = set()
    for _ in range(20):
        t = build_random_tree(geo_prims, 2, rng, function_bias=1.0)
        for node, _ in iter_nodes(t):
            if node.kind.category is Category.CONSTANT:
                assert node.value is not None
                values.add(node.value)
    assert len(values) > 1  # ephemeral, not a shared singleton


def test_generation_is_reproducible_golden_file():
    prims = feed_primitives(default_catalog())
    tree = build_random_tree(prims, 3, random.Random(42),
                             function_bias=FEED_FUNCTION_BIAS)
    with open(GOLDEN) as fh:
        assert serialize(tree) == fh.read().strip()


# ---------------------------------------------------------------------------
# serialization

def test_serialize_canonical_example(geo_prims):
    t = ProgramTree(geo_prims.kind("add"), (leaf(geo_prims, "lat"),
                                            const(geo_prims, 2.5)))
    assert serialize(t) == "(add (lat) (const:Number 2.5))"


def test_round_trip_many_random_trees(geo_prims, feed_prims, loc_prims):
    rng = random.Random(1234)
    for prims in (geo_prims, feed_prims, loc_prims):
        for _ in range(400):
            t = build_random_tree(prims, 4, rng)
            again = deserialize(serialize(t), prims)
            assert again == t
            assert serialize(again) == serialize(t)


def test_round_trip_awkward_float_payloads(geo_prims):
    for value in (0.1 + 0.2, 1e-17, -1.561563606294591, 3.0, -0.0):
        t = const(geo_prims, value)
        assert deserialize(serialize(t), geo_prims).value == value


def test_parse_is_whitespace_tolerant(geo_prims):
    t = deserialize("  ( add ( lat )\n (const:Number 2.5) ) ", geo_prims)
    assert serialize(t) == "(add (lat) (const:Number 2.5))"


@pytest.mark.parametrize("text", [
    "",
    "add",
    "(add (lat)",
    "(add (lat) (lon)) (lat)",
    "(const:Number)",
    "(const:Number abc)",
    "(const:Number 1.0 2.0)",
    "(lat extra)",
])
def test_malformed_text_raises_parse_error(geo_prims, text):
    with pytest.raises(TreeParseError):
        deserialize(text, geo_prims)


@pytest.mark.parametrize("text", [
    "(bogus)",
    "(add (lat) (lon) (lat))",
    "(add (lat) (bogus))",
])
def test_unknown_kinds_and_arity_raise_validation_error(geo_prims, text):
    with pytest.raises(TreeValidationError):
        deserialize(text, geo_prims)


def test_deserialize_enforces_max_depth(geo_prims):
    deep = "(add (add (lat) (lon)) (lat))"
    assert deserialize(deep, geo_prims, max_depth=3) is not None
    with pytest.raises(TreeValidationError):
        deserialize(deep, geo_prims, max_depth=2)


def test_wrong_root_sort_rejected(geo_prims, loc_prims):
    with pytest.raises(TreeValidationError):
        deserialize("(lat)", loc_prims)  # unknown kind there
    t = leaf(geo_prims, "lat")
    with pytest.raises(TreeValidationError):
        validate_tree(t, loc_prims)


def test_same_name_different_shape_rejected(geo_prims):
    imposter = ProgramTree(terminal("lat", Sort.BOOLEAN))
    with pytest.raises(TreeValidationError):
        validate_tree(imposter, geo_prims)


def test_error_hierarchy():
    assert issubclass(TreeParseError, TreeError)
    assert issubclass(TreeValidationError, TreeError)
    assert issubclass(TreeError, ValueError)
    assert not issubclass(ConfigurationError, TreeError)


# ---------------------------------------------------------------------------
# individuals

def test_individual_from_tree_measures(geo_prims):
    t = ProgramTree(geo_prims.kind("add"), (leaf(geo_prims, "lat"),
                                            leaf(geo_prims, "lon")))
    ind = Individual.from_tree(t)
    assert ind.origin is Origin.LOCAL
    assert ind.fitness is None
    assert ind.size == 3 and ind.depth == 2
