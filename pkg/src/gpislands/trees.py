"""Typed program trees: the genome representation for the evolution engine.

Every node pairs a :class:`NodeKind` (a named, sorted primitive) with a tuple
of already-built child trees, so trees are immutable and can share structure
freely between populations and migrating programs.  A :class:`PrimitiveSet`
declares the vocabulary available to a task -- functions, terminals and
per-sort ephemeral constant sources -- and random construction, mutation and
deserialization all validate against it.

The text form of a tree is a parenthesized prefix expression, one pair of
parentheses per node, e.g. ``(add (lat) (const:Number 2.5))``.  Serialization
is canonical: equal trees always produce byte-identical text, and
``deserialize(serialize(t))`` reproduces ``t`` exactly, including constant
payloads at full float precision.
"""

from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Sequence


class ConfigurationError(Exception):
    """A primitive set, strategy or run was configured inconsistently."""


class TreeError(ValueError):
    """Base class for rejected tree text (parse or validation failures)."""


class TreeParseError(TreeError):
    """The text is not a well-formed parenthesized prefix expression."""


class TreeValidationError(TreeError):
    """The tree is well-formed text but invalid against the primitive set."""


class Sort(enum.Enum):
    """The closed set of value sorts a tree slot can carry."""

    NUMBER = "Number"
    BOOLEAN = "Boolean"
    ACTION = "Action"
    FEED_SCORE = "FeedScore"
    POSITION = "Position"


class Category(enum.Enum):
    FUNCTION = "function"
    TERMINAL = "terminal"
    CONSTANT = "constant"


class Origin(enum.Enum):
    """How an individual entered its population."""

    LOCAL = "local"
    IMMIGRANT = "immigrant"
    RANDOM_INJECTED = "random-injected"
    ELITE_COPY = "elite-copy"


@dataclass(frozen=True)
class NodeKind:
    """A named primitive: its argument sorts, result sort and semantics.

    ``fn`` carries the implementation for functions.  Eager functions receive
    the already-evaluated child values; functions marked ``lazy`` receive one
    zero-argument thunk per child and decide themselves which children run
    (used for conditionals, so untaken branches emit no actions and burn no
    steps).  Terminals and constants have no ``fn``; their values come from
    the environment and the node payload respectively.
    """

    name: str
    argument_sorts: tuple[Sort, ...]
    result_sort: Sort
    category: Category
    fn: Optional[Callable] = None
    lazy: bool = False

    @property
    def arity(self) -> int:
        return len(self.argument_sorts)

    def __post_init__(self) -> None:
        if self.category is Category.FUNCTION:
            if self.arity == 0:
                raise ConfigurationError(f"function kind {self.name!r} needs arguments")
            if self.fn is None:
                raise ConfigurationError(f"function kind {self.name!r} needs an implementation")
        elif self.argument_sorts:
            raise ConfigurationError(f"{self.category.value} kind {self.name!r} must have arity 0")

    def __repr__(self) -> str:  # keep population dumps readable
        return f"NodeKind({self.name!r}, {self.result_sort.value})"


def terminal(name: str, sort: Sort) -> NodeKind:
    return NodeKind(name, (), sort, Category.TERMINAL)


def function(name: str, argument_sorts: Sequence[Sort], result_sort: Sort,
             fn: Callable, lazy: bool = False) -> NodeKind:
    return NodeKind(name, tuple(argument_sorts), result_sort, Category.FUNCTION, fn, lazy)


def _protected_div(a: float, b: float) -> float:
    # Division is total: a zero denominator yields the sentinel 1.0.
    return 1.0 if b == 0 else a / b


def arithmetic_kinds(include_div: bool = False) -> list[NodeKind]:
    """add/sub/mul (and optionally protected div) over Number."""
    two = (Sort.NUMBER, Sort.NUMBER)
    kinds = [
        function("add", two, Sort.NUMBER, lambda a, b: a + b),
        function("sub", two, Sort.NUMBER, lambda a, b: a - b),
        function("mul", two, Sort.NUMBER, lambda a, b: a * b),
    ]
    if include_div:
        kinds.append(function("div", two, Sort.NUMBER, _protected_div))
    return kinds


def if_greater_kind(branch_sort: Sort = Sort.NUMBER) -> NodeKind:
    """``(if_greater a b then else)``: runs only the taken branch."""
    return function(
        "if_greater",
        (Sort.NUMBER, Sort.NUMBER, branch_sort, branch_sort),
        branch_sort,
        lambda a, b, then, other: then() if a() > b() else other(),
        lazy=True,
    )


def sequence_kind() -> NodeKind:
    """``(seq a b)``: evaluates both actions left to right."""
    return function("seq", (Sort.ACTION, Sort.ACTION), Sort.ACTION, lambda a, b: b)


@dataclass(frozen=True)
class ProgramTree:
    """One immutable node; the whole program is the root node."""

    kind: NodeKind
    children: tuple["ProgramTree", ...] = ()
    value: Optional[float] = None

    def __post_init__(self) -> None:
        k = self.kind
        if len(self.children) != k.arity:
            raise TreeValidationError(
                f"{k.name!r} takes {k.arity} children, got {len(self.children)}")
        for child, want in zip(self.children, k.argument_sorts):
            if child.kind.result_sort is not want:
                raise TreeValidationError(
                    f"{k.name!r} expects {want.value}, got "
                    f"{child.kind.result_sort.value} from {child.kind.name!r}")
        if k.category is Category.CONSTANT:
            if self.value is None:
                raise TreeValidationError(f"constant {k.name!r} is missing its payload")
        elif self.value is not None:
            raise TreeValidationError(f"{k.name!r} is not a constant but carries a payload")

    @property
    def sort(self) -> Sort:
        return self.kind.result_sort


def constant_kind_name(sort: Sort) -> str:
    return f"const:{sort.value}"


@dataclass
class PrimitiveSet:
    """The vocabulary a task exposes to evolution.

    ``constant_sources`` maps a sort to a callable drawing a fresh ephemeral
    constant from an rng; each entry synthesizes a ``const:<Sort>`` kind that
    participates in generation like any other terminal but freezes the drawn
    value into the node.
    """

    kinds: Sequence[NodeKind]
    root_sort: Sort
    constant_sources: Mapping[Sort, Callable[[random.Random], float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        all_kinds = list(self.kinds)
        for sort in self.constant_sources:
            all_kinds.append(NodeKind(constant_kind_name(sort), (), sort, Category.CONSTANT))
        self._all: tuple[NodeKind, ...] = tuple(all_kinds)
        self._by_name: dict[str, NodeKind] = {}
        for kind in self._all:
            if kind.name in self._by_name:
                raise ConfigurationError(f"duplicate kind name {kind.name!r}")
            self._by_name[kind.name] = kind
        self._leaves: dict[Sort, list[NodeKind]] = {}
        self._functions: dict[Sort, list[NodeKind]] = {}
        for kind in self._all:
            bucket = self._functions if kind.category is Category.FUNCTION else self._leaves
            bucket.setdefault(kind.result_sort, []).append(kind)

    @property
    def all_kinds(self) -> tuple[NodeKind, ...]:
        return self._all

    def kind(self, name: str) -> Optional[NodeKind]:
        return self._by_name.get(name)

    def leaves_for(self, sort: Sort) -> list[NodeKind]:
        """Arity-0 kinds (terminals and constants) producing ``sort``."""
        return self._leaves.get(sort, [])

    def functions_for(self, sort: Sort) -> list[NodeKind]:
        return self._functions.get(sort, [])

    def reachable_sorts(self) -> set[Sort]:
        seen = {self.root_sort}
        frontier = [self.root_sort]
        while frontier:
            sort = frontier.pop()
            for kind in self._all:
                if kind.result_sort is sort:
                    for arg in kind.argument_sorts:
                        if arg not in seen:
                            seen.add(arg)
                            frontier.append(arg)
        return seen

    def ensure_generable(self) -> None:
        """Every sort reachable from the root must offer at least one leaf."""
        for sort in self.reachable_sorts():
            if not self.leaves_for(sort):
                raise ConfigurationError(
                    f"no terminal or constant produces sort {sort.value!r}")

    def draw_constant(self, sort: Sort, rng: random.Random) -> float:
        return float(self.constant_sources[sort](rng))


# ---------------------------------------------------------------------------
# tree measurements and traversal

def tree_size(tree: ProgramTree) -> int:
    return 1 + sum(tree_size(c) for c in tree.children)


def tree_depth(tree: ProgramTree) -> int:
    """Depth in nodes along the longest path; a lone terminal has depth 1."""
    if not tree.children:
        return 1
    return 1 + max(tree_depth(c) for c in tree.children)


def iter_nodes(tree: ProgramTree, depth: int = 1) -> Iterator[tuple[ProgramTree, int]]:
    """Preorder walk yielding ``(node, depth_of_node)``; the root is depth 1."""
    yield tree, depth
    for child in tree.children:
        yield from iter_nodes(child, depth + 1)


def replace_subtree(tree: ProgramTree, index: int, replacement: ProgramTree) -> ProgramTree:
    """Rebuild ``tree`` with the node at preorder position ``index`` swapped out."""
    counter = [0]

    def rebuild(node: ProgramTree) -> ProgramTree:
        here = counter[0]
        if here == index:
            counter[0] += tree_size(node)
            return replacement
        counter[0] += 1
        if not node.children:
            return node
        new_children = tuple(rebuild(c) for c in node.children)
        if all(a is b for a, b in zip(new_children, node.children)):
            return node
        return ProgramTree(node.kind, new_children, node.value)

    if index < 0 or index >= tree_size(tree):
        raise ValueError(f"node index {index} out of range")
    return rebuild(tree)


# ---------------------------------------------------------------------------
# random construction

def grow_subtree(prims: PrimitiveSet, sort: Sort, budget: int, rng: random.Random,
                 function_bias: float = 0.5) -> ProgramTree:
    """Grow-style construction: leaves may appear anywhere, and at a depth
    budget of 1 only leaves are eligible.  ``function_bias`` is the chance of
    picking a function while the budget still allows one."""
    if budget < 1:
        raise ValueError("depth budget must be at least 1")
    leaves = prims.leaves_for(sort)
    functions = prims.functions_for(sort)
    if budget == 1 or not functions:
        if not leaves:
            raise ConfigurationError(f"no terminal or constant produces sort {sort.value!r}")
        kind = leaves[rng.randrange(len(leaves))]
    elif leaves and rng.random() >= function_bias:
        kind = leaves[rng.randrange(len(leaves))]
    else:
        kind = functions[rng.randrange(len(functions))]
    if kind.category is Category.CONSTANT:
        return ProgramTree(kind, (), prims.draw_constant(sort, rng))
    if kind.category is Category.TERMINAL:
        return ProgramTree(kind)
    children = tuple(grow_subtree(prims, arg, budget - 1, rng, function_bias)
                     for arg in kind.argument_sorts)
    return ProgramTree(kind, children)


def build_random_tree(prims: PrimitiveSet, max_depth: int, rng: random.Random,
                      function_bias: float = 0.5) -> ProgramTree:
    """A fresh random program of depth <= ``max_depth`` rooted at the set's root sort."""
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    prims.ensure_generable()
    return grow_subtree(prims, prims.root_sort, max_depth, rng, function_bias)


# ---------------------------------------------------------------------------
# validation

def validate_tree(tree: ProgramTree, prims: PrimitiveSet,
                  max_depth: Optional[int] = None) -> None:
    """Raise :class:`TreeValidationError` unless ``tree`` is well-typed over
    ``prims``, rooted at the set's root sort and within the depth bound."""
    if tree.kind.result_sort is not prims.root_sort:
        raise TreeValidationError(
            f"root produces {tree.kind.result_sort.value}, expected {prims.root_sort.value}")
    for node, _ in iter_nodes(tree):
        registered = prims.kind(node.kind.name)
        if registered is None:
            raise TreeValidationError(f"unknown kind {node.kind.name!r}")
        same_shape = (registered.argument_sorts == node.kind.argument_sorts
                      and registered.result_sort is node.kind.result_sort
                      and registered.category is node.kind.category)
        if not same_shape:
            raise TreeValidationError(f"kind {node.kind.name!r} does not match the primitive set")
        # child arity/sorts and constant payloads are enforced at construction
    if max_depth is not None and tree_depth(tree) > max_depth:
        raise TreeValidationError(
            f"depth {tree_depth(tree)} exceeds the limit of {max_depth}")


# ---------------------------------------------------------------------------
# canonical text form

def _format_payload(value: float) -> str:
    return repr(float(value))


def serialize(tree: ProgramTree) -> str:
    """Canonical parenthesized prefix text with single-space separators."""
    if tree.kind.category is Category.CONSTANT:
        return f"({tree.kind.name} {_format_payload(tree.value)})"
    if not tree.children:
        return f"({tree.kind.name})"
    inner = " ".join(serialize(c) for c in tree.children)
    return f"({tree.kind.name} {inner})"


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _tokenize(text: str) -> list[str]:
    tokens = _TOKEN.findall(text)
    if "".join(tokens) != "".join(text.split()):
        raise TreeParseError("unexpected characters in tree text")
    return tokens


def deserialize(text: str, prims: PrimitiveSet,
                max_depth: Optional[int] = None) -> ProgramTree:
    """Parse canonical tree text and validate it against ``prims``.

    Raises :class:`TreeParseError` for malformed text and
    :class:`TreeValidationError` for unknown kinds, arity or sort mismatches,
    a wrong root sort, or a tree deeper than ``max_depth``.
    """
    tokens = _tokenize(text)
    pos = [0]

    def take() -> str:
        if pos[0] >= len(tokens):
            raise TreeParseError("unexpected end of tree text")
        tok = tokens[pos[0]]
        pos[0] += 1
        return tok

    def parse_node() -> ProgramTree:
        if take() != "(":
            raise TreeParseError("expected '('")
        name = take()
        if name in ("(", ")"):
            raise TreeParseError("expected a kind name after '('")
        kind = prims.kind(name)
        if kind is None:
            raise TreeValidationError(f"unknown kind {name!r}")
        if kind.category is Category.CONSTANT:
            raw = take()
            if raw in ("(", ")"):
                raise TreeParseError(f"constant {name!r} is missing its payload")
            try:
                value = float(raw)
            except ValueError as exc:
                raise TreeParseError(f"bad constant payload {raw!r}") from exc
            if take() != ")":
                raise TreeParseError(f"constant {name!r} takes exactly one payload")
            return ProgramTree(kind, (), value)
        children = []
        while True:
            if pos[0] >= len(tokens):
                raise TreeParseError("unexpected end of tree text")
            if tokens[pos[0]] == ")":
                pos[0] += 1
                break
            if tokens[pos[0]] != "(":
                raise TreeParseError(f"unexpected token {tokens[pos[0]]!r}")
            children.append(parse_node())
        if len(children) != kind.arity:
            raise TreeValidationError(
                f"{name!r} takes {kind.arity} children, got {len(children)}")
        try:
            return ProgramTree(kind, tuple(children))
        except TreeError:
            raise
    tree = parse_node()
    if pos[0] != len(tokens):
        raise TreeParseError("trailing tokens after the tree")
    validate_tree(tree, prims, max_depth)
    return tree


# ---------------------------------------------------------------------------
# individuals

@dataclass
class Individual:
    """A program plus its bookkeeping inside a population."""

    tree: ProgramTree
    origin: Origin = Origin.LOCAL
    fitness: Optional[float] = None
    size: int = 0
    depth: int = 0

    @classmethod
    def from_tree(cls, tree: ProgramTree, origin: Origin = Origin.LOCAL,
                  fitness: Optional[float] = None) -> "Individual":
        return cls(tree=tree, origin=origin, fitness=fitness,
                   size=tree_size(tree), depth=tree_depth(tree))
