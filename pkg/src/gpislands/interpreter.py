"""Tree execution under a supervising watchdog.

A program runs depth-first against an :class:`Environment` that binds its
terminals to live accessors.  Every node evaluation costs one step from the
supervisor's budget; blowing the budget (or an optional virtual-time bound)
kills the run instead of raising, so any sort-valid tree yields exactly one
of two outcomes: ``COMPLETED`` or ``KILLED``.  Actions emitted before a kill
are kept in the outcome so callers can tell how far the program got.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

from .trees import Category, ConfigurationError, ProgramTree, Sort


class RunStatus(enum.Enum):
    COMPLETED = "completed"
    KILLED = "killed"


@dataclass
class Environment:
    """Terminal bindings plus receivers for a program's side effects.

    ``bindings`` maps terminal names to zero-argument accessors.  When an
    Action-sorted terminal evaluates, its accessor's return value is treated
    as the action descriptor: it is recorded, handed to ``action_sink`` if
    one is set, and the node itself evaluates to ``None``.
    """

    bindings: Mapping[str, Callable[[], Any]] = field(default_factory=dict)
    action_sink: Optional[Callable[[Any], None]] = None
    clock: Optional[Callable[[], float]] = None


@dataclass(frozen=True)
class SupervisorPolicy:
    """Execution bounds: a step budget and an optional virtual-time bound."""

    max_steps: int
    max_virtual_seconds: Optional[float] = None

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be at least 1")
        if self.max_virtual_seconds is not None and self.max_virtual_seconds <= 0:
            raise ConfigurationError("max_virtual_seconds must be positive")


@dataclass
class RunOutcome:
    status: RunStatus
    value: Any
    steps_used: int
    actions: list

    @property
    def killed(self) -> bool:
        return self.status is RunStatus.KILLED


class _Killed(Exception):
    pass


def execute(tree: ProgramTree, env: Environment, policy: SupervisorPolicy) -> RunOutcome:
    """Run ``tree`` under ``policy``; never raises for a sort-valid tree.

    An unbound terminal is a configuration error, not a kill: the tree was
    handed an environment that cannot support it.
    """
    steps = 0
    actions: list = []
    deadline = None
    if policy.max_virtual_seconds is not None and env.clock is not None:
        deadline = env.clock() + policy.max_virtual_seconds

    def ev(node: ProgramTree) -> Any:
        nonlocal steps
        if steps >= policy.max_steps:
            raise _Killed()
        if deadline is not None and env.clock() > deadline:
            raise _Killed()
        steps += 1
        kind = node.kind
        if kind.category is Category.CONSTANT:
            return node.value
        if kind.category is Category.TERMINAL:
            accessor = env.bindings.get(kind.name)
            if accessor is None:
                raise ConfigurationError(f"terminal {kind.name!r} is not bound")
            value = accessor()
            if kind.result_sort is Sort.ACTION:
                actions.append(value)
                if env.action_sink is not None:
                    env.action_sink(value)
                return None
            return value
        if kind.lazy:
            thunks = [(lambda c=c: ev(c)) for c in node.children]
            return kind.fn(*thunks)
        return kind.fn(*[ev(c) for c in node.children])

    try:
        value = ev(tree)
    except _Killed:
        return RunOutcome(RunStatus.KILLED, None, steps, actions)
    return RunOutcome(RunStatus.COMPLETED, value, steps, actions)
