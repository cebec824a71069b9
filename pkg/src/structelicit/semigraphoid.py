"""Reasoning over sets of conditional-independence statements.

Two rules are supported: symmetry, and perfect composition in both
directions.  The closure operation saturates a base set under these rules
(with a statement budget), recording a derivation trace for every derived
statement so suppressed elicitation questions can be audited.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import InvalidPartitionError
from .graphcore import CiStatement

DEFAULT_BUDGET = 10_000

RULE_MEMBER = "member"
RULE_SYMMETRY = "symmetry"
RULE_FORWARD = "composition-forward"
RULE_BACKWARD = "composition-backward"


@dataclass(frozen=True)
class DerivationTrace:
    """How a statement was obtained: the rule and its premises."""

    conclusion: CiStatement
    rule: str
    premises: tuple[CiStatement, ...]


def symmetry(s: CiStatement) -> CiStatement:
    """Swap x and y.  Canonicalization makes the result equal to the input."""
    return s.swapped()


def compose_forward(
    s: CiStatement, split: tuple[Iterable[str], Iterable[str]]
) -> tuple[CiStatement, CiStatement]:
    """Apply perfect composition forwards.

    Given x _||_ (y1, y2) | z and the partition (y1, y2) of s.y, returns
    (x _||_ y1 | z u y2,  x _||_ y2 | z).  Because statements are stored
    canonically the split may partition either side of the pair; symmetry
    licenses treating whichever side it matches as the y of the rule.
    """
    y1, y2 = frozenset(split[0]), frozenset(split[1])
    if not y1 or not y2 or (y1 & y2):
        raise InvalidPartitionError(f"invalid split: {sorted(y1)}, {sorted(y2)}")
    if (y1 | y2) == s.y:
        xs = s.x
    elif (y1 | y2) == s.x:
        xs = s.y
    else:
        raise InvalidPartitionError(
            f"split does not partition either side of {s}: {sorted(y1)}, {sorted(y2)}"
        )
    return (
        CiStatement(xs, y1, s.z | y2),
        CiStatement(xs, y2, s.z),
    )


def compose_backward(s1: CiStatement, s2: CiStatement) -> Optional[CiStatement]:
    """Apply perfect composition backwards, if the pair unifies.

    Looks for an orientation with common x where s1 = x _||_ y | (w u z)
    and s2 = x _||_ z | w; returns x _||_ (y u z) | w, or None when no
    unification exists.
    """
    for x1, y1 in ((s1.x, s1.y), (s1.y, s1.x)):
        for x2, y2 in ((s2.x, s2.y), (s2.y, s2.x)):
            if x1 != x2:
                continue
            # s2.z must be the residual conditioning set w, and the part of
            # s1's conditioning set beyond w must be exactly s2's y.
            if not (s2.z <= s1.z):
                continue
            if s1.z - s2.z != y2:
                continue
            merged = y1 | y2
            if x1 & merged or merged & s2.z:
                continue
            return CiStatement(x1, merged, s2.z)
    return None


@dataclass
class ClosureResult:
    statements: frozenset[CiStatement]
    traces: list[DerivationTrace]
    truncated: bool = False

    def trace_for(self, s: CiStatement) -> Optional[DerivationTrace]:
        for t in self.traces:
            if t.conclusion == s:
                return t
        return None


def _proper_splits(ys: frozenset[str]):
    members = sorted(ys)
    for r in range(1, len(members)):
        for combo in itertools.combinations(members, r):
            y1 = frozenset(combo)
            yield y1, ys - y1


def closure(
    base: Iterable[CiStatement],
    node_universe: Iterable[str] | None = None,
    max_statements: int = DEFAULT_BUDGET,
) -> ClosureResult:
    """Saturate ``base`` under symmetry and both composition directions.

    Deterministic: statements are processed in canonical sorted order, so
    the result (and the first-found trace per statement) is independent of
    input ordering.  Truncates with a flag once ``max_statements`` distinct
    statements have been produced.
    """
    base = sorted(set(base), key=_stmt_key)
    if max_statements < len(base):
        raise ValueError("max_statements smaller than the base set")
    known: set[CiStatement] = set(base)
    traces: list[DerivationTrace] = [
        DerivationTrace(s, RULE_MEMBER, ()) for s in base
    ]
    truncated = False
    frontier = list(base)

    def admit(stmt: CiStatement, rule: str, premises: tuple[CiStatement, ...]) -> bool:
        nonlocal truncated
        if stmt in known:
            return False
        if len(known) >= max_statements:
            truncated = True
            return False
        known.add(stmt)
        traces.append(DerivationTrace(stmt, rule, premises))
        frontier.append(stmt)
        return True

    while frontier and not truncated:
        frontier.sort(key=_stmt_key)
        s = frontier.pop(0)
        # Forward composition over both orientations (symmetry gives the
        # splits of x for free at the canonical level).
        for xs, ys in ((s.x, s.y), (s.y, s.x)):
            if len(ys) < 2:
                continue
            for y1, y2 in _proper_splits(ys):
                first = CiStatement(xs, y1, s.z | y2)
                second = CiStatement(xs, y2, s.z)
                admit(first, RULE_FORWARD, (s,))
                admit(second, RULE_FORWARD, (s,))
                if truncated:
                    break
            if truncated:
                break
        if truncated:
            break
        # Backward composition against everything known so far.
        for other in sorted(known, key=_stmt_key):
            for a, b in ((s, other), (other, s)):
                merged = compose_backward(a, b)
                if merged is not None:
                    admit(merged, RULE_BACKWARD, (a, b))
            if truncated:
                break

    return ClosureResult(frozenset(known), traces, truncated)


def _stmt_key(s: CiStatement):
    return (tuple(sorted(s.x)), tuple(sorted(s.y)), tuple(sorted(s.z)))


IMPLIED = "implied"
NOT_DERIVABLE = "not-derivable"
BUDGET_EXHAUSTED = "budget-exhausted"


@dataclass
class ImplicationResult:
    status: str
    trace: Optional[DerivationTrace] = None

    def __bool__(self):
        return self.status == IMPLIED


def is_implied(
    candidate: CiStatement,
    base: Iterable[CiStatement],
    node_universe: Iterable[str] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> ImplicationResult:
    """Three-valued implication check via closure membership."""
    result = closure(base, node_universe, max_statements=budget)
    if candidate in result.statements:
        return ImplicationResult(IMPLIED, result.trace_for(candidate))
    if result.truncated:
        return ImplicationResult(BUDGET_EXHAUSTED)
    return ImplicationResult(NOT_DERIVABLE)
