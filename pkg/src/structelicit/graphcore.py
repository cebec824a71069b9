"""Directed acyclic graphs and conditional-independence queries.

Houses the DAG representation used by the elicitation engine, the
moralization / ancestral-graph machinery, two independent d-separation
implementations (one via the moralized ancestral graph, one via exhaustive
trail blocking), local-Markov statement extraction and the joint-density
factorization.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import (
    CycleError,
    DuplicateEdgeError,
    OverlappingSetsError,
    UnknownNodeError,
)

NodeSet = frozenset


@dataclass(frozen=True)
class Node:
    """A model variable: opaque id, display label and short symbol."""

    id: str
    label: str = ""
    symbol: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("node id must be nonempty")
        if not self.label:
            object.__setattr__(self, "label", self.id)
        if not self.symbol:
            object.__setattr__(self, "symbol", self.id)


@dataclass(frozen=True)
class CiStatement:
    """A conditional-independence statement x is independent of y given z.

    Stored canonically: the unordered pair {x, y} is ordered so the
    lexicographically smaller set comes first, making symmetric statements
    compare (and hash) equal.
    """

    x: NodeSet
    y: NodeSet
    z: NodeSet = frozenset()

    def __post_init__(self):
        x, y, z = frozenset(self.x), frozenset(self.y), frozenset(self.z)
        if not x or not y:
            raise ValueError("x and y must be nonempty")
        if x & y or x & z or y & z:
            raise OverlappingSetsError()
        if tuple(sorted(y)) < tuple(sorted(x)):
            x, y = y, x
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    def swapped(self) -> "CiStatement":
        """The symmetric statement; canonically equal to self."""
        return CiStatement(self.y, self.x, self.z)

    def __str__(self):
        def fmt(s):
            return "{" + ",".join(sorted(s)) + "}"

        base = f"{fmt(self.x)} _||_ {fmt(self.y)}"
        return base + (f" | {fmt(self.z)}" if self.z else "")


class UndirectedGraph:
    """Simple undirected graph over node ids."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]] = ()):
        self.nodes = frozenset(nodes)
        es = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at {a!r}")
            if a not in self.nodes or b not in self.nodes:
                raise UnknownNodeError(a if a not in self.nodes else b)
            es.add(frozenset((a, b)))
        self.edges = frozenset(es)

    def neighbours(self, v: str) -> set[str]:
        return {next(iter(e - {v})) for e in self.edges if v in e}

    def remove_nodes(self, drop: Iterable[str]) -> "UndirectedGraph":
        drop = set(drop)
        keep = self.nodes - drop
        edges = [tuple(sorted(e)) for e in self.edges if not (e & drop)]
        return UndirectedGraph(keep, edges)

    def connected(self, a: Iterable[str], b: Iterable[str]) -> bool:
        """True iff some undirected path joins a node of ``a`` to one of ``b``."""
        a, b = set(a) & self.nodes, set(b) & self.nodes
        seen = set(a)
        frontier = list(a)
        while frontier:
            v = frontier.pop()
            if v in b:
                return True
            for w in self.neighbours(v):
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        return bool(a & b)


class Dag:
    """Labeled directed acyclic graph.

    Immutable: all mutating operations return a new Dag.
    """

    def __init__(self, nodes: Iterable[Node | str], edges: Iterable[tuple[str, str]] = ()):
        node_objs = [n if isinstance(n, Node) else Node(n) for n in nodes]
        ids = [n.id for n in node_objs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")
        self._nodes = {n.id: n for n in node_objs}
        es = set()
        for a, b in edges:
            if a not in self._nodes:
                raise UnknownNodeError(a)
            if b not in self._nodes:
                raise UnknownNodeError(b)
            if a == b:
                raise ValueError(f"self-loop at {a!r}")
            if (a, b) in es:
                raise DuplicateEdgeError((a, b))
            es.add((a, b))
        self.edges = frozenset(es)
        self._topo = self._topological_sort()
        if self._topo is None:
            raise CycleError(_find_cycle(set(self._nodes), self.edges))

    # -- basic accessors -------------------------------------------------

    @property
    def node_ids(self) -> frozenset[str]:
        return frozenset(self._nodes)

    @property
    def nodes(self) -> list[Node]:
        return [self._nodes[v] for v in self.topological_order()]

    def node(self, v: str) -> Node:
        try:
            return self._nodes[v]
        except KeyError:
            raise UnknownNodeError(v) from None

    def label(self, v: str) -> str:
        return self.node(v).label

    def parents(self, v: str) -> set[str]:
        self.node(v)
        return {a for a, b in self.edges if b == v}

    def children(self, v: str) -> set[str]:
        self.node(v)
        return {b for a, b in self.edges if a == v}

    def ancestors(self, v: str) -> set[str]:
        """Strict ancestors of v."""
        out, frontier = set(), list(self.parents(v))
        while frontier:
            u = frontier.pop()
            if u not in out:
                out.add(u)
                frontier.extend(self.parents(u))
        return out

    def descendants(self, v: str) -> set[str]:
        """Strict descendants of v."""
        out, frontier = set(), list(self.children(v))
        while frontier:
            u = frontier.pop()
            if u not in out:
                out.add(u)
                frontier.extend(self.children(u))
        return out

    def topological_order(self) -> list[str]:
        """Deterministic topological order (ties broken by label, then id)."""
        return list(self._topo)

    def _topological_sort(self) -> Optional[list[str]]:
        indeg = {v: 0 for v in self._nodes}
        for _, b in self.edges:
            indeg[b] += 1
        order = []
        ready = sorted(
            (v for v, d in indeg.items() if d == 0),
            key=lambda v: (self._nodes[v].label, v),
        )
        while ready:
            v = ready.pop(0)
            order.append(v)
            for w in sorted(self.children(v)):
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
            ready.sort(key=lambda u: (self._nodes[u].label, u))
        return order if len(order) == len(self._nodes) else None

    def __eq__(self, other):
        return (
            isinstance(other, Dag)
            and self._nodes == other._nodes
            and self.edges == other.edges
        )

    def __repr__(self):
        return f"Dag(nodes={sorted(self._nodes)}, edges={sorted(self.edges)})"


def _find_cycle(nodes: set[str], edges: frozenset[tuple[str, str]]) -> list[str]:
    """Return one directed cycle [v0, ..., v0] in a cyclic edge set."""
    children: dict[str, list[str]] = {v: [] for v in nodes}
    for a, b in sorted(edges):
        children[a].append(b)
    colour = dict.fromkeys(nodes, 0)
    stack: list[str] = []

    def visit(v):
        colour[v] = 1
        stack.append(v)
        for w in children[v]:
            if colour[w] == 1:
                return stack[stack.index(w):] + [w]
            if colour[w] == 0:
                found = visit(w)
                if found:
                    return found
        colour[v] = 2
        stack.pop()
        return None

    for v in sorted(nodes):
        if colour[v] == 0:
            found = visit(v)
            if found:
                return found
    raise AssertionError("no cycle found in allegedly cyclic graph")


# ---------------------------------------------------------------------------
# Operations


def add_edge(dag: Dag, frm: str, to: str) -> Dag:
    """Return a new Dag with the edge; raise CycleError (with a witness
    cycle) if the addition would break acyclicity."""
    dag.node(frm)
    dag.node(to)
    if (frm, to) in dag.edges:
        raise DuplicateEdgeError((frm, to))
    if frm == to:
        raise ValueError(f"self-loop at {frm!r}")
    new_edges = set(dag.edges) | {(frm, to)}
    # Cycle iff `frm` is reachable from `to` in the original graph.
    if frm in dag.descendants(to):
        raise CycleError(_find_cycle(set(dag.node_ids), frozenset(new_edges)))
    return Dag(list(dag._nodes.values()), new_edges)


def ancestral_graph(dag: Dag, s: Iterable[str]) -> Dag:
    """Induced subgraph on s and all its (strict) ancestors."""
    s = set(s)
    for v in s:
        dag.node(v)
    keep = set(s)
    for v in s:
        keep |= dag.ancestors(v)
    edges = [(a, b) for a, b in dag.edges if a in keep and b in keep]
    return Dag([dag.node(v) for v in sorted(keep)], edges)


def moralize(dag: Dag) -> UndirectedGraph:
    """Disorient the Dag and marry all co-parents."""
    edges = {tuple(sorted(e)) for e in dag.edges}
    for v in dag.node_ids:
        for a, b in itertools.combinations(sorted(dag.parents(v)), 2):
            edges.add((a, b))
    return UndirectedGraph(dag.node_ids, edges)


def _check_query_sets(dag: Dag, a, b, s):
    a, b, s = frozenset(a), frozenset(b), frozenset(s)
    if not a or not b:
        raise ValueError("a and b must be nonempty")
    if a & b or a & s or b & s:
        raise OverlappingSetsError()
    for v in a | b | s:
        dag.node(v)
    return a, b, s


def d_separated(dag: Dag, a: Iterable[str], b: Iterable[str], s: Iterable[str] = ()) -> bool:
    """Moralized-ancestral-graph d-separation test.

    True iff, in the moralization of the ancestral graph of a|b|s with s
    (and incident edges) deleted, no path connects a to b.
    """
    a, b, s = _check_query_sets(dag, a, b, s)
    anc = ancestral_graph(dag, a | b | s)
    moral = moralize(anc).remove_nodes(s)
    return not moral.connected(a, b)


def d_separated_by_trails(dag: Dag, a: Iterable[str], b: Iterable[str], s: Iterable[str] = ()) -> bool:
    """Independent d-separation oracle: exhaustive trail enumeration.

    A trail is blocked given s if it contains a chain or fork whose middle
    node is in s, or a collider whose middle node has no descendant
    (including itself) in s. d-separated iff every trail from a to b is
    blocked.
    """
    a, b, s = _check_query_sets(dag, a, b, s)
    # Precompute descendant closure for the collider rule.
    desc_in_s = {v: (v in s) or bool(dag.descendants(v) & s) for v in dag.node_ids}
    adj: dict[str, list[tuple[str, bool]]] = {v: [] for v in dag.node_ids}
    for p, c in dag.edges:
        adj[p].append((c, True))   # traverse along the arrow
        adj[c].append((p, False))  # traverse against the arrow

    def open_trail(v: str, came_forward: bool | None, visited: frozenset[str]) -> bool:
        if v in b:
            return True
        for w, forward in adj[v]:
            if w in visited:
                continue
            if came_forward is None:
                blocked = False
            elif came_forward and not forward:
                # v is a collider on the trail (-> v <-)
                blocked = not desc_in_s[v]
            else:
                # chain or fork through v
                blocked = v in s
            if not blocked and open_trail(w, forward, visited | {w}):
                return True
        return False

    for start in sorted(a):
        if open_trail(start, None, frozenset({start})):
            return False
    return True


def local_markov_statements(dag: Dag) -> list[CiStatement]:
    """One statement per node with a qualifying non-descendant set:
    {v} _||_ nondesc(v) \\ pa(v) | pa(v), in topological order."""
    out = []
    for v in dag.topological_order():
        pa = frozenset(dag.parents(v))
        nondesc = dag.node_ids - {v} - frozenset(dag.descendants(v))
        rest = nondesc - pa
        if rest:
            out.append(CiStatement(frozenset({v}), rest, pa))
    return out


def split_pairwise(stmt: CiStatement) -> list[CiStatement]:
    """Expand a grouped statement into singleton-vs-singleton statements
    with the same conditioning set.

    Used to turn compact local-Markov statements into the pairwise
    questions posed to an expert; each output follows from the input by
    forward composition (the decomposition projection), so no information
    is invented.
    """
    out = []
    for xs in sorted(stmt.x):
        for ys in sorted(stmt.y):
            out.append(CiStatement(frozenset({xs}), frozenset({ys}), stmt.z))
    return out


def factorization(dag: Dag) -> list[tuple[str, frozenset[str]]]:
    """Topologically ordered (node, parent-set) pairs of the joint density."""
    return [(v, frozenset(dag.parents(v))) for v in dag.topological_order()]
