"""Event trees, staged trees and chain event graphs.

A staged tree is an event tree whose non-leaf vertices are partitioned into
stages; vertices in one stage share outgoing-edge labels and probabilities.
Vertices with identical coloured subtree structure merge into positions,
and all leaves merge into a single sink, giving the chain event graph.
Cuts and fine cuts support separation queries, and pseudo-ancestral views
restrict the graph to an event's consistent paths.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .errors import (
    EmptyEventError,
    InvalidStagingError,
    MalformedQueryError,
    UnknownPositionError,
    UnknownStageError,
)

PROB_TOL = 1e-12
PATH_SUM_TOL = 1e-10

SINK = "w_inf"


@dataclass(frozen=True)
class TreeEdge:
    parent: str
    child: str
    label: str


class EventTree:
    """Rooted tree of unfolding events; outgoing edge labels are distinct
    per vertex."""

    def __init__(self, root: str, edges: Iterable[tuple[str, str, str]]):
        self.root = root
        self.edges = tuple(TreeEdge(*e) for e in edges)
        self._children: dict[str, list[TreeEdge]] = {}
        parents: dict[str, str] = {}
        vertices = {root}
        for e in self.edges:
            vertices.add(e.parent)
            vertices.add(e.child)
            if e.child in parents:
                raise ValueError(f"vertex {e.child!r} has two parents")
            if e.child == root:
                raise ValueError("root cannot have a parent")
            parents[e.child] = e.parent
            siblings = self._children.setdefault(e.parent, [])
            if any(s.label == e.label for s in siblings):
                raise ValueError(f"duplicate outgoing label {e.label!r} at {e.parent!r}")
            siblings.append(e)
        for sibs in self._children.values():
            sibs.sort(key=lambda e: e.label)
        self.vertices = frozenset(vertices)
        # connectivity: every non-root vertex must reach the root via parents
        for v in vertices - {root}:
            seen, cur = set(), v
            while cur != root:
                if cur in seen or cur not in parents:
                    raise ValueError(f"vertex {v!r} not connected to root")
                seen.add(cur)
                cur = parents[cur]
        self._parent = parents

    def children(self, v: str) -> list[TreeEdge]:
        return list(self._children.get(v, []))

    @property
    def leaves(self) -> frozenset[str]:
        return frozenset(v for v in self.vertices if not self._children.get(v))

    @property
    def internal(self) -> frozenset[str]:
        return self.vertices - self.leaves

    def depth(self, v: str) -> int:
        d, cur = 0, v
        while cur != self.root:
            cur = self._parent[cur]
            d += 1
        return d


@dataclass
class StagingViolation:
    stage_index: int
    reason: str


class StagedTree:
    """Event tree plus stage partition and (optional) edge probabilities.

    ``level_variables`` optionally names the event variable at each depth
    (used when rendering cut questions).
    """

    def __init__(
        self,
        tree: EventTree,
        stages: Sequence[Iterable[str]] | None = None,
        probabilities: dict[tuple[str, str], float] | None = None,
        level_variables: Sequence[str] | None = None,
    ):
        self.tree = tree
        if stages is None:
            stages = [[v] for v in sorted(tree.internal)]
        self.stages = tuple(frozenset(s) for s in stages)
        covered = set()
        for s in self.stages:
            if covered & s:
                raise ValueError("stages overlap")
            covered |= s
        if covered != set(tree.internal):
            raise ValueError("stages must partition the non-leaf vertices")
        self.probabilities = dict(probabilities) if probabilities else None
        self.level_variables = tuple(level_variables) if level_variables else None

    def stage_of(self, v: str) -> int:
        for i, s in enumerate(self.stages):
            if v in s:
                return i
        raise UnknownPositionError(v)

    def prob(self, v: str, label: str) -> Optional[float]:
        if self.probabilities is None:
            return None
        return self.probabilities.get((v, label))


def validate_staging(st: StagedTree) -> list[StagingViolation]:
    """Report every stage whose members disagree on out-degree, label set
    or matched-edge probabilities; also flags per-vertex probability sums
    away from one."""
    violations = []
    for i, stage in enumerate(st.stages):
        members = sorted(stage)
        ref = members[0]
        ref_labels = [e.label for e in st.tree.children(ref)]
        for v in members[1:]:
            labels = [e.label for e in st.tree.children(v)]
            if len(labels) != len(ref_labels):
                violations.append(StagingViolation(i, f"{v!r} and {ref!r} differ in out-degree"))
                continue
            if labels != ref_labels:
                violations.append(StagingViolation(i, f"{v!r} and {ref!r} differ in outgoing labels"))
                continue
            if st.probabilities is not None:
                for lab in labels:
                    p, q = st.prob(ref, lab), st.prob(v, lab)
                    if p is None or q is None or abs(p - q) > PROB_TOL:
                        violations.append(
                            StagingViolation(i, f"probability mismatch on label {lab!r}: {p} vs {q}")
                        )
        if st.probabilities is not None:
            for v in members:
                probs = [st.prob(v, e.label) for e in st.tree.children(v)]
                if any(p is None for p in probs):
                    violations.append(StagingViolation(i, f"missing probability at {v!r}"))
                elif abs(sum(probs) - 1.0) > PROB_TOL:
                    violations.append(StagingViolation(i, f"probabilities at {v!r} sum to {sum(probs)}"))
    return violations


@dataclass(frozen=True)
class CegEdge:
    frm: str
    to: str
    label: str
    prob: Optional[float] = None


class Ceg:
    """Chain event graph: merged positions, single root and sink."""

    def __init__(
        self,
        root: str,
        sink: str,
        edges: Iterable[CegEdge | tuple],
        position_map: dict[str, str] | None = None,
        stage_map: dict[str, int] | None = None,
        level_variables: Sequence[str] | None = None,
    ):
        self.root = root
        self.sink = sink
        self.edges = tuple(e if isinstance(e, CegEdge) else CegEdge(*e) for e in edges)
        self.position_map = dict(position_map or {})
        self.stage_map = dict(stage_map or {})
        self.level_variables = tuple(level_variables) if level_variables else None
        positions = {root, sink}
        self._out: dict[str, list[CegEdge]] = {}
        for e in self.edges:
            positions.add(e.frm)
            positions.add(e.to)
            self._out.setdefault(e.frm, []).append(e)
        for es in self._out.values():
            es.sort(key=lambda e: (e.label, e.to))
        self.positions = frozenset(positions)

    def outgoing(self, w: str) -> list[CegEdge]:
        return list(self._out.get(w, []))

    def stage_ids(self) -> frozenset[int]:
        return frozenset(s for s in self.stage_map.values() if s is not None)

    def positions_of_stage(self, stage: int) -> frozenset[str]:
        members = frozenset(w for w, s in self.stage_map.items() if s == stage)
        if not members:
            raise UnknownStageError(stage)
        return members


def to_ceg(st: StagedTree) -> Ceg:
    """Merge the staged tree into its chain event graph.

    Vertices merge when they carry the same stage colour and their children
    merge position-for-position under the (identity) label bijection; all
    leaves merge into the sink.  Root-to-sink paths, labels and probability
    products are preserved exactly.
    """
    violations = validate_staging(st)
    if violations:
        raise InvalidStagingError([v.reason for v in violations])

    keys: dict[str, object] = {}

    def key(v: str):
        if v in keys:
            return keys[v]
        kids = st.tree.children(v)
        if not kids:
            k = "__sink__"
        else:
            k = (st.stage_of(v), tuple((e.label, key(e.child)) for e in kids))
        keys[v] = k
        return k

    for v in st.tree.vertices:
        key(v)

    # Deterministic position ids: breadth-first from the root, children in
    # label order; the sink comes last.
    position_of_key: dict[object, str] = {"__sink__": SINK}
    order = [st.tree.root]
    seen = {st.tree.root}
    i = 0
    counter = 0
    while i < len(order):
        v = order[i]
        i += 1
        k = keys[v]
        if k not in position_of_key:
            position_of_key[k] = f"w{counter}"
            counter += 1
        for e in st.tree.children(v):
            if e.child not in seen:
                seen.add(e.child)
                order.append(e.child)

    position_map = {v: position_of_key[keys[v]] for v in st.tree.vertices}
    stage_map: dict[str, int] = {}
    edges: dict[tuple[str, str, str], Optional[float]] = {}
    for v in sorted(st.tree.internal):
        w = position_map[v]
        stage_map[w] = st.stage_of(v)
        for e in st.tree.children(v):
            edges[(w, position_map[e.child], e.label)] = st.prob(v, e.label)

    ceg_edges = [CegEdge(f, t, l, p) for (f, t, l), p in sorted(edges.items())]
    return Ceg(
        root=position_map[st.tree.root],
        sink=SINK,
        edges=ceg_edges,
        position_map=position_map,
        stage_map=stage_map,
        level_variables=st.level_variables,
    )


@dataclass(frozen=True)
class Path:
    labels: tuple[str, ...]
    prob: Optional[float]
    positions: tuple[str, ...] = ()


def _tree_paths(st: StagedTree) -> list[Path]:
    out = []

    def walk(v, labels, prob, positions):
        kids = st.tree.children(v)
        if not kids:
            out.append(Path(tuple(labels), prob, tuple(positions) + (v,)))
            return
        for e in kids:
            p = st.prob(v, e.label)
            nxt = None if (prob is None or p is None) else prob * p
            walk(e.child, labels + [e.label], nxt, positions + [v])

    walk(st.tree.root, [], 1.0 if st.probabilities is not None else None, [])
    out.sort(key=lambda p: p.labels)
    return out


def _ceg_paths(ceg: Ceg) -> list[Path]:
    out = []

    def walk(w, labels, prob, positions):
        if w == ceg.sink:
            out.append(Path(tuple(labels), prob, tuple(positions) + (w,)))
            return
        for e in ceg.outgoing(w):
            nxt = None if (prob is None or e.prob is None) else prob * e.prob
            walk(e.to, labels + [e.label], nxt, positions + [w])

    walk(ceg.root, [], 1.0, [])
    out.sort(key=lambda p: p.labels)
    return out


def enumerate_paths(model: StagedTree | Ceg) -> list[Path]:
    """All root-to-leaf (or root-to-sink) paths with label sequences and
    probability products, in lexicographic label order."""
    if isinstance(model, StagedTree):
        return _tree_paths(model)
    return _ceg_paths(model)


def _interior_positions(ceg: Ceg) -> frozenset[str]:
    return ceg.positions - {ceg.root, ceg.sink}


def is_fine_cut(ceg: Ceg, w: Iterable[str]) -> bool:
    """True iff every root-to-sink path passes through exactly one member
    of ``w``."""
    w = frozenset(w)
    interior = _interior_positions(ceg)
    for pos in w:
        if pos not in ceg.positions:
            raise UnknownPositionError(pos)
        if pos not in interior:
            raise MalformedQueryError(f"{pos!r} is the root or sink")
    if not w:
        return False
    return all(len(set(p.positions) & w) == 1 for p in _ceg_paths(ceg))


def is_cut(ceg: Ceg, stages: Iterable[int]) -> bool:
    """True iff the union of the stages' member positions is a fine cut."""
    members: set[str] = set()
    for s in stages:
        members |= ceg.positions_of_stage(s)
    return is_fine_cut(ceg, members)


FLAVOUR_FINE_CUT = "fine-cut"
FLAVOUR_CUT = "cut"


@dataclass(frozen=True)
class CutQuery:
    """A separation query: a set of positions (fine cut candidate) or a
    set of stage ids (cut candidate)."""

    members: frozenset
    flavour: str = FLAVOUR_FINE_CUT

    def __post_init__(self):
        if not self.members:
            raise MalformedQueryError("cut query needs at least one member")
        if self.flavour not in (FLAVOUR_FINE_CUT, FLAVOUR_CUT):
            raise MalformedQueryError(f"unknown flavour {self.flavour!r}")


@dataclass
class SeparationResult:
    separated: bool
    flavour: str
    cut_positions: frozenset[str]
    cut_variable: str = ""
    witness: Optional[Path] = None

    def __bool__(self):
        return self.separated


def separated(ceg: Ceg, query: CutQuery) -> SeparationResult:
    """Cut-based separation: upstream history is independent of the
    downstream future given the cut variable, certified when the members
    form a (fine) cut; otherwise a witness path is returned."""
    if query.flavour == FLAVOUR_CUT:
        positions: set[str] = set()
        for s in query.members:
            positions |= ceg.positions_of_stage(s)
        variable = "stage reached among " + ",".join(sorted(map(str, sorted(query.members))))
    else:
        positions = set(query.members)
        for pos in positions:
            if pos not in ceg.positions:
                raise UnknownPositionError(pos)
        variable = "position reached among " + ",".join(sorted(positions))

    interior = _interior_positions(ceg)
    bad = positions - interior
    if bad:
        raise MalformedQueryError(f"root/sink cannot be cut members: {sorted(bad)}")

    for p in _ceg_paths(ceg):
        hits = len(set(p.positions) & positions)
        if hits != 1:
            return SeparationResult(False, query.flavour, frozenset(positions), variable, witness=p)
    return SeparationResult(True, query.flavour, frozenset(positions), variable)


def find_fine_cuts(ceg: Ceg, max_size: int | None = None) -> list[frozenset[str]]:
    """Enumerate all fine cuts (sets of interior positions covering every
    root-to-sink path exactly once)."""
    paths = [tuple(v for v in p.positions if v not in (ceg.root, ceg.sink)) for p in _ceg_paths(ceg)]
    if any(not p for p in paths):
        return []
    found: set[frozenset[str]] = set()

    def extend(i: int, chosen: frozenset[str]):
        if max_size is not None and len(chosen) > max_size:
            return
        if i == len(paths):
            found.add(chosen)
            return
        path = paths[i]
        hits = [v for v in path if v in chosen]
        if len(hits) > 1:
            return
        if len(hits) == 1:
            extend(i + 1, chosen)
            return
        for v in path:
            # v must not touch any already-covered path
            if any(v in paths[j] for j in range(i)):
                continue
            extend(i + 1, chosen | {v})

    extend(0, frozenset())
    return sorted(found, key=lambda s: (len(s), tuple(sorted(s))))


def pseudo_ancestral(ceg: Ceg, event: Callable[[Path], bool]) -> Ceg:
    """Restrict the graph to the paths consistent with ``event``.

    Upstream structure is kept, downstream structure is consolidated by
    merging states with identical futures, the stage colouring is removed
    and path probabilities are renormalized over the retained set.
    """
    retained = [p for p in _ceg_paths(ceg) if event(p)]
    if not retained:
        raise EmptyEventError("event selects no path")
    total = None
    if all(p.prob is not None for p in retained):
        total = sum(p.prob for p in retained)
        if total <= 0:
            raise EmptyEventError("event has zero probability")

    # Prefix tree of retained paths with renormalized masses.
    class Trie:
        __slots__ = ("children", "mass")

        def __init__(self):
            self.children: dict[str, Trie] = {}
            self.mass = 0.0

    root = Trie()
    for p in retained:
        mass = (p.prob / total) if total is not None else 1.0
        node = root
        node.mass += mass
        for lab in p.labels:
            node = node.children.setdefault(lab, Trie())
            node.mass += mass

    # Merge identical futures (uncoloured structural identity).
    keys: dict[int, object] = {}

    def key(node: Trie):
        if id(node) in keys:
            return keys[id(node)]
        if not node.children:
            k = "__sink__"
        else:
            k = tuple(
                (lab, round(child.mass / node.mass, 12) if total is not None else None, key(child))
                for lab, child in sorted(node.children.items())
            )
        keys[id(node)] = k
        return k

    position_of_key: dict[object, str] = {"__sink__": SINK}
    counter = 0
    order = [root]
    while order:
        node = order.pop(0)
        k = key(node)
        if k not in position_of_key:
            position_of_key[k] = f"w{counter}"
            counter += 1
        for lab in sorted(node.children):
            order.append(node.children[lab])

    edges: dict[tuple[str, str, str], Optional[float]] = {}

    def emit(node: Trie):
        w = position_of_key[key(node)]
        for lab, child in sorted(node.children.items()):
            prob = (child.mass / node.mass) if total is not None else None
            edges[(w, position_of_key[key(child)], lab)] = prob
            emit(child)

    emit(root)
    ceg_edges = [CegEdge(f, t, l, p) for (f, t, l), p in sorted(edges.items())]
    return Ceg(
        root=position_of_key[key(root)],
        sink=SINK,
        edges=ceg_edges,
        level_variables=ceg.level_variables,
    )


def event_from_labels(*required: str) -> Callable[[Path], bool]:
    """Event selecting paths whose label sequence contains every given
    label (e.g. {"Regular", "Accepted"})."""
    req = set(required)
    return lambda p: req <= set(p.labels)


def articulation_positions(ceg: Ceg) -> frozenset[str]:
    """Interior positions every root-to-sink path passes through."""
    paths = _ceg_paths(ceg)
    if not paths:
        return frozenset()
    common = set(paths[0].positions)
    for p in paths[1:]:
        common &= set(p.positions)
    return frozenset(common) - {ceg.root, ceg.sink}
