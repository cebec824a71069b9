"""Hierarchical flow graphs of a conserved mass moving through leveled actors.

Actors live on consecutive levels (vendors, sponsors, sites, ...); mass is
carried by root-to-leaf paths, one actor per level.  Node states aggregate
path masses per actor, conservation holds by construction, and the
intervention actions rewrite the graph and reallocate mass exactly
(Fraction arithmetic).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import (
    DisconnectedResultError,
    SpecValidationError,
    UnknownActorError,
)

CONSERVATION_TOL = 1e-9

Actor = tuple[int, int]  # (level, index), 1-based like z(l, j)


class FlowGraph:
    """Leveled actor network with adjacent-level edges."""

    def __init__(
        self,
        levels: Sequence[Sequence[str]],
        edges: Iterable[tuple[Actor, Actor]],
    ):
        if len(levels) < 2:
            raise SpecValidationError("a flow graph needs at least two levels")
        self.levels = [list(lv) for lv in levels]
        all_names = [n for lv in self.levels for n in lv]
        if len(set(all_names)) != len(all_names):
            raise SpecValidationError("actor labels must be unique across the graph")
        self.labels: dict[Actor, str] = {}
        for l, names in enumerate(self.levels, start=1):
            for j, name in enumerate(names, start=1):
                self.labels[(l, j)] = name
        es = set()
        for a, b in edges:
            if a not in self.labels:
                raise UnknownActorError(a)
            if b not in self.labels:
                raise UnknownActorError(b)
            if b[0] != a[0] + 1:
                raise SpecValidationError(f"edge {a}->{b} does not connect consecutive levels")
            es.add((a, b))
        self.edges = frozenset(es)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def actor(self, label: str, level: int | None = None) -> Actor:
        """Look an actor up by label (optionally restricted to a level)."""
        matches = [
            a for a, name in self.labels.items() if name == label and (level is None or a[0] == level)
        ]
        if not matches:
            raise UnknownActorError(label)
        if len(matches) > 1:
            raise UnknownActorError(f"ambiguous label {label!r}: {sorted(matches)}")
        return matches[0]

    def successors(self, a: Actor) -> list[Actor]:
        return sorted(b for x, b in self.edges if x == a)

    def predecessors(self, b: Actor) -> list[Actor]:
        return sorted(a for a, x in self.edges if x == b)

    def validate(self) -> list[str]:
        out = []
        for a in self.labels:
            l = a[0]
            if l < self.depth and not self.successors(a):
                out.append(f"actor {self.labels[a]!r} {a} has no outgoing edge")
            if l > 1 and not self.predecessors(a):
                out.append(f"actor {self.labels[a]!r} {a} has no incoming edge")
        return out


@dataclass(frozen=True)
class PathFlow:
    """A root-to-leaf path (one actor per level) carrying nonnegative mass."""

    path: tuple[Actor, ...]
    mass: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))
        object.__setattr__(self, "mass", Fraction(self.mass))
        if self.mass < 0:
            raise SpecValidationError("path mass must be nonnegative")


def enumerate_paths(g: FlowGraph) -> list[tuple[Actor, ...]]:
    """All root-to-leaf paths, lexicographic by actor indices."""
    out: list[tuple[Actor, ...]] = []

    def walk(a: Actor, acc: list[Actor]):
        if a[0] == g.depth:
            out.append(tuple(acc))
            return
        for b in g.successors(a):
            walk(b, acc + [b])

    for j in range(1, len(g.levels[0]) + 1):
        walk((1, j), [(1, j)])
    out.sort()
    return out


def check_paths(g: FlowGraph, paths: Iterable[PathFlow]) -> None:
    valid = set(enumerate_paths(g))
    for pf in paths:
        if len(pf.path) != g.depth:
            raise SpecValidationError(f"path {pf.path} does not span all levels")
        if pf.path not in valid:
            raise SpecValidationError(f"path {pf.path} is not a path of the graph")


@dataclass
class NodeStateVector:
    """Per-level masses phi(l, j); level totals agree by construction."""

    states: dict[Actor, Fraction]
    t: int = 0

    def level_total(self, level: int) -> Fraction:
        return sum((m for a, m in self.states.items() if a[0] == level), Fraction(0))

    def levels(self) -> list[int]:
        return sorted({a[0] for a in self.states})


def node_states(g: FlowGraph, paths: Iterable[PathFlow], t: int = 0) -> NodeStateVector:
    """phi(l, j) = total mass of paths whose level-l actor is z(l, j)."""
    states = {a: Fraction(0) for a in g.labels}
    for pf in paths:
        for a in pf.path:
            states[a] += pf.mass
    return NodeStateVector(states, t=t)


@dataclass
class ConservationReport:
    ok: bool
    level_totals: dict[int, float]


def check_conservation(states: NodeStateVector) -> ConservationReport:
    totals = {l: states.level_total(l) for l in states.levels()}
    values = list(totals.values())
    ok = all(abs(float(v - values[0])) <= CONSERVATION_TOL for v in values)
    return ConservationReport(ok, {l: float(v) for l, v in totals.items()})


# ---------------------------------------------------------------------------
# Interventions


@dataclass(frozen=True)
class PartnerSponsor:
    """Move sites under a (more robust) existing sponsor; mass follows the
    site and is supplied via the new sponsor's vendors in proportion to
    their prior shares."""

    sites: tuple[str, ...]
    new_sponsor: str


@dataclass(frozen=True)
class MergeSponsors:
    """Collapse several sponsors into one collective actor."""

    sponsors: tuple[str, ...]
    merged_label: str = ""


@dataclass(frozen=True)
class MergeSites:
    """Consolidate two sites into one."""

    site_a: str
    site_b: str
    merged_label: str = ""


@dataclass(frozen=True)
class ChangeVendor:
    """A sponsor switches all purchasing from one vendor to another."""

    sponsor: str
    old_vendor: str
    new_vendor: str


@dataclass(frozen=True)
class TransferSites:
    """One sponsor hands named sites (and their demand) to another."""

    from_sponsor: str
    to_sponsor: str
    sites: tuple[str, ...]


Action = PartnerSponsor | MergeSponsors | MergeSites | ChangeVendor | TransferSites


@dataclass
class DiffReport:
    action: Action
    edges_added: list[tuple[Actor, Actor]] = field(default_factory=list)
    edges_removed: list[tuple[Actor, Actor]] = field(default_factory=list)
    actors_merged: list[tuple[str, ...]] = field(default_factory=list)
    actors_removed: list[str] = field(default_factory=list)
    mass_changes: list[tuple[tuple[Actor, ...], Fraction, Fraction]] = field(default_factory=list)


def _vendor_shares(g: FlowGraph, paths: list[PathFlow], sponsor: Actor) -> list[tuple[Actor, Fraction]]:
    """Prior share of each vendor in a sponsor's supply (by mass; uniform
    over the sponsor's incoming edges when it carries no mass)."""
    totals: dict[Actor, Fraction] = {}
    for pf in paths:
        if pf.path[sponsor[0] - 1] == sponsor:
            totals[pf.path[sponsor[0] - 2]] = totals.get(pf.path[sponsor[0] - 2], Fraction(0)) + pf.mass
    total = sum(totals.values(), Fraction(0))
    if total > 0:
        return [(v, m / total) for v, m in sorted(totals.items())]
    vendors = g.predecessors(sponsor)
    if not vendors:
        return []
    share = Fraction(1, len(vendors))
    return [(v, share) for v in vendors]


class _Rebuilder:
    """Rebuilds a flow graph and path flows under label-level edits.

    Paths are manipulated as label tuples so that actor reindexing after
    actor removal or merging stays consistent.
    """

    def __init__(self, g: FlowGraph, paths: Iterable[PathFlow]):
        self.g = g
        self.label_paths: dict[tuple[str, ...], Fraction] = {}
        for pf in paths:
            key = tuple(g.labels[a] for a in pf.path)
            self.label_paths[key] = self.label_paths.get(key, Fraction(0)) + pf.mass
        self.label_edges = {(g.labels[a], g.labels[b]) for a, b in g.edges}
        self.level_labels = [list(lv) for lv in g.levels]
        self.renames: dict[str, str] = {}

    def rename(self, old: str, new: str):
        self.renames[old] = new

    def finish(self) -> tuple[FlowGraph, list[PathFlow], list[str]]:
        def r(name):
            return self.renames.get(name, name)

        # Collapse renames in levels (dropping duplicates), edges and paths.
        new_levels: list[list[str]] = []
        for lv in self.level_labels:
            seen: list[str] = []
            for name in lv:
                name = r(name)
                if name is not None and name not in seen:
                    seen.append(name)
            new_levels.append(seen)

        edges = {(r(a), r(b)) for a, b in self.label_edges if r(a) is not None and r(b) is not None}
        merged_paths: dict[tuple[str, ...], Fraction] = {}
        for key, mass in self.label_paths.items():
            nk = tuple(r(x) for x in key)
            if any(x is None for x in nk):
                raise DisconnectedResultError(f"path {key} lost an actor")
            merged_paths[nk] = merged_paths.get(nk, Fraction(0)) + mass
        # Drop actors with no remaining role: a non-final-level actor with
        # no outgoing edge, or a non-first-level actor with no incoming
        # edge, is removed along with its incident edges -- unless it is a
        # site (final level), which must stay supplied.
        removed: list[str] = []
        changed = True
        while changed:
            changed = False
            for l, lv in enumerate(new_levels, start=1):
                for name in list(lv):
                    outgoing = [e for e in edges if e[0] == name and self._level_of(new_levels, e[1]) == l + 1]
                    incoming = [e for e in edges if e[1] == name and self._level_of(new_levels, e[0]) == l - 1]
                    if l == len(new_levels):
                        if not incoming:
                            raise DisconnectedResultError(
                                f"site {name!r} would be left with no supply path"
                            )
                        continue
                    dangling = (not outgoing) or (l > 1 and not incoming)
                    if dangling:
                        if any(name in key for key in merged_paths):
                            raise DisconnectedResultError(
                                f"actor {name!r} still carries mass but is disconnected"
                            )
                        lv.remove(name)
                        edges = {e for e in edges if name not in e}
                        removed.append(name)
                        changed = True

        graph = FlowGraph(
            new_levels,
            [
                (self._actor(new_levels, a), self._actor(new_levels, b))
                for a, b in edges
            ],
        )
        problems = graph.validate()
        if problems:
            raise DisconnectedResultError("; ".join(problems))
        flows = [
            PathFlow(tuple(graph.actor(x, level=i + 1) for i, x in enumerate(key)), mass)
            for key, mass in sorted(merged_paths.items())
        ]
        check_paths(graph, flows)
        return graph, flows, removed

    @staticmethod
    def _level_of(levels: list[list[str]], name: str) -> int:
        for l, lv in enumerate(levels, start=1):
            if name in lv:
                return l
        return -1

    @staticmethod
    def _actor(levels: list[list[str]], name: str) -> Actor:
        for l, lv in enumerate(levels, start=1):
            if name in lv:
                return (l, lv.index(name) + 1)
        raise UnknownActorError(name)


def intervene(
    g: FlowGraph, paths: Sequence[PathFlow], action: Action
) -> tuple[FlowGraph, list[PathFlow], DiffReport]:
    """Apply one intervention; total mass is conserved exactly and the
    result satisfies the flow-graph invariants, or the action is rejected
    atomically."""
    check_paths(g, paths)
    total_before = sum((pf.mass for pf in paths), Fraction(0))
    before_masses = {pf.path: pf.mass for pf in paths}

    if isinstance(action, ChangeVendor):
        new_g, new_paths, removed = _change_vendor(g, paths, action)
    elif isinstance(action, MergeSites):
        new_g, new_paths, removed = _merge_sites(g, paths, action)
    elif isinstance(action, MergeSponsors):
        new_g, new_paths, removed = _merge_sponsors(g, paths, action)
    elif isinstance(action, (PartnerSponsor, TransferSites)):
        new_g, new_paths, removed = _move_sites(g, paths, action)
    else:
        raise SpecValidationError(f"unknown action {action!r}")

    total_after = sum((pf.mass for pf in new_paths), Fraction(0))
    assert total_after == total_before, "mass conservation violated"

    report = DiffReport(action=action, actors_removed=removed)
    old_edges = {(g.labels[a], g.labels[b]) for a, b in g.edges}
    new_edges = {(new_g.labels[a], new_g.labels[b]) for a, b in new_g.edges}
    report.edges_added = sorted(
        (new_g.actor(a), new_g.actor(b)) for a, b in new_edges - old_edges
    )
    report.edges_removed = sorted(
        (g.actor(a), g.actor(b)) for a, b in old_edges - new_edges
    )
    after_masses = {pf.path: pf.mass for pf in new_paths}
    for path in sorted(set(before_masses) | set(after_masses)):
        b = before_masses.get(path, Fraction(0))
        a = after_masses.get(path, Fraction(0))
        if a != b:
            report.mass_changes.append((path, b, a))
    if isinstance(action, MergeSites):
        report.actors_merged = [(action.site_a, action.site_b)]
    if isinstance(action, MergeSponsors):
        report.actors_merged = [tuple(action.sponsors)]
    return new_g, new_paths, report


def _change_vendor(g, paths, action: ChangeVendor):
    sponsor = g.actor(action.sponsor, level=2)
    old_v = g.actor(action.old_vendor, level=1)
    new_v = g.actor(action.new_vendor, level=1)
    if (old_v, sponsor) not in g.edges:
        raise SpecValidationError(f"{action.sponsor!r} does not buy from {action.old_vendor!r}")
    rb = _Rebuilder(g, paths)
    rb.label_edges.discard((action.old_vendor, action.sponsor))
    rb.label_edges.add((action.new_vendor, action.sponsor))
    rerouted: dict[tuple[str, ...], Fraction] = {}
    for key, mass in rb.label_paths.items():
        if key[0] == action.old_vendor and key[1] == action.sponsor:
            nk = (action.new_vendor,) + key[1:]
            rerouted[nk] = rerouted.get(nk, Fraction(0)) + mass
        else:
            rerouted[key] = rerouted.get(key, Fraction(0)) + mass
    rb.label_paths = rerouted
    return rb.finish()


def _merge_sites(g, paths, action: MergeSites):
    a = g.actor(action.site_a, level=g.depth)
    b = g.actor(action.site_b, level=g.depth)
    if a == b:
        raise SpecValidationError("cannot merge a site with itself")
    merged = action.merged_label or f"{action.site_a}+{action.site_b}"
    rb = _Rebuilder(g, paths)
    rb.rename(action.site_a, merged)
    rb.rename(action.site_b, merged)
    return rb.finish()


def _merge_sponsors(g, paths, action: MergeSponsors):
    if len(set(action.sponsors)) < 2:
        raise SpecValidationError("need at least two sponsors to merge")
    for s in action.sponsors:
        g.actor(s, level=2)
    merged = action.merged_label or "+".join(action.sponsors)
    rb = _Rebuilder(g, paths)
    for s in action.sponsors:
        rb.rename(s, merged)
    return rb.finish()


def _move_sites(g, paths, action: PartnerSponsor | TransferSites):
    if isinstance(action, TransferSites):
        from_sponsor = g.actor(action.from_sponsor, level=2)
        to_label = action.to_sponsor
    else:
        from_sponsor = None
        to_label = action.new_sponsor
    to_sponsor = g.actor(to_label, level=2)
    sites = [g.actor(s, level=g.depth) for s in action.sites]
    for s, name in zip(sites, action.sites):
        preds = g.predecessors(s)
        if from_sponsor is not None and from_sponsor not in preds:
            raise SpecValidationError(f"{g.labels[from_sponsor]!r} does not serve {name!r}")
    shares = _vendor_shares(g, list(paths), to_sponsor)
    if not shares:
        raise DisconnectedResultError(f"sponsor {to_label!r} has no supplying vendor")
    site_labels = set(action.sites)
    rb = _Rebuilder(g, paths)
    for name in action.sites:
        rb.label_edges.add((to_label, name))
    rerouted: dict[tuple[str, ...], Fraction] = {}
    for key, mass in rb.label_paths.items():
        vendor, site = key[0], key[-1]
        old_sponsor_label = key[1]
        moves = site in site_labels and (
            from_sponsor is None or old_sponsor_label == g.labels[from_sponsor]
        )
        if not moves or old_sponsor_label == to_label:
            rerouted[key] = rerouted.get(key, Fraction(0)) + mass
            continue
        # Demand follows the site; supply splits over the new sponsor's
        # vendors by their prior shares.
        for v, share in shares:
            nk = (g.labels[v], to_label) + key[2:]
            rerouted[nk] = rerouted.get(nk, Fraction(0)) + mass * share
    rb.label_paths = rerouted
    # Drop edges from old sponsors to the moved sites when no mass remains.
    for name in action.sites:
        for a, b in list(rb.label_edges):
            if b == name and a != to_label:
                still = any(
                    key[-1] == name and key[1] == a and m > 0 for key, m in rerouted.items()
                )
                if not still:
                    rb.label_edges.discard((a, b))
    return rb.finish()
