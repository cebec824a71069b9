"""Built-in example models from the food-insecurity case studies."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .ceg import EventTree, StagedTree
from .flowgraph import FlowGraph, PathFlow
from .graphcore import Dag, Node
from .mdm import MdmNodeSpec, MdmSpec


def food_insecurity_dag() -> Dag:
    """Neighbourhood food-insecurity drivers: benefits and income drive
    food insecurity, which drives long-term health."""
    nodes = [
        Node("B", "Government benefits", "B"),
        Node("I", "Disposable Income", "I"),
        Node("F", "Food insecurity", "F"),
        Node("H", "Long-term health outcomes", "H"),
    ]
    return Dag(nodes, [("B", "F"), ("I", "F"), ("F", "H")])


def food_insecurity_dag_revised() -> Dag:
    """Post-verification variant: income also determines benefit
    eligibility (edge I -> B)."""
    nodes = [
        Node("B", "Government benefits", "B"),
        Node("I", "Disposable Income", "I"),
        Node("F", "Food insecurity", "F"),
        Node("H", "Long-term health outcomes", "H"),
    ]
    return Dag(nodes, [("B", "F"), ("I", "F"), ("F", "H"), ("I", "B")])


def breakfast_dag(revised: bool = True) -> Dag:
    """School-breakfast effects network over X1..X6.

    With ``revised`` (the default) the absenteeism -> achievement edge
    added during verification is present.
    """
    nodes = [
        Node("X1", "Model of Service", "X1"),
        Node("X2", "Universal", "X2"),
        Node("X3", "Breakfast Participation", "X3"),
        Node("X4", "Scholastic Achievement", "X4"),
        Node("X5", "Absenteeism", "X5"),
        Node("X6", "Disciplinary Referrals", "X6"),
    ]
    edges = [("X1", "X3"), ("X2", "X3"), ("X3", "X4"), ("X3", "X5"), ("X3", "X6")]
    if revised:
        edges.append(("X5", "X4"))
    return Dag(nodes, edges)


# ---------------------------------------------------------------------------
# Benefits application staged tree (SNAP).  The published example's exact
# colouring is not recoverable, so the staging below is chosen to respect
# the stated asymmetries: deciding not to apply terminates, rejected and
# revision-required applications terminate, and only accepted applications
# reach the EBT step.

R, E, M = "Regular", "Elderly", "Immigrant"
APPLY = ["Expedited", "Regular application", "Decides not to apply"]
VERDICT = ["Rejected", "Accepted", "Revision required"]
EBT = ["Card used for transactions", "Transaction errors"]

SNAP_VARIABLES = ("At-risk population", "Decision to apply", "Application verdict", "EBT use")


def snap_staged_tree() -> StagedTree:
    edges = []
    probs: dict[tuple[str, str], float] = {}
    apply_probs = {
        R: [0.2, 0.55, 0.25],
        E: [0.1, 0.35, 0.55],
        M: [0.1, 0.35, 0.55],
    }
    verdict_probs = {"Expedited": [0.15, 0.7, 0.15], "Regular application": [0.2, 0.55, 0.25]}
    ebt_probs = [0.85, 0.15]

    edges.append(("v0", "v_R", R))
    edges.append(("v0", "v_E", E))
    edges.append(("v0", "v_M", M))
    probs[("v0", R)] = 0.6
    probs[("v0", E)] = 0.2
    probs[("v0", M)] = 0.2

    apply_vertices = {}
    verdict_vertices = []
    ebt_vertices = []
    for group, tag in ((R, "R"), (E, "E"), (M, "M")):
        v = f"v_{tag}"
        apply_vertices[group] = v
        for label, p in zip(APPLY, apply_probs[group]):
            child = f"v_{tag}_{label.split()[0]}"
            edges.append((v, child, label))
            probs[(v, label)] = p
            if label == "Decides not to apply":
                continue  # terminates: no further events
            verdict_vertices.append((child, label))
            for vlabel, vp in zip(VERDICT, verdict_probs[label]):
                gchild = f"{child}_{vlabel.split()[0]}"
                edges.append((child, gchild, vlabel))
                probs[(child, vlabel)] = vp
                if vlabel != "Accepted":
                    continue  # only accepted applications reach EBT use
                ebt_vertices.append(gchild)
                for elabel, ep in zip(EBT, ebt_probs):
                    leaf = f"{gchild}_{elabel.split()[0]}"
                    edges.append((gchild, leaf, elabel))
                    probs[(gchild, elabel)] = ep

    tree = EventTree("v0", edges)
    stages = [
        ["v0"],
        [apply_vertices[R]],
        [apply_vertices[E], apply_vertices[M]],  # both at-risk groups under-apply alike
        [v for v, kind in verdict_vertices if kind == "Expedited"],
        [v for v, kind in verdict_vertices if kind == "Regular application"],
        list(ebt_vertices),
    ]
    return StagedTree(tree, stages, probs, level_variables=SNAP_VARIABLES)


SNAP_VARIABLE_PHRASES = {
    "At-risk population": "whether or not they are part of an at-risk population",
    "Decision to apply": "whether or not they apply for expedited benefits",
    "Application verdict": "what the application verdict is",
    "EBT use": "whether or not the EBT card can be used successfully",
}


# ---------------------------------------------------------------------------
# Summer meals MDM: awareness -> transportation -> meal participation.


def summer_meals_mdm(v_a: float = 1.0, v_t: float = 1.0, v_m: float = 1.0) -> MdmSpec:
    """Three-series random-walk MDM; observation variances are supplied by
    the caller (the published description leaves them unspecified)."""
    return MdmSpec(
        [
            MdmNodeSpec("A", (), V=v_a, W=np.eye(1) * 0.05, C0=np.eye(1) * 10.0),
            MdmNodeSpec("T", ("A",), V=v_t, W=np.eye(2) * 0.05, C0=np.eye(2) * 10.0),
            MdmNodeSpec("M", ("T",), V=v_m, W=np.eye(2) * 0.05, C0=np.eye(2) * 10.0),
        ]
    )


def heat_index_node(v_h: float = 1.0) -> MdmNodeSpec:
    return MdmNodeSpec("H", (), V=v_h, W=np.eye(1) * 0.05, C0=np.eye(1) * 10.0)


# ---------------------------------------------------------------------------
# Austin summer-meals flow graph: 2 vendors, 3 sponsors, 7 sites; the edge
# set is exactly the one induced by the nine vendor-sponsor-site paths.

AUSTIN_LEVELS = [
    ["Revolution Foods", "Aramark"],
    ["City Square", "Austin ISD", "Boys and Girls Club"],
    [
        "Apartment complex A",
        "Apartment complex B",
        "Elementary School",
        "Intermediate School",
        "High School",
        "Boys and Girls Club site A",
        "Boys and Girls Club site B",
    ],
]

AUSTIN_PATHS = [
    ((1, 1), (2, 1), (3, 2)),
    ((1, 1), (2, 1), (3, 1)),
    ((1, 1), (2, 3), (3, 6)),
    ((1, 1), (2, 3), (3, 7)),
    ((1, 1), (2, 3), (3, 5)),
    ((1, 1), (2, 3), (3, 4)),
    ((1, 2), (2, 2), (3, 5)),
    ((1, 2), (2, 2), (3, 4)),
    ((1, 2), (2, 2), (3, 3)),
]


def austin_flow_graph() -> FlowGraph:
    edges = set()
    for path in AUSTIN_PATHS:
        edges.add((path[0], path[1]))
        edges.add((path[1], path[2]))
    return FlowGraph(AUSTIN_LEVELS, sorted(edges))


def austin_path_flows(mass_per_path: int | Fraction = 100) -> list[PathFlow]:
    return [PathFlow(p, Fraction(mass_per_path)) for p in sorted(AUSTIN_PATHS)]
