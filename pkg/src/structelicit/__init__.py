"""Structural elicitation engine for graphical models.

Represents, validates and revises Bayesian networks, chain event graphs,
multi-regression dynamic models and hierarchical flow graphs; generates
natural-language irrelevance questions from structure and applies expert
answers as auditable revisions.
"""

from .graphcore import (
    CiStatement,
    Dag,
    Node,
    UndirectedGraph,
    add_edge,
    ancestral_graph,
    d_separated,
    d_separated_by_trails,
    factorization,
    local_markov_statements,
    moralize,
    split_pairwise,
)

__all__ = [
    "CiStatement",
    "Dag",
    "Node",
    "UndirectedGraph",
    "add_edge",
    "ancestral_graph",
    "d_separated",
    "d_separated_by_trails",
    "factorization",
    "local_markov_statements",
    "moralize",
    "split_pairwise",
]

__version__ = "0.1.0"
