"""Model document format: versioned JSON-shaped payloads per model kind."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from . import ceg as ceg_mod
from . import flowgraph as fg_mod
from . import mdm as mdm_mod
from .ceg import Ceg, CegEdge, EventTree, StagedTree
from .errors import SpecValidationError
from .flowgraph import FlowGraph
from .graphcore import Dag, Node
from .mdm import MdmNodeSpec, MdmSpec

FORMAT_VERSION = 1

KINDS = ("dag", "staged_tree", "ceg", "mdm", "flow_graph")


@dataclass
class ModelDocument:
    kind: str
    payload: dict
    metadata: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @property
    def model(self):
        return parse_model(self.kind, self.payload)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "version": self.version,
            "metadata": dict(self.metadata),
            "payload": self.payload,
        }


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def model_hash(kind: str, payload: dict) -> str:
    return hashlib.sha256(canonical_json({"kind": kind, "payload": payload}).encode()).hexdigest()


def document_for(model) -> ModelDocument:
    kind, payload = payload_of(model)
    return ModelDocument(kind, payload)


def hash_model(model) -> str:
    kind, payload = payload_of(model)
    return model_hash(kind, payload)


# ---------------------------------------------------------------------------
# per-kind encoding


def payload_of(model) -> tuple[str, dict]:
    if isinstance(model, Dag):
        return "dag", {
            "nodes": [
                {"id": n.id, "label": n.label, "symbol": n.symbol} for n in sorted(model.nodes, key=lambda n: n.id)
            ],
            "edges": sorted([a, b] for a, b in model.edges),
        }
    if isinstance(model, StagedTree):
        payload = {
            "root": model.tree.root,
            "edges": [
                {
                    "from": e.parent,
                    "to": e.child,
                    "label": e.label,
                    **({"prob": model.prob(e.parent, e.label)} if model.probabilities else {}),
                }
                for e in sorted(model.tree.edges, key=lambda e: (e.parent, e.label))
            ],
            "stages": [sorted(s) for s in model.stages],
        }
        if model.level_variables:
            payload["variables"] = list(model.level_variables)
        return "staged_tree", payload
    if isinstance(model, Ceg):
        payload = {
            "root": model.root,
            "sink": model.sink,
            "edges": [
                {"from": e.frm, "to": e.to, "label": e.label, "prob": e.prob}
                for e in sorted(model.edges, key=lambda e: (e.frm, e.label, e.to))
            ],
            "position_map": dict(sorted(model.position_map.items())),
            "stage_map": dict(sorted(model.stage_map.items())),
        }
        if model.level_variables:
            payload["variables"] = list(model.level_variables)
        return "ceg", payload
    if isinstance(model, MdmSpec):
        return "mdm", {
            "series": [
                {
                    "name": n.name,
                    "parents": list(n.parents),
                    "G": n.G.tolist(),
                    "W": n.W.tolist(),
                    "V": n.V,
                    "m0": n.m0.tolist(),
                    "C0": n.C0.tolist(),
                }
                for n in model
            ]
        }
    if isinstance(model, FlowGraph):
        return "flow_graph", {
            "levels": [list(lv) for lv in model.levels],
            "edges": sorted([list(a), list(b)] for a, b in model.edges),
        }
    raise SpecValidationError(f"cannot serialize model of type {type(model).__name__}")


def parse_model(kind: str, payload: dict):
    try:
        if kind == "dag":
            nodes = [
                Node(n["id"], n.get("label", ""), n.get("symbol", "")) for n in payload["nodes"]
            ]
            return Dag(nodes, [tuple(e) for e in payload["edges"]])
        if kind == "staged_tree":
            edges = [(e["from"], e["to"], e["label"]) for e in payload["edges"]]
            tree = EventTree(payload["root"], edges)
            probs = None
            if any("prob" in e for e in payload["edges"]):
                probs = {(e["from"], e["label"]): e["prob"] for e in payload["edges"] if "prob" in e}
            return StagedTree(
                tree,
                payload.get("stages"),
                probs,
                level_variables=payload.get("variables"),
            )
        if kind == "ceg":
            return Ceg(
                payload["root"],
                payload["sink"],
                [CegEdge(e["from"], e["to"], e["label"], e.get("prob")) for e in payload["edges"]],
                position_map=payload.get("position_map"),
                stage_map={k: v for k, v in payload.get("stage_map", {}).items()},
                level_variables=payload.get("variables"),
            )
        if kind == "mdm":
            return MdmSpec(
                [
                    MdmNodeSpec(
                        s["name"],
                        tuple(s.get("parents", ())),
                        G=np.array(s["G"]) if "G" in s else None,
                        W=np.array(s["W"]) if "W" in s else None,
                        V=float(s.get("V", 1.0)),
                        m0=np.array(s["m0"]) if "m0" in s else None,
                        C0=np.array(s["C0"]) if "C0" in s else None,
                    )
                    for s in payload["series"]
                ]
            )
        if kind == "flow_graph":
            return FlowGraph(
                payload["levels"],
                [(tuple(a), tuple(b)) for a, b in payload["edges"]],
            )
    except SpecValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecValidationError(f"malformed {kind} payload: {exc}") from exc
    raise SpecValidationError(f"unknown model kind {kind!r}")


def load_document(doc: dict) -> ModelDocument:
    """Validate and wrap a raw document dict; parsing the payload enforces
    the model invariants."""
    if not isinstance(doc, dict):
        raise SpecValidationError("document must be an object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise SpecValidationError(f"unknown kind {kind!r}")
    version = doc.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise SpecValidationError(f"unsupported format version {version!r}")
    payload = doc.get("payload")
    if not isinstance(payload, dict):
        raise SpecValidationError("payload must be an object")
    md = ModelDocument(kind, payload, doc.get("metadata", {}), version)
    md.model  # force invariant validation
    return md


def validate_model(model) -> list[str]:
    """Kind-appropriate invariant report (empty = ok)."""
    if isinstance(model, MdmSpec):
        return mdm_mod.validate(model)
    if isinstance(model, FlowGraph):
        return model.validate()
    if isinstance(model, StagedTree):
        return [v.reason for v in ceg_mod.validate_staging(model)]
    # Dags and Cegs validate on construction.
    return []
