"""Session engine: irrelevance questions, expert answers, graph revisions
and the model-class advisor.

Questions are generated from the pairwise split of each local-Markov
statement; a question whose statement is already implied (symmetry or
perfect composition) by earlier emitted or confirmed statements is
suppressed, carrying a derivation trace so the suppression is auditable.
Answers apply as logged revisions whose replay reproduces the model hash.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import semigraphoid
from .ceg import Ceg, CutQuery, separated
from .documents import hash_model
from .errors import (
    CycleError,
    MissingLabelError,
    NotACutError,
    StaleQuestionError,
)
from .flowgraph import FlowGraph
from .graphcore import (
    CiStatement,
    Dag,
    Node,
    add_edge,
    local_markov_statements,
    split_pairwise,
)
from .mdm import MdmSpec
from .semigraphoid import DerivationTrace, ImplicationResult

PENDING = "pending"
ASKED = "asked"
ANSWERED = "answered"
SUPPRESSED = "suppressed"

IRRELEVANT = "irrelevant"
RELEVANT = "relevant"
UNSURE = "unsure"


def question_id(ci: CiStatement) -> str:
    return "q-" + hashlib.sha1(str(ci).encode()).hexdigest()[:10]


@dataclass
class Question:
    id: str
    ci: CiStatement
    text: str
    status: str = PENDING
    suppressed_by: Optional[DerivationTrace] = None


@dataclass
class Answer:
    question_id: str
    verdict: str
    rationale: str = ""
    edge: Optional[tuple[str, str]] = None


def render_question(ci: CiStatement, labels: dict[str, str]) -> str:
    """Natural-language irrelevance question for a canonical statement.

    The second set of the canonical pair fills the "knowing" slot and the
    first set the "about" slot; symmetric statements therefore render
    identically.
    """

    def join(nodes: Iterable[str]) -> str:
        try:
            names = [labels[v] for v in sorted(nodes)]
        except KeyError as exc:
            raise MissingLabelError(exc.args[0]) from None
        if len(names) == 1:
            return names[0]
        return ", ".join(names[:-1]) + " and " + names[-1]

    knowing, about = join(ci.y), join(ci.x)
    if ci.z:
        return (
            f"Assuming we know {join(ci.z)}, does knowing {knowing} "
            f"provide any additional information about {about}?"
        )
    return f"Does knowing {knowing} provide further information about {about}?"


def _statement_order(dag: Dag) -> list[CiStatement]:
    """Pairwise question statements: parent-sparse owners first, then the
    topological order, dropping canonical duplicates."""
    topo = {v: i for i, v in enumerate(dag.topological_order())}
    grouped = local_markov_statements(dag)
    grouped.sort(key=lambda s: (len(s.z), min(topo[v] for v in s.x | s.y)))
    out: list[CiStatement] = []
    seen = set()
    for stmt in grouped:
        for pairwise in split_pairwise(stmt):
            if pairwise not in seen:
                seen.add(pairwise)
                out.append(pairwise)
    return out


def generate_questions(
    dag: Dag,
    confirmed: Iterable[CiStatement] = (),
    budget: int = semigraphoid.DEFAULT_BUDGET,
) -> list[Question]:
    """Ordered question list with semigraphoid deduplication.

    A statement implied by the confirmed statements together with the
    questions already emitted is suppressed with its derivation trace.
    """
    labels = {n.id: n.label for n in dag.nodes}
    emitted: list[CiStatement] = list(confirmed)
    questions: list[Question] = []
    for ci in _statement_order(dag):
        text = render_question(ci, labels)
        result = semigraphoid.is_implied(ci, emitted, dag.node_ids, budget=budget)
        if result.status == semigraphoid.IMPLIED:
            questions.append(Question(question_id(ci), ci, text, SUPPRESSED, result.trace))
        else:
            questions.append(Question(question_id(ci), ci, text))
            emitted.append(ci)
    return questions


# ---------------------------------------------------------------------------
# Sessions


@dataclass
class RevisionEntry:
    seq: int
    operation: str           # e.g. "add_edge"
    detail: dict
    before_hash: str
    after_hash: str


@dataclass
class TranscriptEvent:
    seq: int
    timestamp: float
    event: str               # question-asked | answered | revision | advisory
    payload: dict


@dataclass
class Session:
    """Single-writer elicitation session over one model."""

    session_id: str
    model: Dag | Ceg | MdmSpec | FlowGraph
    initial_model: Dag | Ceg | MdmSpec | FlowGraph
    questions: list[Question] = field(default_factory=list)
    confirmed: list[CiStatement] = field(default_factory=list)
    answers: list[Answer] = field(default_factory=list)
    revisions: list[RevisionEntry] = field(default_factory=list)
    advisories: list[str] = field(default_factory=list)
    parked: list[str] = field(default_factory=list)
    transcript: list[TranscriptEvent] = field(default_factory=list)
    seq: int = 0

    def _record(self, event: str, payload: dict):
        self.seq += 1
        self.transcript.append(TranscriptEvent(self.seq, time.time(), event, payload))

    def model_hash(self) -> str:
        return hash_model(self.model)

    def pending_questions(self) -> list[Question]:
        return [q for q in self.questions if q.status in (PENDING, ASKED)]

    def next_question(self) -> Optional[Question]:
        for q in self.questions:
            if q.status in (PENDING, ASKED):
                if q.status == PENDING:
                    q.status = ASKED
                    self._record("question-asked", {"question_id": q.id, "text": q.text})
                return q
        return None

    def find_question(self, qid: str) -> Question:
        for q in self.questions:
            if q.id == qid:
                return q
        raise StaleQuestionError(f"unknown question {qid!r}")


def start_session(model, session_id: str = "session") -> Session:
    session = Session(session_id=session_id, model=model, initial_model=model)
    session.questions = _questions_for(model, confirmed=[])
    session._record("session-opened", {"model_hash": session.model_hash()})
    return session


def _questions_for(model, confirmed) -> list[Question]:
    dag = structure_dag(model)
    if dag is None:
        return []
    return generate_questions(dag, confirmed=confirmed)


def structure_dag(model) -> Optional[Dag]:
    """The DAG skeleton questions are asked about, if the model has one.

    MDM specs expose their parent structure; flow graphs and CEGs have no
    BN reading, so their sessions carry no DAG questions.
    """
    if isinstance(model, Dag):
        return model
    if isinstance(model, MdmSpec):
        nodes = [Node(n.name) for n in model]
        edges = [(p, n.name) for n in model for p in n.parents]
        return Dag(nodes, edges)
    return None


def apply_answer(session: Session, answer: Answer) -> Session:
    """Apply an expert answer; mutates and returns the session.

    irrelevant: the statement is recorded as confirmed, and any pending
    question it now implies is suppressed.  relevant: the proposed edge is
    applied; a cycle rejects the revision and attaches a framework
    advisory.  unsure: the question is parked.
    """
    question = session.find_question(answer.question_id)
    if question.status not in (PENDING, ASKED):
        raise StaleQuestionError(f"question {question.id!r} is {question.status}")
    session.answers.append(answer)
    question.status = ANSWERED
    session._record(
        "answered",
        {"question_id": question.id, "verdict": answer.verdict, "edge": answer.edge},
    )

    if answer.verdict == IRRELEVANT:
        session.confirmed.append(question.ci)
        _resuppress(session)
    elif answer.verdict == UNSURE:
        session.parked.append(question.id)
    elif answer.verdict == RELEVANT:
        if answer.edge is None:
            raise ValueError("a relevant verdict must carry a proposed edge orientation")
        frm, to = answer.edge
        before = session.model_hash()
        try:
            session.model = add_edge(session.model, frm, to)
        except CycleError as exc:
            advisory = (
                "Adding the edge "
                f"{frm}->{to} would induce the cycle {'->'.join(exc.cycle)}; "
                "consider a dynamic or hybrid representation for this relationship."
            )
            session.advisories.append(advisory)
            session._record("advisory", {"message": advisory, "cycle": exc.cycle})
            return session
        after = session.model_hash()
        entry = RevisionEntry(
            seq=len(session.revisions) + 1,
            operation="add_edge",
            detail={"from": frm, "to": to},
            before_hash=before,
            after_hash=after,
        )
        session.revisions.append(entry)
        session._record("revision", {"operation": "add_edge", "from": frm, "to": to, "after_hash": after})
        _regenerate(session)
    else:
        raise ValueError(f"unknown verdict {answer.verdict!r}")
    return session


def _resuppress(session: Session):
    """Suppress pending questions now implied by the confirmed set."""
    for q in session.pending_questions():
        result = semigraphoid.is_implied(q.ci, session.confirmed)
        if result.status == semigraphoid.IMPLIED:
            q.status = SUPPRESSED
            q.suppressed_by = result.trace
            session._record("suppressed", {"question_id": q.id})


def _regenerate(session: Session):
    """Rebuild the question queue after a revision, keeping answered and
    confirmed state."""
    answered_ids = {a.question_id for a in session.answers}
    fresh = _questions_for(session.model, confirmed=list(session.confirmed))
    kept: list[Question] = []
    for q in session.questions:
        if q.status in (ANSWERED, SUPPRESSED):
            kept.append(q)
    for q in fresh:
        if q.id in answered_ids or any(k.id == q.id for k in kept):
            continue
        kept.append(q)
    session.questions = kept
    _resuppress(session)


def replay(initial_model, answers: Iterable[Answer]) -> Session:
    """Re-derive a session from its initial model and answer log."""
    session = start_session(initial_model, session_id="replay")
    for answer in answers:
        # mirror the asked/answered flow so transcripts align
        question = session.find_question(answer.question_id)
        if question.status == PENDING:
            question.status = ASKED
        apply_answer(session, answer)
    return session


# ---------------------------------------------------------------------------
# CEG cut questions


def generate_ceg_questions(
    ceg: Ceg,
    cut: CutQuery,
    given_text: Optional[str] = None,
    variable_phrases: Optional[dict[str, str]] = None,
) -> list[Question]:
    """One question per (upstream variable, downstream variable) pair
    across a validated cut, phrased with the cut variable as the given."""
    result = separated(ceg, cut)
    if not result.separated:
        raise NotACutError(f"members do not form a {cut.flavour}")
    if not ceg.level_variables:
        raise NotACutError("the graph carries no level variable names")

    # Depth of each cut member: position index on any path through it.
    depths = set()
    from .ceg import _ceg_paths  # enumeration is the single source of truth

    for p in _ceg_paths(ceg):
        for i, w in enumerate(p.positions):
            if w in result.cut_positions:
                depths.add(i)
    cut_depth = min(depths)
    variables = list(ceg.level_variables)
    upstream = variables[: cut_depth]
    downstream = variables[cut_depth:]

    def phrase(v: str) -> str:
        if variable_phrases and v in variable_phrases:
            return variable_phrases[v]
        return v.lower()

    given = given_text or f"the {result.cut_variable}"
    questions = []
    for u in upstream:
        for d in downstream:
            text = (
                f"Given {given}, does knowing {phrase(u)} provide any "
                f"additional information about {phrase(d)}?"
            )
            ci = CiStatement(frozenset({u}), frozenset({d}), frozenset({f"cut:{result.cut_variable}"}))
            questions.append(Question(question_id(ci), ci, text))
    return questions


# ---------------------------------------------------------------------------
# Framework advisor

YES = "yes"
NO = "no"

ADVISOR_CHECKLIST: list[tuple[str, str]] = [
    (
        "conserved_flow",
        "Is a homogeneous mass (meals, goods, funds) conserved as it moves through a hierarchy of actors?",
    ),
    (
        "unfolding_events",
        "Is the problem naturally described as a series of unfolding events with asymmetric outcomes?",
    ),
    (
        "temporal",
        "Is the temporal element crucial to the experts' description of the system?",
    ),
    (
        "contemporaneous",
        "Do the series influence one another contemporaneously, as regressions between time series?",
    ),
    (
        "ambiguous",
        "Are some relationships directional while others remain ambiguous or cyclic?",
    ),
]

CLASS_BN = "BN"
CLASS_DBN = "dynamic-BN"
CLASS_CEG = "CEG"
CLASS_MDM = "MDM"
CLASS_FLOW = "FlowGraph"
CLASS_CHAIN = "chain-graph"

OUT_OF_SCOPE_CLASSES = {CLASS_CHAIN, "regulatory-graph"}

_CLASS_RATIONALE = {
    CLASS_FLOW: "Supply and demand problems, homogeneous flows",
    CLASS_CEG: "Asymmetric problems, problem description is told as a series of unfolding events",
    CLASS_MDM: "Contemporaneous effects between time series",
    CLASS_DBN: "Temporal process without contemporaneous regression effects",
    CLASS_CHAIN: "Directional and ambiguous relationships (advisory only; no session support)",
    CLASS_BN: "Systems naturally expressed as dependence structure between random variables",
}


@dataclass
class FrameworkRecommendation:
    recommended: str
    ranked: list[str]
    advisory_only: bool
    rationale: list[tuple[str, str]]

    @property
    def rationale_text(self) -> list[str]:
        return [f"{q} -> {a}" for q, a in self.rationale]


def advise_framework(answers: dict[str, str]) -> FrameworkRecommendation:
    """Map checklist answers to a model class.

    Rules evaluate in fixed priority order; an unsure answer keeps the
    class as a ranked possibility instead of selecting it outright.
    """
    trail = []
    for key, text in ADVISOR_CHECKLIST:
        trail.append((text, answers.get(key, NO)))

    def val(key):
        return answers.get(key, NO)

    rules: list[tuple[str, str | None]] = [
        (CLASS_FLOW, "conserved_flow"),
        (CLASS_CEG, "unfolding_events"),
        (CLASS_MDM, None),  # temporal AND contemporaneous, handled below
        (CLASS_DBN, "temporal"),
        (CLASS_CHAIN, "ambiguous"),
    ]
    ranked: list[str] = []
    certain: Optional[str] = None
    for cls, key in rules:
        if cls == CLASS_MDM:
            verdicts = {val("temporal"), val("contemporaneous")}
            if verdicts == {YES}:
                certain = cls
            elif NO not in verdicts:  # at least one unsure, none denied
                ranked.append(cls)
            if certain:
                break
            continue
        v = val(key)
        if v == YES:
            certain = cls
            break
        if v == UNSURE:
            ranked.append(cls)

    ranked.append(certain if certain is not None else CLASS_BN)
    recommendation = ranked[0]
    trail.append((f"Selected: {recommendation}", _CLASS_RATIONALE[recommendation]))
    return FrameworkRecommendation(
        recommended=recommendation,
        ranked=ranked,
        advisory_only=recommendation in OUT_OF_SCOPE_CLASSES,
        rationale=trail,
    )
