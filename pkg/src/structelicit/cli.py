"""Command-line interface.

Exit codes: 0 success (or "separated" for query), 1 validation failure or
"not separated", 2 usage error.
"""

from __future__ import annotations

import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import elicitation, flowgraph, mdm as mdm_mod
from .ceg import Ceg, CutQuery, enumerate_paths as ceg_enumerate_paths, separated, to_ceg, StagedTree
from .documents import (
    ModelDocument,
    document_for,
    hash_model,
    load_document,
    payload_of,
    validate_model,
)
from .errors import StructureError
from .flowgraph import FlowGraph, PathFlow
from .graphcore import Dag, d_separated
from .mdm import MdmSpec, Rewire
from .service import action_from_dict


def _load(path: str) -> ModelDocument:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise StructureError(f"cannot read {path}: {exc}") from exc
    return load_document(raw)


def _emit(data, as_json: bool, text: str):
    if as_json:
        click.echo(json.dumps(data, indent=2, default=str))
    else:
        click.echo(text)


def _fail(exc: Exception, as_json: bool):
    if as_json:
        click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
    else:
        click.echo(f"error: {exc}", err=True)
    sys.exit(1)


format_option = click.option(
    "--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True
)


@click.group()
def main():
    """Structural elicitation toolkit."""


@main.command()
@click.argument("file", type=click.Path())
@format_option
def validate(file, fmt):
    """Load a model document and report its invariants."""
    as_json = fmt == "json"
    try:
        doc = _load(file)
        violations = validate_model(doc.model)
    except StructureError as exc:
        _fail(exc, as_json)
        return
    if violations:
        _emit({"ok": False, "violations": violations}, as_json, "invalid:\n- " + "\n- ".join(violations))
        sys.exit(1)
    _emit({"ok": True, "kind": doc.kind, "hash": hash_model(doc.model)}, as_json, f"ok ({doc.kind})")


@main.command()
@click.argument("file", type=click.Path())
@click.option("--x", "x", required=True, help="comma-separated node ids (or CEG positions)")
@click.option("--y", "y", default="", help="comma-separated node ids")
@click.option("--given", "given", default="", help="comma-separated conditioning ids")
@format_option
def query(file, x, y, given, fmt):
    """d-separation (dag) or cut-separation (ceg) verdict.

    Exit code 0 = separated, 1 = not separated.
    """
    as_json = fmt == "json"
    xs = [s for s in x.split(",") if s]
    ys = [s for s in y.split(",") if s]
    zs = [s for s in given.split(",") if s]
    try:
        doc = _load(file)
        model = doc.model
        if isinstance(model, Dag):
            verdict = d_separated(model, xs, ys, zs)
            certificate = "moralized-ancestral-graph"
            witness = None
        elif isinstance(model, (Ceg, StagedTree)):
            ceg = model if isinstance(model, Ceg) else to_ceg(model)
            result = separated(ceg, CutQuery(frozenset(xs), flavour="fine-cut"))
            verdict = result.separated
            certificate = result.cut_variable if verdict else None
            witness = list(result.witness.labels) if result.witness else None
        else:
            raise StructureError(f"model kind {doc.kind!r} does not support CI queries")
    except StructureError as exc:
        _fail(exc, as_json)
        return
    _emit(
        {"separated": verdict, "certificate": certificate, "witness": witness},
        as_json,
        "separated" if verdict else "not separated",
    )
    sys.exit(0 if verdict else 1)


@main.command()
@click.argument("file", type=click.Path())
@format_option
def questions(file, fmt):
    """Rendered irrelevance-question list for a model."""
    as_json = fmt == "json"
    try:
        doc = _load(file)
        dag = elicitation.structure_dag(doc.model)
        if dag is None:
            raise StructureError(f"model kind {doc.kind!r} has no question-bearing DAG structure")
        qs = elicitation.generate_questions(dag)
    except StructureError as exc:
        _fail(exc, as_json)
        return
    rows = [
        {"id": q.id, "text": q.text, "status": q.status, "statement": str(q.ci)} for q in qs
    ]
    _emit(
        rows,
        as_json,
        "\n".join(f"[{r['status']}] {r['text']}" for r in rows),
    )


@main.command()
@click.argument("file", type=click.Path())
@click.option("--transcript", "transcript_out", type=click.Path(), default=None)
@click.option("--replay", "replay_in", type=click.Path(), default=None)
@format_option
def elicit(file, transcript_out, replay_in, fmt):
    """Interactive question/answer/revision loop, or --replay a transcript."""
    as_json = fmt == "json"
    try:
        doc = _load(file)
    except StructureError as exc:
        _fail(exc, as_json)
        return

    if replay_in:
        record = json.loads(Path(replay_in).read_text())
        answers = [
            elicitation.Answer(
                a["question_id"], a["verdict"], a.get("rationale", ""),
                tuple(a["edge"]) if a.get("edge") else None,
            )
            for a in record["answers"]
        ]
        session = elicitation.replay(doc.model, answers)
        final = session.model_hash()
        ok = record.get("final_hash") in (None, final)
        _emit(
            {"final_hash": final, "matches_recorded": ok},
            as_json,
            f"replayed to {final} ({'match' if ok else 'MISMATCH'})",
        )
        sys.exit(0 if ok else 1)

    session = elicitation.start_session(doc.model)
    while True:
        q = session.next_question()
        if q is None:
            break
        click.echo(q.text)
        verdict = click.prompt(
            "verdict", type=click.Choice(["irrelevant", "relevant", "unsure", "stop"])
        )
        if verdict == "stop":
            break
        edge = None
        if verdict == "relevant":
            options = _orientations(session.model, q)
            for i, (frm, to, feasible) in enumerate(options, 1):
                note = "" if feasible else " (would induce a cycle)"
                click.echo(f"  {i}. {frm} -> {to}{note}")
            choice = click.prompt("orientation", type=click.IntRange(1, len(options)))
            edge = options[choice - 1][:2]
        elicitation.apply_answer(session, elicitation.Answer(q.id, verdict, edge=edge))
        for advisory in session.advisories:
            click.echo(f"advisory: {advisory}")
    final = session.model_hash()
    record = {
        "initial_model": doc.to_dict(),
        "answers": [
            {
                "question_id": a.question_id,
                "verdict": a.verdict,
                "edge": list(a.edge) if a.edge else None,
            }
            for a in session.answers
        ],
        "final_hash": final,
    }
    if transcript_out:
        Path(transcript_out).write_text(json.dumps(record, indent=2))
    _emit(record, as_json, f"session complete; final model hash {final}")


def _orientations(dag: Dag, q: elicitation.Question):
    (a,), (b,) = sorted(q.ci.x), sorted(q.ci.y)
    out = []
    for frm, to in ((a, b), (b, a)):
        feasible = frm not in dag.descendants(to)
        out.append((frm, to, feasible))
    return out


def _read_series_csv(path: str) -> dict[str, list]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data: dict[str, list] = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                data[name].append(float(cell) if cell.strip() else None)
    return data


@main.command()
@click.argument("mdm_file", type=click.Path())
@click.option("--data", "data_csv", required=True, type=click.Path())
@click.option("--add-series", "patch_file", type=click.Path(), default=None)
@click.option("--out", "out_csv", type=click.Path(), default=None)
@format_option
def forecast(mdm_file, data_csv, patch_file, out_csv, fmt):
    """One-step-ahead forecast / residual report for an MDM."""
    as_json = fmt == "json"
    try:
        doc = _load(mdm_file)
        spec = doc.model
        if not isinstance(spec, MdmSpec):
            raise StructureError(f"{mdm_file} is not an mdm document")
        if patch_file:
            patch = json.loads(Path(patch_file).read_text())
            from .documents import parse_model

            new_node = parse_model("mdm", {"series": [patch["new_series"]]}).nodes[0]
            rewires = [
                Rewire(
                    r["child"],
                    tuple(r["parents"]),
                    new_coef_mean=r.get("new_coef_mean", 0.0),
                    new_coef_var=r.get("new_coef_var", 1.0),
                    new_coef_w=r.get("new_coef_w", 0.0),
                )
                for r in patch.get("rewire", [])
            ]
            spec = mdm_mod.add_series(spec, new_node, rewires)
        data = _read_series_csv(data_csv)
        trajectory = mdm_mod.run(spec, data)
    except StructureError as exc:
        _fail(exc, as_json)
        return
    rows = trajectory.residual_rows()
    if out_csv:
        with open(out_csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["t", "series", "y", "f", "Q", "std_resid", "logpdf"])
            writer.writeheader()
            writer.writerows(rows)
    _emit(
        rows,
        as_json,
        "\n".join(
            f"t={r['t']} {r['series']}: y={r['y']} f={r['f']:.4f} Q={r['Q']:.4f}"
            for r in rows
        ),
    )


def _read_mass_csv(g: FlowGraph, path: str) -> list[PathFlow]:
    flows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1].lower() != "mass":
            raise StructureError("mass csv must end with a 'mass' column")
        for row in reader:
            labels, mass = row[:-1], row[-1]
            actors = tuple(g.actor(lbl, level=i + 1) for i, lbl in enumerate(labels))
            flows.append(PathFlow(actors, Fraction(mass)))
    flowgraph.check_paths(g, flows)
    return flows


@main.command()
@click.argument("file", type=click.Path())
@click.argument("subcommand", type=click.Choice(["paths", "states", "intervene"]))
@click.option("--masses", "mass_csv", type=click.Path(), default=None)
@click.option("--script", "script_file", type=click.Path(), default=None)
@click.option("--out", "out_file", type=click.Path(), default=None)
@format_option
def flow(file, subcommand, mass_csv, script_file, out_file, fmt):
    """Flow-graph path list / node states / intervention replay."""
    as_json = fmt == "json"
    try:
        doc = _load(file)
        g = doc.model
        if not isinstance(g, FlowGraph):
            raise StructureError(f"{file} is not a flow_graph document")
        if subcommand == "paths":
            paths = flowgraph.enumerate_paths(g)
            rows = [[f"{g.labels[a]}" for a in p] for p in paths]
            _emit(rows, as_json, "\n".join(" -> ".join(r) for r in rows))
            return
        if not mass_csv:
            raise StructureError(f"'{subcommand}' needs --masses")
        flows = _read_mass_csv(g, mass_csv)
        if subcommand == "states":
            states = flowgraph.node_states(g, flows)
            report = flowgraph.check_conservation(states)
            rows = {
                g.labels[a]: str(m) for a, m in sorted(states.states.items())
            }
            _emit(
                {"states": rows, "conserved": report.ok, "level_totals": report.level_totals},
                as_json,
                "\n".join(f"{k}: {v}" for k, v in rows.items())
                + f"\nconserved: {report.ok}",
            )
            return
        if not script_file:
            raise StructureError("'intervene' needs --script")
        actions = json.loads(Path(script_file).read_text())["actions"]
        diffs = []
        for action_dict in actions:
            g, flows, report = flowgraph.intervene(g, flows, action_from_dict(action_dict))
            diffs.append(
                {
                    "action": action_dict,
                    "edges_added": report.edges_added,
                    "edges_removed": report.edges_removed,
                    "actors_removed": report.actors_removed,
                    "mass_changes": [
                        [list(map(list, p)), str(b), str(a)] for p, b, a in report.mass_changes
                    ],
                }
            )
        kind, payload = payload_of(g)
        result = {
            "model": {"kind": kind, "version": 1, "payload": payload},
            "flows": [
                {"path": [list(a) for a in pf.path], "mass": str(pf.mass)} for pf in flows
            ],
            "diffs": diffs,
        }
        if out_file:
            Path(out_file).write_text(json.dumps(result, indent=2, default=str))
        _emit(result, as_json, f"applied {len(diffs)} action(s); model still conserves mass")
    except StructureError as exc:
        _fail(exc, as_json)


@main.command()
@click.option("--answers", "answers_file", type=click.Path(), default=None)
@format_option
def advise(answers_file, fmt):
    """Framework advisor: checklist to model-class recommendation."""
    as_json = fmt == "json"
    if answers_file:
        answers = json.loads(Path(answers_file).read_text())
    else:
        answers = {}
        for key, text in elicitation.ADVISOR_CHECKLIST:
            answers[key] = click.prompt(
                text, type=click.Choice(["yes", "no", "unsure"]), default="no"
            )
    rec = elicitation.advise_framework(answers)
    _emit(
        {
            "recommended": rec.recommended,
            "ranked": rec.ranked,
            "advisory_only": rec.advisory_only,
            "rationale": rec.rationale_text,
        },
        as_json,
        f"recommended: {rec.recommended}"
        + (" (advisory only)" if rec.advisory_only else "")
        + "\n" + "\n".join(rec.rationale_text),
    )


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--store-dir", default=None, type=click.Path())
def serve(port, store_dir):
    """Run the HTTP session API."""
    import uvicorn

    from .service import SessionStore, make_app

    uvicorn.run(make_app(SessionStore(store_dir)), host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
