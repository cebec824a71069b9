import { layeredLayout } from "./layout.js";
import type { DagPayload, HistoryEntry, QuestionView, Verdict } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface GraphOptions {
  /** Edge to highlight (freshly added revision). */
  highlightEdge?: [string, string] | null;
  /** Node id -> fill colour (CEG stage colours). */
  nodeColors?: Record<string, string>;
  /** Nodes drawn light grey (terminating outcomes / sink). */
  greyNodes?: string[];
}

/** Deterministic SVG rendering of a directed graph. */
export function renderGraph(payload: DagPayload, opts: GraphOptions = {}): SVGSVGElement {
  const positions = layeredLayout(
    payload.nodes.map((n) => n.id),
    payload.edges,
  );
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "graph");
  const maxX = Math.max(0, ...[...positions.values()].map((p) => p.x)) + 120;
  const maxY = Math.max(0, ...[...positions.values()].map((p) => p.y)) + 80;
  svg.setAttribute("viewBox", `0 0 ${maxX} ${maxY}`);

  const highlight = opts.highlightEdge;
  for (const [a, b] of [...payload.edges].sort()) {
    const pa = positions.get(a)!;
    const pb = positions.get(b)!;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(pa.x));
    line.setAttribute("y1", String(pa.y));
    line.setAttribute("x2", String(pb.x));
    line.setAttribute("y2", String(pb.y));
    line.dataset.edge = `${a}->${b}`;
    const hot = highlight && highlight[0] === a && highlight[1] === b;
    line.setAttribute("class", hot ? "edge edge-added" : "edge");
    svg.appendChild(line);
  }

  const labels = new Map(payload.nodes.map((n) => [n.id, n.label || n.id]));
  for (const id of [...positions.keys()].sort()) {
    const p = positions.get(id)!;
    const g = document.createElementNS(SVG_NS, "g");
    g.dataset.node = id;
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(p.x));
    circle.setAttribute("cy", String(p.y));
    circle.setAttribute("r", "18");
    if (opts.greyNodes?.includes(id)) {
      circle.setAttribute("fill", "#d3d3d3");
    } else if (opts.nodeColors?.[id]) {
      circle.setAttribute("fill", opts.nodeColors[id]!);
    } else {
      circle.setAttribute("fill", "#ffffff");
    }
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(p.x));
    text.setAttribute("y", String(p.y + 34));
    text.textContent = labels.get(id) ?? id;
    g.appendChild(circle);
    g.appendChild(text);
    svg.appendChild(g);
  }
  return svg;
}

export interface QuestionCardHandlers {
  onAnswer: (verdict: Verdict, edge?: [string, string]) => void;
}

/** Question card with answer controls; disabled while a submission is in
 * flight so an answer can never be sent twice. */
export function renderQuestionCard(
  question: QuestionView | null,
  disabled: boolean,
  handlers: QuestionCardHandlers,
): HTMLElement {
  const card = document.createElement("section");
  card.className = "question-card";
  if (!question) {
    card.textContent = "No pending questions — structure confirmed.";
    return card;
  }
  const text = document.createElement("p");
  text.className = "question-text";
  text.textContent = question.text;
  card.appendChild(text);

  const controls = document.createElement("div");
  controls.className = "answer-controls";

  const mk = (label: string, onClick: () => void) => {
    const btn = document.createElement("button");
    btn.textContent = label;
    btn.disabled = disabled;
    btn.addEventListener("click", onClick);
    controls.appendChild(btn);
    return btn;
  };

  mk("irrelevant", () => handlers.onAnswer("irrelevant"));
  mk("unsure", () => handlers.onAnswer("unsure"));

  // relevant needs an orientation: offer both directions between the pair
  const [a] = question.statement.x;
  const [b] = question.statement.y;
  if (a && b) {
    mk(`relevant: ${a} → ${b}`, () => handlers.onAnswer("relevant", [a, b]));
    mk(`relevant: ${b} → ${a}`, () => handlers.onAnswer("relevant", [b, a]));
  }
  card.appendChild(controls);
  return card;
}

/** Revision-history timeline. */
export function renderHistory(history: HistoryEntry[]): HTMLOListElement {
  const list = document.createElement("ol");
  list.className = "history";
  for (const entry of history) {
    const item = document.createElement("li");
    item.dataset.questionId = entry.questionId;
    item.dataset.verdict = entry.verdict;
    const what =
      entry.verdict === "relevant" && entry.edge
        ? entry.applied
          ? `added edge ${entry.edge[0]} → ${entry.edge[1]}`
          : `edge ${entry.edge[0]} → ${entry.edge[1]} rejected`
        : entry.verdict;
    item.textContent = `${entry.questionText} — ${what}`;
    for (const advisory of entry.advisories) {
      const note = document.createElement("p");
      note.className = "advisory";
      note.textContent = advisory;
      item.appendChild(note);
    }
    list.appendChild(item);
  }
  return list;
}

/** Flow-graph level summary with the conservation badge. */
export function renderFlowSummary(
  levelTotals: Record<string, number>,
  conserved: boolean,
): HTMLElement {
  const box = document.createElement("section");
  box.className = "flow-summary";
  const badge = document.createElement("span");
  badge.className = conserved ? "badge badge-ok" : "badge badge-violation";
  badge.textContent = conserved ? "mass conserved" : "conservation violated";
  box.appendChild(badge);
  const table = document.createElement("table");
  for (const [level, total] of Object.entries(levelTotals)) {
    const row = document.createElement("tr");
    for (const text of [`level ${level}`, String(total)]) {
      const td = document.createElement("td");
      td.textContent = text;
      row.appendChild(td);
    }
    table.appendChild(row);
  }
  box.appendChild(table);
  return box;
}

export interface ForecastRow {
  t: number;
  series: string;
  y: number;
  f: number;
  Q: number;
  std_resid: number;
}

/** Forecast-vs-observation view: one row per step with outliers flagged. */
export function renderForecastTable(rows: ForecastRow[]): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "forecast";
  const thead = document.createElement("thead");
  const head = document.createElement("tr");
  for (const col of ["t", "series", "observed", "forecast", "std resid"]) {
    const th = document.createElement("th");
    th.textContent = col;
    head.appendChild(th);
  }
  thead.appendChild(head);
  table.appendChild(thead);
  const body = document.createElement("tbody");
  const cell = (row: HTMLTableRowElement, text: string) => {
    const td = document.createElement("td");
    td.textContent = text;
    row.appendChild(td);
  };
  for (const r of rows) {
    const row = document.createElement("tr");
    if (Math.abs(r.std_resid) > 3) row.className = "outlier";
    cell(row, String(r.t));
    cell(row, r.series);
    cell(row, r.y.toFixed(3));
    cell(row, r.f.toFixed(3));
    cell(row, r.std_resid.toFixed(2));
    body.appendChild(row);
  }
  table.appendChild(body);
  return table;
}
