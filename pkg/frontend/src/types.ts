/** Wire types mirrored from the HTTP API. */

export interface NodeDoc {
  id: string;
  label: string;
  symbol: string;
}

export interface DagPayload {
  nodes: NodeDoc[];
  edges: [string, string][];
}

export interface ModelDocument {
  kind: string;
  version: number;
  metadata: Record<string, unknown>;
  payload: Record<string, unknown>;
}

export interface Statement {
  x: string[];
  y: string[];
  z: string[];
}

export interface QuestionView {
  id: string;
  statement: Statement;
  text: string;
  status: string;
}

export interface SessionView {
  session_id: string;
  seq: number;
  model_hash: string;
  pending: QuestionView[];
  advisories: string[];
  confirmed: string[];
}

export interface RevisionView {
  applied: boolean;
  before_hash: string;
  after_hash: string;
  advisories: string[];
}

export interface AnswerResponse extends SessionView {
  revision: RevisionView;
}

export interface TranscriptAnswer {
  question_id: string;
  verdict: string;
  edge: [string, string] | null;
}

export interface Transcript {
  session_id: string;
  model_hash: string;
  events: { event: string; detail?: unknown }[];
  answers: TranscriptAnswer[];
}

export interface AdvisorRecommendation {
  recommended: string;
  ranked: string[];
  advisory_only: boolean;
  rationale: string[];
}

export type Verdict = "irrelevant" | "relevant" | "unsure";

export interface HistoryEntry {
  questionId: string;
  questionText: string;
  verdict: Verdict;
  edge: [string, string] | null;
  applied: boolean;
  beforeHash: string;
  afterHash: string;
  advisories: string[];
}
