import { ApiClient, ConflictError } from "./api.js";
import type {
  DagPayload,
  HistoryEntry,
  ModelDocument,
  QuestionView,
  Verdict,
} from "./types.js";

/** Session state machine: one in-flight mutation at a time, optimistic
 * sequence numbers, and a revision history that always mirrors the server
 * transcript.  Holds no authoritative model state. */
export class SessionController {
  sessionId = "";
  modelId = "";
  seq = 0;
  modelHash = "";
  graph: DagPayload = { nodes: [], edges: [] };
  currentQuestion: QuestionView | null = null;
  history: HistoryEntry[] = [];
  advisories: string[] = [];
  lastAddedEdge: [string, string] | null = null;
  inFlight = false;
  needsRefresh = false;
  finished = false;

  constructor(private api: ApiClient) {}

  async open(modelId: string): Promise<void> {
    this.modelId = modelId;
    const view = await this.api.openSession(modelId);
    this.sessionId = view.session_id;
    this.seq = view.seq;
    this.modelHash = view.model_hash;
    await this.refreshGraph();
    await this.advance();
  }

  private async refreshGraph(): Promise<void> {
    const doc: ModelDocument = await this.api.getModel(this.modelId);
    if (doc.kind === "dag") {
      // the session may have revised the model since upload; reconstruct the
      // live edge set from the history instead of trusting the stored doc
      const payload = doc.payload as unknown as DagPayload;
      const edges = payload.edges.map((e) => [e[0], e[1]] as [string, string]);
      for (const entry of this.history) {
        if (entry.applied && entry.edge) edges.push(entry.edge);
      }
      this.graph = { nodes: payload.nodes, edges };
    }
  }

  async advance(): Promise<void> {
    const next = await this.api.nextQuestion(this.sessionId);
    this.seq = next.seq;
    this.currentQuestion = next.question;
    this.finished = next.question === null;
  }

  /** Submit an answer for the current question.  Returns false when another
   * mutation is already in flight (the caller's controls should have been
   * disabled).  A stale-seq conflict sets `needsRefresh` instead of
   * retrying, so an answer can never double-apply. */
  async answer(verdict: Verdict, edge?: [string, string]): Promise<boolean> {
    if (this.inFlight || !this.currentQuestion || this.needsRefresh) return false;
    const question = this.currentQuestion;
    this.inFlight = true;
    try {
      const resp = await this.api.submitAnswer(
        this.sessionId,
        this.seq,
        question.id,
        verdict,
        edge,
      );
      this.seq = resp.seq;
      this.modelHash = resp.model_hash;
      this.advisories = resp.revision.advisories;
      this.lastAddedEdge = resp.revision.applied && edge ? edge : null;
      this.history.push({
        questionId: question.id,
        questionText: question.text,
        verdict,
        edge: edge ?? null,
        applied: resp.revision.applied,
        beforeHash: resp.revision.before_hash,
        afterHash: resp.revision.after_hash,
        advisories: resp.revision.advisories,
      });
      if (resp.revision.applied) await this.refreshGraph();
      await this.advance();
      return true;
    } catch (err) {
      if (err instanceof ConflictError) {
        this.needsRefresh = true;
        return false;
      }
      throw err;
    } finally {
      this.inFlight = false;
    }
  }

  /** Rebuild the displayed history from the server transcript (used after a
   * conflict, and by tests to assert the UI never diverges). */
  async refresh(): Promise<void> {
    const transcript = await this.api.transcript(this.sessionId);
    this.modelHash = transcript.model_hash;
    this.seq = transcript.answers.length;
    this.needsRefresh = false;
    await this.advance();
  }
}
