import type {
  AdvisorRecommendation,
  AnswerResponse,
  ModelDocument,
  QuestionView,
  SessionView,
  Transcript,
  Verdict,
} from "./types.js";

export class ConflictError extends Error {
  constructor(public expectedSeq: number | undefined) {
    super("answer rejected: session advanced concurrently");
  }
}

export class ApiError extends Error {
  constructor(public status: number, body: string) {
    super(`HTTP ${status}: ${body}`);
  }
}

type FetchLike = typeof fetch;

/** Thin typed client over the session API; all UI state derives from it. */
export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (resp.status === 409) {
      let expected: number | undefined;
      try {
        const detail = (await resp.json()).detail;
        expected = detail?.expected_seq;
      } catch {
        /* body not json */
      }
      throw new ConflictError(expected);
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return (await resp.json()) as T;
  }

  createModel(doc: ModelDocument): Promise<{ id: string; kind: string; hash: string }> {
    return this.request("POST", "/models", doc);
  }

  getModel(modelId: string): Promise<ModelDocument> {
    return this.request("GET", `/models/${modelId}`);
  }

  openSession(modelId: string): Promise<SessionView> {
    return this.request("POST", "/sessions", { model_id: modelId });
  }

  nextQuestion(sid: string): Promise<{ seq: number; question: QuestionView | null }> {
    return this.request("GET", `/sessions/${sid}/next`);
  }

  submitAnswer(
    sid: string,
    seq: number,
    questionId: string,
    verdict: Verdict,
    edge?: [string, string],
  ): Promise<AnswerResponse> {
    return this.request("POST", `/sessions/${sid}/answers`, {
      seq,
      question_id: questionId,
      verdict,
      edge: edge ?? null,
    });
  }

  transcript(sid: string): Promise<Transcript> {
    return this.request("GET", `/sessions/${sid}/transcript`);
  }

  advise(answers: Record<string, string>): Promise<AdvisorRecommendation> {
    return this.request("POST", "/advisor", { answers });
  }
}
