import { ApiClient } from "./api.js";
import type { AdvisorRecommendation } from "./types.js";

export type ChecklistAnswer = "yes" | "no" | "unsure";

/** Checklist mirrored from the server's advisor (keys must match). */
export const CHECKLIST: { key: string; text: string }[] = [
  {
    key: "conserved_flow",
    text: "Is a homogeneous mass (meals, goods, funds) conserved as it moves through a hierarchy of actors?",
  },
  {
    key: "unfolding_events",
    text: "Is the problem naturally described as a series of unfolding events with asymmetric outcomes?",
  },
  {
    key: "temporal",
    text: "Is the temporal element crucial to the experts' description of the system?",
  },
  {
    key: "contemporaneous",
    text: "Do the series influence one another contemporaneously, as regressions between time series?",
  },
  {
    key: "ambiguous",
    text: "Are some relationships directional while others remain ambiguous or cyclic?",
  },
];

/** "When to use" copy shown beside each recommended class. */
export const WHEN_TO_USE: Record<string, string> = {
  FlowGraph: "Supply and demand problems, homogeneous flows",
  CEG: "Asymmetric problems, problem description is told as a series of unfolding events",
  MDM: "Contemporaneous effects between time series",
  "dynamic-BN": "Temporal process without contemporaneous regression effects",
  "chain-graph": "Directional and ambiguous relationships (advisory only; no session support)",
  BN: "Systems naturally expressed as dependence structure between random variables",
};

/** Step-through wizard; the recommendation itself comes from the server. */
export class AdvisorWizard {
  step = 0;
  answers: Record<string, ChecklistAnswer> = {};
  recommendation: AdvisorRecommendation | null = null;

  constructor(private api: ApiClient) {}

  get done(): boolean {
    return this.step >= CHECKLIST.length;
  }

  get currentQuestion(): string | null {
    return this.done ? null : CHECKLIST[this.step]!.text;
  }

  answer(value: ChecklistAnswer): void {
    if (this.done) throw new Error("checklist already complete");
    this.answers[CHECKLIST[this.step]!.key] = value;
    this.step += 1;
  }

  back(): void {
    if (this.step === 0) return;
    this.step -= 1;
    delete this.answers[CHECKLIST[this.step]!.key];
    this.recommendation = null;
  }

  async finish(): Promise<AdvisorRecommendation> {
    if (!this.done) throw new Error("checklist incomplete");
    this.recommendation = await this.api.advise(this.answers);
    return this.recommendation;
  }
}
