import { ApiClient } from "./api.js";
import { SessionController } from "./session.js";
import { renderGraph, renderHistory, renderQuestionCard } from "./views.js";
import type { ModelDocument, Verdict } from "./types.js";

/** Mounts the session console into a container and keeps it in sync with
 * the controller.  All state is server-derived; render() redraws from the
 * controller after every completed action. */
export class App {
  readonly controller: SessionController;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    this.controller = new SessionController(api);
  }

  async start(doc: ModelDocument): Promise<void> {
    const created = await this.api.createModel(doc);
    await this.controller.open(created.id);
    this.render();
  }

  private async submit(verdict: Verdict, edge?: [string, string]): Promise<void> {
    this.render(); // disable controls while in flight
    const accepted = await this.controller.answer(verdict, edge);
    if (!accepted && this.controller.needsRefresh) {
      await this.controller.refresh();
    }
    this.render();
  }

  render(): void {
    this.root.replaceChildren();

    const hash = document.createElement("p");
    hash.className = "model-hash";
    hash.textContent = this.controller.modelHash;
    this.root.appendChild(hash);

    if (this.controller.needsRefresh) {
      const warning = document.createElement("p");
      warning.className = "conflict-warning";
      warning.textContent =
        "Session advanced elsewhere — refresh to continue (your answer was not applied).";
      this.root.appendChild(warning);
    }

    this.root.appendChild(
      renderGraph(this.controller.graph, {
        highlightEdge: this.controller.lastAddedEdge,
      }),
    );
    this.root.appendChild(
      renderQuestionCard(this.controller.currentQuestion, this.controller.inFlight, {
        onAnswer: (verdict, edge) => void this.submit(verdict, edge),
      }),
    );
    this.root.appendChild(renderHistory(this.controller.history));
  }
}
