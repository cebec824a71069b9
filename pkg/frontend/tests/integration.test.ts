/** Scripted walkthrough against the real Python HTTP API.
 *
 * Spawns the server, mounts the App in the test DOM, and drives the
 * question loop through button clicks: the revision path (the income ->
 * benefits edge appears) and the cycle-advisory path.  After every step the
 * displayed history must equal the server transcript.
 */

import { type ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import type { SessionController } from "../src/session.js";
import { FOOD_INSECURITY_DOC, FOOD_INSECURITY_REVISED_DOC } from "./fixtures.js";

const PORT = 8731;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

beforeAll(async () => {
  let stderr = "";
  server = spawn(
    "python3",
    ["-m", "uvicorn", "structelicit.service:app", "--port", String(PORT), "--log-level", "warning"],
    { stdio: ["ignore", "ignore", "pipe"] },
  );
  server.stderr!.on("data", (chunk) => {
    stderr += String(chunk);
  });
  const deadline = Date.now() + 50000;
  for (;;) {
    try {
      const resp = await fetch(`${BASE}/openapi.json`);
      if (resp.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) throw new Error(`server did not start: ${stderr}`);
    await new Promise((r) => setTimeout(r, 200));
  }
});

afterAll(() => {
  server?.kill();
});

async function settle(controller: SessionController, expectLength: number) {
  const deadline = Date.now() + 10000;
  while (controller.inFlight || controller.history.length < expectLength) {
    if (Date.now() > deadline) throw new Error("answer did not settle");
    await new Promise((r) => setTimeout(r, 20));
  }
}

function clickAnswer(root: HTMLElement, label: string) {
  const button = [...root.querySelectorAll("button")].find(
    (b) => b.textContent === label,
  );
  if (!button) throw new Error(`no button labelled ${JSON.stringify(label)}`);
  expect(button.disabled).toBe(false);
  button.click();
}

/** Displayed history must match the server transcript answer-for-answer. */
async function assertHistoryMatchesServer(api: ApiClient, controller: SessionController) {
  const transcript = await api.transcript(controller.sessionId);
  expect(controller.history.length).toBe(transcript.answers.length);
  controller.history.forEach((entry, i) => {
    const server = transcript.answers[i]!;
    expect(entry.questionId).toBe(server.question_id);
    expect(entry.verdict).toBe(server.verdict);
    expect(entry.edge).toEqual(server.edge);
  });
  expect(controller.modelHash).toBe(transcript.model_hash);
}

describe("session walkthrough", () => {
  it("drives the revision path to the income -> benefits edge", async () => {
    const api = new ApiClient(BASE);
    const root = document.createElement("main");
    const app = new App(root, api);
    await app.start(FOOD_INSECURITY_DOC);
    const controller = app.controller;

    // first question: the marginal benefits/income pair
    expect(controller.currentQuestion!.statement).toEqual({
      x: ["B"],
      y: ["I"],
      z: [],
    });
    expect(root.textContent).toContain(
      "Does knowing Disposable Income provide further information about Government benefits?",
    );
    expect(root.querySelectorAll('line[data-edge="I->B"]')).toHaveLength(0);

    clickAnswer(root, "relevant: I → B");
    await settle(controller, 1);
    await assertHistoryMatchesServer(api, controller);

    // the added edge is drawn and highlighted
    const added = root.querySelector('line[data-edge="I->B"]')!;
    expect(added).not.toBeNull();
    expect(added.getAttribute("class")).toContain("edge-added");
    expect(root.textContent).toContain("added edge I → B");

    // answer the remaining questions irrelevant
    let steps = 1;
    while (!controller.finished) {
      clickAnswer(root, "irrelevant");
      steps += 1;
      await settle(controller, steps);
      await assertHistoryMatchesServer(api, controller);
    }
    expect(root.textContent).toContain("structure confirmed");
    expect(steps).toBe(3);
  });

  it("shows the cycle advisory when a proposed edge is inadmissible", async () => {
    const api = new ApiClient(BASE);
    const root = document.createElement("main");
    const app = new App(root, api);
    await app.start(FOOD_INSECURITY_REVISED_DOC);
    const controller = app.controller;

    let steps = 0;
    let sawAdvisory = false;
    while (!controller.finished) {
      const q = controller.currentQuestion!;
      const isCyclePair =
        q.statement.x.join() === "H" && q.statement.y.join() === "I";
      if (isCyclePair) {
        clickAnswer(root, "relevant: H → I");
      } else {
        clickAnswer(root, "irrelevant");
      }
      steps += 1;
      await settle(controller, steps);
      await assertHistoryMatchesServer(api, controller);
      if (isCyclePair) {
        const entry = controller.history[controller.history.length - 1]!;
        expect(entry.applied).toBe(false);
        expect(entry.advisories.join(" ")).toContain("dynamic or hybrid");
        expect(root.textContent).toContain("dynamic or hybrid");
        expect(root.textContent).toContain("edge H → I rejected");
        sawAdvisory = true;
      }
    }
    expect(sawAdvisory).toBe(true);
    // the rejected edge never appears in the rendered graph
    expect(root.querySelectorAll('line[data-edge="H->I"]')).toHaveLength(0);
  });

  it("surfaces a stale-seq conflict as a refresh prompt without double-applying", async () => {
    const api = new ApiClient(BASE);
    const root = document.createElement("main");
    const app = new App(root, api);
    await app.start(FOOD_INSECURITY_DOC);
    const controller = app.controller;

    // another tab answers the same question first
    const q = controller.currentQuestion!;
    await api.submitAnswer(controller.sessionId, controller.seq, q.id, "irrelevant");

    clickAnswer(root, "irrelevant");
    const deadline = Date.now() + 10000;
    while (controller.inFlight || (controller.history.length === 0 && controller.seq === 0)) {
      if (Date.now() > deadline) throw new Error("conflict did not settle");
      await new Promise((r) => setTimeout(r, 20));
    }
    // the conflicting answer was not recorded locally or remotely a second time
    expect(controller.history).toHaveLength(0);
    const transcript = await api.transcript(controller.sessionId);
    expect(transcript.answers).toHaveLength(1);
  });
});

describe("advisor over the live API", () => {
  it("all-default answers end at BN", async () => {
    const api = new ApiClient(BASE);
    const rec = await api.advise({});
    expect(rec.recommended).toBe("BN");
    expect(rec.ranked).toEqual(["BN"]);
  });
});
