import { HtmlAudioPlayer } from "./player.js";
import { AbxRunner } from "./runner.js";
import {
  parsePlan,
  parseScoreOracle,
  parseThresholds,
  type Answer,
} from "./types.js";

/** Browser wiring: loads a session directory served as static files next to
 * this page (plan.json, score.json, thresholds.json, stimuli/). */

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function fetchJson(url: string): Promise<unknown> {
  const res = await fetch(url);
  if (!res.ok) throw new Error(`failed to load ${url}: ${res.status}`);
  return res.json();
}

async function boot(): Promise<void> {
  const status = el<HTMLParagraphElement>("status");
  const prompt = el<HTMLParagraphElement>("prompt");
  const startBtn = el<HTMLButtonElement>("start");
  const playBtn = el<HTMLButtonElement>("play");
  const answerA = el<HTMLButtonElement>("answer-a");
  const answerB = el<HTMLButtonElement>("answer-b");
  const exportBtn = el<HTMLButtonElement>("export");
  const subjectInput = el<HTMLInputElement>("subject");

  const sessionBase = new URLSearchParams(location.search).get("session")
    ?? "session";
  const [planDoc, thresholdsDoc, scoreDoc] = await Promise.all([
    fetchJson(`${sessionBase}/plan.json`),
    fetchJson(`${sessionBase}/thresholds.json`),
    fetchJson(`${sessionBase}/score.json`),
  ]);
  const plan = parsePlan(planDoc);
  const thresholds = parseThresholds(thresholdsDoc);
  const oracle = parseScoreOracle(scoreDoc);
  status.textContent =
    `session loaded: ${plan.trials.length} trials, ` +
    `${plan.conditions.length} conditions`;

  let runner: AbxRunner | null = null;
  const player = new HtmlAudioPlayer(`${sessionBase}/`);
  player.preload(plan.trials.flatMap((t) => Object.values(t.intervals)));

  const setAnswerEnabled = (on: boolean) => {
    answerA.disabled = !on;
    answerB.disabled = !on;
  };

  startBtn.addEventListener("click", () => {
    const subject = subjectInput.value.trim();
    if (!subject) {
      status.textContent = "enter a subject id first";
      return;
    }
    player.unlock();
    runner = new AbxRunner(plan, thresholds, oracle, player,
                           { subjectId: subject });
    startBtn.disabled = true;
    subjectInput.disabled = true;
    playBtn.disabled = false;
    status.textContent = "press play to hear intervals A, B and X";
  });

  playBtn.addEventListener("click", async () => {
    if (!runner) return;
    const trial = runner.nextTrial();
    if (!trial) {
      status.textContent = "session complete; export the log";
      playBtn.disabled = true;
      return;
    }
    playBtn.disabled = true;
    setAnswerEnabled(false);
    try {
      status.textContent = `trial ${runner.answeredCount + 1}: playing A, B, X`;
      await runner.playCurrent();
      prompt.textContent = runner.prompt;
      setAnswerEnabled(true);
    } catch (err) {
      status.textContent = String(err);
      playBtn.disabled = false;
    }
  });

  const answerHandler = (choice: Answer) => async () => {
    if (!runner || !runner.canAnswer) return;
    setAnswerEnabled(false);
    prompt.textContent = "";
    await runner.answer(choice);
    if (runner.sessionFinished) {
      status.textContent = "session complete; export the log";
      exportBtn.disabled = false;
    } else {
      status.textContent = "answer recorded; press play for the next trial";
      playBtn.disabled = false;
      exportBtn.disabled = false;
    }
  };
  answerA.addEventListener("click", answerHandler("A"));
  answerB.addEventListener("click", answerHandler("B"));

  exportBtn.addEventListener("click", () => {
    if (!runner) return;
    try {
      const blob = new Blob([runner.exportLog()],
                            { type: "application/x-ndjson" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "responses.ndjson";
      a.click();
      URL.revokeObjectURL(a.href);
    } catch (err) {
      status.textContent = String(err);
    }
  });
}

boot().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = String(err);
});
