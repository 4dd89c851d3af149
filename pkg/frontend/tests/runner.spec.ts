import { beforeEach, describe, expect, it } from "vitest";

import { AbxRunner } from "../src/runner.js";
import { FakePlayer, instantWait, loadMiniSession, makeClock,
         type SessionFixture } from "./helpers.js";

let session: SessionFixture;
let player: FakePlayer;

function makeRunner(subject = "s1"): AbxRunner {
  return new AbxRunner(session.plan, session.thresholds, session.oracle,
                       player, {
                         subjectId: subject,
                         now: makeClock(),
                         wait: instantWait,
                       });
}

beforeEach(() => {
  session = loadMiniSession();
  player = new FakePlayer();
});

describe("trial flow", () => {
  it("plays the three intervals in A, B, X order", async () => {
    const runner = makeRunner();
    const trial = runner.nextTrial()!;
    await runner.playCurrent();
    expect(player.played).toEqual([
      trial.intervals.a, trial.intervals.b, trial.intervals.x,
    ]);
  });

  it("waits the configured gap between intervals", async () => {
    const gaps: number[] = [];
    const runner = new AbxRunner(session.plan, session.thresholds,
                                 session.oracle, player, {
                                   subjectId: "s1",
                                   gapMs: 500,
                                   now: makeClock(),
                                   wait: async (ms) => { gaps.push(ms); },
                                 });
    runner.nextTrial();
    await runner.playCurrent();
    expect(gaps).toEqual([500, 500]);
  });

  it("exposes the verbatim question text", () => {
    const runner = makeRunner();
    expect(runner.prompt).toBe(
      "Which room acoustic environment was in X? Please choose either A or B.",
    );
  });

  it("refuses answers before playback completes", async () => {
    const runner = makeRunner();
    runner.nextTrial();
    expect(runner.canAnswer).toBe(false);
    await expect(runner.answer("A")).rejects.toThrow(/intervals must play/);
  });

  it("refuses double answers", async () => {
    const runner = makeRunner();
    runner.nextTrial();
    await runner.playCurrent();
    await runner.answer("A");
    // the trial left the active slot; answering again with no active trial
    await expect(runner.answer("B")).rejects.toThrow(/no active trial/);
  });

  it("voids and re-queues a trial on playback failure", async () => {
    const runner = makeRunner();
    const trial = runner.nextTrial()!;
    player.failOnce.add(trial.intervals.b);
    await expect(runner.playCurrent()).rejects.toThrow(/re-queued/);
    expect(runner.state().voided_trials).toEqual([trial.trial_id]);
    // the voided trial comes back later in the session
    const seen: string[] = [];
    let next = runner.nextTrial();
    while (next) {
      seen.push(next.trial_id);
      await runner.playCurrent();
      await runner.answer("A");
      next = runner.nextTrial();
    }
    expect(seen).toContain(trial.trial_id);
  });
});

describe("scoring and stopping", () => {
  it("matches the experimenter-side counters exactly", async () => {
    const runner = makeRunner();
    const expected = new Map<string, { n: number; k: number }>();
    for (const c of session.plan.conditions) {
      expected.set(c.condition_id, { n: 0, k: 0 });
    }
    let trial = runner.nextTrial();
    while (trial) {
      await runner.playCurrent();
      // a subject who always presses A
      await runner.answer("A");
      const cell = expected.get(trial.condition_id)!;
      cell.n += 1;
      if (session.keys[trial.trial_id] === "A") cell.k += 1;
      const got = runner.conditionState(trial.condition_id);
      expect({ n: got.n, k: got.k }).toEqual(cell);
      trial = runner.nextTrial();
    }
  });

  it("stops serving trials for a significant condition", async () => {
    const runner = makeRunner();
    const served = new Map<string, number>();
    let trial = runner.nextTrial();
    while (trial) {
      served.set(trial.condition_id,
                 (served.get(trial.condition_id) ?? 0) + 1);
      await runner.playCurrent();
      // answer with the true key: every answer correct
      await runner.answer(session.keys[trial.trial_id]!);
      trial = runner.nextTrial();
    }
    // all-correct reaches significance after five trials per condition
    for (const c of session.plan.conditions) {
      expect(served.get(c.condition_id)).toBe(5);
      expect(runner.conditionState(c.condition_id).finished).toBe(true);
    }
    expect(runner.sessionFinished).toBe(true);
  });

  it("serves every planned trial to a chance-level subject", async () => {
    const runner = makeRunner();
    let count = 0;
    let flip = false;
    let trial = runner.nextTrial();
    while (trial) {
      await runner.playCurrent();
      await runner.answer(flip ? "A" : "B");
      flip = !flip;
      count += 1;
      trial = runner.nextTrial();
    }
    expect(count).toBe(session.plan.trials.length);
  });
});

describe("log export", () => {
  it("refuses to export an empty session", () => {
    const runner = makeRunner();
    expect(() => runner.exportLog()).toThrow(/nothing to export/);
  });

  it("exports schema-valid records with monotone timestamps", async () => {
    const runner = makeRunner("subject-7");
    for (let i = 0; i < 4; i++) {
      runner.nextTrial();
      await runner.playCurrent();
      await runner.answer("A");
    }
    const lines = runner.exportLog().trim().split("\n");
    expect(lines.length).toBe(4);
    let last = "";
    for (const line of lines) {
      const record = JSON.parse(line);
      expect(Object.keys(record).sort()).toEqual(
        ["answer", "subject_id", "timestamp", "trial_id"]);
      expect(record.subject_id).toBe("subject-7");
      expect(["A", "B"]).toContain(record.answer);
      expect(session.keys[record.trial_id]).toBeDefined();
      expect(record.timestamp > last).toBe(true);
      last = record.timestamp;
    }
  });
});
