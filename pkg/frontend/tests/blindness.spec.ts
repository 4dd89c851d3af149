import { describe, expect, it } from "vitest";

import { AbxRunner } from "../src/runner.js";
import { scoreAnswer, sha256Hex } from "../src/scoring.js";
import { FakePlayer, instantWait, loadMiniSession, makeClock } from "./helpers.js";

describe("blindness of the client state", () => {
  it("scores against the packaged digests without the key file", async () => {
    const { oracle, keys, plan } = loadMiniSession();
    for (const trial of plan.trials) {
      const key = keys[trial.trial_id]!;
      expect(await scoreAnswer(oracle, trial.trial_id, key)).toBe(true);
      expect(await scoreAnswer(oracle, trial.trial_id,
                               key === "A" ? "B" : "A")).toBe(false);
    }
  });

  it("digest algorithm matches the packaging side", async () => {
    const { oracle, keys } = loadMiniSession();
    const [trialId, answer] = Object.entries(keys)[0]!;
    const digest = await sha256Hex(`${trialId}:${answer}:${oracle.salt}`);
    expect(digest).toBe(oracle.digests[trialId]);
  });

  it("keeps hidden identities out of every state snapshot", async () => {
    const session = loadMiniSession();
    const runner = new AbxRunner(session.plan, session.thresholds,
                                 session.oracle, new FakePlayer(), {
                                   subjectId: "s1",
                                   now: makeClock(),
                                   wait: instantWait,
                                 });
    const snapshots: string[] = [JSON.stringify(runner.state())];
    for (let i = 0; i < 6; i++) {
      runner.nextTrial();
      await runner.playCurrent();
      snapshots.push(JSON.stringify(runner.state()));
      await runner.answer(i % 2 === 0 ? "A" : "B");
      snapshots.push(JSON.stringify(runner.state()));
    }
    for (const snap of snapshots) {
      // no per-trial identity markers of any kind
      expect(snap).not.toMatch(/x_is_simulated/i);
      expect(snap).not.toMatch(/correct/i);
      expect(snap).not.toMatch(/simulated|measured/i);
      // and no leaked key material: the state must not pair a trial id with
      // an answer letter outside the subject's own log
      const state = JSON.parse(snap);
      expect(Object.keys(state).sort()).toEqual([
        "answered_trials", "conditions", "current_trial",
        "playback_complete", "session_finished", "subject_id",
        "voided_trials",
      ]);
    }
  });

  it("plan fixture itself carries no identities", () => {
    const { plan } = loadMiniSession();
    const text = JSON.stringify(plan);
    expect(text).not.toMatch(/x_is_simulated|correct_answer/);
    for (const trial of plan.trials) {
      // interval names are opaque hashes
      for (const ref of Object.values(trial.intervals)) {
        expect(ref).toMatch(/^stimuli\/[0-9a-f]{16}\.wav$/);
      }
    }
  });
});
