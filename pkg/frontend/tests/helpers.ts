import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { Player } from "../src/runner.js";
import {
  parsePlan,
  parseScoreOracle,
  parseThresholds,
  type ScoreOracle,
  type SessionPlan,
  type Thresholds,
} from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export interface SessionFixture {
  plan: SessionPlan;
  thresholds: Thresholds;
  oracle: ScoreOracle;
  /** Experimenter-side keys; tests use them as ground truth, the runner
   * under test never sees them. */
  keys: Record<string, "A" | "B">;
}

export function loadMiniSession(): SessionFixture {
  const read = (name: string) =>
    JSON.parse(readFileSync(join(here, "fixtures", "mini_session", name),
                            "utf-8"));
  return {
    plan: parsePlan(read("plan.json")),
    thresholds: parseThresholds(read("thresholds.json")),
    oracle: parseScoreOracle(read("score.json")),
    keys: read("keys.json"),
  };
}

/** Records play calls; can be told to fail on specific URLs once. */
export class FakePlayer implements Player {
  played: string[] = [];
  failOnce = new Set<string>();

  async play(url: string): Promise<void> {
    if (this.failOnce.has(url)) {
      this.failOnce.delete(url);
      throw new Error(`simulated playback failure: ${url}`);
    }
    this.played.push(url);
  }
}

/** Deterministic, strictly increasing ISO timestamps. */
export function makeClock(startMs = 1_700_000_000_000): () => string {
  let t = startMs;
  return () => {
    t += 1000;
    return new Date(t).toISOString();
  };
}

export const instantWait = async (_ms: number): Promise<void> => {};
