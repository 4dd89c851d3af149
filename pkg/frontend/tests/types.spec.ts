import { describe, expect, it } from "vitest";

import { ResponseLog } from "../src/log.js";
import { parsePlan, parseScoreOracle, parseThresholds } from "../src/types.js";
import { loadMiniSession } from "./helpers.js";

describe("session document parsing", () => {
  it("accepts the packaged fixture", () => {
    const { plan, thresholds, oracle } = loadMiniSession();
    expect(plan.trials.length).toBe(16);
    expect(thresholds.cap).toBe(8);
    expect(Object.keys(oracle.digests).length).toBe(16);
  });

  it("rejects trials with missing intervals", () => {
    expect(() => parsePlan({
      conditions: [{ condition_id: "c", method: "m" }],
      trials: [{ trial_id: "t0", condition_id: "c", intervals: { a: "x" } }],
      prompt: "q",
    })).toThrow(/missing interval/);
  });

  it("rejects unknown conditions", () => {
    expect(() => parsePlan({
      conditions: [{ condition_id: "c", method: "m" }],
      trials: [{ trial_id: "t0", condition_id: "other",
                 intervals: { a: "1", b: "2", x: "3" } }],
      prompt: "q",
    })).toThrow(/unknown condition/);
  });

  it("rejects a threshold table of the wrong length", () => {
    expect(() => parseThresholds({ cap: 25, level: 0.05, k_min_by_n: [null] }))
      .toThrow(/length/);
  });

  it("rejects a score oracle without a salt", () => {
    expect(() => parseScoreOracle({ digests: {} })).toThrow(/score oracle/);
  });
});

describe("response log", () => {
  it("serializes one record per line", () => {
    const log = new ResponseLog();
    log.append("t0", "s", "A", "2025-01-01T00:00:00.000Z");
    log.append("t1", "s", "B", "2025-01-01T00:00:01.000Z");
    const lines = log.toNdjson().trim().split("\n");
    expect(lines.map((l) => JSON.parse(l).trial_id)).toEqual(["t0", "t1"]);
  });

  it("rejects bad answers", () => {
    const log = new ResponseLog();
    expect(() => log.append("t0", "s", "C" as never, "now"))
      .toThrow(/'A' or 'B'/);
  });

  it("refuses empty export", () => {
    expect(() => new ResponseLog().toNdjson()).toThrow(/nothing to export/);
  });
});
