/** Session documents as written by the packaging CLI. */

export interface PlanCondition {
  condition_id: string;
  method: string;
}

export interface PlanTrial {
  trial_id: string;
  condition_id: string;
  intervals: { a: string; b: string; x: string };
}

export interface SessionPlan {
  conditions: PlanCondition[];
  trials: PlanTrial[];
  trials_per_condition: number;
  significance_level: number;
  prompt: string;
}

/** k_min_by_n[n] is the smallest correct count significant after n trials
 * (null where unattainable); index 0 is padding. */
export interface Thresholds {
  cap: number;
  level: number;
  k_min_by_n: (number | null)[];
}

/** Salted digests of the correct answer per trial; lets the runner score
 * answers without ever loading the key file. */
export interface ScoreOracle {
  salt: string;
  digests: Record<string, string>;
}

export type Answer = "A" | "B";

export interface ResponseRecord {
  trial_id: string;
  subject_id: string;
  answer: Answer;
  timestamp: string;
}

function fail(msg: string): never {
  throw new Error(`invalid session document: ${msg}`);
}

export function parsePlan(doc: unknown): SessionPlan {
  const plan = doc as SessionPlan;
  if (!plan || !Array.isArray(plan.trials) || !Array.isArray(plan.conditions)) {
    fail("missing trials or conditions");
  }
  if (typeof plan.prompt !== "string" || plan.prompt.length === 0) {
    fail("missing prompt");
  }
  const conditionIds = new Set(plan.conditions.map((c) => c.condition_id));
  for (const trial of plan.trials) {
    if (typeof trial.trial_id !== "string") fail("trial without id");
    if (!conditionIds.has(trial.condition_id)) {
      fail(`trial ${trial.trial_id} references unknown condition`);
    }
    for (const slot of ["a", "b", "x"] as const) {
      if (typeof trial.intervals?.[slot] !== "string") {
        fail(`trial ${trial.trial_id} is missing interval ${slot}`);
      }
    }
  }
  return plan;
}

export function parseThresholds(doc: unknown): Thresholds {
  const t = doc as Thresholds;
  if (!t || typeof t.cap !== "number" || !Array.isArray(t.k_min_by_n)) {
    fail("bad thresholds document");
  }
  if (t.k_min_by_n.length !== t.cap + 1) {
    fail("threshold table length must be cap + 1");
  }
  return t;
}

export function parseScoreOracle(doc: unknown): ScoreOracle {
  const s = doc as ScoreOracle;
  if (!s || typeof s.salt !== "string" || typeof s.digests !== "object") {
    fail("bad score oracle document");
  }
  return s;
}
