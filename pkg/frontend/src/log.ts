import type { Answer, ResponseRecord } from "./types.js";

/** Collected answers, exported as the newline-delimited JSON records the
 * analysis CLI consumes. */
export class ResponseLog {
  private records: ResponseRecord[] = [];

  append(trialId: string, subjectId: string, answer: Answer,
         timestamp: string): void {
    if (answer !== "A" && answer !== "B") {
      throw new Error("answer must be 'A' or 'B'");
    }
    this.records.push({
      trial_id: trialId,
      subject_id: subjectId,
      answer,
      timestamp,
    });
  }

  get length(): number {
    return this.records.length;
  }

  all(): readonly ResponseRecord[] {
    return this.records;
  }

  /** One JSON object per line; refuses to export an empty session. */
  toNdjson(): string {
    if (this.records.length === 0) {
      throw new Error("no answered trials yet; nothing to export");
    }
    return this.records.map((r) => JSON.stringify(r)).join("\n") + "\n";
  }
}
