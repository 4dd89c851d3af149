import type { Thresholds } from "./types.js";

/** Per-condition adaptive-stopping counters.
 *
 * Mirrors the analysis side exactly: a condition is finished once its correct
 * count reaches the significance threshold for its trial count, or once the
 * trial cap is hit. The thresholds ship precomputed with the session, so the
 * client never needs the p-value math (or the answer keys).
 */
export class ConditionTracker {
  n = 0;
  k = 0;

  constructor(private readonly thresholds: Thresholds) {}

  get significant(): boolean {
    if (this.n === 0) return false;
    const kMin = this.thresholds.k_min_by_n[this.n];
    return kMin !== null && kMin !== undefined && this.k >= kMin;
  }

  get finished(): boolean {
    return this.significant || this.n >= this.thresholds.cap;
  }

  update(correct: boolean): void {
    if (this.finished) {
      throw new Error("condition is already finished");
    }
    this.n += 1;
    if (correct) this.k += 1;
  }
}
