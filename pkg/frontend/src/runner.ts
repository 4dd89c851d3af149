import { ResponseLog } from "./log.js";
import { scoreAnswer } from "./scoring.js";
import { ConditionTracker } from "./stopping.js";
import type {
  Answer,
  PlanTrial,
  ScoreOracle,
  SessionPlan,
  Thresholds,
} from "./types.js";

/** Playback abstraction; the browser implementation streams interval files,
 * tests inject fakes. */
export interface Player {
  play(url: string): Promise<void>;
}

export interface RunnerOptions {
  subjectId: string;
  /** Pause between the three intervals (default 500 ms). */
  gapMs?: number;
  /** Timestamp source (default: wall clock, ISO-8601). */
  now?: () => string;
  /** Sleep used for the inter-stimulus gap (default: setTimeout). */
  wait?: (ms: number) => Promise<void>;
}

export interface ConditionState {
  n: number;
  k: number;
  finished: boolean;
}

/** Snapshot of everything the client knows; contains no hidden identities. */
export interface RunnerState {
  subject_id: string;
  answered_trials: string[];
  voided_trials: string[];
  conditions: Record<string, ConditionState>;
  current_trial: string | null;
  playback_complete: boolean;
  session_finished: boolean;
}

const defaultWait = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

/** Drives one subject through a packaged session.
 *
 * Trials run in plan order, skipping conditions that have finished; a trial
 * becomes answerable only after all three intervals have played once, can be
 * answered exactly once, and gives no correctness feedback. Failed playback
 * voids the trial and re-queues it behind the remaining ones.
 */
export class AbxRunner {
  private readonly trackers = new Map<string, ConditionTracker>();
  private readonly log = new ResponseLog();
  private readonly answered = new Set<string>();
  private queue: PlanTrial[];
  private retryQueue: PlanTrial[] = [];
  private voided: string[] = [];
  private current: PlanTrial | null = null;
  private playbackComplete = false;
  private readonly gapMs: number;
  private readonly now: () => string;
  private readonly wait: (ms: number) => Promise<void>;

  constructor(
    private readonly plan: SessionPlan,
    thresholds: Thresholds,
    private readonly oracle: ScoreOracle,
    private readonly player: Player,
    private readonly options: RunnerOptions,
  ) {
    for (const condition of plan.conditions) {
      this.trackers.set(condition.condition_id,
                        new ConditionTracker(thresholds));
    }
    this.queue = [...plan.trials];
    this.gapMs = options.gapMs ?? 500;
    this.now = options.now ?? (() => new Date().toISOString());
    this.wait = options.wait ?? defaultWait;
  }

  get prompt(): string {
    return this.plan.prompt;
  }

  /** Next playable trial, or null when the session is over. */
  nextTrial(): PlanTrial | null {
    if (this.current) return this.current;
    for (const source of [this.queue, this.retryQueue]) {
      while (source.length > 0) {
        const trial = source[0]!;
        const tracker = this.trackers.get(trial.condition_id)!;
        if (tracker.finished || this.answered.has(trial.trial_id)) {
          source.shift();          // finished conditions get no further trials
          continue;
        }
        source.shift();
        this.current = trial;
        this.playbackComplete = false;
        return trial;
      }
    }
    return null;
  }

  get sessionFinished(): boolean {
    if (this.current) return false;
    const playable = (t: PlanTrial) =>
      !this.trackers.get(t.condition_id)!.finished &&
      !this.answered.has(t.trial_id);
    return !this.queue.some(playable) && !this.retryQueue.some(playable);
  }

  /** Play the current trial's intervals in A, B, X order with the configured
   * gap. A playback failure voids the trial and re-queues it. */
  async playCurrent(): Promise<void> {
    const trial = this.current ?? this.nextTrial();
    if (!trial) throw new Error("no trial to play");
    try {
      for (const slot of ["a", "b", "x"] as const) {
        if (slot !== "a") await this.wait(this.gapMs);
        await this.player.play(trial.intervals[slot]);
      }
      this.playbackComplete = true;
    } catch (err) {
      this.voided.push(trial.trial_id);
      this.retryQueue.push(trial);
      this.current = null;
      this.playbackComplete = false;
      throw new Error(`playback failed; trial ${trial.trial_id} re-queued`,
                      { cause: err });
    }
  }

  get canAnswer(): boolean {
    return this.current !== null && this.playbackComplete;
  }

  /** Record the subject's choice for the current trial. Returns nothing the
   * UI could turn into feedback. */
  async answer(choice: Answer): Promise<void> {
    const trial = this.current;
    if (!trial) throw new Error("no active trial");
    if (!this.playbackComplete) {
      throw new Error("all three intervals must play before answering");
    }
    if (this.answered.has(trial.trial_id)) {
      throw new Error(`trial ${trial.trial_id} was already answered`);
    }
    const correct = await scoreAnswer(this.oracle, trial.trial_id, choice);
    this.answered.add(trial.trial_id);
    this.log.append(trial.trial_id, this.options.subjectId, choice,
                    this.now());
    this.trackers.get(trial.condition_id)!.update(correct);
    this.current = null;
    this.playbackComplete = false;
  }

  conditionState(conditionId: string): ConditionState {
    const tracker = this.trackers.get(conditionId);
    if (!tracker) throw new Error(`unknown condition ${conditionId}`);
    return { n: tracker.n, k: tracker.k, finished: tracker.finished };
  }

  state(): RunnerState {
    const conditions: Record<string, ConditionState> = {};
    for (const [id] of this.trackers) {
      conditions[id] = this.conditionState(id);
    }
    return {
      subject_id: this.options.subjectId,
      answered_trials: [...this.answered].sort(),
      voided_trials: [...this.voided],
      conditions,
      current_trial: this.current?.trial_id ?? null,
      playback_complete: this.playbackComplete,
      session_finished: this.sessionFinished,
    };
  }

  exportLog(): string {
    return this.log.toNdjson();
  }

  get answeredCount(): number {
    return this.log.length;
  }
}
