"""ABX session packaging: trial plans with hidden assignments, rendered
loudness-matched stimuli, and the on-disk session layout consumed by the
listening-test runner.

Session directory layout:
    plan.json        trial list with interval file refs; no hidden identities
    keys.json        trial_id -> correct answer ("A" or "B"); analysis side only
    score.json       salted digests letting a runner score answers without
                     ever loading keys.json (obscured, not cryptographically
                     private)
    thresholds.json  per-trial-count significance thresholds for adaptive
                     stopping
    stimuli/*.wav    float32 interval files under content-opaque names
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .abx import SIGNIFICANCE_LEVEL_DEFAULT, TRIAL_CAP_DEFAULT, stopping_table
from .dsp import ImpulseResponse, read_wav, write_wav
from .loudness import TARGET_LUFS_DEFAULT, render_interval


@dataclass
class AbxCondition:
    """One simulated/measured BRIR pair under comparison."""

    condition_id: str
    method: str
    brir_sim: ImpulseResponse
    brir_meas: ImpulseResponse


@dataclass
class PlannedTrial:
    trial_id: str
    condition_id: str
    token_indices: tuple          # (a, b, x) indices into the token list
    x_is_simulated: bool          # hidden; never serialized into plan.json
    interval_files: dict = field(default_factory=dict)

    @property
    def correct_answer(self) -> str:
        # interval A always carries the simulation, B the measurement
        return "A" if self.x_is_simulated else "B"


@dataclass
class StimulusPackage:
    conditions: list
    tokens: list                  # mono ImpulseResponse dry tokens
    target_lufs: float = TARGET_LUFS_DEFAULT
    seed: int = 0
    trials_per_condition: int = TRIAL_CAP_DEFAULT
    significance_level: float = SIGNIFICANCE_LEVEL_DEFAULT
    # hardware calibration note, carried as metadata only
    playback_level_note_db_spl: float | None = None

    def __post_init__(self):
        if not self.conditions:
            raise ValueError("at least one condition required")
        if len(self.tokens) < 3:
            raise ValueError("need at least three dry tokens so the three "
                             "intervals can differ")
        ids = [c.condition_id for c in self.conditions]
        if len(set(ids)) != len(ids):
            raise ValueError("condition ids must be unique")


def build_session(package: StimulusPackage) -> list:
    """Deterministic trial plan.

    Each trial draws its condition uniformly from those that still have open
    slots, three pairwise-distinct tokens, and a fair coin for whether X
    carries the simulated or the measured chain.
    """
    rng = np.random.default_rng(package.seed)
    remaining = {c.condition_id: package.trials_per_condition
                 for c in package.conditions}
    trials = []
    t = 0
    while any(remaining.values()):
        open_ids = sorted(cid for cid, n in remaining.items() if n > 0)
        cid = open_ids[rng.integers(len(open_ids))]
        remaining[cid] -= 1
        tokens = tuple(int(i) for i in
                       rng.choice(len(package.tokens), size=3, replace=False))
        x_sim = bool(rng.integers(2))
        trials.append(PlannedTrial(
            trial_id=f"t{t:04d}", condition_id=cid,
            token_indices=tokens, x_is_simulated=x_sim))
        t += 1
    return trials


def _interval_name(seed: int, trial_id: str, slot: str) -> str:
    digest = hashlib.sha1(f"{seed}:{trial_id}:{slot}".encode()).hexdigest()
    return f"{digest[:16]}.wav"


def _answer_digest(trial_id: str, answer: str, salt: str) -> str:
    return hashlib.sha256(f"{trial_id}:{answer}:{salt}".encode()).hexdigest()


def package_session(out_dir, package: StimulusPackage,
                    render: bool = True) -> dict:
    """Render stimuli and write the full session directory.

    Returns the plan document. With render=False only the plan/key/score/
    threshold files are written (used by tests that do not need audio).
    """
    out_dir = Path(out_dir)
    stimuli_dir = out_dir / "stimuli"
    out_dir.mkdir(parents=True, exist_ok=True)
    stimuli_dir.mkdir(exist_ok=True)

    trials = build_session(package)
    by_id = {c.condition_id: c for c in package.conditions}

    plan_trials = []
    keys = {}
    digests = {}
    salt = hashlib.sha1(f"salt:{package.seed}".encode()).hexdigest()
    for trial in trials:
        cond = by_id[trial.condition_id]
        names = {slot: _interval_name(package.seed, trial.trial_id, slot)
                 for slot in ("a", "b", "x")}
        trial.interval_files = {s: f"stimuli/{n}" for s, n in names.items()}
        if render:
            ta, tb, tx = (package.tokens[i] for i in trial.token_indices)
            x_brir = cond.brir_sim if trial.x_is_simulated else cond.brir_meas
            renders = {
                "a": render_interval(ta, cond.brir_sim, package.target_lufs),
                "b": render_interval(tb, cond.brir_meas, package.target_lufs),
                "x": render_interval(tx, x_brir, package.target_lufs),
            }
            for slot, ir in renders.items():
                write_wav(stimuli_dir / names[slot], ir)
        plan_trials.append({
            "trial_id": trial.trial_id,
            "condition_id": trial.condition_id,
            "intervals": trial.interval_files,
        })
        keys[trial.trial_id] = trial.correct_answer
        digests[trial.trial_id] = _answer_digest(trial.trial_id,
                                                 trial.correct_answer, salt)

    plan = {
        "conditions": [{"condition_id": c.condition_id, "method": c.method}
                       for c in package.conditions],
        "trials": plan_trials,
        "trials_per_condition": package.trials_per_condition,
        "significance_level": package.significance_level,
        "target_lufs": package.target_lufs,
        "playback_level_note_db_spl": package.playback_level_note_db_spl,
        "seed": package.seed,
        "prompt": ("Which room acoustic environment was in X? "
                   "Please choose either A or B."),
    }
    thresholds = {
        "cap": package.trials_per_condition,
        "level": package.significance_level,
        "k_min_by_n": stopping_table(package.trials_per_condition,
                                     package.significance_level),
    }
    _write_json(out_dir / "plan.json", plan)
    _write_json(out_dir / "keys.json", keys)
    _write_json(out_dir / "score.json", {"salt": salt, "digests": digests})
    _write_json(out_dir / "thresholds.json", thresholds)
    return plan


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_conditions_file(path) -> list:
    """Conditions JSON: a list of {condition_id, method, sim_brir, meas_brir}
    with WAV paths resolved relative to the file."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        docs = json.load(fh)
    conditions = []
    for doc in docs:
        conditions.append(AbxCondition(
            condition_id=doc["condition_id"],
            method=doc.get("method", doc["condition_id"]),
            brir_sim=read_wav(path.parent / doc["sim_brir"]),
            brir_meas=read_wav(path.parent / doc["meas_brir"]),
        ))
    return conditions
