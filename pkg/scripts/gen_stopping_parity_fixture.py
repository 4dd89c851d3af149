#!/usr/bin/env python3
"""Generate the golden fixture for the browser runner's stopping-parity test.

Fifty seeded correct/incorrect answer streams are run through
stopping_decision; the fixture records each stream together with the trial
count at which the condition finished and whether significance (rather than
the trial cap) ended it. The runner test replays the same streams through its
threshold-table tracker and must reproduce every decision exactly.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from brirlab.abx import AbxConditionResult, stopping_decision, stopping_table
from brirlab.dsp import ImpulseResponse
from brirlab.loudness import make_speech_shaped_token
from brirlab.session import AbxCondition, StimulusPackage, package_session

CAP = 25
LEVEL = 0.05


def run_stream(answers):
    result = AbxConditionResult("c", cap=CAP, significance_level=LEVEL)
    for i, correct in enumerate(answers):
        if result.finished:
            return {"finish_at": i, "by_significance": result.significant,
                    "n_correct": result.n_correct}
        result = stopping_decision(result, bool(correct))
    return {"finish_at": len(answers) if result.finished else None,
            "by_significance": result.significant,
            "n_correct": result.n_correct}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        default=str(Path(__file__).resolve().parents[1]
                    / "frontend" / "tests" / "fixtures"
                    / "stopping_parity.json"))
    parser.add_argument("--streams", type=int, default=50)
    args = parser.parse_args()

    streams = []
    for seed in range(args.streams):
        rng = np.random.default_rng(seed)
        # mix of biases so both finish modes appear
        bias = 0.5 + 0.45 * (seed % 5) / 4.0
        answers = (rng.random(CAP) < bias).tolist()
        entry = run_stream(answers)
        entry["answers"] = answers
        entry["seed"] = seed
        streams.append(entry)

    fixture = {
        "cap": CAP,
        "level": LEVEL,
        "k_min_by_n": stopping_table(CAP, LEVEL),
        "streams": streams,
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(fixture, fh, indent=2, sort_keys=True)
        fh.write("\n")
    by_sig = sum(1 for s in streams if s["by_significance"])
    print(f"wrote {out} ({len(streams)} streams, {by_sig} finish by "
          f"significance)")
    write_mini_session(out.parent / "mini_session")


def write_mini_session(out_dir: Path) -> None:
    """A real (audio-free) session package so the runner tests exercise the
    exact files the packaging side produces."""
    import numpy as np
    sim = np.zeros((2, 1024))
    sim[:, 10] = 1.0
    meas = sim.copy()
    meas[:, 40] = 0.4
    fs = 44100.0
    conditions = [
        AbxCondition("omni", "Omni-Dir", ImpulseResponse(sim, fs),
                     ImpulseResponse(meas, fs)),
        AbxCondition("model", "Model-Dir", ImpulseResponse(sim, fs),
                     ImpulseResponse(meas, fs)),
    ]
    tokens = [make_speech_shaped_token(0.5, fs, seed=s) for s in range(3)]
    package = StimulusPackage(conditions=conditions, tokens=tokens, seed=17,
                              trials_per_condition=8)
    package_session(out_dir, package, render=False)
    print(f"wrote {out_dir}/ (plan, keys, score, thresholds)")


if __name__ == "__main__":
    main()
