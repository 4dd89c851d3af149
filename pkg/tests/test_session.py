import json

import numpy as np
import pytest

from brirlab.abx import analyze_log
from brirlab.dsp import ImpulseResponse, read_wav
from brirlab.loudness import loudness_lufs, make_speech_shaped_token
from brirlab.session import (AbxCondition, StimulusPackage, build_session,
                             package_session)

FS = 44100.0


def _brir_pair():
    sim = np.zeros((2, 4000))
    sim[:, 100] = 1.0
    meas = np.zeros((2, 4000))
    meas[:, 100] = 1.0
    meas[:, 120] = 0.4           # slightly different response
    return (ImpulseResponse(sim, FS), ImpulseResponse(meas, FS))


@pytest.fixture(scope="module")
def package():
    sim, meas = _brir_pair()
    conditions = [AbxCondition("omni", "Omni-Dir", sim, meas),
                  AbxCondition("model", "Model-Dir", sim, meas)]
    tokens = [make_speech_shaped_token(1.0, FS, seed=s) for s in range(4)]
    return StimulusPackage(conditions=conditions, tokens=tokens, seed=11,
                           trials_per_condition=6)


class TestBuildSession:
    def test_deterministic(self, package):
        a = build_session(package)
        b = build_session(package)
        assert [(t.trial_id, t.condition_id, t.token_indices,
                 t.x_is_simulated) for t in a] == \
               [(t.trial_id, t.condition_id, t.token_indices,
                 t.x_is_simulated) for t in b]

    def test_counts_per_condition(self, package):
        trials = build_session(package)
        by_cond = {}
        for t in trials:
            by_cond[t.condition_id] = by_cond.get(t.condition_id, 0) + 1
        assert by_cond == {"omni": 6, "model": 6}

    def test_tokens_pairwise_distinct(self, package):
        for t in build_session(package):
            assert len(set(t.token_indices)) == 3

    def test_fair_x_assignment(self):
        sim, meas = _brir_pair()
        pkg = StimulusPackage(
            conditions=[AbxCondition("c", "m", sim, meas)],
            tokens=[make_speech_shaped_token(0.5, FS, seed=s)
                    for s in range(3)],
            seed=0, trials_per_condition=10_000)
        trials = build_session(pkg)
        frac = sum(t.x_is_simulated for t in trials) / len(trials)
        assert abs(frac - 0.5) < 0.02

    def test_needs_three_tokens(self):
        sim, meas = _brir_pair()
        with pytest.raises(ValueError):
            StimulusPackage(conditions=[AbxCondition("c", "m", sim, meas)],
                            tokens=[make_speech_shaped_token(0.5, FS, seed=0)])


class TestPackageSession:
    def test_session_layout(self, tmp_path, package):
        out = tmp_path / "session"
        plan = package_session(out, package, render=False)
        for name in ("plan.json", "keys.json", "score.json",
                     "thresholds.json"):
            assert (out / name).exists()
        assert len(plan["trials"]) == 12
        assert plan["prompt"].startswith("Which room acoustic environment")

    def test_plan_hides_x_identity(self, tmp_path, package):
        out = tmp_path / "session"
        package_session(out, package, render=False)
        plan_text = (out / "plan.json").read_text()
        assert "x_is_simulated" not in plan_text
        assert "correct" not in plan_text
        plan = json.loads(plan_text)
        # interval file names carry no information about the hidden chain
        for t in plan["trials"]:
            for ref in t["intervals"].values():
                name = ref.rsplit("/", 1)[-1]
                assert len(name) == 20 and name.endswith(".wav")

    def test_keys_and_digests_consistent(self, tmp_path, package):
        import hashlib
        out = tmp_path / "session"
        package_session(out, package, render=False)
        keys = json.loads((out / "keys.json").read_text())
        score = json.loads((out / "score.json").read_text())
        for tid, answer in keys.items():
            digest = hashlib.sha256(
                f"{tid}:{answer}:{score['salt']}".encode()).hexdigest()
            assert score["digests"][tid] == digest

    def test_rendered_intervals_loudness_matched(self, tmp_path):
        sim, meas = _brir_pair()
        pkg = StimulusPackage(
            conditions=[AbxCondition("c", "m", sim, meas)],
            tokens=[make_speech_shaped_token(1.0, FS, seed=s)
                    for s in range(3)],
            seed=3, trials_per_condition=2)
        out = tmp_path / "session"
        plan = package_session(out, pkg, render=True)
        levels = []
        for trial in plan["trials"]:
            for ref in trial["intervals"].values():
                ir = read_wav(out / ref)
                levels.append(loudness_lufs(ir))
        assert max(levels) - min(levels) < 0.2
        for level in levels:
            assert level == pytest.approx(-23.0, abs=0.1)

    def test_round_trip_through_analysis(self, tmp_path, package):
        out = tmp_path / "session"
        plan = package_session(out, package, render=False)
        keys = json.loads((out / "keys.json").read_text())
        records = [{"trial_id": t["trial_id"], "subject_id": "s9",
                    "answer": keys[t["trial_id"]],
                    "timestamp": "2025-06-01T10:00:00Z"}
                   for t in plan["trials"]]
        analyses = analyze_log(records, plan, keys)
        for (_, cond), a in analyses.items():
            assert a.result.n_correct == a.result.n_trials == 6
