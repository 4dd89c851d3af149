"""Statistics for ABX response logs: exact binomial p-values, adaptive
stopping, and sensitivity under the differencing decision model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from statistics import NormalDist

TRIAL_CAP_DEFAULT = 25
SIGNIFICANCE_LEVEL_DEFAULT = 0.05

_NORMAL = NormalDist()


def binomial_p_exact(n: int, k: int) -> Fraction:
    """P(X >= k | n, 1/2) as an exact rational."""
    if k < 0 or n < 0 or k > n:
        raise ValueError("need 0 <= k <= n")
    total = sum(math.comb(n, i) for i in range(k, n + 1))
    return Fraction(total, 2 ** n)


def binomial_p(n: int, k: int) -> float:
    """Complementary cumulative binomial probability at chance level 1/2."""
    return float(binomial_p_exact(n, k))


def stopping_table(cap: int = TRIAL_CAP_DEFAULT,
                   level: float = SIGNIFICANCE_LEVEL_DEFAULT) -> list:
    """k_min_by_n[n] = smallest correct count significant after n trials
    (None when unattainable); index 0 is padding."""
    level_frac = Fraction(level).limit_denominator(10 ** 9)
    table = [None]
    for n in range(1, cap + 1):
        k_min = None
        for k in range(n, -1, -1):
            if binomial_p_exact(n, k) < level_frac:
                k_min = k
            else:
                break
        table.append(k_min)
    return table


@dataclass(frozen=True)
class AbxConditionResult:
    """Running (or final) tally for one condition.

    finished is exact: the p-value comparison against the significance level
    happens in rational arithmetic before any float conversion.
    """

    condition_id: str
    n_trials: int = 0
    n_correct: int = 0
    cap: int = TRIAL_CAP_DEFAULT
    significance_level: float = SIGNIFICANCE_LEVEL_DEFAULT
    subject_id: str = ""

    def __post_init__(self):
        if not (0 <= self.n_correct <= self.n_trials <= self.cap):
            raise ValueError("need 0 <= n_correct <= n_trials <= cap")

    @property
    def p_value(self) -> float:
        if self.n_trials == 0:
            return 1.0
        return binomial_p(self.n_trials, self.n_correct)

    @property
    def significant(self) -> bool:
        if self.n_trials == 0:
            return False
        level = Fraction(self.significance_level).limit_denominator(10 ** 9)
        return binomial_p_exact(self.n_trials, self.n_correct) < level

    @property
    def finished(self) -> bool:
        return self.significant or self.n_trials >= self.cap

    @property
    def pc(self) -> float:
        if self.n_trials == 0:
            return math.nan
        return self.n_correct / self.n_trials


def stopping_decision(result: AbxConditionResult,
                      new_answer_correct: bool) -> AbxConditionResult:
    """Fold one answer into the tally; refuses updates on finished conditions."""
    if result.finished:
        raise ValueError(
            f"condition {result.condition_id} is already finished")
    return replace(result,
                   n_trials=result.n_trials + 1,
                   n_correct=result.n_correct + int(new_answer_correct))


def dprime_differencing(pc: float, tol: float = 1e-9) -> float:
    """Sensitivity index for the differencing ABX decision strategy.

    Inverts p(c) = Phi(d/sqrt2) Phi(d/sqrt6) + Phi(-d/sqrt2) Phi(-d/sqrt6)
    by bisection; proportions below one half map to negative values by odd
    symmetry. pc of exactly 0 or 1 returns -inf/+inf.
    """
    if not (0.0 <= pc <= 1.0):
        raise ValueError("pc must lie in [0, 1]")
    if pc == 0.0:
        return -math.inf
    if pc == 1.0:
        return math.inf
    if pc == 0.5:
        return 0.0
    if pc < 0.5:
        return -dprime_differencing(1.0 - pc, tol)

    def forward(d: float) -> float:
        a = _NORMAL.cdf(d / math.sqrt(2.0))
        b = _NORMAL.cdf(d / math.sqrt(6.0))
        return a * b + (1.0 - a) * (1.0 - b)

    lo, hi = 0.0, 1.0
    while forward(hi) < pc:
        hi *= 2.0
        if hi > 1e6:
            return math.inf
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if forward(mid) < pc:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def rate_with_continuity(k: int, n: int) -> float:
    """(k + 0.5) / (n + 1): keeps boundary counts off 0 and 1."""
    if n < 0 or k < 0 or k > n:
        raise ValueError("need 0 <= k <= n")
    return (k + 0.5) / (n + 1)


def pc_unbiased(hit_rate: float, false_alarm_rate: float) -> float:
    """Bias-corrected proportion correct Phi((z(H) - z(F)) / 2).

    H is the rate of answering A when X carried the simulation (interval A's
    chain), F the rate of answering A when it carried the measurement.
    """
    for r in (hit_rate, false_alarm_rate):
        if not (0.0 < r < 1.0):
            raise ValueError("rates must lie strictly in (0, 1); apply the "
                             "continuity correction to counts first")
    z = _NORMAL.inv_cdf
    return _NORMAL.cdf((z(hit_rate) - z(false_alarm_rate)) / 2.0)


@dataclass
class ConditionAnalysis:
    """Final statistics for one (subject, condition) cell."""

    result: AbxConditionResult
    hit_count: int
    hit_trials: int
    fa_count: int
    fa_trials: int

    @property
    def pc_unbiased(self) -> float:
        h = rate_with_continuity(self.hit_count, self.hit_trials)
        f = rate_with_continuity(self.fa_count, self.fa_trials)
        return pc_unbiased(h, f)

    @property
    def d_prime(self) -> float:
        return dprime_differencing(self.pc_unbiased)


def parse_response_log(lines) -> list:
    """Line-delimited JSON records {trial_id, subject_id, answer, timestamp}."""
    records = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        for key in ("trial_id", "subject_id", "answer", "timestamp"):
            if key not in doc:
                raise ValueError(f"log line {lineno} is missing {key!r}")
        if doc["answer"] not in ("A", "B"):
            raise ValueError(f"log line {lineno}: answer must be 'A' or 'B'")
        records.append(doc)
    return records


def analyze_log(records: list, plan: dict, keys: dict,
                cap: int | None = None,
                level: float | None = None) -> dict:
    """Score a response log against the hidden keys.

    Answers are aggregated per (subject, condition) over the whole log; the
    reported `finished`/`significant` flags describe the final tallies.
    Unknown trial ids and duplicate answers by the same subject are errors.
    Returns {(subject_id, condition_id): ConditionAnalysis}.
    """
    cap = cap if cap is not None else plan.get("trials_per_condition",
                                               TRIAL_CAP_DEFAULT)
    level = level if level is not None else plan.get(
        "significance_level", SIGNIFICANCE_LEVEL_DEFAULT)
    trial_condition = {t["trial_id"]: t["condition_id"]
                       for t in plan["trials"]}
    seen = set()
    tallies = {}
    for rec in records:
        tid = rec["trial_id"]
        if tid not in trial_condition:
            raise ValueError(f"unknown trial id {tid!r}")
        if tid not in keys:
            raise ValueError(f"no key for trial {tid!r}")
        subject = rec["subject_id"]
        if (subject, tid) in seen:
            raise ValueError(f"duplicate answer for trial {tid!r} "
                             f"by subject {subject!r}")
        seen.add((subject, tid))
        cond = trial_condition[tid]
        cell = tallies.setdefault(
            (subject, cond),
            {"n": 0, "k": 0, "hit_n": 0, "hit_k": 0, "fa_n": 0, "fa_k": 0})
        correct_answer = keys[tid]
        answered_a = rec["answer"] == "A"
        correct = rec["answer"] == correct_answer
        cell["n"] += 1
        cell["k"] += int(correct)
        if correct_answer == "A":      # X carried the simulated chain
            cell["hit_n"] += 1
            cell["hit_k"] += int(answered_a)
        else:
            cell["fa_n"] += 1
            cell["fa_k"] += int(answered_a)

    analyses = {}
    for (subject, cond), cell in sorted(tallies.items()):
        result = AbxConditionResult(
            condition_id=cond, n_trials=cell["n"], n_correct=cell["k"],
            cap=cap, significance_level=level, subject_id=subject)
        analyses[(subject, cond)] = ConditionAnalysis(
            result=result,
            hit_count=cell["hit_k"], hit_trials=cell["hit_n"],
            fa_count=cell["fa_k"], fa_trials=cell["fa_n"])
    return analyses


def analysis_rows(analyses: dict) -> list:
    """Flat rows for the results CSV, one per (subject, condition)."""
    rows = []
    for (subject, cond), a in sorted(analyses.items()):
        r = a.result
        rows.append({
            "subject": subject,
            "condition": cond,
            "n_trials": r.n_trials,
            "n_correct": r.n_correct,
            "pc": f"{r.pc:.6f}",
            "pc_unbiased": f"{a.pc_unbiased:.6f}",
            "d_prime": f"{a.d_prime:.6f}",
            "p_value": f"{r.p_value:.6f}",
            "significant": r.significant,
            "finished": r.finished,
        })
    return rows
