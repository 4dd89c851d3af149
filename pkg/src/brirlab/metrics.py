"""Objective room-acoustic parameters of binaural room impulse responses and
comparison/ranking reports.

Sign convention for interaural time difference: positive means the left ear
leads (the source sits toward the listener's left).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .brir import DIRECT_WINDOW_FLANK_TAPS, DIRECT_WINDOW_MS, detect_direct_onset, extract_direct
from .dsp import ImpulseResponse, edc, lowpass_butter2, octave_band_filter
from .exceptions import NumericError

METRIC_BANDS_HZ = (500.0, 1000.0, 2000.0)
EARS = ("left", "right")
METRIC_NAMES = ("t30_s", "edt_s", "drr_db", "d50", "c80_db")

# Just-noticeable differences shipped as report metadata only; relative
# values apply to T30/EDT.
JND_TABLE = {
    "t30_s": {"relative": 0.05},
    "edt_s": {"relative": 0.05},
    "drr_db": {"absolute_db": 2.5},
    "d50": {"absolute": 0.05},
    "c80_db": {"absolute_db": 1.0},
}


def _decay_time(channel: np.ndarray, fs: float, lo_db: float,
                hi_db: float) -> float:
    """Reverberation time from a linear EDC regression between hi_db and
    lo_db, extrapolated to -60 dB."""
    curve = edc(channel)
    mask = (curve <= hi_db) & (curve >= lo_db)
    if mask.sum() < 2 or curve.min() > lo_db:
        raise NumericError(
            f"decay never spans [{lo_db}, {hi_db}] dB; cannot regress")
    idx = np.flatnonzero(mask)
    t = idx / fs
    slope, _ = np.polyfit(t, curve[idx], 1)
    if slope >= 0.0:
        raise NumericError("energy decay has nonnegative slope")
    return -60.0 / slope


def t30(channel: np.ndarray, fs: float) -> float:
    """T30: regression from -5 dB to -35 dB on the energy decay curve."""
    return _decay_time(channel, fs, -35.0, -5.0)


def edt(channel: np.ndarray, fs: float) -> float:
    """Early decay time: regression from -0.1 dB to -10 dB."""
    return _decay_time(channel, fs, -10.0, -0.1)


def drr(ir: ImpulseResponse, onset: int,
        window_ms: float = DIRECT_WINDOW_MS,
        flank_taps: int = DIRECT_WINDOW_FLANK_TAPS) -> float:
    """Direct-to-reverberant ratio in dB using the windowed direct split.

    The window length must be shared across any set of responses being
    compared.
    """
    split = extract_direct(ir, onset, window_ms=window_ms,
                           flank_taps=flank_taps)
    e_direct = float(np.sum(split.excerpt.samples ** 2))
    e_rest = float(np.sum(split.remainder.samples ** 2))
    if e_rest == 0.0:
        return math.inf
    if e_direct == 0.0:
        raise NumericError("windowed direct sound has no energy")
    return 10.0 * math.log10(e_direct / e_rest)


def d50(channel: np.ndarray, fs: float, onset: int) -> float:
    """Definition: energy in the first 50 ms after onset over total energy."""
    energy = np.asarray(channel, dtype=np.float64) ** 2
    total = energy[onset:].sum()
    if total <= 0.0:
        raise NumericError("no energy after onset")
    split = onset + int(round(0.050 * fs))
    return float(energy[onset:split].sum() / total)


def c80(channel: np.ndarray, fs: float, onset: int) -> float:
    """Clarity: 10 log10 of early (first 80 ms) over late energy."""
    energy = np.asarray(channel, dtype=np.float64) ** 2
    split = onset + int(round(0.080 * fs))
    early = energy[onset:split].sum()
    late = energy[split:].sum()
    if early <= 0.0:
        raise NumericError("no energy after onset")
    if late == 0.0:
        return math.inf
    return 10.0 * math.log10(early / late)


def itd(brir: ImpulseResponse, onset: int | None = None,
        window_ms: float = DIRECT_WINDOW_MS,
        flank_taps: int = DIRECT_WINDOW_FLANK_TAPS) -> float:
    """Interaural time difference in microseconds.

    Both ears share the direct-sound window (earliest onset of the two), the
    excerpts are low-passed at 1 kHz with a 2nd-order Butterworth, and the
    cross-correlation peak is refined by the parabola through the three bins
    around the maximum.
    """
    if brir.channels != 2:
        raise ValueError("ITD needs two channels")
    fs = brir.sample_rate
    if onset is None:
        onset = min(detect_direct_onset(brir.samples[0]),
                    detect_direct_onset(brir.samples[1]))
    split = extract_direct(brir, onset, window_ms=window_ms,
                           flank_taps=flank_taps)
    filtered = lowpass_butter2(split.excerpt, 1000.0)
    left, right = filtered.samples
    corr = scipy.signal.correlate(left, right, mode="full")
    if not np.any(corr):
        raise NumericError("flat cross-correlation; no ITD")
    peak = int(np.argmax(corr))
    if 0 < peak < len(corr) - 1:
        cm, c0, cp = corr[peak - 1], corr[peak], corr[peak + 1]
        # symmetric operand order keeps channel-swap antisymmetry exact
        denom = (cm + cp) - 2.0 * c0
        delta = 0.0 if denom == 0.0 else (cm - cp) / (2.0 * denom)
    else:
        delta = 0.0
    # correlate() lag is negative when the left channel leads; flip so that
    # positive ITD = left leads. Integer lag first so the float rounding of
    # the sub-sample offset is symmetric under channel swap.
    lag = (peak - (len(right) - 1)) + delta
    return float(-lag * 1e6 / fs)


@dataclass
class MetricsReport:
    """Per-ear, per-octave decay/energy metrics plus broadband ITD.

    values maps (ear, band_hz, metric) to a float; NaN marks metrics that
    could not be computed for that cell (recorded in notices).
    """

    values: dict
    itd_us: float
    method: str = ""
    source_id: str = ""
    notices: list = field(default_factory=list)

    def cell(self, ear: str, band: float, metric: str) -> float:
        return self.values[(ear, float(band), metric)]


def compute_report(brir: ImpulseResponse, method: str = "",
                   source_id: str = "",
                   bands: tuple = METRIC_BANDS_HZ) -> MetricsReport:
    """All metrics for one BRIR; one shared onset per ear keeps DRR/D50/C80
    on a single time origin."""
    if brir.channels != 2:
        raise ValueError("a BRIR report needs two channels")
    fs = brir.sample_rate
    notices = []
    values = {}
    onsets = {}
    for ci, ear in enumerate(EARS):
        try:
            onsets[ear] = detect_direct_onset(brir.samples[ci])
        except NumericError as exc:
            notices.append(f"{ear}: onset detection failed ({exc})")
            onsets[ear] = 0

    for ci, ear in enumerate(EARS):
        onset = onsets[ear]
        try:
            drr_val = drr(ImpulseResponse(brir.samples[[ci]], fs), onset)
        except (NumericError, ValueError) as exc:
            notices.append(f"{ear}: drr failed ({exc})")
            drr_val = math.nan
        for band in bands:
            filtered = octave_band_filter(
                ImpulseResponse(brir.samples[[ci]], fs), band).samples[0]
            for metric, fn in (("t30_s", lambda x: t30(x, fs)),
                               ("edt_s", lambda x: edt(x, fs))):
                try:
                    values[(ear, band, metric)] = fn(filtered)
                except NumericError as exc:
                    notices.append(f"{ear}/{int(band)}: {metric} failed ({exc})")
                    values[(ear, band, metric)] = math.nan
            try:
                values[(ear, band, "d50")] = d50(filtered, fs, onset)
                values[(ear, band, "c80_db")] = c80(filtered, fs, onset)
            except NumericError as exc:
                notices.append(f"{ear}/{int(band)}: energy split failed ({exc})")
                values[(ear, band, "d50")] = math.nan
                values[(ear, band, "c80_db")] = math.nan
            values[(ear, band, "drr_db")] = drr_val

    try:
        itd_val = itd(brir, onset=min(onsets.values()))
    except (NumericError, ValueError) as exc:
        notices.append(f"itd failed ({exc})")
        itd_val = math.nan
    return MetricsReport(values=values, itd_us=itd_val, method=method,
                         source_id=source_id, notices=notices)


def rank_methods(reference: MetricsReport, candidates: dict) -> list:
    """Rank candidate reports by mean absolute relative error against the
    reference.

    Per cell the error is 1 - candidate/reference; cells where the reference
    is zero or either side is non-finite are excluded with a notice. Returns
    (method, score, cells_used) tuples sorted ascending by score, ties broken
    by method name.
    """
    results = []
    for name in sorted(candidates):
        report = candidates[name]
        errors = []
        for key, ref_val in reference.values.items():
            if key not in report.values:
                raise ValueError(f"candidate {name} missing cell {key}")
            cand_val = report.values[key]
            if not (math.isfinite(ref_val) and math.isfinite(cand_val)):
                report.notices.append(f"cell {key} excluded: non-finite")
                continue
            if ref_val == 0.0:
                report.notices.append(f"cell {key} excluded: zero reference")
                continue
            errors.append(abs(1.0 - cand_val / ref_val))
        if not errors:
            raise NumericError(f"no usable cells for candidate {name}")
        results.append((name, float(np.mean(errors)), len(errors)))
    results.sort(key=lambda row: (row[1], row[0]))
    return results


def report_rows(report: MetricsReport) -> list:
    """Long-format rows (method, source, ear, band, metric, value) including
    one broadband ITD row."""
    rows = []
    for (ear, band, metric), value in sorted(report.values.items()):
        rows.append({"method": report.method, "source": report.source_id,
                     "ear": ear, "band_hz": int(band), "metric": metric,
                     "value": value})
    rows.append({"method": report.method, "source": report.source_id,
                 "ear": "both", "band_hz": "broadband", "metric": "itd_us",
                 "value": report.itd_us})
    return rows


def write_report_csv(path, reports: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=[
            "method", "source", "ear", "band_hz", "metric", "value"])
        writer.writeheader()
        for report in reports:
            for row in report_rows(report):
                writer.writerow(row)


def format_report_table(report: MetricsReport,
                        bands: tuple = METRIC_BANDS_HZ) -> str:
    """Plain-text grid: metric x ear rows against octave-band columns."""
    header = f"{'metric':<10}{'ear':<7}" + "".join(
        f"{int(b):>10}" for b in bands)
    lines = [f"{report.method}  {report.source_id}".strip(), header,
             "-" * len(header)]
    for metric in METRIC_NAMES:
        for ear in EARS:
            cells = "".join(
                f"{report.values[(ear, b, metric)]:>10.3f}" for b in bands)
            lines.append(f"{metric:<10}{ear:<7}" + cells)
    lines.append(f"{'itd_us':<10}{'both':<7}{report.itd_us:>10.1f}")
    return "\n".join(lines)
