"""Synchronized exponential sweep generation and deconvolution to impulse
responses, plus delay/SNR estimation and measurement repeatability checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .dsp import ImpulseResponse
from .exceptions import NumericError


@dataclass
class SweepSpec:
    """Exponential sweep with the rate constant snapped so every octave
    boundary lands on an integer number of start-frequency cycles.

    L = round(f1 * T / ln(f2/f1)) / f1 and the actual duration is
    L * ln(f2/f1); the instantaneous frequency is f1 * exp(t / L).
    """

    f1: float
    f2: float
    nominal_duration_s: float
    fs: float

    def __post_init__(self):
        if not (0.0 < self.f1 < self.f2 <= self.fs / 2.0):
            raise ValueError("need 0 < f1 < f2 <= fs/2")
        if self.nominal_duration_s <= 0:
            raise ValueError("duration must be > 0")

    @property
    def log_ratio(self) -> float:
        return math.log(self.f2 / self.f1)

    @property
    def rate_constant_s(self) -> float:
        return round(self.f1 * self.nominal_duration_s / self.log_ratio) / self.f1

    @property
    def actual_duration_s(self) -> float:
        return self.rate_constant_s * self.log_ratio

    @property
    def n_samples(self) -> int:
        return int(round(self.actual_duration_s * self.fs))

    def to_dict(self) -> dict:
        return {"f1": self.f1, "f2": self.f2,
                "nominal_duration_s": self.nominal_duration_s, "fs": self.fs,
                "rate_constant_s": self.rate_constant_s,
                "actual_duration_s": self.actual_duration_s}


def generate_sweep(spec: SweepSpec) -> ImpulseResponse:
    """s(t) = sin(2 pi f1 L (exp(t/L) - 1)), t in [0, actual_duration)."""
    t = np.arange(spec.n_samples) / spec.fs
    length = spec.rate_constant_s
    phase = 2.0 * math.pi * spec.f1 * length * (np.exp(t / length) - 1.0)
    return ImpulseResponse(np.sin(phase), spec.fs)


def inverse_filter(spec: SweepSpec, gain_cap_db: float = 80.0) -> np.ndarray:
    """Analytic inverse of the reference sweep, built in the spectral domain.

    conj(S) / |S|^2 of the known reference sweep (equivalently: the
    amplitude-compensated time-reversed sweep), with the gain capped
    gain_cap_db below the spectral peak so regions where the sweep carries no
    energy stay quiet. Deterministic and noise-free; no recorded spectra are
    involved. The result is delayed so that sweep * inverse peaks at sample
    n_samples - 1 (the reference lag used by :func:`deconvolve`).
    """
    sweep = generate_sweep(spec).samples[0]
    n = len(sweep)
    nfft = 1
    while nfft < 2 * n + 2 ** 16:   # headroom for the inverse's ringing
        nfft *= 2
    spectrum = np.fft.rfft(sweep, nfft)
    mag2 = np.abs(spectrum) ** 2
    cap = (10.0 ** (-gain_cap_db / 20.0) * np.abs(spectrum).max()) ** 2
    k = np.arange(len(spectrum))
    delay = np.exp(-2j * np.pi * k * (n - 1) / nfft)
    inv = np.conj(spectrum) / np.maximum(mag2, cap) * delay
    return np.fft.irfft(inv, nfft)


def deconvolve(recording: ImpulseResponse, spec: SweepSpec,
               pre_window_ms: float = 20.0,
               edge_taps: int = 128) -> ImpulseResponse:
    """Recover the linear impulse response from a recorded sweep.

    The recording is convolved with the analytic inverse sweep; the linear
    response lands at the reference lag (sweep length - 1) while harmonic
    distortion products appear at earlier lags. A window keeps
    pre_window_ms of lead-in (raised-cosine leading edge) through to the end,
    so sample pre_window_ms*fs of the output corresponds to lag zero of the
    recovered response.
    """
    if recording.sample_rate != spec.fs:
        raise ValueError("recording sample rate differs from the sweep spec")
    n_sweep = spec.n_samples
    if recording.n_samples < n_sweep:
        raise ValueError("recording shorter than the sweep")
    inv = inverse_filter(spec)
    reference = n_sweep - 1
    pre = int(round(pre_window_ms * spec.fs / 1000.0))
    out = []
    for ch in range(recording.channels):
        full = scipy.signal.fftconvolve(recording.samples[ch], inv)
        start = reference - pre
        seg = full[start:].copy()
        if edge_taps > 0 and len(seg) > edge_taps:
            ramp = np.hanning(2 * edge_taps)[:edge_taps]
            seg[:edge_taps] *= ramp
        out.append(seg)
    return ImpulseResponse(np.array(out), spec.fs)


def estimate_delay_snr(playback: ImpulseResponse, recording: ImpulseResponse,
                       peak_significance: float = 8.0) -> dict:
    """Cross-correlation delay plus an SNR estimate from the recording tail.

    The noise floor comes from the part of the recording after the delayed
    playback ends; signal power is the active-region power above that floor.
    """
    if playback.sample_rate != recording.sample_rate:
        raise ValueError("sample rate mismatch")
    x = playback.samples[0]
    y = recording.samples[0]
    corr = scipy.signal.correlate(y, x, mode="full")
    peak = int(np.argmax(np.abs(corr)))
    others = np.delete(np.abs(corr), peak)
    floor = others.mean() + peak_significance * others.std()
    if np.abs(corr[peak]) <= floor:
        raise NumericError("no correlation peak above the noise floor")
    delay = peak - (len(x) - 1)
    if delay < 0:
        raise NumericError("recording appears to start before the playback")

    active = y[delay:delay + len(x)]
    tail = y[delay + len(x):]
    if len(tail) < 64:
        raise NumericError("recording has no silence tail for a noise estimate")
    p_noise = float(np.mean(tail ** 2))
    p_active = float(np.mean(active ** 2))
    if p_noise <= 0.0:
        return {"delay_samples": int(delay), "snr_db": math.inf}
    p_signal = max(p_active - p_noise, 0.0)
    if p_signal == 0.0:
        raise NumericError("no signal power above the noise floor")
    return {"delay_samples": int(delay),
            "snr_db": 10.0 * math.log10(p_signal / p_noise)}


def repeatability(rec_a: ImpulseResponse, rec_b: ImpulseResponse) -> float:
    """Pearson correlation of two aligned recordings (trimmed to the shorter)."""
    a = rec_a.samples[0]
    b = rec_b.samples[0]
    n = min(len(a), len(b))
    a, b = a[:n], b[:n]
    if np.std(a) == 0.0 or np.std(b) == 0.0:
        raise NumericError("zero-variance recording")
    return float(np.corrcoef(a, b)[0, 1])


def write_sweep_sidecar(path, spec: SweepSpec) -> None:
    """Echo the sweep parameters next to generated/deconvolved WAV files."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
