"""Program-loudness measurement (K-weighted, gated, per ITU-R BS.1770-4) and
loudness-normalized stimulus rendering.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.signal

from .dsp import ImpulseResponse, convolve
from .exceptions import NumericError

TARGET_LUFS_DEFAULT = -23.0
BLOCK_S = 0.400
HOP_S = 0.100
ABSOLUTE_GATE_LUFS = -70.0
RELATIVE_GATE_LU = -10.0
_OFFSET_DB = -0.691
_CHANNEL_WEIGHTS = (1.0, 1.0, 1.0, 1.41, 1.41)


def _k_weighting_sections(fs: float):
    """Biquad coefficients of the two K-weighting stages at any sample rate.

    Stage 1 is the head-effect high shelf, stage 2 the low-cut; the shelf
    parameters reproduce the tabulated 48 kHz coefficients of the
    recommendation.
    """
    # high shelf
    f0, gain_db, q = 1681.974450955533, 3.999843853973347, 0.7071752369554196
    k = math.tan(math.pi * f0 / fs)
    vh = 10.0 ** (gain_db / 20.0)
    vb = vh ** 0.4996667741545416
    a0 = 1.0 + k / q + k * k
    shelf_b = np.array([vh + vb * k / q + k * k,
                        2.0 * (k * k - vh),
                        vh - vb * k / q + k * k]) / a0
    shelf_a = np.array([1.0,
                        2.0 * (k * k - 1.0) / a0,
                        (1.0 - k / q + k * k) / a0])
    # high-pass (coefficients intentionally not passband-normalized,
    # matching the recommendation's tabulated filter)
    f0, q = 38.13547087602444, 0.5003270373238773
    k = math.tan(math.pi * f0 / fs)
    a0 = 1.0 + k / q + k * k
    hp_b = np.array([1.0, -2.0, 1.0])
    hp_a = np.array([1.0,
                     2.0 * (k * k - 1.0) / a0,
                     (1.0 - k / q + k * k) / a0])
    return (shelf_b, shelf_a), (hp_b, hp_a)


def loudness_lufs(signal: ImpulseResponse) -> float:
    """Gated program loudness in LUFS.

    400 ms blocks with 75 % overlap; blocks below -70 LUFS are dropped, then
    blocks more than 10 LU below the intermediate mean are dropped. Fully
    gated material reports -inf.
    """
    fs = signal.sample_rate
    if fs < 8000:
        raise ValueError("sample rate below 8 kHz is not supported")
    block = int(round(BLOCK_S * fs))
    hop = int(round(HOP_S * fs))
    if signal.n_samples < block:
        raise ValueError("signal shorter than one 400 ms gating block")

    (sb, sa), (hb, ha) = _k_weighting_sections(fs)
    weighted = scipy.signal.lfilter(hb, ha,
                                    scipy.signal.lfilter(sb, sa,
                                                         signal.samples,
                                                         axis=1), axis=1)
    n_blocks = (signal.n_samples - block) // hop + 1
    power = np.empty(n_blocks)
    for j in range(n_blocks):
        seg = weighted[:, j * hop:j * hop + block]
        channel_ms = np.mean(seg * seg, axis=1)
        power[j] = sum(w * ms for w, ms in
                       zip(_CHANNEL_WEIGHTS, channel_ms))

    with np.errstate(divide="ignore"):
        block_lufs = _OFFSET_DB + 10.0 * np.log10(power)
    above_abs = power[block_lufs > ABSOLUTE_GATE_LUFS]
    if len(above_abs) == 0:
        return -math.inf
    relative_gate = (_OFFSET_DB + 10.0 * math.log10(above_abs.mean())
                     + RELATIVE_GATE_LU)
    gated = power[(block_lufs > ABSOLUTE_GATE_LUFS)
                  & (block_lufs > relative_gate)]
    if len(gated) == 0:
        return -math.inf
    return _OFFSET_DB + 10.0 * math.log10(gated.mean())


def normalize_loudness(signal: ImpulseResponse, target_lufs: float,
                       peak_limit_dbfs: float = -0.5) -> ImpulseResponse:
    """Scale to the target loudness; refuses (rather than limits) signals
    whose peak would exceed peak_limit_dbfs afterwards."""
    measured = loudness_lufs(signal)
    if not math.isfinite(measured):
        raise NumericError("signal is below the loudness gate; cannot normalize")
    gain = 10.0 ** ((target_lufs - measured) / 20.0)
    scaled = signal.samples * gain
    peak = np.abs(scaled).max()
    if peak > 10.0 ** (peak_limit_dbfs / 20.0):
        raise ValueError(
            f"normalization to {target_lufs} LUFS would peak at "
            f"{20.0 * math.log10(peak):.2f} dBFS (> {peak_limit_dbfs} dBFS)")
    return ImpulseResponse(scaled, signal.sample_rate)


def render_interval(token: ImpulseResponse, brir: ImpulseResponse,
                    target_lufs: float = TARGET_LUFS_DEFAULT) -> ImpulseResponse:
    """Convolve a dry mono token with a BRIR and normalize the result."""
    if token.channels != 1:
        raise ValueError("tokens must be mono")
    if token.sample_rate != brir.sample_rate:
        raise ValueError("token and BRIR sample rates differ")
    wet = convolve(token, brir)
    return normalize_loudness(wet, target_lufs)


def make_speech_shaped_token(duration_s: float, fs: float,
                             seed: int) -> ImpulseResponse:
    """Deterministic speech-shaped noise token for CI and demos: pink-ish
    spectrum with a syllabic amplitude modulation."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    noise = rng.standard_normal(n)
    sos = scipy.signal.butter(4, [120.0, 5500.0], btype="bandpass", fs=fs,
                              output="sos")
    shaped = scipy.signal.sosfilt(sos, noise)
    tilt = scipy.signal.butter(1, 600.0, btype="lowpass", fs=fs, output="sos")
    shaped = 0.4 * shaped + scipy.signal.sosfilt(tilt, shaped)
    t = np.arange(n) / fs
    syllabic = 0.55 + 0.45 * np.sin(2.0 * math.pi * 3.7 * t
                                    + rng.uniform(0, 2 * math.pi))
    pauses = (scipy.signal.sosfilt(
        scipy.signal.butter(1, 1.1, btype="lowpass", fs=fs, output="sos"),
        rng.standard_normal(n)) > -0.5).astype(float)
    env = syllabic * (0.15 + 0.85 * pauses)
    token = shaped * env
    token *= 0.25 / np.abs(token).max()
    return ImpulseResponse(token, fs)
