"""Full BRIR assembly, direct-sound extraction, and regularized inverse
filtering that maps a simulated direct sound onto a measured reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .directivity import DirectivityDb, HeadShadowParams
from .dsp import (ImpulseResponse, Spectrum, hann_flank_window, next_fft_size,
                  savitzky_golay_smooth)
from .exceptions import NumericError
from .fdn import calibrate_late_level, couple_ism_to_fdn, design_fdn, render_late
from .ism import enumerate_images, render_early
from .room import DirectivityMode, SceneConfig, validate_scene

METHOD_SRC_DIR = "Src-Dir"
METHOD_MODEL_DIR = "Model-Dir"
METHOD_OMNI_DIR = "Omni-Dir"
METHOD_MEAS = "Meas."
METHOD_MEAS_DS = "Meas. DS"
DS_SUFFIX = " DS"

DIRECT_WINDOW_MS = 3.0
DIRECT_WINDOW_FLANK_TAPS = 32
PASSBAND_HZ = (20.0, 20000.0)
OUT_OF_BAND_ALPHA = 10.0 ** (120.0 / 20.0)
SG_WINDOW_BINS = 65
SG_POLY_ORDER = 3


@dataclass
class Brir:
    """Two-channel room response with optional direct/early/late stems.

    Stems are disjoint ("early" holds reflections only) and sum to the
    composite.
    """

    ir: ImpulseResponse
    parts: dict | None = None
    method: str = ""
    source_id: str = ""

    def __post_init__(self):
        if self.ir.channels != 2:
            raise ValueError("a BRIR must have two channels")
        if self.parts is not None:
            total = np.zeros_like(self.ir.samples)
            for stem in self.parts.values():
                if stem.sample_rate != self.ir.sample_rate:
                    raise ValueError("stem sample rate differs from composite")
                total[:, :stem.n_samples] += stem.samples
            scale = np.abs(self.ir.samples).max()
            if scale > 0 and np.abs(total - self.ir.samples).max() > 1e-6 * scale:
                raise ValueError("stems do not sum to the composite")


def detect_direct_onset(channel: np.ndarray, rel_threshold: float = 0.1,
                        min_level_db: float = -6.0,
                        min_drop_db: float = 0.1,
                        floor_db: float = -120.0) -> int:
    """Sample index where the energy decay first drops steeply.

    Works on the backward-integrated energy: the onset is the first sample
    whose per-sample decay decrement exceeds rel_threshold of the largest
    decrement, which keeps the detector on the direct sound even when a later
    reflection is stronger in amplitude. A genuine direct sound sits where
    nearly all energy is still ahead, so candidates must lie above
    min_level_db and drop at least min_drop_db; noise-only input clears
    neither gate and raises. Drops into digital silence are floor-capped:
    they stay valid candidates but do not inflate the threshold.
    """
    h = np.asarray(channel, dtype=np.float64)
    energy = h * h
    total = energy.sum()
    if total <= 0.0:
        raise NumericError("cannot locate an onset in an all-zero signal")
    tail = np.cumsum(energy[::-1])[::-1] / total
    floor = 10.0 ** (floor_db / 10.0)
    level_db = 10.0 * np.log10(np.maximum(tail, floor))
    dec = level_db[:-1] - level_db[1:]
    if len(dec) == 0:
        raise NumericError("signal too short for onset detection")
    gated = level_db[:-1] >= min_level_db
    if not gated.any():
        raise NumericError("no signal above the level gate")
    uncapped = gated & (tail[1:] > floor * (1.0 + 1e-9))
    ref_max = dec[uncapped].max() if uncapped.any() else 0.0
    threshold = max(rel_threshold * ref_max, min_drop_db)
    hits = np.flatnonzero(gated & (dec > threshold))
    if len(hits) == 0:
        raise NumericError("no qualifying energy drop; input looks like noise")
    return int(hits[0])


@dataclass
class DirectExcerpt:
    """Windowed direct-sound excerpt plus everything it was cut from.

    excerpt starts at absolute sample `start` of the original response; the
    window plateau begins flank_taps samples in (at the detected onset).
    excerpt + remainder reassemble the original exactly.
    """

    excerpt: ImpulseResponse
    remainder: ImpulseResponse
    start: int
    onset: int
    window: np.ndarray


def extract_direct(ir: ImpulseResponse, onset: int,
                   window_ms: float = DIRECT_WINDOW_MS,
                   flank_taps: int = DIRECT_WINDOW_FLANK_TAPS) -> DirectExcerpt:
    """Cut the direct sound with a unity-plateau window whose plateau starts
    at `onset`; the rising flank sits just before the onset."""
    window = hann_flank_window(window_ms, flank_taps, ir.sample_rate)
    start = onset - flank_taps
    if start < 0:
        raise ValueError("window would start before the response")
    if start + len(window) > ir.n_samples:
        raise ValueError("window overruns the end of the response")
    excerpt = ir.samples[:, start:start + len(window)] * window
    remainder = ir.samples.copy()
    remainder[:, start:start + len(window)] -= excerpt
    return DirectExcerpt(
        excerpt=ImpulseResponse(excerpt, ir.sample_rate),
        remainder=ImpulseResponse(remainder, ir.sample_rate),
        start=start, onset=onset, window=window,
    )


@dataclass
class CompensationDesign:
    """Regularized spectral inverse of a direct-sound excerpt.

    inverse_spectrum(f) = H*(f) / (|H|^2 + beta(f)) with
    beta = alpha + sigma^2: alpha is zero inside the passband and a large
    constant outside; sigma is the nonnegative part of the smoothed-minus-raw
    magnitude difference, so only notch regions are regularized. The FIR
    realization is the centered inverse transform; band edges are tapered so
    out-of-band leakage stays low off the design grid.
    """

    sample_rate: float
    fft_size: int
    freqs: np.ndarray
    magnitude: np.ndarray          # (channels, bins), peak-normalized |H|
    sigma: np.ndarray              # (channels, bins)
    beta: np.ndarray               # (channels, bins)
    inverse_spectrum: np.ndarray   # (channels, bins), complex
    inverse_fir: np.ndarray        # (channels, fft_size)
    centering_delay: int
    passband: tuple = PASSBAND_HZ

    def dump_table(self, path, channel: int = 0) -> None:
        """Diagnostics: frequency, |H|, sigma, beta columns as a text table."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{'freq_hz':>12} {'mag':>14} {'sigma':>14} {'beta':>14}\n")
            for f, m, s, b in zip(self.freqs, self.magnitude[channel],
                                  self.sigma[channel], self.beta[channel]):
                fh.write(f"{f:12.2f} {m:14.6e} {s:14.6e} {b:14.6e}\n")


def _band_edge_taper(freqs: np.ndarray, passband: tuple,
                     rise_hz: float = 100.0,
                     fall_hz: float = 800.0) -> np.ndarray:
    """Raised-cosine roll-off just inside the passband edges.

    The taper reaches zero exactly at the edges, so the realized FIR carries
    no designed content outside the passband and its between-bin leakage in
    the stop bands stays far below the regularized design values.
    """
    lo, hi = passband
    t = np.ones_like(freqs)
    rise_lo, rise_hi = lo, lo + rise_hz
    fall_lo, fall_hi = hi - fall_hz, hi
    t[freqs < rise_lo] = 0.0
    ramp = (freqs >= rise_lo) & (freqs < rise_hi)
    t[ramp] = 0.5 - 0.5 * np.cos(np.pi * (freqs[ramp] - rise_lo)
                                 / (rise_hi - rise_lo))
    t[freqs > fall_hi] = 0.0
    fall = (freqs > fall_lo) & (freqs <= fall_hi)
    t[fall] = 0.5 + 0.5 * np.cos(np.pi * (freqs[fall] - fall_lo)
                                 / (fall_hi - fall_lo))
    return t


def design_inverse(excerpt: ImpulseResponse,
                   passband: tuple = PASSBAND_HZ,
                   out_of_band_alpha: float = OUT_OF_BAND_ALPHA,
                   sg_window_bins: int = SG_WINDOW_BINS,
                   sg_poly_order: int = SG_POLY_ORDER) -> CompensationDesign:
    """Per-channel regularized inverse of a direct-sound excerpt."""
    if not np.any(excerpt.samples):
        raise NumericError("cannot invert an all-zero excerpt")
    fs = excerpt.sample_rate
    fft_size = next_fft_size(excerpt.n_samples)
    freqs = np.fft.rfftfreq(fft_size, d=1.0 / fs)
    n_ch = excerpt.channels

    in_band = (freqs >= passband[0]) & (freqs <= passband[1])
    alpha = np.where(in_band, 0.0, out_of_band_alpha)
    taper = _band_edge_taper(freqs, passband)
    centering = fft_size // 2

    magnitude = np.empty((n_ch, len(freqs)))
    sigma = np.empty_like(magnitude)
    beta = np.empty_like(magnitude)
    inv_spec = np.empty((n_ch, len(freqs)), dtype=np.complex128)
    inv_fir = np.empty((n_ch, fft_size))

    for ch in range(n_ch):
        spec = np.fft.rfft(excerpt.samples[ch], fft_size)
        peak = np.abs(spec).max()
        if peak == 0.0:
            raise NumericError("channel has no spectral content")
        h = spec / peak
        mag = np.abs(h)
        smoothed = savitzky_golay_smooth(mag, sg_window_bins, sg_poly_order)
        s = np.where(smoothed >= mag, smoothed - mag, 0.0)
        b = alpha + s * s
        inv = np.conj(h) / (mag * mag + b) / peak
        magnitude[ch] = mag
        sigma[ch] = s
        beta[ch] = b
        inv_spec[ch] = inv
        inv_fir[ch] = np.roll(np.fft.irfft(inv * taper, fft_size), centering)

    return CompensationDesign(
        sample_rate=fs, fft_size=fft_size, freqs=freqs,
        magnitude=magnitude, sigma=sigma, beta=beta,
        inverse_spectrum=inv_spec, inverse_fir=inv_fir,
        centering_delay=centering, passband=passband,
    )


def compensate_direct(sim: Brir, meas_direct: DirectExcerpt,
                      design: CompensationDesign | None = None) -> Brir:
    """Replace the simulated direct stem with
    sim_direct * meas_direct * inverse(sim_direct), per ear.

    The convolution delays introduced by the measured excerpt framing and the
    inverse's centering delay are removed so the onset time of the direct
    stem is preserved; early and late stems pass through untouched.
    """
    if sim.parts is None or "direct" not in sim.parts:
        raise ValueError("simulated BRIR must carry a direct stem")
    if meas_direct.excerpt.sample_rate != sim.ir.sample_rate:
        raise ValueError("sample rate mismatch between simulation and reference")

    fs = sim.ir.sample_rate
    sim_direct = sim.parts["direct"]
    onset = detect_direct_onset(
        sim_direct.samples[int(np.argmax(np.max(np.abs(sim_direct.samples),
                                                axis=1)))])
    flank = meas_direct.onset - meas_direct.start
    sim_excerpt = extract_direct(sim_direct, onset,
                                 flank_taps=flank)
    if design is None:
        design = design_inverse(sim_excerpt.excerpt)

    n = sim_direct.n_samples
    # the excerpt's internal onset offset cancels against the inverse of the
    # identically framed simulated excerpt, leaving only the centering delay
    shift = design.centering_delay
    new_direct = np.zeros_like(sim_direct.samples)
    for ch in range(2):
        y = scipy.signal.fftconvolve(sim_direct.samples[ch],
                                     meas_direct.excerpt.samples[ch])
        y = scipy.signal.fftconvolve(y, design.inverse_fir[ch])
        seg = y[shift:shift + n]
        new_direct[ch, :len(seg)] = seg

    parts = dict(sim.parts)
    parts["direct"] = ImpulseResponse(new_direct, fs)
    total = np.zeros_like(sim.ir.samples)
    for stem in parts.values():
        total[:, :stem.n_samples] += stem.samples
    method = sim.method + DS_SUFFIX if sim.method else DS_SUFFIX.strip()
    return Brir(ir=ImpulseResponse(total, fs), parts=parts,
                method=method, source_id=sim.source_id)


def make_meas_ds(measured: Brir, simulated: Brir) -> Brir:
    """Measured BRIR with its direct sound replaced by the compensated direct
    sound of the simulation (a control condition for listening tests).

    The replacement is the compensate_direct output of the simulated stems
    against the measured direct excerpt, spliced into the measured
    early/late stems.
    """
    if measured.parts is None or "direct" not in measured.parts:
        raise ValueError("measured BRIR must carry stems")
    meas_direct = measured.parts["direct"]
    onset = detect_direct_onset(meas_direct.samples[0])
    meas_excerpt = extract_direct(meas_direct, onset)
    compensated = compensate_direct(simulated, meas_excerpt)
    parts = dict(measured.parts)
    new_direct = compensated.parts["direct"]
    if new_direct.n_samples < meas_direct.n_samples:
        padded = np.zeros_like(meas_direct.samples)
        padded[:, :new_direct.n_samples] = new_direct.samples
        new_direct = ImpulseResponse(padded, measured.ir.sample_rate)
    else:
        new_direct = ImpulseResponse(
            new_direct.samples[:, :meas_direct.n_samples],
            measured.ir.sample_rate)
    parts["direct"] = new_direct
    total = np.zeros_like(measured.ir.samples)
    for stem in parts.values():
        total[:, :stem.n_samples] += stem.samples
    return Brir(ir=ImpulseResponse(total, measured.ir.sample_rate),
                parts=parts, method=METHOD_MEAS_DS,
                source_id=measured.source_id)


def synthesize_brir(scene: SceneConfig,
                    method: str = METHOD_OMNI_DIR,
                    hrir_db: DirectivityDb | None = None,
                    source_db: DirectivityDb | None = None,
                    head_shadow: HeadShadowParams | None = None,
                    source_index: int = 0,
                    length_s: float | None = None) -> Brir:
    """Render a full BRIR: image-source early part, FDN late part, calibrated
    and summed into direct/early/late stems."""
    problems = validate_scene(scene)
    if problems:
        raise ValueError("invalid scene: " + "; ".join(problems))
    if hrir_db is None:
        raise ValueError("an HRIR database is required")

    src = scene.sources[source_index]
    if method == METHOD_SRC_DIR:
        if source_db is None:
            raise ValueError("Src-Dir rendering requires a source directivity "
                             "database")
        src.directivity_mode = DirectivityMode.MEASURED
    elif method == METHOD_MODEL_DIR:
        src.directivity_mode = DirectivityMode.HEAD_SHADOW
    elif method == METHOD_OMNI_DIR:
        src.directivity_mode = DirectivityMode.OMNI
    else:
        raise ValueError(f"unknown method {method!r}")

    fs = scene.sample_rate
    c = scene.room.speed_of_sound
    max_t60 = max(scene.room.t30_by_octave.values())
    images = enumerate_images(scene, scene.ism_order, source_index)
    # The tail level is anchored where the image set is still dense: just
    # after the last first-order arrival. Anchoring at the latest high-order
    # image instead would match the tail to the artificially thinned-out end
    # of the truncated image cloud and drag the composite decay time down.
    anchor_order = 1 if scene.ism_order >= 1 else 0
    transition_ms = max(im.path_length for im in images
                        if im.order <= anchor_order) / c * 1000.0 + 5.0
    latest_image_ms = max(im.path_length for im in images) / c * 1000.0
    if length_s is None:
        length_s = latest_image_ms / 1000.0 + 1.5 * max_t60
    length = int(round(length_s * fs))

    early = render_early(scene, images, hrir_db, source_db=source_db,
                         head_shadow=head_shadow, source_index=source_index,
                         ir_length=length)
    fdn = design_fdn(scene.room, scene.fdn_channels, fs, scene.seed)
    injection = couple_ism_to_fdn(images, fdn, room_c=c, fs=fs)
    late = render_late(fdn, injection, hrir_db,
                       receiver_orientation=scene.receiver.orientation,
                       length=length)
    early_sum = ImpulseResponse(early.direct.samples
                                + early.reflections.samples, fs)
    gain = calibrate_late_level(early_sum, late, transition_ms)
    late_cal = ImpulseResponse(late.samples * gain, fs)

    composite = (early.direct.samples + early.reflections.samples
                 + late_cal.samples)
    return Brir(
        ir=ImpulseResponse(composite, fs),
        parts={"direct": early.direct, "early": early.reflections,
               "late": late_cal},
        method=method,
        source_id=f"S{source_index + 1}",
    )
