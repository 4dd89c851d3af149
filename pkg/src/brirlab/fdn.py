"""Feedback delay network late reverberation, spatialized through virtual
reverberation sources around the receiver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .directivity import (DirectivityDb, _unit_vector, direction_from_to,
                          query_fir)
from .dsp import ImpulseResponse, edc
from .exceptions import NumericError
from .ism import band_gain_fir
from .room import OCTAVE_BANDS_HZ, RoomModel

# Attenuation FIRs need finer low-frequency resolution than the reflection
# filters: 257 taps keeps per-octave decay targets within a few percent.
ATTENUATION_FIR_TAPS = 257
ATTENUATION_FIR_GROUP_DELAY = (ATTENUATION_FIR_TAPS - 1) // 2


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _next_prime(n: int) -> int:
    while not _is_prime(n):
        n += 1
    return n


def vrs_ring_directions(n: int) -> np.ndarray:
    """Fixed spherical covering: two stacked rings at +/-30 degree elevation,
    azimuths evenly spaced with the lower ring staggered by half a step."""
    n_upper = (n + 1) // 2
    n_lower = n - n_upper
    dirs = []
    for i in range(n_upper):
        dirs.append((-180.0 + i * 360.0 / n_upper, 30.0))
    for i in range(n_lower):
        step = 360.0 / n_lower
        dirs.append((-180.0 + (i + 0.5) * step, -30.0))
    return np.array(dirs)


@dataclass
class FdnConfig:
    """Late-reverb recursion design.

    delays_samples are distinct primes spread over [0.5x, 2x] the room's mean
    free path; the feedback matrix is orthogonal; attenuation_firs realize the
    per-octave target magnitude 10**(-3 * loop_delay / (fs * T60(f))) per
    channel, where loop_delay counts the delay line plus the filter's own
    group delay.
    """

    n_channels: int
    delays_samples: np.ndarray
    feedback_matrix: np.ndarray
    t60_by_octave: dict
    vrs_directions: np.ndarray
    sample_rate: float
    seed: int
    attenuation_firs: np.ndarray = field(default=None)

    def __post_init__(self):
        self.delays_samples = np.asarray(self.delays_samples, dtype=np.int64)
        self.feedback_matrix = np.asarray(self.feedback_matrix,
                                          dtype=np.float64)
        self.vrs_directions = np.asarray(self.vrs_directions,
                                         dtype=np.float64)
        if len(self.delays_samples) != self.n_channels:
            raise ValueError("one delay per channel required")
        if len(set(self.delays_samples.tolist())) != self.n_channels:
            raise ValueError("delays must be pairwise distinct")
        if self.feedback_matrix.shape != (self.n_channels, self.n_channels):
            raise ValueError("feedback matrix must be n x n")
        err = np.abs(self.feedback_matrix.T @ self.feedback_matrix
                     - np.eye(self.n_channels)).max()
        if err > 1e-9:
            raise ValueError(f"feedback matrix not orthogonal (|MtM - I| = {err:g})")
        if len(self.vrs_directions) != self.n_channels:
            raise ValueError("one VRS direction per channel required")


def design_fdn(room: RoomModel, n_channels: int = 24,
               fs: float = 44100.0, seed: int = 0) -> FdnConfig:
    """Deterministic FDN design for a room.

    Delay targets are log-spaced over [0.5x, 2x] the mean free path time with
    a small seeded jitter, then snapped to distinct primes. The feedback
    matrix is the sign-fixed Q factor of a seeded Gaussian matrix.
    """
    if n_channels < 4:
        raise ValueError("n_channels must be >= 4")
    rng = np.random.default_rng(seed)
    mfp_samples = room.mean_free_path_s * fs
    targets = np.geomspace(0.5 * mfp_samples, 2.0 * mfp_samples, n_channels)
    targets = targets * rng.uniform(0.98, 1.02, size=n_channels)
    delays = []
    for t in targets:
        p = _next_prime(max(2, int(round(t))))
        while p in delays:
            p = _next_prime(p + 1)
        delays.append(p)
    delays = np.array(sorted(delays))

    a = rng.standard_normal((n_channels, n_channels))
    q, r = np.linalg.qr(a)
    matrix = q @ np.diag(np.sign(np.diag(r)))

    t60 = {float(f): room.t30_by_octave[f] for f in OCTAVE_BANDS_HZ}
    firs = np.array([
        band_gain_fir(
            _attenuation_gains(d + ATTENUATION_FIR_GROUP_DELAY, t60, fs),
            fs, taps=ATTENUATION_FIR_TAPS)
        for d in delays])
    return FdnConfig(
        n_channels=n_channels,
        delays_samples=delays,
        feedback_matrix=matrix,
        t60_by_octave=t60,
        vrs_directions=vrs_ring_directions(n_channels),
        sample_rate=fs,
        seed=seed,
        attenuation_firs=firs,
    )


def _attenuation_gains(loop_delay: float, t60_by_octave: dict,
                       fs: float) -> np.ndarray:
    return np.array([10.0 ** (-3.0 * loop_delay / (fs * t60_by_octave[f]))
                     for f in OCTAVE_BANDS_HZ])


def couple_ism_to_fdn(images: list, fdn: FdnConfig, room_c: float = 343.0,
                      fs: float | None = None) -> np.ndarray:
    """Distribute first-order image arrivals to FDN inputs as impulses.

    Each first-order image injects, on a seeded round-robin channel, an
    impulse at its arrival sample whose energy equals the image's
    (1/r^2-weighted, band-averaged) energy, so total injected energy matches
    the total first-order image energy exactly.
    """
    fs = fs or fdn.sample_rate
    first_order = [im for im in images if im.order == 1]
    if not first_order:
        return np.zeros((fdn.n_channels, 1))
    rng = np.random.default_rng(fdn.seed + 1)
    perm = rng.permutation(fdn.n_channels)
    max_delay = max(int(round(im.path_length / room_c * fs))
                    for im in first_order)
    injection = np.zeros((fdn.n_channels, max_delay + 1))
    for j, im in enumerate(first_order):
        ch = perm[j % fdn.n_channels]
        t = int(round(im.path_length / room_c * fs))
        amp = math.sqrt(float(np.mean(im.band_gains ** 2))) / im.path_length
        injection[ch, t] += amp
    return injection


def run_fdn(fdn: FdnConfig, injection: np.ndarray,
            length: int | None = None) -> np.ndarray:
    """Run the recursion and return the raw delay-line outputs (n, length).

    Per sample: delay line outputs pass through their attenuation FIRs, mix
    through the orthogonal feedback matrix, and feed back (plus injection)
    into the line inputs. Implemented block-wise (block <= min delay), which
    is sample-exact for delays longer than a block.
    """
    injection = np.atleast_2d(np.asarray(injection, dtype=np.float64))
    if injection.shape[0] != fdn.n_channels:
        raise ValueError("injection channel count must equal n_channels")
    if length is None:
        max_t60 = max(fdn.t60_by_octave.values())
        length = injection.shape[1] + int(1.5 * max_t60 * fdn.sample_rate)

    n = fdn.n_channels
    inj = np.zeros((n, length))
    keep = min(length, injection.shape[1])
    inj[:, :keep] = injection[:, :keep]

    delays = fdn.delays_samples
    taps = fdn.attenuation_firs
    line_in = np.zeros((n, length))
    line_out = np.zeros((n, length))
    zi = np.zeros((n, taps.shape[1] - 1))
    block = int(delays.min())
    pos = 0
    while pos < length:
        end = min(pos + block, length)
        for i in range(n):
            d = delays[i]
            b = end - d
            if b > 0:
                seg = line_in[i, max(pos - d, 0):b]
                line_out[i, end - len(seg):end] = seg
        filtered = np.empty((n, end - pos))
        for i in range(n):
            filtered[i], zi[i] = scipy.signal.lfilter(
                taps[i], [1.0], line_out[i, pos:end], zi=zi[i])
        line_in[:, pos:end] = fdn.feedback_matrix @ filtered + inj[:, pos:end]
        pos = end
    return line_out


def render_late(fdn: FdnConfig, injection: np.ndarray, hrir_db: DirectivityDb,
                receiver_orientation: tuple = (0.0, 0.0),
                length: int | None = None) -> ImpulseResponse:
    """Run the FDN and spatialize each line through the HRIR of its virtual
    reverberation source, summing per ear."""
    if hrir_db.channels != 2:
        raise ValueError("receiver database must have two channels")
    line_out = run_fdn(fdn, injection, length)
    length = line_out.shape[1]
    n = fdn.n_channels

    out = np.zeros((2, length))
    origin = np.zeros(3)
    for i in range(n):
        az, el = fdn.vrs_directions[i]
        # VRS directions are fixed in the world frame; rotate into the head frame
        arrival = direction_from_to(origin, receiver_orientation,
                                    _unit_vector(az, el))
        hrir = query_fir(hrir_db, arrival)
        for ch in range(2):
            y = scipy.signal.fftconvolve(line_out[i], hrir[ch])[:length]
            out[ch] += y
    return ImpulseResponse(out, fdn.sample_rate)


def calibrate_late_level(early: ImpulseResponse, late: ImpulseResponse,
                         transition_ms: float,
                         window_ms: float = 10.0) -> float:
    """Gain for the late part so the combined energy decay has no step at the
    transition: sqrt of the ratio between the early part's mean energy just
    before the transition and the late part's just after."""
    if early.sample_rate != late.sample_rate:
        raise ValueError("early and late parts must share a sample rate")
    fs = early.sample_rate
    t = int(round(transition_ms * fs / 1000.0))
    w = max(1, int(round(window_ms * fs / 1000.0)))
    lo = max(0, t - w)
    e_early = float(np.sum(early.samples[:, lo:t] ** 2)) / max(1, t - lo)
    seg = late.samples[:, t:t + w]
    if seg.size == 0 or not np.any(seg):
        raise NumericError("late part is silent around the transition")
    e_late = float(np.sum(seg ** 2)) / seg.shape[1]
    if e_early == 0.0:
        raise NumericError("early part is silent before the transition")
    return math.sqrt(e_early / e_late)


def interaural_coherence(ir: ImpulseResponse, from_ms: float = 100.0,
                         max_lag_ms: float = 1.0) -> float:
    """Peak normalized cross-correlation between ears of the tail beyond
    from_ms, searched over +/- max_lag_ms."""
    if ir.channels != 2:
        raise ValueError("two channels required")
    start = int(round(from_ms * ir.sample_rate / 1000.0))
    left = ir.samples[0, start:]
    right = ir.samples[1, start:]
    denom = math.sqrt(float(np.sum(left ** 2) * np.sum(right ** 2)))
    if denom == 0.0:
        raise NumericError("silent tail")
    lag = int(round(max_lag_ms * ir.sample_rate / 1000.0))
    full = scipy.signal.fftconvolve(left, right[::-1])
    center = len(right) - 1
    window = full[center - lag:center + lag + 1]
    return float(np.abs(window).max() / denom)
