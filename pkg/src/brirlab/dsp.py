"""Shared signal-processing primitives.

Everything operates on :class:`ImpulseResponse`, which carries any sampled
waveform (impulse responses, sweeps, speech tokens) as a ``(channels, n)``
float64 array plus a sample rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.io.wavfile
import scipy.signal

from .exceptions import NumericError


@dataclass
class ImpulseResponse:
    """Sampled mono or two-channel waveform.

    samples has shape (channels, n); a 1-D array is promoted to one channel.
    All samples must be finite and the sample rate positive.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.float64)
        if a.ndim == 1:
            a = a[np.newaxis, :]
        if a.ndim != 2:
            raise ValueError("samples must be 1-D or 2-D")
        if a.shape[0] not in (1, 2):
            raise ValueError(f"expected 1 or 2 channels, got {a.shape[0]}")
        if not np.all(np.isfinite(a)):
            raise ValueError("samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")
        self.samples = np.ascontiguousarray(a)

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate

    def channel(self, index: int) -> np.ndarray:
        return self.samples[index]

    def copy(self) -> "ImpulseResponse":
        return ImpulseResponse(self.samples.copy(), self.sample_rate)


def next_fft_size(n: int, minimum: int = 2048) -> int:
    """Power of two >= 4*n, at least `minimum`; the analysis grid used for
    direct-sound spectra."""
    size = minimum
    while size < 4 * n:
        size *= 2
    return size


@dataclass
class Spectrum:
    """One-sided spectrum of a real signal (rfft convention)."""

    bins: np.ndarray
    fft_size: int
    sample_rate: float

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        if self.bins.shape[-1] != self.fft_size // 2 + 1:
            raise ValueError("bin count must be fft_size//2 + 1")

    @property
    def freqs(self) -> np.ndarray:
        return np.fft.rfftfreq(self.fft_size, d=1.0 / self.sample_rate)

    @classmethod
    def from_signal(cls, x: np.ndarray, sample_rate: float,
                    fft_size: int | None = None) -> "Spectrum":
        x = np.asarray(x, dtype=np.float64)
        if fft_size is None:
            fft_size = next_fft_size(len(x))
        return cls(np.fft.rfft(x, fft_size), fft_size, sample_rate)

    def to_signal(self) -> np.ndarray:
        return np.fft.irfft(self.bins, self.fft_size)


def convolve(x: ImpulseResponse, h: ImpulseResponse) -> ImpulseResponse:
    """Full linear convolution; output length len(x)+len(h)-1.

    Mono/stereo combinations broadcast the mono side across both channels.
    """
    if x.sample_rate != h.sample_rate:
        raise ValueError(
            f"sample rate mismatch: {x.sample_rate} vs {h.sample_rate}")
    n_out = max(x.channels, h.channels)
    out = np.empty((n_out, x.n_samples + h.n_samples - 1))
    for c in range(n_out):
        xc = x.samples[min(c, x.channels - 1)]
        hc = h.samples[min(c, h.channels - 1)]
        out[c] = scipy.signal.fftconvolve(xc, hc, mode="full")
    return ImpulseResponse(out, x.sample_rate)


def edc(h: np.ndarray) -> np.ndarray:
    """Normalized backward-integrated squared impulse response in dB.

    edc[0] = 0 dB, nonincreasing; trailing all-zero region maps to -inf.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1:
        raise ValueError("edc expects a single channel")
    energy = h * h
    total = energy.sum()
    if total <= 0.0:
        raise NumericError("edc of all-zero signal")
    tail = np.cumsum(energy[::-1])[::-1]
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(tail / total)


def octave_band_filter(ir: ImpulseResponse, center_hz: float) -> ImpulseResponse:
    """Octave band-pass (-3 dB at center/sqrt(2) and center*sqrt(2)).

    Realized as an 8th-order Butterworth applied single-pass; phase
    distortion is acceptable for the energy/decay metrics that consume it.
    """
    nyq = ir.sample_rate / 2.0
    if not (0.0 < center_hz < nyq / math.sqrt(2.0)):
        raise ValueError(f"band center {center_hz} Hz outside (0, fs/2/sqrt2)")
    lo = center_hz / math.sqrt(2.0)
    hi = center_hz * math.sqrt(2.0)
    sos = scipy.signal.butter(4, [lo, hi], btype="bandpass",
                              fs=ir.sample_rate, output="sos")
    out = scipy.signal.sosfilt(sos, ir.samples, axis=1)
    return ImpulseResponse(out, ir.sample_rate)


def lowpass_butter2(ir: ImpulseResponse, fc_hz: float) -> ImpulseResponse:
    """2nd-order Butterworth low-pass (-3.01 dB at fc)."""
    if not (0.0 < fc_hz < ir.sample_rate / 2.0):
        raise ValueError(f"cutoff {fc_hz} Hz outside (0, fs/2)")
    sos = scipy.signal.butter(2, fc_hz, btype="lowpass",
                              fs=ir.sample_rate, output="sos")
    out = scipy.signal.sosfilt(sos, ir.samples, axis=1)
    return ImpulseResponse(out, ir.sample_rate)


def hann_flank_window(total_ms: float, flank_taps: int, fs: float) -> np.ndarray:
    """Unity-plateau window with raised-cosine rise/fall of flank_taps samples.

    Total length is round(total_ms * fs / 1000); flank_taps = 0 gives a
    rectangular window.
    """
    n = int(round(total_ms * fs / 1000.0))
    if flank_taps < 0:
        raise ValueError("flank_taps must be >= 0")
    if n < 2 * flank_taps:
        raise ValueError(f"window of {n} samples shorter than two "
                         f"{flank_taps}-tap flanks")
    w = np.ones(n)
    if flank_taps > 0:
        ramp = np.hanning(2 * flank_taps)
        w[:flank_taps] = ramp[:flank_taps]
        w[n - flank_taps:] = ramp[flank_taps:]
    return w


def savitzky_golay_smooth(magnitude: np.ndarray, window_bins: int,
                          poly_order: int) -> np.ndarray:
    """Least-squares polynomial smoothing of a magnitude spectrum.

    Reproduces exactly any input that is a polynomial of degree <= poly_order.
    """
    if window_bins % 2 != 1 or window_bins <= poly_order:
        raise ValueError("window_bins must be odd and > poly_order")
    if len(magnitude) < window_bins:
        raise ValueError("input shorter than smoothing window")
    return scipy.signal.savgol_filter(np.asarray(magnitude, dtype=np.float64),
                                      window_bins, poly_order, mode="interp")


def resample(ir: ImpulseResponse, target_fs: float) -> ImpulseResponse:
    """Band-limited polyphase resampling. Same-rate input passes through
    bit-identically.

    The anti-aliasing kernel keeps the transition band inside the top 10 % of
    the lower rate's Nyquist range, so the passband below 0.9 Nyquist stays
    flat within 0.1 dB.
    """
    if target_fs <= 0:
        raise ValueError("target_fs must be > 0")
    if target_fs == ir.sample_rate:
        return ir.copy()
    ratio = Fraction(target_fs).limit_denominator(10_000) / \
        Fraction(ir.sample_rate).limit_denominator(10_000)
    up, down = ratio.numerator, ratio.denominator
    max_rate = max(up, down)
    numtaps = 2 * 46 * max_rate + 1
    kernel = scipy.signal.firwin(numtaps, 0.95 / max_rate,
                                 window=("kaiser", 9.0))
    out = scipy.signal.resample_poly(ir.samples, up, down, axis=1,
                                     window=kernel)
    return ImpulseResponse(out, target_fs)


def read_wav(path) -> ImpulseResponse:
    """Read a RIFF WAV (PCM16 or IEEE float32), little-endian, mono or stereo.

    PCM16 is scaled to [-1, 1) by 1/32768; float data is passed through.
    """
    rate, data = scipy.io.wavfile.read(path)
    if data.ndim == 1:
        data = data[:, np.newaxis]
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype}")
    return ImpulseResponse(samples.T, float(rate))


def write_wav(path, ir: ImpulseResponse, fmt: str = "float32") -> None:
    """Write WAV as IEEE float32 (sample-exact round trip) or PCM16."""
    data = ir.samples.T
    if fmt == "float32":
        scipy.io.wavfile.write(path, int(ir.sample_rate),
                               np.ascontiguousarray(data, dtype=np.float32))
    elif fmt == "pcm16":
        clipped = np.clip(data, -1.0, 32767.0 / 32768.0)
        scipy.io.wavfile.write(path, int(ir.sample_rate),
                               np.ascontiguousarray(
                                   np.round(clipped * 32768.0), dtype=np.float64
                               ).astype(np.int16))
    else:
        raise ValueError(f"unknown WAV format {fmt!r}")
