import math

import numpy as np
import pytest

from brirlab.dsp import ImpulseResponse
from brirlab.exceptions import NumericError
from brirlab.loudness import (loudness_lufs, make_speech_shaped_token,
                              normalize_loudness, render_interval)

FS = 44100.0


def _sine(freq, seconds=3.0, fs=FS, amp=1.0):
    t = np.arange(int(seconds * fs)) / fs
    return ImpulseResponse(amp * np.sin(2.0 * math.pi * freq * t), fs)


class TestLoudnessMeter:
    def test_997_full_scale_sine(self):
        # K-weighting is ~0 dB at 997 Hz; a full-scale sine has -3.01 dBFS
        # mean square
        assert loudness_lufs(_sine(997.0)) == pytest.approx(-3.01, abs=0.1)

    def test_997_at_48k(self):
        assert loudness_lufs(_sine(997.0, fs=48000.0)) == \
            pytest.approx(-3.01, abs=0.1)

    def test_gain_homogeneity(self):
        loud = loudness_lufs(_sine(997.0))
        quieter = loudness_lufs(_sine(997.0, amp=10.0 ** (-10.0 / 20.0)))
        assert quieter == pytest.approx(loud - 10.0, abs=0.05)

    def test_silence_below_gate(self):
        silent = ImpulseResponse(np.zeros(int(FS)), FS)
        assert loudness_lufs(silent) == -math.inf

    def test_too_short_errors(self):
        with pytest.raises(ValueError):
            loudness_lufs(ImpulseResponse(np.zeros(1000), FS))

    def test_gating_ignores_long_pauses(self):
        # a loud burst padded with silence: gating keeps the loudness near
        # the burst's own level instead of averaging the silence in
        burst = _sine(997.0, seconds=1.0)
        padded = ImpulseResponse(
            np.concatenate([burst.samples[0], np.zeros(int(3 * FS))]), FS)
        # partial blocks at the burst boundary pull the gated mean down a
        # little; without gating the level would drop by 10 log10(4) = 6 dB
        assert loudness_lufs(padded) == pytest.approx(
            loudness_lufs(burst), abs=1.0)


class TestNormalize:
    def test_hits_target(self):
        out = normalize_loudness(_sine(997.0, amp=0.1), -23.0)
        assert loudness_lufs(out) == pytest.approx(-23.0, abs=0.1)

    def test_clipping_refused(self):
        with pytest.raises(ValueError):
            normalize_loudness(_sine(997.0, amp=0.01), -0.5)


class TestRenderInterval:
    def test_delta_brir_is_scaled_token(self, hrir_db):
        token = make_speech_shaped_token(2.0, FS, seed=0)
        delta = np.zeros((2, 64))
        delta[:, 0] = 1.0
        out = render_interval(token, ImpulseResponse(delta, FS),
                              target_lufs=-23.0)
        assert loudness_lufs(out) == pytest.approx(-23.0, abs=0.1)
        # channels identical and proportional to the token
        lead = out.samples[0][:token.n_samples]
        scale = lead[1000] / token.samples[0][1000]
        np.testing.assert_allclose(lead, token.samples[0] * scale,
                                   atol=1e-9 * np.abs(lead).max())

    def test_any_brir_hits_target(self):
        rng = np.random.default_rng(0)
        token = make_speech_shaped_token(2.0, FS, seed=1)
        tail = rng.standard_normal((2, 8000)) * np.exp(
            -np.arange(8000) / 3000.0) * 0.2
        tail[:, 0] = 1.0
        out = render_interval(token, ImpulseResponse(tail, FS))
        assert loudness_lufs(out) == pytest.approx(-23.0, abs=0.1)

    def test_equal_loudness_different_spectra(self):
        token = make_speech_shaped_token(2.0, FS, seed=2)
        flat = np.zeros((2, 64))
        flat[:, 0] = 1.0
        dark = np.zeros((2, 64))
        dark[:, :16] = 1.0 / 16.0     # crude low-pass
        a = render_interval(token, ImpulseResponse(flat, FS))
        b = render_interval(token, ImpulseResponse(dark, FS))
        la, lb = loudness_lufs(a), loudness_lufs(b)
        assert la == pytest.approx(lb, abs=0.2)
        spec_a = np.abs(np.fft.rfft(a.samples[0][:32768]))
        spec_b = np.abs(np.fft.rfft(b.samples[0][:32768]))
        assert np.linalg.norm(spec_a - spec_b) > 0.01 * np.linalg.norm(spec_a)

    def test_stereo_token_rejected(self):
        token = ImpulseResponse(np.zeros((2, int(FS))), FS)
        brir = ImpulseResponse(np.zeros((2, 10)), FS)
        with pytest.raises(ValueError):
            render_interval(token, brir)


class TestSpeechShapedToken:
    def test_deterministic(self):
        a = make_speech_shaped_token(1.0, FS, seed=7)
        b = make_speech_shaped_token(1.0, FS, seed=7)
        assert np.array_equal(a.samples, b.samples)

    def test_speech_band_energy_dominates(self):
        token = make_speech_shaped_token(2.0, FS, seed=3)
        spec = np.abs(np.fft.rfft(token.samples[0])) ** 2
        freqs = np.fft.rfftfreq(token.n_samples, 1.0 / FS)
        speech = spec[(freqs > 100.0) & (freqs < 6000.0)].sum()
        assert speech / spec.sum() > 0.95
