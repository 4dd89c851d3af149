"""Image-source model for shoebox rooms: enumeration of specular images and
binaural rendering of the direct sound and early reflections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .directivity import (DirectivityDb, HeadShadowParams,
                          angular_distance_deg, direction_from_to,
                          head_shadow_fir, query_fir)
from .dsp import ImpulseResponse
from .room import DirectivityMode, OCTAVE_BANDS_HZ, SceneConfig

BAND_FIR_TAPS = 65  # odd for type-I linear phase: integer group delay, free Nyquist gain
BAND_FIR_GROUP_DELAY = (BAND_FIR_TAPS - 1) // 2


@dataclass
class ImageSource:
    """One mirror image of the source.

    index holds the per-axis (m, parity) mirror coefficients; the image
    position along axis a is (1 - 2p) * source + 2 m L. The number of wall
    hits per axis is |m - p| + |m|, summed into `order`.
    """

    index: tuple
    position: np.ndarray
    order: int
    path_length: float
    band_gains: np.ndarray


def enumerate_images(scene: SceneConfig, order: int,
                     source_index: int = 0) -> list:
    """All image sources with total reflection order <= order, sorted by
    mirror index so downstream summation is reproducible."""
    src = np.asarray(scene.sources[source_index].position)
    rec = np.asarray(scene.receiver.position)
    dims = scene.room.dims_m
    reflectances = scene.room.band_gains()

    axis_candidates = []
    for axis in range(3):
        cands = []
        for p in (0, 1):
            for m in range(-order, order + 2):
                hits = abs(m - p) + abs(m)
                if hits <= order:
                    coord = (1 - 2 * p) * src[axis] + 2 * m * dims[axis]
                    cands.append((m, p, hits, coord))
        axis_candidates.append(cands)

    images = []
    for mx, px, hx, cx in axis_candidates[0]:
        for my, py, hy, cy in axis_candidates[1]:
            if hx + hy > order:
                continue
            for mz, pz, hz, cz in axis_candidates[2]:
                total = hx + hy + hz
                if total > order:
                    continue
                pos = np.array([cx, cy, cz])
                path = float(np.linalg.norm(pos - rec))
                if path == 0.0:
                    raise ValueError("image coincides with the receiver")
                gains = reflectances ** total
                images.append(ImageSource(
                    index=((mx, px), (my, py), (mz, pz)),
                    position=pos, order=total,
                    path_length=path, band_gains=gains))
    images.sort(key=lambda im: im.index)
    return images


def band_gain_fir(band_gains: np.ndarray, fs: float,
                  taps: int = BAND_FIR_TAPS) -> np.ndarray:
    """Linear-phase FIR matching per-octave magnitudes.

    The target curve interpolates the octave gains linearly over log
    frequency and holds the edge bands flat towards DC and Nyquist. Group
    delay is (taps - 1) / 2 samples exactly.
    """
    bands = np.asarray(OCTAVE_BANDS_HZ)
    gains = np.asarray(band_gains, dtype=np.float64)
    grid = np.linspace(0.0, 1.0, 257)
    freqs = grid * fs / 2.0
    logf = np.log(np.maximum(freqs, 1e-3))
    target = np.interp(logf, np.log(bands), gains,
                       left=gains[0], right=gains[-1])
    return scipy.signal.firwin2(taps, grid, target)


@dataclass
class EarlyRender:
    """Direct sound (order 0) and reflections (orders >= 1) as separate
    two-channel stems at the scene's sample rate."""

    direct: ImpulseResponse
    reflections: ImpulseResponse
    dropped: int
    subsample_remainders: np.ndarray


def _mirror_exit_direction(image: ImageSource, receiver_pos,
                           image_pos) -> np.ndarray:
    """Emission direction at the real source: the image->receiver ray folded
    back through the mirror sequence (component sign flips per axis with odd
    total hits)."""
    v = np.asarray(receiver_pos, dtype=np.float64) - image_pos
    flips = np.array([(-1.0) ** (abs(m - p) + abs(m))
                      for (m, p) in image.index])
    return v * flips


def _source_fir(scene: SceneConfig, source_index: int, image: ImageSource,
                source_db, head_shadow: HeadShadowParams | None) -> np.ndarray:
    src_cfg = scene.sources[source_index]
    mode = src_cfg.directivity_mode
    if mode is DirectivityMode.OMNI:
        return np.array([1.0])
    exit_world = _mirror_exit_direction(image, scene.receiver.position,
                                        image.position)
    src_pos = np.asarray(src_cfg.position)
    az_el = direction_from_to(src_pos, src_cfg.orientation,
                              src_pos + exit_world)
    if mode is DirectivityMode.MEASURED:
        if source_db is None:
            raise ValueError("measured directivity requested without a database")
        return query_fir(source_db, az_el)[0]
    params = head_shadow or HeadShadowParams()
    angle = angular_distance_deg(az_el, (0.0, 0.0))
    return head_shadow_fir(params, angle, scene.sample_rate)[0]


def render_early(scene: SceneConfig, images: list, hrir_db: DirectivityDb,
                 source_db: DirectivityDb | None = None,
                 head_shadow: HeadShadowParams | None = None,
                 source_index: int = 0,
                 ir_length: int | None = None) -> EarlyRender:
    """Spatialize every image source into a two-ear early response.

    Per image: nearest-sample placement at path_length / c (the sub-sample
    remainder is reported, not rendered), amplitude 1 / path_length, and a
    kernel of source-directivity FIR (queried at the mirrored exit angle),
    wall reflection FIR (skipped for the direct path) and the HRIR for the
    arrival angle at the receiver. Images whose kernel would overrun
    ir_length are dropped and counted.
    """
    if hrir_db.channels != 2:
        raise ValueError("receiver database must have two channels")
    if hrir_db.sample_rate != scene.sample_rate:
        raise ValueError("HRIR database sample rate differs from the scene")
    if source_db is not None and source_db.sample_rate != scene.sample_rate:
        raise ValueError("source database sample rate differs from the scene")

    fs = scene.sample_rate
    c = scene.room.speed_of_sound
    rec = scene.receiver

    delays = np.array([im.path_length / c * fs for im in images])
    if ir_length is None:
        ir_length = int(np.ceil(delays.max())) + BAND_FIR_TAPS + \
            hrir_db.fir_length + 256

    direct = np.zeros((2, ir_length))
    reflections = np.zeros((2, ir_length))
    dropped = 0
    remainders = np.zeros(len(images))

    for i, image in enumerate(images):
        arrival = direction_from_to(rec.position, rec.orientation,
                                    image.position)
        hrir = query_fir(hrir_db, arrival)
        src_fir = _source_fir(scene, source_index, image, source_db,
                              head_shadow)
        kernel = src_fir
        group_delay = 0
        if image.order > 0:
            kernel = scipy.signal.fftconvolve(kernel,
                                              band_gain_fir(image.band_gains, fs))
            group_delay = BAND_FIR_GROUP_DELAY
        start = int(round(delays[i] - group_delay))
        remainders[i] = delays[i] - group_delay - start
        if start < 0:
            dropped += 1
            continue
        amp = 1.0 / image.path_length
        target = direct if image.order == 0 else reflections
        fit = True
        ear_kernels = []
        for ch in range(2):
            k = scipy.signal.fftconvolve(kernel, hrir[ch]) * amp
            if start + len(k) > ir_length:
                fit = False
                break
            ear_kernels.append(k)
        if not fit:
            dropped += 1
            continue
        for ch, k in enumerate(ear_kernels):
            target[ch, start:start + len(k)] += k

    return EarlyRender(
        direct=ImpulseResponse(direct, fs),
        reflections=ImpulseResponse(reflections, fs),
        dropped=dropped,
        subsample_remainders=remainders,
    )
