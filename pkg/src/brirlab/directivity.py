"""Direction-gridded FIR containers for source directivity and receiver HRIRs,
plus the parametric head-shadow source model.

Container layout (documented, replaces external formats): a JSON manifest
(name, channels, sample_rate, fir_length, entry list with azimuth/elevation
and byte offsets) next to a sidecar binary of little-endian float32 FIR taps,
concatenated entry-major then channel-major.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.signal

DEFAULT_SHELF_DEPTH_DB = 20.0
DEFAULT_CROSSOVER_HZ = 1500.0


def _unit_vector(az_deg: float, el_deg: float) -> np.ndarray:
    az = math.radians(az_deg)
    el = math.radians(el_deg)
    return np.array([math.cos(el) * math.cos(az),
                     math.cos(el) * math.sin(az),
                     math.sin(el)])


def angular_distance_deg(a: tuple, b: tuple) -> float:
    """Great-circle angle in degrees between two (az, el) directions."""
    dot = float(np.dot(_unit_vector(*a), _unit_vector(*b)))
    return math.degrees(math.acos(min(1.0, max(-1.0, dot))))


@dataclass
class DirectivityDb:
    """Direction grid with one FIR per direction.

    directions: (n, 2) array of (azimuth, elevation) in degrees.
    firs: (n, channels, taps); channels is 1 for sources, 2 for HRIRs.
    """

    directions: np.ndarray
    firs: np.ndarray
    sample_rate: float
    name: str = ""

    def __post_init__(self):
        self.directions = np.asarray(self.directions, dtype=np.float64)
        self.firs = np.asarray(self.firs, dtype=np.float64)
        if self.directions.ndim != 2 or self.directions.shape[1] != 2:
            raise ValueError("directions must have shape (n, 2)")
        if self.firs.ndim != 3:
            raise ValueError("firs must have shape (n, channels, taps)")
        if len(self.directions) < 1:
            raise ValueError("database needs at least one entry")
        if self.firs.shape[0] != self.directions.shape[0]:
            raise ValueError("directions and firs disagree on entry count")
        if self.firs.shape[1] not in (1, 2):
            raise ValueError("firs must have 1 or 2 channels")
        for i in range(len(self.directions)):
            for j in range(i + 1, len(self.directions)):
                if angular_distance_deg(self.directions[i],
                                        self.directions[j]) <= 0.1:
                    raise ValueError(
                        f"entries {i} and {j} are closer than 0.1 degrees")

    @property
    def channels(self) -> int:
        return self.firs.shape[1]

    @property
    def fir_length(self) -> int:
        return self.firs.shape[2]


def query_fir(db: DirectivityDb, direction: tuple) -> np.ndarray:
    """FIR of the grid point nearest (great-circle) to the requested
    direction; ties break toward lower azimuth, then lower elevation."""
    target = _unit_vector(*direction)
    vecs = np.array([_unit_vector(az, el) for az, el in db.directions])
    dots = np.clip(vecs @ target, -1.0, 1.0)
    dists = np.arccos(dots)
    dmin = dists.min()
    candidates = np.flatnonzero(dists <= dmin + 1e-12)
    best = min(candidates,
               key=lambda i: (db.directions[i][0], db.directions[i][1]))
    return db.firs[best]


def omni_fir() -> np.ndarray:
    """Frequency-independent unit response: a single-tap impulse."""
    return np.array([[1.0]])


@dataclass
class HeadShadowParams:
    """First-order high-shelf stand-in for directional shadowing.

    Attenuation depth grows with off-axis angle as (1 - cos(angle)) / 2,
    reaching shelf_depth_db at 180 degrees. The crossover defaults to
    c / (2 pi radius) when only a radius is given.
    """

    radius_m: float = 0.0364
    shelf_depth_db: float = DEFAULT_SHELF_DEPTH_DB
    crossover_hz: float | None = None
    fir_taps: int = 64

    def __post_init__(self):
        if self.radius_m <= 0:
            raise ValueError("radius_m must be > 0")
        if self.crossover_hz is None:
            self.crossover_hz = 343.0 / (2.0 * math.pi * self.radius_m)
        if self.crossover_hz <= 0:
            raise ValueError("crossover_hz must be > 0")


def _high_shelf_ba(depth_db: float, crossover_hz: float, fs: float):
    """First-order shelf: unity at DC, 10**(-depth/20) toward Nyquist."""
    g = 10.0 ** (-depth_db / 20.0)
    k = math.tan(math.pi * crossover_hz / fs)
    b = np.array([k + g, k - g]) / (k + 1.0)
    a = np.array([1.0, (k - 1.0) / (k + 1.0)])
    return b, a


def head_shadow_fir(params: HeadShadowParams, angle_off_axis_deg: float,
                    fs: float) -> np.ndarray:
    """FIR of the shadow filter at the given off-axis angle.

    On-axis (0 degrees) the response is exactly an impulse; attenuation at any
    frequency above DC increases strictly monotonically with angle.
    """
    if not (0.0 <= angle_off_axis_deg <= 180.0):
        raise ValueError("angle must lie in [0, 180] degrees")
    depth = params.shelf_depth_db * \
        (1.0 - math.cos(math.radians(angle_off_axis_deg))) / 2.0
    if depth == 0.0:
        fir = np.zeros(params.fir_taps)
        fir[0] = 1.0
        return fir[np.newaxis, :]
    b, a = _high_shelf_ba(depth, params.crossover_hz, fs)
    impulse = np.zeros(params.fir_taps)
    impulse[0] = 1.0
    return scipy.signal.lfilter(b, a, impulse)[np.newaxis, :]


def direction_from_to(from_pos, from_orientation, to_pos) -> tuple:
    """(azimuth, elevation) of to_pos as seen from an entity at from_pos
    oriented toward from_orientation = (az, el).

    The local frame is the world frame rotated so +x aligns with the entity's
    forward axis (yaw about z by az, then pitch by el).
    """
    from_pos = np.asarray(from_pos, dtype=np.float64)
    to_pos = np.asarray(to_pos, dtype=np.float64)
    v = to_pos - from_pos
    r = np.linalg.norm(v)
    if r == 0.0:
        raise ValueError("positions coincide")
    az = math.radians(from_orientation[0])
    el = math.radians(from_orientation[1])
    # world -> local: undo yaw, then undo pitch (about the local y axis)
    ca, sa = math.cos(az), math.sin(az)
    yawed = np.array([ca * v[0] + sa * v[1],
                      -sa * v[0] + ca * v[1],
                      v[2]])
    ce, se = math.cos(el), math.sin(el)
    local = np.array([ce * yawed[0] + se * yawed[2],
                      yawed[1],
                      -se * yawed[0] + ce * yawed[2]])
    az_local = math.degrees(math.atan2(local[1], local[0]))
    el_local = math.degrees(math.asin(np.clip(local[2] / r, -1.0, 1.0)))
    return (az_local, el_local)


def save_directivity_db(manifest_path, db: DirectivityDb) -> None:
    """Write manifest JSON plus the float32 tap sidecar (same stem, .f32)."""
    manifest_path = Path(manifest_path)
    sidecar = manifest_path.with_suffix(".f32")
    taps = np.ascontiguousarray(db.firs, dtype="<f4")
    entry_bytes = db.channels * db.fir_length * 4
    manifest = {
        "name": db.name,
        "channels": db.channels,
        "sample_rate": db.sample_rate,
        "fir_length": db.fir_length,
        "data_file": sidecar.name,
        "entries": [
            {"azimuth": float(az), "elevation": float(el),
             "offset": i * entry_bytes}
            for i, (az, el) in enumerate(db.directions)
        ],
    }
    sidecar.write_bytes(taps.tobytes())
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_directivity_db(manifest_path) -> DirectivityDb:
    manifest_path = Path(manifest_path)
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    sidecar = manifest_path.parent / manifest["data_file"]
    raw = np.frombuffer(sidecar.read_bytes(), dtype="<f4")
    n = len(manifest["entries"])
    channels = manifest["channels"]
    taps = manifest["fir_length"]
    if raw.size != n * channels * taps:
        raise ValueError("sidecar size disagrees with manifest")
    entry_bytes = channels * taps * 4
    directions = np.empty((n, 2))
    firs = np.empty((n, channels, taps))
    for i, e in enumerate(manifest["entries"]):
        directions[i] = (e["azimuth"], e["elevation"])
        start = e["offset"] // 4
        firs[i] = raw[start:start + channels * taps].reshape(channels, taps)
        if e["offset"] % entry_bytes != 0:
            raise ValueError("entry offsets must be entry-aligned")
    return DirectivityDb(directions, firs, manifest["sample_rate"],
                         manifest.get("name", ""))


def _fractional_delay_fir(delay_samples: float, taps: int = 63) -> np.ndarray:
    """Hann-windowed sinc fractional delay; integer part included."""
    n = np.arange(taps)
    center = (taps - 1) / 2.0
    x = n - center - delay_samples
    fir = np.sinc(x) * np.hanning(taps)
    return fir


def _grid_directions(az_step: float = 15.0, el_step: float = 15.0,
                     el_limit: float = 60.0) -> np.ndarray:
    dirs = []
    el = -el_limit
    while el <= el_limit + 1e-9:
        az = -180.0
        while az < 180.0 - 1e-9:
            dirs.append((az, el))
            az += az_step
        el += el_step
    return np.array(dirs)


def make_spherical_head_hrir_db(fs: float = 44100.0,
                                head_radius_m: float = 0.0875,
                                az_step: float = 15.0,
                                taps: int = 128,
                                name: str = "spherical-head") -> DirectivityDb:
    """Procedural two-ear HRIR set from a rigid-sphere approximation.

    Each ear gets a Woodworth-style arrival delay plus an angle-dependent
    high-shelf shadow; the base latency (the sinc kernel center) is identical
    for both ears, so interaural time differences come out of the delay model
    alone. A source straight ahead yields exactly symmetric ears.
    """
    c = 343.0
    directions = _grid_directions(az_step=az_step)
    shadow = HeadShadowParams(radius_m=head_radius_m, shelf_depth_db=14.0,
                              fir_taps=32)
    ear_axes = {0: (90.0, 0.0), 1: (-90.0, 0.0)}  # left, right
    firs = np.zeros((len(directions), 2, taps))
    for i, (az, el) in enumerate(directions):
        for ch, ear_dir in ear_axes.items():
            angle = angular_distance_deg((az, el), ear_dir)
            rad = math.radians(angle)
            if rad <= math.pi / 2:
                tau = (head_radius_m / c) * (1.0 - math.cos(rad))
            else:
                tau = (head_radius_m / c) * (1.0 + rad - math.pi / 2)
            kernel = scipy.signal.fftconvolve(
                _fractional_delay_fir(tau * fs, taps=63),
                head_shadow_fir(shadow, angle, fs)[0])
            firs[i, ch, :min(taps, len(kernel))] = kernel[:taps]
    return DirectivityDb(directions, firs, fs, name=name)


def make_speaker_directivity_db(fs: float = 44100.0,
                                az_step: float = 15.0,
                                depth_db: float = 25.0,
                                crossover_hz: float = 2000.0,
                                taps: int = 64,
                                name: str = "two-way-monitor") -> DirectivityDb:
    """Procedural single-channel loudspeaker directivity: flat on axis with
    progressively deeper high-frequency shadowing off axis."""
    directions = _grid_directions(az_step=az_step)
    params = HeadShadowParams(radius_m=0.1, shelf_depth_db=depth_db,
                              crossover_hz=crossover_hz, fir_taps=taps)
    firs = np.zeros((len(directions), 1, taps))
    for i, (az, el) in enumerate(directions):
        angle = angular_distance_deg((az, el), (0.0, 0.0))
        firs[i, 0] = head_shadow_fir(params, angle, fs)[0]
    return DirectivityDb(directions, firs, fs, name=name)
