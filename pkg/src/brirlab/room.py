"""Room geometry, source/receiver layout, and the Eyring relation between
reverberation time and average boundary absorption.

Coordinate convention (applies to the whole package): right-handed, x along
the first room dimension, z up. Azimuth is measured counterclockwise from +x
in degrees, elevation upward from the horizontal plane. Orientations are
stored as (azimuth, elevation) of the entity's forward axis.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

OCTAVE_BANDS_HZ = (125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0)

DEFAULT_SPEED_OF_SOUND = 343.0


def eyring_absorption(volume: float, surface: float, c: float,
                      t30: float) -> float:
    """Average absorption coefficient from reverberation time.

    alpha = 1 - exp((24*ln10 / c) * V / (-S * T30)), in (0, 1).
    """
    if volume <= 0 or surface <= 0 or c <= 0 or t30 <= 0:
        raise ValueError("volume, surface, c and t30 must all be > 0")
    k = 24.0 * math.log(10.0) / c
    return -math.expm1(-k * volume / (surface * t30))


def absorption_to_t30(volume: float, surface: float, c: float,
                      alpha: float) -> float:
    """Exact algebraic inverse of :func:`eyring_absorption`."""
    if volume <= 0 or surface <= 0 or c <= 0:
        raise ValueError("volume, surface and c must all be > 0")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly in (0, 1)")
    k = 24.0 * math.log(10.0) / c
    return -k * volume / (surface * math.log1p(-alpha))


def _hold_nearest(bands: tuple, provided: dict) -> dict:
    """Extend a per-band map to all bands by holding the nearest known band."""
    known = sorted(provided)
    out = {}
    for b in bands:
        nearest = min(known, key=lambda f: (abs(math.log(b / f)), f))
        out[b] = provided.get(b, provided[nearest])
    return out


@dataclass
class RoomModel:
    """Shoebox room with per-octave reverberation time / absorption.

    For every band exactly one of t30/absorption may be given; the other is
    derived through the Eyring relation. Bands outside the provided map hold
    the nearest band's value.
    """

    dims_m: tuple
    speed_of_sound: float = DEFAULT_SPEED_OF_SOUND
    t30_by_octave: dict = field(default_factory=dict)
    absorption_by_octave: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dims_m = tuple(float(d) for d in self.dims_m)
        if len(self.dims_m) != 3 or any(d <= 0 for d in self.dims_m):
            raise ValueError("dims_m must be three positive lengths")
        if self.speed_of_sound <= 0:
            raise ValueError("speed_of_sound must be > 0")
        if bool(self.t30_by_octave) == bool(self.absorption_by_octave):
            raise ValueError(
                "provide exactly one of t30_by_octave or absorption_by_octave")
        if self.t30_by_octave:
            given = {float(f): float(t) for f, t in self.t30_by_octave.items()}
            if any(t <= 0 for t in given.values()):
                raise ValueError("all T30 values must be > 0")
            self.t30_by_octave = _hold_nearest(OCTAVE_BANDS_HZ, given)
            self.absorption_by_octave = {
                f: eyring_absorption(self.volume, self.surface,
                                     self.speed_of_sound, t)
                for f, t in self.t30_by_octave.items()}
        else:
            given = {float(f): float(a)
                     for f, a in self.absorption_by_octave.items()}
            if any(not (0.0 < a < 1.0) for a in given.values()):
                raise ValueError("all absorption values must be in (0, 1)")
            self.absorption_by_octave = _hold_nearest(OCTAVE_BANDS_HZ, given)
            self.t30_by_octave = {
                f: absorption_to_t30(self.volume, self.surface,
                                     self.speed_of_sound, a)
                for f, a in self.absorption_by_octave.items()}

    @property
    def volume(self) -> float:
        x, y, z = self.dims_m
        return x * y * z

    @property
    def surface(self) -> float:
        x, y, z = self.dims_m
        return 2.0 * (x * y + x * z + y * z)

    @property
    def mean_free_path_s(self) -> float:
        """4V / (S c): average time between wall hits of a diffuse ray."""
        return 4.0 * self.volume / (self.surface * self.speed_of_sound)

    def bands(self) -> tuple:
        return OCTAVE_BANDS_HZ

    def band_gains(self) -> np.ndarray:
        """Pressure reflection factor sqrt(1 - alpha) per octave band."""
        return np.array([math.sqrt(1.0 - self.absorption_by_octave[f])
                         for f in OCTAVE_BANDS_HZ])


class DirectivityMode(enum.Enum):
    MEASURED = "measured"
    HEAD_SHADOW = "head-shadow"
    OMNI = "omni"


@dataclass
class SourceConfig:
    position: tuple
    orientation: tuple = (0.0, 0.0)
    directivity_mode: DirectivityMode = DirectivityMode.OMNI
    directivity_db_ref: str | None = None

    def __post_init__(self):
        self.position = tuple(float(v) for v in self.position)
        self.orientation = tuple(float(v) for v in self.orientation)
        if isinstance(self.directivity_mode, str):
            self.directivity_mode = DirectivityMode(self.directivity_mode)


@dataclass
class ReceiverConfig:
    position: tuple
    orientation: tuple = (0.0, 0.0)
    hrir_db_ref: str | None = None

    def __post_init__(self):
        self.position = tuple(float(v) for v in self.position)
        self.orientation = tuple(float(v) for v in self.orientation)


@dataclass
class SceneConfig:
    room: RoomModel
    sources: list
    receiver: ReceiverConfig
    ism_order: int = 3
    fdn_channels: int = 24
    sample_rate: float = 44100.0
    seed: int = 0


def validate_scene(scene: SceneConfig) -> list:
    """Collect all violated invariants; an empty list means the scene is valid."""
    violations = []
    dims = scene.room.dims_m
    if scene.ism_order < 0:
        violations.append("ism_order must be >= 0")
    if scene.fdn_channels < 4:
        violations.append("fdn_channels must be >= 4")
    if scene.sample_rate <= 0:
        violations.append("sample_rate must be > 0")
    if not scene.sources:
        violations.append("at least one source is required")

    def inside(pos):
        return all(0.0 < p < d for p, d in zip(pos, dims))

    for i, src in enumerate(scene.sources):
        if not inside(src.position):
            violations.append(f"source {i} at {src.position} is outside the room")
        if (src.directivity_mode is DirectivityMode.MEASURED
                and not src.directivity_db_ref):
            violations.append(
                f"source {i} uses measured directivity but has no database ref")
    if not inside(scene.receiver.position):
        violations.append(
            f"receiver at {scene.receiver.position} is outside the room")
    for i, src in enumerate(scene.sources):
        if np.allclose(src.position, scene.receiver.position):
            violations.append(f"source {i} coincides with the receiver")
    return violations


def scene_to_dict(scene: SceneConfig) -> dict:
    return {
        "room": {
            "dims_m": list(scene.room.dims_m),
            "speed_of_sound": scene.room.speed_of_sound,
            "t30_by_octave": {str(int(f)): t
                              for f, t in scene.room.t30_by_octave.items()},
        },
        "sources": [
            {
                "position": list(s.position),
                "orientation": list(s.orientation),
                "directivity_mode": s.directivity_mode.value,
                "directivity_db_ref": s.directivity_db_ref,
            }
            for s in scene.sources
        ],
        "receiver": {
            "position": list(scene.receiver.position),
            "orientation": list(scene.receiver.orientation),
            "hrir_db_ref": scene.receiver.hrir_db_ref,
        },
        "ism_order": scene.ism_order,
        "fdn_channels": scene.fdn_channels,
        "sample_rate": scene.sample_rate,
        "seed": scene.seed,
    }


def scene_from_dict(doc: dict) -> SceneConfig:
    room_doc = doc["room"]
    room = RoomModel(
        dims_m=room_doc["dims_m"],
        speed_of_sound=room_doc.get("speed_of_sound", DEFAULT_SPEED_OF_SOUND),
        t30_by_octave={float(f): t
                       for f, t in room_doc.get("t30_by_octave", {}).items()},
        absorption_by_octave={float(f): a for f, a in
                              room_doc.get("absorption_by_octave", {}).items()},
    )
    sources = [SourceConfig(
        position=s["position"],
        orientation=tuple(s.get("orientation", (0.0, 0.0))),
        directivity_mode=s.get("directivity_mode", "omni"),
        directivity_db_ref=s.get("directivity_db_ref"),
    ) for s in doc["sources"]]
    receiver = ReceiverConfig(
        position=doc["receiver"]["position"],
        orientation=tuple(doc["receiver"].get("orientation", (0.0, 0.0))),
        hrir_db_ref=doc["receiver"].get("hrir_db_ref"),
    )
    return SceneConfig(
        room=room,
        sources=sources,
        receiver=receiver,
        ism_order=int(doc.get("ism_order", 3)),
        fdn_channels=int(doc.get("fdn_channels", 24)),
        sample_rate=float(doc.get("sample_rate", 44100.0)),
        seed=int(doc.get("seed", 0)),
    )


def load_scene(path) -> SceneConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))


def save_scene(path, scene: SceneConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2, sort_keys=True)
        fh.write("\n")
