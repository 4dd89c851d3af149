import numpy as np
import pytest

from brirlab.directivity import (DirectivityDb, make_speaker_directivity_db,
                                 make_spherical_head_hrir_db)
from brirlab.room import (ReceiverConfig, RoomModel, SceneConfig, SourceConfig)

FS = 44100.0

# the measured lab room this package was validated against
ROOM_DIMS = (5.15, 7.05, 2.85)
ROOM_T30 = {125: 0.69, 250: 0.53, 500: 0.58, 1000: 0.62,
            2000: 0.72, 4000: 0.80, 8000: 0.70}


@pytest.fixture(scope="session")
def lab_room():
    return RoomModel(dims_m=ROOM_DIMS, t30_by_octave=dict(ROOM_T30))


@pytest.fixture()
def lab_scene(lab_room):
    receiver = ReceiverConfig(position=(2.575, 3.525, 1.3),
                              orientation=(0.0, 0.0))
    source = SourceConfig(position=(4.275, 3.525, 1.3),
                          orientation=(180.0, 0.0))
    return SceneConfig(room=lab_room, sources=[source], receiver=receiver,
                       sample_rate=FS, seed=0)


@pytest.fixture(scope="session")
def hrir_db():
    return make_spherical_head_hrir_db(fs=FS)


@pytest.fixture(scope="session")
def speaker_db():
    return make_speaker_directivity_db(fs=FS)


@pytest.fixture(scope="session")
def delta_hrir_db():
    """Identical-ear dummy receiver: a unit impulse in both channels for a
    sparse direction grid."""
    directions = []
    for el in (-30.0, 0.0, 30.0):
        for az in range(-180, 180, 30):
            directions.append((float(az), el))
    directions = np.array(directions)
    firs = np.zeros((len(directions), 2, 8))
    firs[:, :, 0] = 1.0
    return DirectivityDb(directions, firs, FS, name="delta")
