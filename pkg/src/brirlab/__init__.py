"""brirlab: binaural room impulse response simulation and evaluation.

Recreates a measured reverberant room as a simulated BRIR (image-source
early part plus feedback-delay-network tail, selectable source directivity),
compensates direct-sound mismatches by regularized inverse filtering,
scores simulation-vs-reference agreement with room-acoustic metrics, and
packages/analyzes ABX discrimination experiments.
"""

from .abx import (AbxConditionResult, analyze_log, binomial_p,
                  dprime_differencing, pc_unbiased, stopping_decision,
                  stopping_table)
from .brir import (Brir, CompensationDesign, compensate_direct,
                   design_inverse, detect_direct_onset, extract_direct,
                   make_meas_ds, synthesize_brir)
from .directivity import (DirectivityDb, HeadShadowParams, direction_from_to,
                          head_shadow_fir, load_directivity_db,
                          make_speaker_directivity_db,
                          make_spherical_head_hrir_db, omni_fir, query_fir,
                          save_directivity_db)
from .dsp import (ImpulseResponse, Spectrum, convolve, edc,
                  hann_flank_window, lowpass_butter2, octave_band_filter,
                  read_wav, resample, savitzky_golay_smooth, write_wav)
from .exceptions import NumericError
from .fdn import (FdnConfig, calibrate_late_level, couple_ism_to_fdn,
                  design_fdn, render_late)
from .ism import ImageSource, enumerate_images, render_early
from .loudness import (loudness_lufs, make_speech_shaped_token,
                       normalize_loudness, render_interval)
from .metrics import (MetricsReport, c80, compute_report, d50, drr, edt, itd,
                      rank_methods, t30)
from .room import (RoomModel, SceneConfig, absorption_to_t30,
                   eyring_absorption, load_scene, save_scene, validate_scene)
from .session import StimulusPackage, build_session, package_session
from .sweep import (SweepSpec, deconvolve, estimate_delay_snr, generate_sweep,
                    repeatability)

__version__ = "0.1.0"
