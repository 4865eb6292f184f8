"""Micro-Doppler radar toolkit.

Decomposes human-motion radar echoes with complementary ensemble EMD,
selects the most informative radar among multiple viewpoints by its
limb-to-total spectrogram energy ratio, extracts time/frequency/entropy
features, and classifies motions with a ReLU extreme learning machine.
A built-in ellipsoid-RCS echo simulator provides labeled synthetic data.
"""

from .elm import ElmConfig, ElmModel, elm_predict, elm_train, evaluate, load_model, save_model
from .emd import CeemdConfig, ImfSet, ceemd, envelope_pair, find_extrema, sift_imf
from .features import (
    EmbeddingConfig,
    FeatureVector,
    MseConfig,
    approximate_entropy,
    build_feature_vector,
    coarse_grain,
    multiscale_entropy,
    permutation_entropy,
    spectral_features,
    time_domain_features,
)
from .pipeline import PipelineConfig, run_pipeline
from .selection import (
    EsConfig,
    SelectionReport,
    limb_energy_ratio,
    otsu_filter,
    reconstruct_limb,
    select_radar,
)
from .signals import ComplexSignal, Spectrogram, StftConfig, spectrogram_energy, stft
from .simulate import (
    BodyEllipsoid,
    DatasetRequest,
    MotionScene,
    RadarPose,
    SimConfig,
    aspect_angles,
    constant_velocity_echo,
    ellipsoid_rcs,
    frontal_rcs,
    generate_dataset,
    synth_echo,
)

__version__ = "0.1.0"
