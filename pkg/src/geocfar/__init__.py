"""Geometric matrix CFAR detection on Toeplitz HPD covariance matrices."""

from .detector import (DetectionOutcome, DetectorConfig, calibrate_threshold,
                       detect, quantile_threshold, test_statistic)
from .enhance import EnhancementResult, enhanced_mapping, enhanced_measure
from .estimators import GeometricMean, MatrixCFARDetector, ToeplitzCovariances
from .exceptions import (ConfigError, DimensionMismatch, DomainError,
                         EigenDecompositionError, GeoCFARError,
                         NotPositiveDefinite, RankDeficient, ZeroSnapshot)
from .mean import MeanConfig, MeanResult, mean_matrix
from .measures import MeasureKind, measure
from .signal_model import (correlation_lags, dft_power_spectrum,
                           spectrum_from_lags, toeplitz_covariance)
from .sim import KClutterParams, Scenario, TargetSpec, gen_clutter, gen_scene, gen_target
from .spectrum import extremal_spectra, potential, whitening_spectrum

__version__ = "0.1.0"
