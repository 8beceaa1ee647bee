"""Matrix CFAR detector: covariances, reference mean, measure, threshold.

For one sliding window the pipeline is

1. Toeplitz covariance ``C_x`` of the cell under test and ``C_k`` of every
   secondary cell;
2. reference mean ``C_hat`` of the ``C_k`` under the chosen measure;
3. statistic ``D(C_x, C_hat)``, or its enhanced counterpart, the optimal
   objective of the enhanced mapping recomputed for this window;
4. decide H1 when the statistic exceeds a threshold calibrated by Monte
   Carlo on clutter-only windows.

All functions accept leading batch axes so Monte Carlo runs vectorize.
"""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .enhance import _check_n, enhanced_objective
from .exceptions import ConfigError
from .linalg import eigvalsh_desc, whiten
from .mean import MeanConfig, mean_matrix
from .measures import MeasureKind, measure
from .signal_model import toeplitz_covariance
from .sim import H0, H1, STREAM_CALIBRATION, clutter_batch, split_cells
from .spectrum import CLIP_FLOOR
from .validation import check_probability, check_snapshots


def required_trials(pf):
    """Calibration runs needed for ``pf``: ``ceil(100 / pf)``."""
    pf = check_probability(pf)
    return int(math.ceil(100.0 / pf - 1e-9))


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings.

    ``calibration_trials`` defaults to ``ceil(100 / pf)``. ``guard_cells``
    counts cells per side of the cell under test excluded from the
    secondary data.
    """

    kind: MeasureKind = MeasureKind.KLD
    enhanced: bool = False
    n: Optional[int] = None
    pf: float = 1e-2
    calibration_trials: Optional[int] = None
    mean_cfg: Optional[MeanConfig] = None
    guard_cells: int = 0

    def __post_init__(self):
        kind = MeasureKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        try:
            check_probability(self.pf)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.enhanced and (self.n is None or int(self.n) < 1):
            raise ConfigError("an enhanced detector needs n >= 1")
        if self.calibration_trials is None:
            object.__setattr__(self, "calibration_trials",
                               required_trials(self.pf))
        if self.calibration_trials < 1:
            raise ConfigError("calibration_trials must be >= 1")
        if self.guard_cells < 0:
            raise ConfigError("guard_cells must be >= 0")
        if self.mean_cfg is None:
            object.__setattr__(self, "mean_cfg", MeanConfig(kind=kind))

    def label(self):
        s = self.kind.value
        return f"{s}-enh{self.n}" if self.enhanced else s


class DetectionOutcome(NamedTuple):
    statistic: float
    threshold: float
    decision: str


def window_covariances(primary, secondary):
    """Toeplitz covariances of the cell under test and the secondary cells.

    Parameters
    ----------
    primary : array_like, shape (..., m)
    secondary : array_like, shape (..., K, m)

    Returns
    -------
    Cx : ndarray, shape (..., m, m)
    Cs : ndarray, shape (..., K, m, m)
    """
    primary = check_snapshots(primary, "primary")
    secondary = check_snapshots(secondary, "secondary")
    if secondary.ndim < 2 or secondary.shape[-2] < 1:
        raise ValueError("need at least one secondary snapshot")
    if secondary.shape[-1] != primary.shape[-1]:
        raise ValueError("primary and secondary snapshots differ in length")
    return toeplitz_covariance(primary), toeplitz_covariance(secondary)


def reference_mean(cfg, Cs):
    return mean_matrix(cfg.kind, Cs, cfg.mean_cfg).matrix


def statistic_from_covariances(cfg, Cx, C_hat):
    """Statistic for given ``C_x`` and reference mean ``C_hat`` (batched)."""
    if not cfg.enhanced:
        return np.asarray(measure(cfg.kind, Cx, C_hat), dtype=float)
    n = _check_n(Cx.shape[-1], cfg.n)
    lam = np.maximum(eigvalsh_desc(whiten(Cx, C_hat)), CLIP_FLOOR)
    return np.asarray(enhanced_objective(cfg.kind, lam, n), dtype=float)


def test_statistic(cfg, primary, secondary):
    """Detection statistic of one window or a batch of windows.

    Parameters
    ----------
    cfg : DetectorConfig
    primary : array_like, shape (..., m)
        Cell under test.
    secondary : array_like, shape (..., K, m)
        Reference cells, ``K >= 1``.

    Returns
    -------
    float or ndarray
    """
    Cx, Cs = window_covariances(primary, secondary)
    stat = statistic_from_covariances(cfg, Cx, reference_mean(cfg, Cs))
    return float(stat) if stat.ndim == 0 else stat


test_statistic.__test__ = False  # not a pytest test


def quantile_threshold(stats, pf):
    """Ascending order statistic of rank ``ceil((1 - pf) N)`` (1-based)."""
    pf = check_probability(pf)
    stats = np.sort(np.asarray(stats, dtype=float).ravel())
    N = stats.size
    if N == 0:
        raise ValueError("no statistics to threshold")
    rank = int(math.ceil(round((1.0 - pf) * N, 9)))
    rank = min(max(rank, 1), N)
    return float(stats[rank - 1])


def clutter_statistics(cfg, scenario, seed, stream, trials, chunk=500):
    """Statistics of clutter-only windows for the given trial indices."""
    trials = np.atleast_1d(np.asarray(trials))
    out = np.empty(trials.size)
    for start in range(0, trials.size, chunk):
        idx = trials[start:start + chunk]
        cells = clutter_batch(scenario, seed, stream, idx)
        primary, secondary = split_cells(cells, scenario.target_cell,
                                         cfg.guard_cells)
        out[start:start + idx.size] = test_statistic(cfg, primary, secondary)
    return out


def calibrate_threshold(cfg, scenario, seed, trials=None, chunk=500,
                        return_statistics=False):
    """Threshold for ``cfg.pf`` from clutter-only Monte Carlo windows.

    Parameters
    ----------
    cfg : DetectorConfig
    scenario : Scenario
        Clutter generator settings.
    seed : int
    trials : int, optional
        Defaults to ``cfg.calibration_trials``. Fewer than ``ceil(100/pf)``
        runs trigger a warning.

    Returns
    -------
    float, or ``(float, ndarray)`` with ``return_statistics=True``.
    """
    N = int(trials if trials is not None else cfg.calibration_trials)
    if N < 1:
        raise ConfigError("need at least one calibration trial")
    if N < required_trials(cfg.pf):
        warnings.warn(f"{N} calibration trials is below ceil(100/pf) = "
                      f"{required_trials(cfg.pf)}", RuntimeWarning, stacklevel=2)
    stats = clutter_statistics(cfg, scenario, seed, STREAM_CALIBRATION,
                               np.arange(N), chunk=chunk)
    eta = quantile_threshold(stats, cfg.pf)
    return (eta, stats) if return_statistics else eta


def decide(statistic, threshold):
    """``"H1"`` iff ``statistic > threshold``; ties go to H0."""
    return np.where(np.asarray(statistic) > threshold, H1, H0)


def detect(cfg, primary, secondary, threshold):
    """Run the detector on one window."""
    stat = test_statistic(cfg, primary, secondary)
    if np.ndim(stat) != 0:
        raise ValueError("detect handles one window; use test_statistic for batches")
    return DetectionOutcome(stat, float(threshold), str(decide(stat, threshold)))
