"""Scenario generation: K-distributed clutter and target echoes.

Clutter is compound Gaussian: a Gamma(shape, scale) texture, drawn once per
range cell and snapshot, multiplies unit-power circular complex Gaussian
speckle (optionally AR(1)-correlated across pulses). The mean clutter power
per sample is therefore ``shape * scale``.

Every trial draws from its own stream ``(seed, stream, trial)`` so results
do not depend on batch size, ordering or worker count.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigError
from .validation import check_random_state, check_snapshots

H0 = "H0"
H1 = "H1"

# RNG stream ids
STREAM_CALIBRATION = 0
STREAM_H0 = 1
STREAM_H1 = 2


@dataclass(frozen=True)
class KClutterParams:
    shape: float = 1.0
    scale: float = 0.5
    rho: float = 0.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ConfigError("K-clutter shape and scale must be positive")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError("speckle correlation rho must lie in [0, 1)")

    @property
    def mean_power(self):
        return self.shape * self.scale


@dataclass(frozen=True)
class TargetSpec:
    """Target echo: a Doppler steering vector or a band-limited echo.

    ``variant="doppler"`` uses ``doppler_hz``; ``variant="bandlimited"``
    uses ``bandwidth`` (number of occupied trailing DFT bins).
    """

    variant: str = "doppler"
    doppler_hz: float = 135.0
    bandwidth: Optional[int] = None
    amplitude: float = 1.0

    def validate(self, m, prf):
        if self.variant == "doppler":
            if not abs(self.doppler_hz) < prf / 2:
                raise ConfigError(f"|doppler| must be below prf/2 = {prf / 2}")
        elif self.variant == "bandlimited":
            if self.bandwidth is None or not 1 <= self.bandwidth <= m:
                raise ConfigError(f"bandwidth must lie in [1, {m}]")
        else:
            raise ConfigError(f"unknown target variant {self.variant!r}")


@dataclass(frozen=True)
class Scenario:
    num_cells: int = 17
    num_pulses: int = 15
    target_cell: int = 9          # 1-based
    pf: float = 1e-3
    prf: float = 1000.0
    clutter: KClutterParams = field(default_factory=KClutterParams)
    target: TargetSpec = field(default_factory=TargetSpec)
    scr_grid_db: Sequence[float] = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0)
    seed: int = 0
    guard_cells: int = 0

    def __post_init__(self):
        if self.num_pulses < 2:
            raise ConfigError("num_pulses must be >= 2")
        if not 1 <= self.target_cell <= self.num_cells:
            raise ConfigError("target_cell must lie in [1, num_cells]")
        if self.guard_cells < 0:
            raise ConfigError("guard_cells must be >= 0")
        if not 0 < self.pf < 1:
            raise ConfigError("pf must lie in (0, 1)")
        if not self.secondary_cells():
            raise ConfigError("no secondary cells left after guard cells")
        self.target.validate(self.num_pulses, self.prf)

    def secondary_cells(self):
        """1-based indices of the reference cells."""
        lo = self.target_cell - self.guard_cells
        hi = self.target_cell + self.guard_cells
        return [c for c in range(1, self.num_cells + 1) if not lo <= c <= hi]


def gen_clutter(params, m, rng, size=()):
    """K-distributed clutter snapshot(s) of length ``m``, shape ``size + (m,)``."""
    rng = check_random_state(rng)
    shape = tuple(np.atleast_1d(size)) if size != () else ()
    tau = rng.gamma(params.shape, params.scale, size=shape)
    e = (rng.standard_normal(shape + (m,))
         + 1j * rng.standard_normal(shape + (m,))) / np.sqrt(2.0)
    if params.rho > 0:
        innov = np.sqrt(1.0 - params.rho ** 2)
        for i in range(1, m):
            e[..., i] = params.rho * e[..., i - 1] + innov * e[..., i]
    return np.sqrt(tau)[..., None] * e


def gen_target(spec, m, prf):
    """Noise-free target echo of length ``m``.

    Doppler: ``A exp(j 2 pi i f_d / f_r)``, ``i = 0..m-1``. Band-limited:
    ``A * IDFT(0, ..., 0, 1/sqrt(B), ..., 1/sqrt(B))`` with ``B`` trailing
    bins, so the periodogram has exactly ``B`` equal nonzero bins.
    """
    spec.validate(m, prf)
    if spec.variant == "doppler":
        i = np.arange(m)
        return spec.amplitude * np.exp(2j * np.pi * i * spec.doppler_hz / prf)
    Y = np.zeros(m, dtype=np.complex128)
    Y[m - spec.bandwidth:] = 1.0 / np.sqrt(spec.bandwidth)
    return spec.amplitude * np.fft.ifft(Y)


def scale_to_scr(s, clutter_power, scr_db):
    """Rescale ``s`` so mean per-sample power / ``clutter_power`` = SCR."""
    s = check_snapshots(s, "s", min_pulses=1)
    if not clutter_power > 0:
        raise ValueError("clutter_power must be positive")
    power = np.mean(np.abs(s) ** 2, axis=-1, keepdims=True)
    target = clutter_power * 10.0 ** (scr_db / 10.0)
    return s * np.sqrt(target / power)


def trial_rng(seed, stream, trial):
    return np.random.default_rng([int(seed), int(stream), int(trial)])


def gen_scene(scenario, hypothesis, scr_db, rng):
    """One sliding-window scene.

    Returns
    -------
    primary : ndarray, shape (m,)
        Cell under test: clutter, plus the SCR-scaled target under ``"H1"``.
    secondary : ndarray, shape (K, m)
        Independent clutter for the reference cells.
    """
    if hypothesis not in (H0, H1):
        raise ValueError("hypothesis must be 'H0' or 'H1'")
    m = scenario.num_pulses
    cells = gen_clutter(scenario.clutter, m, rng, size=scenario.num_cells)
    primary, secondary = split_cells(cells, scenario.target_cell,
                                     scenario.guard_cells)
    if hypothesis == H1:
        s = gen_target(scenario.target, m, scenario.prf)
        primary = primary + scale_to_scr(s, scenario.clutter.mean_power, scr_db)
    return primary, secondary


def split_cells(cells, target_cell, guard_cells=0):
    """Split stacked range cells ``(..., num_cells, m)`` into primary and secondary.

    ``target_cell`` is 1-based; ``guard_cells`` cells on each side of it are
    dropped from the secondary set.
    """
    cells = np.asarray(cells)
    n = cells.shape[-2]
    keep = [c for c in range(n)
            if abs(c - (target_cell - 1)) > guard_cells]
    if not keep:
        raise ConfigError("no secondary cells left after guard cells")
    return cells[..., target_cell - 1, :], cells[..., keep, :]


def clutter_batch(scenario, seed, stream, trials):
    """Clutter for all range cells, one independent stream per trial.

    Returns an array of shape ``(len(trials), num_cells, m)``.
    """
    trials = np.atleast_1d(trials)
    m = scenario.num_pulses
    cells = np.empty((trials.size, scenario.num_cells, m), dtype=np.complex128)
    for j, t in enumerate(trials):
        cells[j] = gen_clutter(scenario.clutter, m, trial_rng(seed, stream, t),
                               size=scenario.num_cells)
    return cells


def add_target(scenario, primary, scr_db, target=None):
    """Primary data under H1: clutter plus the SCR-scaled target echo."""
    spec = target or scenario.target
    s = gen_target(spec, scenario.num_pulses, scenario.prf)
    return primary + scale_to_scr(s, scenario.clutter.mean_power, scr_db)
