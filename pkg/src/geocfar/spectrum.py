"""Whitened spectra and induced potential functions.

An affine-invariant measure ``D(C1, C2)`` depends only on the eigenvalues of
``C2^{-1/2} C1 C2^{-1/2}`` (the whitened spectrum). The potential functions
below evaluate each measure directly on that spectrum, as a sum of a scalar
term per eigenvalue:

    RD   log(l)^2
    KLD  l - 1 - log(l)
    LDD  log((l + 1) / (2 sqrt(l)))      (JSD has the same term)

The second half of the module covers the performance analysis in which the
clutter reference is exact, so the whitened spectrum is ``1 + lambda*`` with
``sum(lambda*) = m * scr``.
"""

import itertools
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DomainError
from .linalg import eigvalsh_desc, whiten
from .measures import MeasureKind, measure
from .validation import check_same_dim, check_square

CLIP_FLOOR = 1e-14
TIE_TOL = 1e-12


class NumericalWarning(RuntimeWarning):
    pass


_clip_events = 0


def clip_events():
    """Number of whitened spectra clipped at ``CLIP_FLOOR`` so far."""
    return _clip_events


def reset_clip_events():
    global _clip_events
    _clip_events = 0


def whitening_spectrum(C1, C2):
    """Descending eigenvalues of ``C2^{-1/2} C1 C2^{-1/2}``.

    Equal to the eigenvalues of ``C1 C2^{-1}``. Values below ``1e-14`` (a
    numerically semidefinite estimate) are raised to the floor and counted,
    see :func:`clip_events`.
    """
    global _clip_events
    C1 = check_square(C1, "C1")
    C2 = check_square(C2, "C2")
    check_same_dim(C1, C2)
    lam = eigvalsh_desc(whiten(C1, C2))
    low = lam < CLIP_FLOOR
    if np.any(low):
        _clip_events += int(np.count_nonzero(low))
        warnings.warn(f"{np.count_nonzero(low)} whitened eigenvalue(s) clipped "
                      f"to {CLIP_FLOOR:g}", NumericalWarning, stacklevel=2)
        lam = np.maximum(lam, CLIP_FLOOR)
    return lam


def scalar_potential(kind, lam):
    """Per-eigenvalue term of the induced potential (elementwise)."""
    kind = MeasureKind.parse(kind)
    lam = np.asarray(lam, dtype=float)
    if kind is MeasureKind.RD:
        return np.log(lam) ** 2
    if kind is MeasureKind.KLD:
        return lam - 1.0 - np.log(lam)
    return np.log((lam + 1.0) / (2.0 * np.sqrt(lam)))


def scalar_potential_derivative(kind, lam):
    kind = MeasureKind.parse(kind)
    lam = np.asarray(lam, dtype=float)
    if kind is MeasureKind.RD:
        return 2.0 * np.log(lam) / lam
    if kind is MeasureKind.KLD:
        return 1.0 - 1.0 / lam
    return (lam - 1.0) / (2.0 * (1.0 + lam) * lam)


def potential(kind, lam):
    """Induced potential of a whitened spectrum, summed over the last axis.

    Raises
    ------
    DomainError
        If any eigenvalue is not strictly positive.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam > 0)):
        raise DomainError("potential functions need strictly positive eigenvalues")
    val = np.maximum(np.sum(scalar_potential(kind, lam), axis=-1), 0.0)
    return float(val) if np.ndim(val) == 0 else val


def check_equivalence(kind, C1, C2):
    """Relative deviation between ``potential(P(C1, C2))`` and ``D(C1, C2)``."""
    d = measure(kind, C1, C2)
    phi = potential(kind, whitening_spectrum(C1, C2))
    return np.abs(phi - d) / np.maximum(d, 1e-12)


# ---------------------------------------------------------------------------
# Performance analysis with an exact clutter reference

@dataclass(frozen=True)
class AdjustedSpectrumPoint:
    """Whitened target spectrum ``(lambda*_1, ..., lambda*_{m-1})`` at fixed SCR.

    The remaining component is implied: ``lambda*_0 = m * scr - sum(lambda_star)``.
    """

    lambda_star: np.ndarray
    scr: float

    def __post_init__(self):
        lam = np.asarray(self.lambda_star, dtype=float)
        object.__setattr__(self, "lambda_star", lam)
        if lam.ndim != 1 or lam.size < 1:
            raise DomainError("lambda_star must be a nonempty 1-D vector")
        if self.scr < 0:
            raise DomainError("scr must be nonnegative")
        if np.any(lam < 0) or lam.sum() > self.dim * self.scr * (1 + 1e-12) + 1e-15:
            raise DomainError("point outside {lambda* >= 0, sum <= m*scr}")

    @property
    def dim(self):
        return self.lambda_star.size + 1

    @property
    def lambda0(self):
        return max(self.dim * self.scr - float(self.lambda_star.sum()), 0.0)

    def full_spectrum(self):
        """Whitened spectrum ``(1 + lambda*_0, 1 + lambda*_1, ...)``."""
        return 1.0 + np.concatenate(([self.lambda0], self.lambda_star))


def adjusted_potential(kind, p):
    """Potential of the point ``p`` with ``lambda*_0`` eliminated."""
    kind = MeasureKind.parse(kind)
    lam = p.lambda_star
    rest = 1.0 + p.lambda0
    if kind is MeasureKind.KLD:
        # m*scr - sum_k log(1 + lambda*_k), written out to avoid cancellation
        return float(p.dim * p.scr - np.sum(np.log1p(lam)) - np.log(rest))
    return float(np.sum(scalar_potential(kind, 1.0 + lam))
                 + scalar_potential(kind, rest))


class AdjustedGradient(NamedTuple):
    gradient: np.ndarray
    on_boundary: bool


def adjusted_gradient(kind, p):
    """Analytic gradient of :func:`adjusted_potential` w.r.t. ``lambda*_1..``.

    ``on_boundary`` is set when some coordinate is zero or ``lambda*_0`` is
    zero; there the derivative is one-sided.
    """
    kind = MeasureKind.parse(kind)
    lam = p.lambda_star
    r = p.lambda0
    if kind is MeasureKind.RD:
        g = 2.0 * (np.log1p(lam) / (1.0 + lam) - np.log1p(r) / (1.0 + r))
    elif kind is MeasureKind.KLD:
        g = -1.0 / (1.0 + lam) + 1.0 / (1.0 + r)
    else:
        g = (lam / (2.0 * (2.0 + lam) * (1.0 + lam))
             - r / (2.0 * (2.0 + r) * (1.0 + r)))
    boundary = bool(np.any(lam <= 0.0) or r <= 0.0)
    return AdjustedGradient(g, boundary)


@dataclass
class ExtremalSpectra:
    """Candidate maximal whitened target spectra and their potentials.

    ``candidates[k-1]`` is the flat spectrum with ``k`` trailing bins of
    height ``m * scr / k``. ``best_k`` indexes the maximizer (1-based).
    """

    kind: MeasureKind
    m: int
    scr: float
    candidates: list
    values: np.ndarray
    best_k: int

    @property
    def argmax(self):
        return self.candidates[self.best_k - 1]

    @property
    def max_value(self):
        return float(self.values[self.best_k - 1])


def flat_spectrum(m, total, k):
    P = np.zeros(m)
    P[m - k:] = total / k
    return P


def extremal_spectra(kind, m, scr):
    """Candidate maximal spectra of the adjusted potential.

    For KLD the maximizer is always the single-spike spectrum
    ``(0, ..., 0, m*scr)``; for RD and LDD it is one of the ``m`` flat
    spectra, the width depending on the SCR. Ties within ``1e-12`` go to the
    smaller width.
    """
    kind = MeasureKind.parse(kind)
    if m < 2:
        raise ValueError("m must be at least 2")
    if scr < 0:
        raise ValueError("scr must be nonnegative")
    total = m * scr
    candidates = [flat_spectrum(m, total, k) for k in range(1, m + 1)]
    values = np.array([potential(kind, 1.0 + P) for P in candidates])
    if kind is MeasureKind.KLD:
        best_k = 1
    else:
        top = values.max()
        best_k = int(np.flatnonzero(values >= top - TIE_TOL)[0]) + 1
    return ExtremalSpectra(kind, m, float(scr), candidates, values, best_k)


def lattice_maximize(kind, m, scr, steps=20):
    """Brute-force maximum of the adjusted potential on a simplex lattice.

    The lattice places each of ``lambda*_1..lambda*_{m-1}`` on multiples of
    ``m * scr / steps`` with the sum bounded by ``m * scr``.

    Returns
    -------
    value : float
    spectrum : ndarray, shape (m,)
        Full ``lambda*`` vector including ``lambda*_0`` at index 0.
    """
    kind = MeasureKind.parse(kind)
    total = m * scr
    grid = np.array([a for a in itertools.product(range(steps + 1), repeat=m - 1)
                     if sum(a) <= steps], dtype=float)
    lam = grid * (total / steps)
    full = np.column_stack([total - lam.sum(axis=1), lam])
    vals = potential(kind, 1.0 + np.maximum(full, 0.0))
    i = int(np.argmax(vals))
    return float(vals[i]), full[i]


def optimal_enhancement_dimension(bandwidth, m=None):
    """Recommended enhanced-mapping dimension: the target's discrete bandwidth."""
    bandwidth = int(bandwidth)
    if bandwidth < 1:
        raise ValueError("bandwidth must be >= 1")
    if m is not None and bandwidth > m:
        raise ValueError("bandwidth cannot exceed the number of pulses")
    return bandwidth
