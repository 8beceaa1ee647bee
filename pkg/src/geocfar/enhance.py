"""Closed-form enhanced (dimension-reducing) mapping.

Given HPD ``C1`` (primary) and ``C2`` (reference), the enhanced measure is
``D_n(W^H C1 W, W^H C2 W)`` for a full-column-rank ``W`` of shape ``(m, n)``.
Maximizing it over ``W`` reduces to choosing eigenvalues ``mu_i`` of
``Q^H C Q`` with ``C = C2^{-1/2} C1 C2^{-1/2}`` and orthonormal ``Q``. Those
are constrained only by the interlacing bounds
``lambda_{i+m-n} <= mu_i <= lambda_i``, every bound pair is attainable, and
each scalar potential term is decreasing on (0, 1] and increasing on
[1, inf). The optimum therefore picks one endpoint per interval, with no
iteration.

``n <= m/2`` is required so that the construction of ``Q`` pairs disjoint
eigenvectors.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import DomainError
from .linalg import eig_hermitian, hermitian_part, matrix_function, qr_thin
from .measures import MeasureKind, congruence, measure
from .spectrum import CLIP_FLOOR, potential, scalar_potential, whitening_spectrum
from .validation import check_random_state, check_same_dim, check_square

TIE_TOL = 1e-12
BOUND_TOL = 1e-12


@dataclass
class EnhancementResult:
    """Output of :func:`enhanced_mapping`.

    ``mu_star[i]`` is the chosen endpoint of the ``i``-th interlacing
    interval, so it is paired with the bounds rather than sorted. Sort it to
    compare with a whitened spectrum.
    """

    n: int
    mu_star: np.ndarray
    W_star: np.ndarray
    objective: float
    Q: np.ndarray
    eigenvalues: np.ndarray
    reported: Optional[float] = None


def _check_n(m, n):
    n = int(n)
    if not 1 <= n <= m // 2:
        raise DomainError(f"enhanced dimension must satisfy 1 <= n <= m/2 = {m // 2}, "
                          f"got n={n}")
    return n


def interlace_bounds(lam, n):
    """Interlacing intervals ``[lambda_{i+m-n}, lambda_i]``, ``i < n``.

    Parameters
    ----------
    lam : array_like, shape (..., m)
        Descending whitened spectrum.
    n : int
        Target dimension, ``1 <= n <= m/2``.

    Returns
    -------
    ndarray, shape (..., n, 2)
        ``[..., i, 0]`` is the lower and ``[..., i, 1]`` the upper bound.
    """
    lam = np.asarray(lam, dtype=float)
    m = lam.shape[-1]
    n = _check_n(m, n)
    return np.stack([lam[..., m - n:], lam[..., :n]], axis=-1)


def optimal_mu(kind, lam, n):
    """Per-interval maximizer of the scalar potential term.

    Each coordinate takes whichever endpoint has the larger term; on a tie
    (within 1e-12) the upper endpoint is kept.
    """
    b = interlace_bounds(lam, n)
    lo, hi = b[..., 0], b[..., 1]
    f_lo = scalar_potential(kind, lo)
    f_hi = scalar_potential(kind, hi)
    return np.where(f_hi >= f_lo - TIE_TOL, hi, lo)


def enhanced_objective(kind, lam, n):
    """Closed-form optimal enhanced measure from a whitened spectrum (batched)."""
    b = interlace_bounds(lam, n)
    vals = np.maximum(scalar_potential(kind, b[..., 0]),
                      scalar_potential(kind, b[..., 1]))
    return np.sum(vals, axis=-1)


def interpolation_weights(lam, mu):
    """``t_i`` with ``mu_i = t_i lambda_i + (1 - t_i) lambda_{i+m-n}``.

    Degenerate intervals get ``t_i = 1``.
    """
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    m, n = lam.shape[-1], mu.shape[-1]
    _check_n(m, n)
    lo, hi = lam[..., m - n:], lam[..., :n]
    width = hi - lo
    scale = np.maximum(np.abs(hi), 1.0)
    if np.any(mu < lo - BOUND_TOL * scale) or np.any(mu > hi + BOUND_TOL * scale):
        raise DomainError("mu lies outside its interlacing interval")
    degenerate = width <= BOUND_TOL * scale
    safe = np.where(degenerate, 1.0, width)
    t = np.where(degenerate, 1.0, (mu - lo) / safe)
    return np.clip(t, 0.0, 1.0)


def construct_q(lam, V, mu):
    """Orthonormal ``Q`` (m x n) such that ``Q^H C Q = diag(mu)``.

    Parameters
    ----------
    lam : array_like, shape (m,)
        Descending eigenvalues of ``C``.
    V : array_like, shape (m, m)
        Eigenvectors of ``C``; column ``k`` pairs with ``lam[k]``.
    mu : array_like, shape (n,)
        Targets, each inside its interlacing interval.

    Column ``i`` is ``sqrt(t_i) v_i + sqrt(1 - t_i) v_{i+m-n}``. A final QR
    pass (with phases fixed so columns are unchanged up to rounding)
    restores exact orthonormality.
    """
    lam = np.asarray(lam, dtype=float)
    V = np.asarray(V, dtype=np.complex128)
    mu = np.asarray(mu, dtype=float)
    m, n = lam.shape[-1], mu.shape[-1]
    t = interpolation_weights(lam, mu)
    Q = (V[..., :, :n] * np.sqrt(t)[..., None, :]
         + V[..., :, m - n:] * np.sqrt(1.0 - t)[..., None, :])
    Q, _ = qr_thin(Q)
    return Q


def enhanced_mapping(kind, C1, C2, n, f: Optional[Callable] = None):
    """Optimal enhanced mapping ``W*`` and its objective.

    Steps: whiten ``C1`` by ``C2``, eigendecompose, pick ``mu*`` by the
    endpoint rule, build ``Q`` and return ``W* = C2^{-1/2} Q``.

    Parameters
    ----------
    kind : MeasureKind or str
    C1, C2 : array_like, shape (m, m)
        HPD primary and reference matrices.
    n : int
        Target dimension, ``1 <= n <= m/2``.
    f : callable, optional
        Monotone nondecreasing transform applied to the objective for
        reporting only; the optimization uses the identity.
    """
    kind = MeasureKind.parse(kind)
    C1 = check_square(C1, "C1")
    C2 = check_square(C2, "C2")
    check_same_dim(C1, C2)
    m = C1.shape[-1]
    n = _check_n(m, n)
    # one inverse square root serves both the whitening and W*
    S = matrix_function(C2, "inv_sqrt")
    lam, V = eig_hermitian(hermitian_part(S @ C1 @ S))
    lam = np.maximum(lam, CLIP_FLOOR)
    mu = optimal_mu(kind, lam, n)
    Q = construct_q(lam, V, mu)
    W = S @ Q
    obj = potential(kind, mu)
    return EnhancementResult(n=n, mu_star=mu, W_star=W, objective=obj, Q=Q,
                             eigenvalues=lam,
                             reported=None if f is None else f(obj))


def enhanced_measure(kind, C1, C2, W):
    """``D_n(W^H C1 W, W^H C2 W)`` for a full-column-rank ``W``.

    Raises
    ------
    RankDeficient
        If ``W`` does not have full column rank.
    """
    C1 = check_square(C1, "C1")
    C2 = check_square(C2, "C2")
    W = np.asarray(W, dtype=np.complex128)
    qr_thin(W)
    return measure(kind, congruence(C1, W), congruence(C2, W))


def random_orthonormal(m, n, rng, size=()):
    """Haar-distributed ``m x n`` matrices with orthonormal columns."""
    rng = check_random_state(rng)
    shape = tuple(np.atleast_1d(size)) if size != () else ()
    G = (rng.standard_normal(shape + (m, n))
         + 1j * rng.standard_normal(shape + (m, n))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[..., None, :]


def random_search_objective(kind, C1, C2, n, draws=10_000, seed=0, chunk=2_000):
    """Best enhanced measure over random projections ``W = C2^{-1/2} Q``.

    Each candidate is scored with :func:`~geocfar.measures.measure` on the
    projected ``n x n`` matrices, independently of the closed form. Draw
    ``j`` uses the RNG stream ``(seed, j // chunk)``, so the result does not
    depend on how the work is scheduled.
    """
    C1 = check_square(C1, "C1")
    C2 = check_square(C2, "C2")
    m = C1.shape[-1]
    S = matrix_function(C2, "inv_sqrt")
    best = -np.inf
    for start in range(0, draws, chunk):
        size = min(chunk, draws - start)
        rng = np.random.default_rng([seed, start // chunk])
        W = S @ random_orthonormal(m, n, rng, size=size)
        vals = measure(kind, congruence(C1, W), congruence(C2, W))
        best = max(best, float(np.max(vals)))
    return best


def projected_spectrum(C1, C2, W):
    """Whitened spectrum of the projected pair, descending."""
    return whitening_spectrum(congruence(C1, W), congruence(C2, W))

