"""Mean covariance of the secondary (reference) data.

Estimators by measure:

* KLD: closed form ``((1/K) sum C_k^{-1})^{-1}``.
* LDD / JSD: fixed point ``C <- ((1/K) sum ((C_k + C)/2)^{-1})^{-1}``.
* RD: Riemannian gradient (Karcher) step
  ``C <- C^{1/2} exp(eps * sum log(C^{-1/2} C_k C^{-1/2})) C^{1/2}``
  with ``eps = 1/K`` by default and step halving whenever the objective
  ``sum RD(C_k, C)`` increases.

Iterative estimators start from the arithmetic mean and stop when the
relative Frobenius change drops below ``tol``. Every routine is batched: the
inputs may carry leading batch axes ``(..., K, m, m)`` and each batch member
converges independently.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import DimensionMismatch, NotPositiveDefinite
from .linalg import (ctranspose, eig_hermitian, hermitian_part, hpd_inverse,
                     matrix_function)
from .measures import MeasureKind, measure
from .validation import check_square


@dataclass(frozen=True)
class MeanConfig:
    kind: MeasureKind = MeasureKind.KLD
    max_iters: int = 200
    tol: float = 1e-8
    step: Optional[float] = None  # RD step size; None means 1/K

    def __post_init__(self):
        object.__setattr__(self, "kind", MeasureKind.parse(self.kind))
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be > 0")


class MeanResult(NamedTuple):
    matrix: np.ndarray
    converged: np.ndarray   # bool, one per batch member
    iterations: int


def _inv(C):
    return hpd_inverse(C)


def _rel_step(new, old):
    num = np.linalg.norm(new - old, axis=(-2, -1))
    den = np.linalg.norm(old, axis=(-2, -1))
    return num / den


def _kld_mean(Cs):
    return hermitian_part(_inv(np.mean(_inv(Cs), axis=-3)))


def _ldd_mean(Cs, cfg):
    batch = Cs.shape[:-3]
    K, m = Cs.shape[-3], Cs.shape[-1]
    Cs = Cs.reshape((-1, K, m, m))
    C = hermitian_part(np.mean(Cs, axis=-3))
    done = np.zeros(C.shape[0], dtype=bool)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        # only iterate members that have not converged yet
        act = np.flatnonzero(~done)
        Ca = C[act]
        new = _inv(np.mean(_inv(0.5 * (Cs[act] + Ca[:, None])), axis=-3))
        C[act] = new
        done[act] = _rel_step(new, Ca) < cfg.tol
        if np.all(done):
            break
    return C.reshape(batch + (m, m)), done.reshape(batch), it


def _rd_log_terms(C, Cs):
    """Whitened logs of every ``C_k`` at ``C`` and the RD objective."""
    w, V = eig_hermitian(C)
    if np.any(w <= 0):
        raise NotPositiveDefinite("RD mean iterate lost positive definiteness")
    sq = (V * np.sqrt(w)[..., None, :]) @ ctranspose(V)
    isq = (V / np.sqrt(w)[..., None, :]) @ ctranspose(V)
    Wk = hermitian_part(isq[..., None, :, :] @ Cs @ isq[..., None, :, :])
    lk, Uk = eig_hermitian(Wk)
    if np.any(lk <= 0):
        raise NotPositiveDefinite("secondary matrix is not HPD")
    logs = (Uk * np.log(lk)[..., None, :]) @ ctranspose(Uk)
    objective = np.sum(np.log(lk) ** 2, axis=(-2, -1))
    return sq, np.sum(logs, axis=-3), objective


def _rd_mean(Cs, cfg):
    batch = Cs.shape[:-3]
    K, m = Cs.shape[-3], Cs.shape[-1]
    Cs = Cs.reshape((-1, K, m, m))
    base_step = cfg.step if cfg.step is not None else 1.0 / K
    C = hermitian_part(np.mean(Cs, axis=-3))
    eps = np.full(C.shape[0], base_step)
    done = np.zeros(C.shape[0], dtype=bool)
    sq, grad, obj = _rd_log_terms(C, Cs)
    it = 0
    for it in range(1, cfg.max_iters + 1):
        act = np.flatnonzero(~done)
        e = eps[act][:, None, None]
        new = hermitian_part(
            sq[act] @ matrix_function(e * grad[act], "exp") @ sq[act])
        new_sq, new_grad, new_obj = _rd_log_terms(new, Cs[act])
        worse = new_obj > obj[act] * (1 + 1e-12)
        ok = act[~worse]
        step = _rel_step(new[~worse], C[ok])
        C[ok] = new[~worse]
        sq[ok] = new_sq[~worse]
        grad[ok] = new_grad[~worse]
        obj[ok] = new_obj[~worse]
        eps[act[worse]] *= 0.5
        done[ok] = step < cfg.tol
        if np.all(done):
            break
    return C.reshape(batch + (m, m)), done.reshape(batch), it


def mean_matrix(kind, Cs, cfg=None):
    """Mean of ``K`` HPD matrices under the chosen measure.

    Parameters
    ----------
    kind : MeasureKind or str
    Cs : array_like, shape (..., K, m, m)
        Secondary-data covariances, ``K >= 1``.
    cfg : MeanConfig, optional
        Iteration controls; ``cfg.kind`` is ignored in favour of ``kind``.

    Returns
    -------
    MeanResult
        ``matrix`` of shape ``(..., m, m)``; ``converged`` flags per batch
        member (always true for the closed form and for ``K == 1``).
    """
    kind = MeasureKind.parse(kind)
    cfg = cfg or MeanConfig(kind=kind)
    Cs = check_square(Cs, "Cs")
    if Cs.ndim < 3:
        raise DimensionMismatch("Cs must have shape (..., K, m, m)")
    if Cs.shape[-3] < 1:
        raise ValueError("need at least one secondary matrix")
    Cs = hermitian_part(Cs)
    batch = Cs.shape[:-3]
    if Cs.shape[-3] == 1:
        return MeanResult(Cs[..., 0, :, :].copy(), np.ones(batch, bool), 0)
    if kind is MeasureKind.KLD:
        return MeanResult(_kld_mean(Cs), np.ones(batch, bool), 0)
    if kind is MeasureKind.RD:
        C, done, it = _rd_mean(Cs, cfg)
    else:
        C, done, it = _ldd_mean(Cs, cfg)
    return MeanResult(C, done, it)


def mean_objective(kind, Cs, C):
    """Objective minimized by :func:`mean_matrix` for ``kind``.

    ``sum_k D(C_k, C)`` for the symmetric measures. For KLD the closed form is
    the stationary point of ``sum_k KLD(C, C_k)`` (reference matrix in the
    first slot), so that ordering is used; ``sum_k KLD(C_k, C)`` is instead
    minimized by the arithmetic mean.
    """
    kind = MeasureKind.parse(kind)
    Cb = np.broadcast_to(C[..., None, :, :], np.shape(Cs))
    if kind is MeasureKind.KLD:
        return np.sum(measure(kind, Cb, Cs), axis=-1)
    return np.sum(measure(kind, Cs, Cb), axis=-1)
