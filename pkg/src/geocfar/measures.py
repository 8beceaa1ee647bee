"""Affine-invariant geometric measures between HPD matrices.

Four measures are provided::

    RD   ||log(C1^{-1/2} C2 C1^{-1/2})||_F^2
    KLD  tr(C1 C2^{-1} - I) - log|C1 C2^{-1}|
    JSD  (KLD(C1, M) + KLD(C2, M)) / 2,  M = (C1 + C2) / 2
    LDD  log|M| - log sqrt(|C1| |C2|)

KLD is not symmetric; the argument order above is binding. JSD and LDD
coincide on every HPD pair, but each is evaluated through its own formula
here so that the identity can be checked numerically.
"""

from enum import Enum

import numpy as np

from .exceptions import NotPositiveDefinite
from .linalg import cholesky, eigvalsh_desc, whiten
from .validation import as_complex_array, check_same_dim, check_square


class MeasureKind(str, Enum):
    RD = "rd"
    KLD = "kld"
    JSD = "jsd"
    LDD = "ldd"

    @classmethod
    def parse(cls, value):
        """Accept a member, its value, or a common alias such as ``"KL"``."""
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"kl": "kld", "js": "jsd", "ld": "ldd", "riemann": "rd"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"unknown measure {value!r}; expected one of "
                f"{[k.value for k in cls]}") from None

    def __str__(self):
        return self.value


def _logdet_hpd(C):
    L = cholesky(C)
    d = np.diagonal(L, axis1=-2, axis2=-1).real
    return 2.0 * np.sum(np.log(d), axis=-1)


def _trace_solve(C1, C2):
    """``tr(C2^{-1} C1)`` via a Cholesky solve."""
    L = cholesky(C2)
    Y = np.linalg.solve(L, C1)
    Z = np.linalg.solve(np.conj(np.swapaxes(L, -1, -2)), Y)
    return np.trace(Z, axis1=-2, axis2=-1).real


def _kld(C1, C2):
    m = C1.shape[-1]
    return _trace_solve(C1, C2) - m - (_logdet_hpd(C1) - _logdet_hpd(C2))


def _ldd(C1, C2):
    M = 0.5 * (C1 + C2)
    return _logdet_hpd(M) - 0.5 * (_logdet_hpd(C1) + _logdet_hpd(C2))


def _jsd(C1, C2):
    M = 0.5 * (C1 + C2)
    return 0.5 * (_kld(C1, M) + _kld(C2, M))


def _rd(C1, C2):
    lam = eigvalsh_desc(whiten(C2, C1))
    if np.any(lam <= 0):
        raise NotPositiveDefinite("whitened matrix has nonpositive eigenvalues")
    return np.sum(np.log(lam) ** 2, axis=-1)


_MEASURES = {
    MeasureKind.RD: _rd,
    MeasureKind.KLD: _kld,
    MeasureKind.JSD: _jsd,
    MeasureKind.LDD: _ldd,
}


def measure(kind, C1, C2):
    """Geometric measure ``D(C1, C2)`` for HPD matrices (batched).

    Parameters
    ----------
    kind : MeasureKind or str
    C1, C2 : array_like, shape (..., m, m)
        HPD matrices with broadcastable leading shapes.

    Returns
    -------
    float or ndarray
        Nonnegative value(s). Tiny negative round-off is clipped to zero.
    """
    kind = MeasureKind.parse(kind)
    C1 = check_square(C1, "C1")
    C2 = check_square(C2, "C2")
    check_same_dim(C1, C2)
    val = np.maximum(_MEASURES[kind](C1, C2), 0.0)
    return float(val) if np.ndim(val) == 0 else val


def congruence(C, W):
    """``W^H C W``."""
    return np.conj(np.swapaxes(W, -1, -2)) @ C @ W


def check_affine_invariance(kind, C1, C2, W):
    """Relative change of ``D`` under the congruence ``C -> W^H C W``.

    Returns ``|D(W^H C1 W, W^H C2 W) - D(C1, C2)| / max(D(C1, C2), 1e-12)``.

    Raises
    ------
    ValueError
        If ``W`` is singular.
    """
    W = as_complex_array(W, "W")
    if W.shape[-1] != W.shape[-2] or W.shape[-1] != np.shape(C1)[-1]:
        raise ValueError("W must be square with the same order as C1, C2")
    if np.linalg.matrix_rank(W) < W.shape[-1]:
        raise ValueError("W must be invertible")
    base = measure(kind, C1, C2)
    moved = measure(kind, congruence(C1, W), congruence(C2, W))
    return float(abs(moved - base) / max(base, 1e-12))
