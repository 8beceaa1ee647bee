"""Hermitian / HPD matrix algebra.

All routines accept a single ``(m, m)`` matrix or a stack ``(..., m, m)`` and
operate on the trailing two axes. Eigenvalues are always returned sorted in
descending order, which the interlacing bounds in :mod:`geocfar.enhance`
rely on.
"""

from typing import NamedTuple

import numpy as np

from .exceptions import (DimensionMismatch, EigenDecompositionError,
                         NotPositiveDefinite, RankDeficient)
from .validation import as_complex_array, check_same_dim, check_square

RANK_TOL = 1e-12


class EigenDecomposition(NamedTuple):
    """Descending eigenvalues and the matching unitary eigenvectors.

    ``eigenvectors[..., :, k]`` is paired with ``eigenvalues[..., k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_part(A):
    """Return ``(A + A^H) / 2`` with an exactly real diagonal."""
    A = check_square(A)
    H = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    idx = np.arange(H.shape[-1])
    H[..., idx, idx] = H[..., idx, idx].real
    return H


def ctranspose(A):
    return np.conj(np.swapaxes(A, -1, -2))


def _condition_report(A):
    try:
        cond = np.linalg.cond(A)
    except np.linalg.LinAlgError:
        cond = np.inf
    return f"condition number(s): {np.array2string(np.asarray(cond), precision=3)}"


def eig_hermitian(A):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises
    ------
    EigenDecompositionError
        If LAPACK fails to converge; the message carries the condition number.
    """
    H = hermitian_part(A)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(
            f"Hermitian eigensolver did not converge ({exc}); "
            f"{_condition_report(H)}") from exc
    return EigenDecomposition(w[..., ::-1], V[..., :, ::-1])


def eigvalsh_desc(A):
    """Descending eigenvalues of a Hermitian matrix (no eigenvectors)."""
    H = hermitian_part(A)
    try:
        w = np.linalg.eigvalsh(H)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(
            f"Hermitian eigensolver did not converge ({exc}); "
            f"{_condition_report(H)}") from exc
    return w[..., ::-1]


def cholesky(A):
    """Lower-triangular ``L`` with ``L L^H = A``.

    Raises
    ------
    NotPositiveDefinite
        When any pivot is not strictly positive.
    """
    H = hermitian_part(A)
    try:
        return np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {exc}") from exc


def is_hpd(A):
    try:
        cholesky(A)
    except NotPositiveDefinite:
        return False
    return True


_FUNCTIONS = {
    "sqrt": np.sqrt,
    "inv_sqrt": lambda w: 1.0 / np.sqrt(w),
    "inverse": lambda w: 1.0 / w,
    "log": np.log,
    "exp": np.exp,
}


def matrix_function(A, f):
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    Parameters
    ----------
    A : array_like, shape (..., m, m)
        Hermitian matrix; must be positive definite unless ``f == "exp"``.
    f : {"sqrt", "inv_sqrt", "inverse", "log", "exp"}

    Returns
    -------
    ndarray
        ``V diag(f(lambda)) V^H``, made exactly Hermitian.
    """
    try:
        func = _FUNCTIONS[f]
    except KeyError:
        raise ValueError(f"unknown matrix function {f!r}; "
                         f"expected one of {sorted(_FUNCTIONS)}") from None
    w, V = eig_hermitian(A)
    if f != "exp" and np.any(w <= 0):
        raise NotPositiveDefinite(
            f"matrix_function({f!r}) requires an HPD matrix; "
            f"smallest eigenvalue {np.min(w):.3e}")
    out = (V * func(w)[..., None, :]) @ ctranspose(V)
    return hermitian_part(out)


def hpd_inverse(A):
    """Inverse of an HPD matrix (batched).

    A Cholesky pass verifies definiteness; the inverse itself comes from LU,
    which is cheaper than a spectral inverse for the small matrices that
    dominate the iterative means.
    """
    A = np.asarray(A)
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {exc}") from exc
    X = np.linalg.inv(A)
    return 0.5 * (X + ctranspose(X))


def whiten(C1, C2):
    """Whitened congruence ``C2^{-1/2} C1 C2^{-1/2}``."""
    C1 = check_square(C1, "C1")
    C2 = check_square(C2, "C2")
    check_same_dim(C1, C2)
    S = matrix_function(C2, "inv_sqrt")
    return hermitian_part(S @ C1 @ S)


def qr_thin(W):
    """Thin QR factorization of a full-column-rank ``m x n`` matrix.

    Returns ``Q`` with orthonormal columns and upper-triangular ``R`` whose
    diagonal is real and nonnegative.

    Raises
    ------
    RankDeficient
        If ``|R_ii| < 1e-12 * ||W||_F`` for some ``i``.
    """
    W = as_complex_array(W, "W")
    if W.ndim < 2:
        raise DimensionMismatch("W must be at least two-dimensional")
    m, n = W.shape[-2:]
    if n > m:
        raise DimensionMismatch(f"W must have n <= m columns, got {m}x{n}")
    Q, R = np.linalg.qr(W, mode="reduced")
    d = np.diagonal(R, axis1=-2, axis2=-1)
    scale = np.linalg.norm(W, axis=(-2, -1))
    if np.any(np.abs(d) < RANK_TOL * scale[..., None]):
        raise RankDeficient("W is numerically rank deficient")
    phase = np.where(d == 0, 1.0, d / np.abs(d))
    Q = Q * phase[..., None, :]
    R = np.conj(phase)[..., :, None] * R
    return Q, R
