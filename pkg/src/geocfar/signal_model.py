"""Snapshots to Toeplitz covariance matrices and power spectra.

The covariance of a snapshot ``x = (x_1, ..., x_m)`` is the Toeplitz matrix
whose first row holds the correlation lags

    c_k = sum_{i=k+1}^{m} x_i conj(x_{i-k}),    k = 0, ..., m-1,

with ``c_{-k} = conj(c_k)`` below the diagonal. By default every lag is
divided by ``m`` so that ``c_0`` is the average per-sample power.
"""

import numpy as np

from .linalg import eigvalsh_desc
from .validation import check_random_state, check_snapshots

GAP_EPS = 1e-12


def correlation_lags(x, normalize=True):
    """Correlation lags ``(c_0, ..., c_{m-1})`` of one or more snapshots.

    Parameters
    ----------
    x : array_like, shape (..., m)
        Nonzero complex snapshot(s).
    normalize : bool, default True
        Divide every lag by ``m``.

    Returns
    -------
    ndarray, shape (..., m)
        Complex lags with a real, positive ``c_0``.
    """
    x = check_snapshots(x)
    m = x.shape[-1]
    c = np.empty(x.shape, dtype=np.complex128)
    c[..., 0] = np.sum(np.abs(x) ** 2, axis=-1)
    for k in range(1, m):
        c[..., k] = np.sum(x[..., k:] * np.conj(x[..., :m - k]), axis=-1)
    if normalize:
        c /= m
    return c


def toeplitz_from_lags(c):
    """Hermitian Toeplitz matrix with first row ``c`` (batched)."""
    c = np.asarray(c, dtype=np.complex128)
    m = c.shape[-1]
    idx = np.arange(m)
    offset = idx[None, :] - idx[:, None]
    upper = c[..., np.abs(offset)]
    C = np.where(offset >= 0, upper, np.conj(upper))
    C[..., idx, idx] = c[..., :1].real
    return C


def toeplitz_covariance(x, normalize=True):
    """Toeplitz HPD covariance matrix of a nonzero snapshot.

    >>> toeplitz_covariance([1, 1j], normalize=False)
    array([[2.+0.j, 0.+1.j],
           [0.-1.j, 2.+0.j]])

    Raises
    ------
    ZeroSnapshot
        For an all-zero input.
    """
    return toeplitz_from_lags(correlation_lags(x, normalize=normalize))


def dft_power_spectrum(x):
    """Periodogram ``|y_k|^2`` in frequency order, ``k = 0, ..., m-1``.

    The 0-based DFT convention is used; it differs from a 1-based sum only by
    a unit-modulus phase per bin, so the magnitudes are identical.
    """
    x = check_snapshots(x)
    return np.abs(np.fft.fft(x, axis=-1)) ** 2


def spectrum_from_lags(c):
    """Power spectrum from raw (unnormalized) lags via Wiener-Khinchin.

    Evaluates ``|y_k|^2 = sum_{i=1-m}^{m-1} c_i exp(-j 2 pi k i / m)``
    using ``c_{-i} = conj(c_i)``.
    """
    c = np.asarray(c, dtype=np.complex128)
    m = c.shape[-1]
    k = np.arange(m)
    phase = np.exp(-2j * np.pi * np.outer(np.arange(1, m), k) / m)
    tail = c[..., 1:] @ phase
    return c[..., 0].real[..., None] + 2.0 * tail.real


def ar1_process(m, rho, rng, size=()):
    """Stationary unit-power complex AR(1) samples, shape ``size + (m,)``."""
    rng = check_random_state(rng)
    shape = tuple(np.atleast_1d(size)) if size != () else ()
    e = (rng.standard_normal(shape + (m,))
         + 1j * rng.standard_normal(shape + (m,))) / np.sqrt(2.0)
    x = np.empty_like(e)
    x[..., 0] = e[..., 0]
    innov = np.sqrt(1.0 - rho ** 2)
    for i in range(1, m):
        x[..., i] = rho * x[..., i - 1] + innov * e[..., i]
    return x


def asymptotic_spectrum_gap(process, m, trials=200, seed=0, rho=0.9,
                            reduce="mean"):
    """Relative gap between sorted covariance eigenvalues and sorted periodogram.

    For each trial a snapshot is drawn, and the per-bin relative gap
    ``|lambda_k - P_k| / (P_k + eps)`` is computed on the descending-sorted
    eigenvalues of the (unnormalized) Toeplitz covariance and the sorted
    periodogram. The gaps are reduced over bins with ``reduce`` and then
    averaged over trials.

    Parameters
    ----------
    process : {"white", "ar1"} or ndarray
        Generator id, or an explicit snapshot (deterministic, one trial).
    m : int
        Snapshot length.
    reduce : {"mean", "max"}
        Reduction across frequency bins. ``"max"`` is dominated by near-zero
        periodogram bins and does not shrink with ``m``.
    """
    reducer = {"mean": np.mean, "max": np.max}[reduce]
    if isinstance(process, str):
        rng = check_random_state(seed)
        if process == "white":
            x = ar1_process(m, 0.0, rng, size=trials)
        elif process == "ar1":
            x = ar1_process(m, rho, rng, size=trials)
        else:
            raise ValueError(f"unknown process {process!r}")
    else:
        x = check_snapshots(process)[None, :]
    lam = eigvalsh_desc(toeplitz_covariance(x, normalize=False))
    P = np.sort(dft_power_spectrum(x), axis=-1)[..., ::-1]
    rel = np.abs(lam - P) / (P + GAP_EPS)
    return float(np.mean(reducer(rel, axis=-1)))
