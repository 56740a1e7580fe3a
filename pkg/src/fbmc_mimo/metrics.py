"""Output SINR estimation against known transmitted symbols."""

import numpy as np

SINR_CAP_DB = 200.0


def measure_sinr(equalized, transmitted):
    """Per-slot SINR in dB from a least-squares gain fit.

    For every leading index the gain ``g`` minimizing ``sum (z - g s)**2`` over
    the last axis is fitted; the SINR is ``g**2 * mean(s**2) / mean((z - g s)**2)``.
    A sign flip or rescaling of ``z`` therefore does not change the result.
    Distortion-free outputs are reported as ``SINR_CAP_DB``.

    Parameters
    ----------
    equalized, transmitted : array_like, shape (..., N)
        Real combiner outputs and the symbols that were sent.

    Returns
    -------
    numpy.ndarray, shape (...)
    """
    z = np.asarray(equalized, dtype=np.float64)
    s = np.asarray(transmitted, dtype=np.float64)
    if z.shape != s.shape:
        raise ValueError(f"shape mismatch: equalized {z.shape} vs transmitted {s.shape}")
    if z.shape[-1] == 0:
        raise ValueError("need at least one symbol per slot")
    ps = np.mean(s * s, axis=-1)
    if np.any(ps == 0):
        raise ValueError("transmitted symbols have zero power in some slot")
    g = np.sum(z * s, axis=-1) / np.sum(s * s, axis=-1)
    err = z - g[..., None] * s
    pe = np.mean(err * err, axis=-1)
    sig = g * g * ps
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_db = 10.0 * np.log10(sig / pe)
    ratio_db = np.where(pe == 0, SINR_CAP_DB, ratio_db)
    return np.minimum(ratio_db, SINR_CAP_DB)
