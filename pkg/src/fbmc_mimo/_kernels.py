"""Hot inner loops, compiled with numba when available.

Each kernel has a numba implementation and a vectorized numpy
implementation with identical semantics. The numba path is used unless the
environment variable ``FBMC_MIMO_PURE_NUMPY`` is set to a non-empty value
other than ``0``, or numba cannot be imported. Both backends stay importable
through :data:`BACKENDS` so they can be tested and benchmarked side by side.
"""

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_flag = os.environ.get("FBMC_MIMO_PURE_NUMPY", "")
USE_NUMBA = numba is not None and _flag in ("", "0")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _overlap_add_np(blocks, taps, hop, out_len):
    nb, n_sym, L = blocks.shape
    lg = taps.shape[0]
    n_chunks = -(-max(out_len, (n_sym - 1) * hop + lg) // hop)
    out = np.zeros((nb, n_chunks, hop), dtype=np.complex128)
    for j in range(-(-lg // hop)):
        t0 = j * hop
        width = min(hop, lg - t0)
        q0 = t0 % L
        out[:, j:j + n_sym, :width] += taps[t0:t0 + width] * blocks[:, :, q0:q0 + width]
    return out.reshape(nb, -1)[:, :out_len]


def _fold_frames_np(signal, taps, hop, L, n_sym):
    nb, length = signal.shape
    lg = taps.shape[0]
    n_chunks = -(-max(length, (n_sym - 1) * hop + lg) // hop)
    padded = np.zeros((nb, n_chunks * hop), dtype=np.complex128)
    padded[:, :length] = signal
    chunks = padded.reshape(nb, n_chunks, hop)
    out = np.zeros((nb, n_sym, L), dtype=np.complex128)
    for j in range(-(-lg // hop)):
        t0 = j * hop
        width = min(hop, lg - t0)
        q0 = t0 % L
        out[:, :, q0:q0 + width] += taps[t0:t0 + width] * chunks[:, j:j + n_sym, :width]
    return out


def _godard_sweep_np(w, x, R, mu, block, eps):
    n_samples = x.shape[2]
    for b0 in range(0, n_samples, block):
        xb = x[:, :, b0:b0 + block]
        nb = xb.shape[2]
        z = np.einsum("lm,lmn->ln", w, xb).real
        e = (z * z - R) * z
        grad = np.einsum("ln,lmn->lm", e, xb.conj()) / nb
        px = np.sum(xb.real ** 2 + xb.imag ** 2, axis=(1, 2)) / nb
        pz = np.maximum(np.mean(z * z, axis=1), eps)
        w -= (mu / (px * pz))[:, None] * grad
    return w


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _overlap_add_nb(blocks, taps, hop, out_len):
        nb, n_sym, L = blocks.shape
        lg = taps.shape[0]
        full = max(out_len, (n_sym - 1) * hop + lg)
        out = np.zeros((nb, full), dtype=np.complex128)
        for b in range(nb):
            for n in range(n_sym):
                base = n * hop
                for t in range(lg):
                    out[b, base + t] += taps[t] * blocks[b, n, t % L]
        return out[:, :out_len].copy()

    @numba.njit(cache=True, nogil=True)
    def _fold_frames_nb(signal, taps, hop, L, n_sym):
        nb, length = signal.shape
        lg = taps.shape[0]
        out = np.zeros((nb, n_sym, L), dtype=np.complex128)
        for b in range(nb):
            for n in range(n_sym):
                base = n * hop
                stop = min(lg, length - base)
                for t in range(stop):
                    out[b, n, t % L] += taps[t] * signal[b, base + t]
        return out

    @numba.njit(cache=True, nogil=True)
    def _godard_sweep_nb(w, x, R, mu, block, eps):
        n_sub, n_ant, n_samples = x.shape
        z = np.empty(block)
        for l in range(n_sub):
            for b0 in range(0, n_samples, block):
                nb = min(block, n_samples - b0)
                z[:nb] = 0.0
                px = 0.0
                for m in range(n_ant):
                    wr = w[l, m].real
                    wi = w[l, m].imag
                    for n in range(nb):
                        v = x[l, m, b0 + n]
                        z[n] += wr * v.real - wi * v.imag
                        px += v.real * v.real + v.imag * v.imag
                px /= nb
                pz = 0.0
                for n in range(nb):
                    pz += z[n] * z[n]
                    z[n] = (z[n] * z[n] - R) * z[n]
                pz = max(pz / nb, eps)
                step = mu / (px * pz) / nb
                for m in range(n_ant):
                    gr = 0.0
                    gi = 0.0
                    for n in range(nb):
                        v = x[l, m, b0 + n]
                        gr += z[n] * v.real
                        gi -= z[n] * v.imag
                    w[l, m] -= step * (gr + 1j * gi)
        return w


BACKENDS = {"numpy": SimpleNamespace(
    overlap_add=_overlap_add_np,
    fold_frames=_fold_frames_np,
    godard_sweep=_godard_sweep_np,
)}
if numba is not None:
    BACKENDS["numba"] = SimpleNamespace(
        overlap_add=_overlap_add_nb,
        fold_frames=_fold_frames_nb,
        godard_sweep=_godard_sweep_nb,
    )

ACTIVE = "numba" if USE_NUMBA else "numpy"
_impl = BACKENDS[ACTIVE]


def overlap_add(blocks, taps, hop, out_len):
    """Window periodic symbol blocks with ``taps`` and overlap-add them.

    ``out[b, n*hop + t] += taps[t] * blocks[b, n, t % L]`` for every symbol
    ``n`` and tap ``t``; the result is truncated or zero-padded to ``out_len``.
    """
    blocks = np.ascontiguousarray(blocks, dtype=np.complex128)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    return _impl.overlap_add(blocks, taps, int(hop), int(out_len))


def fold_frames(signal, taps, hop, L, n_sym):
    """Window each hop-spaced frame with ``taps`` and fold it modulo ``L``."""
    signal = np.ascontiguousarray(signal, dtype=np.complex128)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    return _impl.fold_frames(signal, taps, int(hop), int(L), int(n_sym))


def godard_sweep(w, x, R, mu, block, eps=1e-12):
    """One block-gradient pass of the real dispersion update, in place on ``w``.

    ``w`` has shape (L, M), ``x`` has shape (L, M, S).
    """
    x = np.ascontiguousarray(x, dtype=np.complex128)
    return _impl.godard_sweep(w, x, float(R), float(mu), int(block), float(eps))
