"""Hot inner loops, in a numba flavour and a pure-numpy flavour.

Both flavours are always importable as ``*_numpy`` / ``*_numba`` (the latter
only when numba is installed); the unsuffixed names dispatch on
:data:`isacfbl._backend.BACKEND`.
"""

import numpy as np

from ._backend import BACKEND, HAS_NUMBA

__all__ = [
    "BACKEND",
    "max_pairwise_bias",
    "max_bias_to_set",
    "decode_estimate",
    "max_pairwise_bias_numpy",
    "max_bias_to_set_numpy",
    "decode_estimate_numpy",
]


def max_pairwise_bias_numpy(X, power):
    gram = X.conj() @ X.T
    return float(np.max(np.abs(1.0 - gram / power)))


def max_bias_to_set_numpy(X, x, power):
    if X.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(1.0 - (X.conj() @ x) / power)))


def decode_estimate_numpy(Y, C, gain):
    """ML decode each row of ``Y`` against codebook ``C``, then estimate h.

    The metric ``|g|^2 ||c_i||^2 - 2 Re(conj(g) c_i^H y)`` is the squared
    distance ``||y - g c_i||^2`` with the common ``||y||^2`` dropped.
    Returns ``(indices, h_hat)``.
    """
    energy = np.einsum("mn,mn->m", C.real, C.real) + np.einsum("mn,mn->m", C.imag, C.imag)
    inner = Y @ C.conj().T
    metric = (abs(gain) ** 2) * energy[None, :] - 2.0 * (np.conj(gain) * inner).real
    idx = np.argmin(metric, axis=1)
    rows = np.arange(Y.shape[0])
    h_hat = inner[rows, idx] / energy[idx]
    return idx.astype(np.int64), h_hat


if HAS_NUMBA:
    from numba import njit

    # Loops run on split real/imaginary parts so the reductions vectorize.

    @njit(cache=True, fastmath={"reassoc", "contract"})
    def _gram_bias_max(Xr, Xi, Zr, Zi, power, skip_lower):
        M, N = Xr.shape
        K = Zr.shape[0]
        worst = 0.0
        for i in range(M):
            j0 = i if skip_lower else 0
            for j in range(j0, K):
                ar = 0.0
                ai = 0.0
                for n in range(N):
                    ar += Xr[i, n] * Zr[j, n] + Xi[i, n] * Zi[j, n]
                    ai += Xr[i, n] * Zi[j, n] - Xi[i, n] * Zr[j, n]
                br = 1.0 - ar / power
                bi = ai / power
                b = np.sqrt(br * br + bi * bi)
                if b > worst:
                    worst = b
        return worst

    def max_pairwise_bias_numba(X, power):
        Xr = np.ascontiguousarray(X.real)
        Xi = np.ascontiguousarray(X.imag)
        return _gram_bias_max(Xr, Xi, Xr, Xi, float(power), True)

    def max_bias_to_set_numba(X, x, power):
        if X.shape[0] == 0:
            return 0.0
        z = x.reshape(1, -1)
        return _gram_bias_max(
            np.ascontiguousarray(X.real), np.ascontiguousarray(X.imag),
            np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag), float(power), False,
        )

    @njit(cache=True, fastmath={"reassoc", "contract"})
    def _decode_estimate_split(Yr, Yi, Cr, Ci, gr, gi):
        T, N = Yr.shape
        M = Cr.shape[0]
        energy = np.empty(M)
        for i in range(M):
            e = 0.0
            for n in range(N):
                e += Cr[i, n] * Cr[i, n] + Ci[i, n] * Ci[i, n]
            energy[i] = e
        g2 = gr * gr + gi * gi
        idx = np.empty(T, dtype=np.int64)
        h_re = np.empty(T)
        h_im = np.empty(T)
        for t in range(T):
            best = np.inf
            best_i = 0
            best_r = 0.0
            best_m = 0.0
            for i in range(M):
                ar = 0.0
                ai = 0.0
                for n in range(N):
                    ar += Cr[i, n] * Yr[t, n] + Ci[i, n] * Yi[t, n]
                    ai += Cr[i, n] * Yi[t, n] - Ci[i, n] * Yr[t, n]
                m = g2 * energy[i] - 2.0 * (gr * ar + gi * ai)
                if m < best:
                    best = m
                    best_i = i
                    best_r = ar
                    best_m = ai
            idx[t] = best_i
            h_re[t] = best_r / energy[best_i]
            h_im[t] = best_m / energy[best_i]
        return idx, h_re, h_im

    def decode_estimate_numba(Y, C, gain):
        idx, h_re, h_im = _decode_estimate_split(
            np.ascontiguousarray(Y.real), np.ascontiguousarray(Y.imag),
            np.ascontiguousarray(C.real), np.ascontiguousarray(C.imag),
            float(gain.real), float(gain.imag),
        )
        return idx, h_re + 1j * h_im

    __all__ += ["max_pairwise_bias_numba", "max_bias_to_set_numba", "decode_estimate_numba"]


if BACKEND == "numba":
    _max_pairwise_bias = max_pairwise_bias_numba
    _max_bias_to_set = max_bias_to_set_numba
    _decode_estimate = decode_estimate_numba
else:
    _max_pairwise_bias = max_pairwise_bias_numpy
    _max_bias_to_set = max_bias_to_set_numpy
    _decode_estimate = decode_estimate_numpy


def _as_c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def max_pairwise_bias(X, power):
    return float(_max_pairwise_bias(_as_c128(X), float(power)))


def max_bias_to_set(X, x, power):
    return float(_max_bias_to_set(_as_c128(X), _as_c128(x), float(power)))


def decode_estimate(Y, C, gain):
    return _decode_estimate(_as_c128(Y), _as_c128(C), complex(gain))
