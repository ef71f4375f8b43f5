# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``; identical contracts."""
import numpy as np

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def pauli_accumulate(double complex[:, ::1] out, col_states, long long[::1] row_index,
                     x_masks, z_masks, amplitudes):
    cdef long long[::1] states = np.ascontiguousarray(col_states, dtype=np.int64)
    cdef long long[::1] xs = np.ascontiguousarray(x_masks, dtype=np.int64)
    cdef long long[::1] zs = np.ascontiguousarray(z_masks, dtype=np.int64)
    cdef double complex[::1] amps = np.ascontiguousarray(amplitudes, dtype=np.complex128)
    cdef Py_ssize_t t, c, ncols = states.shape[0], nterms = xs.shape[0]
    cdef long long b, x, z, r
    cdef double complex a
    with nogil:
        for t in range(nterms):
            x = xs[t]
            z = zs[t]
            a = amps[t]
            for c in range(ncols):
                b = states[c]
                r = row_index[b ^ x]
                if r < 0:
                    continue
                if __builtin_popcountll(<unsigned long long>(b & z)) & 1:
                    out[r, c] -= a
                else:
                    out[r, c] += a
    return np.asarray(out)


def sign_integral(double complex[:, ::1] vt, double[:, ::1] signs, double[::1] widths):
    cdef Py_ssize_t n = vt.shape[0], nb = widths.shape[0]
    cdef Py_ssize_t j, m, k
    cdef double dh, acc
    out_arr = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    with nogil:
        for j in range(n):
            for m in range(n):
                if j == m:
                    continue
                acc = 0.0
                for k in range(nb):
                    dh = signs[k, j] - signs[k, m]
                    if (j - m) * dh < 0:
                        acc -= widths[k] * dh
                    else:
                        acc += widths[k] * dh
                out[j, m] = acc * vt[j, m]
    return out_arr
