"""Numpy implementations of the hot kernels (fallback when ``_ckernels`` is not built)."""
import numpy as np


def pauli_accumulate(out, col_states, row_index, x_masks, z_masks, amplitudes):
    """Add a sum of Pauli strings into ``out`` in place.

    Column ``c`` is basis state ``col_states[c]``; the string with flip mask ``x``
    sends it to ``b ^ x`` which lands in row ``row_index[b ^ x]`` (dropped when
    negative). The matrix element is ``amplitude * (-1)**popcount(b & z)``.
    """
    col_states = np.asarray(col_states, dtype=np.int64)
    cols = np.arange(col_states.size)
    for x, z, amp in zip(x_masks, z_masks, amplitudes):
        rows = row_index[col_states ^ x]
        keep = rows >= 0
        sign = 1 - 2 * (np.bitwise_count(col_states[keep] & z) & 1).astype(np.int64)
        out[rows[keep], cols[keep]] += amp * sign
    return out


def sign_integral(vt, signs, widths):
    """Sum over intervals of ``width * [h, v]`` in the eigenbasis of the battery.

    ``signs`` holds one row of ``+-1/2`` diagonal entries of ``h`` per interval;
    ``v`` is ``vt`` with entry ``(j, m)`` negated when ``(j - m)(h_j - h_m) < 0``.
    """
    n = vt.shape[0]
    idx = np.arange(n)
    order = np.sign(idx[:, None] - idx[None, :])
    out = np.zeros((n, n), dtype=np.complex128)
    for h, w in zip(signs, widths):
        dh = h[:, None] - h[None, :]
        v = np.where(order * dh < 0, -vt, vt)
        out += w * (dh * v)
    return out
