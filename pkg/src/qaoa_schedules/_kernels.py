"""Numba kernels operating on split real/imaginary state arrays.

The state is kept as two float64 arrays rather than one complex array;
the butterflies vectorize noticeably better that way.
"""

import numba as nb
import numpy as np

_JIT = dict(fastmath=True, error_model="numpy", cache=True)


@nb.njit(**_JIT)
def rotate_single(re, im, bit, ar, ai, br, bi):
    # a' = alpha*a + beta*b ; b' = beta*a + alpha*b
    dim = re.shape[0]
    for base in range(0, dim, 2 * bit):
        r0 = re[base:base + bit]
        i0 = im[base:base + bit]
        r1 = re[base + bit:base + 2 * bit]
        i1 = im[base + bit:base + 2 * bit]
        for k in range(bit):
            xr = r0[k]
            xi = i0[k]
            yr = r1[k]
            yi = i1[k]
            r0[k] = ar * xr - ai * xi + br * yr - bi * yi
            i0[k] = ar * xi + ai * xr + br * yi + bi * yr
            r1[k] = br * xr - bi * xi + ar * yr - ai * yi
            i1[k] = br * xi + bi * xr + ar * yi + ai * yr


@nb.njit(**_JIT)
def rotate_pair(re, im, b1, b2, ar, ai, br, bi):
    """Apply the same 2x2 symmetric gate to the qubits with masks b1 < b2."""
    dim = re.shape[0]
    for base in range(0, dim, 2 * b2):
        for mid in range(base, base + b2, 2 * b1):
            r0 = re[mid:mid + b1]
            i0 = im[mid:mid + b1]
            r1 = re[mid + b1:mid + 2 * b1]
            i1 = im[mid + b1:mid + 2 * b1]
            r2 = re[mid + b2:mid + b2 + b1]
            i2 = im[mid + b2:mid + b2 + b1]
            r3 = re[mid + b2 + b1:mid + b2 + 2 * b1]
            i3 = im[mid + b2 + b1:mid + b2 + 2 * b1]
            for k in range(b1):
                a0r = r0[k]
                a0i = i0[k]
                a1r = r1[k]
                a1i = i1[k]
                a2r = r2[k]
                a2i = i2[k]
                a3r = r3[k]
                a3i = i3[k]
                # gate on b1: pairs (0,1) and (2,3)
                x0r = ar * a0r - ai * a0i + br * a1r - bi * a1i
                x0i = ar * a0i + ai * a0r + br * a1i + bi * a1r
                x1r = br * a0r - bi * a0i + ar * a1r - ai * a1i
                x1i = br * a0i + bi * a0r + ar * a1i + ai * a1r
                x2r = ar * a2r - ai * a2i + br * a3r - bi * a3i
                x2i = ar * a2i + ai * a2r + br * a3i + bi * a3r
                x3r = br * a2r - bi * a2i + ar * a3r - ai * a3i
                x3i = br * a2i + bi * a2r + ar * a3i + ai * a3r
                # gate on b2: pairs (0,2) and (1,3)
                r0[k] = ar * x0r - ai * x0i + br * x2r - bi * x2i
                i0[k] = ar * x0i + ai * x0r + br * x2i + bi * x2r
                r2[k] = br * x0r - bi * x0i + ar * x2r - ai * x2i
                i2[k] = br * x0i + bi * x0r + ar * x2i + ai * x2r
                r1[k] = ar * x1r - ai * x1i + br * x3r - bi * x3i
                i1[k] = ar * x1i + ai * x1r + br * x3i + bi * x3r
                r3[k] = br * x1r - bi * x1i + ar * x3r - ai * x3i
                i3[k] = br * x1i + bi * x1r + ar * x3i + ai * x3r


@nb.njit(**_JIT)
def phase_by_level(re, im, index, tr, ti):
    for x in range(re.shape[0]):
        k = index[x]
        a = re[x]
        b = im[x]
        c = tr[k]
        d = ti[k]
        re[x] = a * c - b * d
        im[x] = a * d + b * c


@nb.njit(cache=True)
def norm_squared(re, im):
    # plain sequential sum: fixed reduction order
    acc = 0.0
    for x in range(re.shape[0]):
        acc += re[x] * re[x] + im[x] * im[x]
    return acc


def apply_uniform_gate(re, im, num_qubits, alpha, beta):
    """Apply [[alpha, beta], [beta, alpha]] to every qubit."""
    ar, ai, br, bi = alpha.real, alpha.imag, beta.real, beta.imag
    q = 0
    while q + 1 < num_qubits:
        rotate_pair(re, im, 1 << q, 1 << (q + 1), ar, ai, br, bi)
        q += 2
    if q < num_qubits:
        rotate_single(re, im, 1 << q, ar, ai, br, bi)


def level_index_dtype(num_levels):
    if num_levels <= np.iinfo(np.uint8).max + 1:
        return np.uint8
    if num_levels <= np.iinfo(np.uint16).max + 1:
        return np.uint16
    return np.uint32
