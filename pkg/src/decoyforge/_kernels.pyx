# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``.

Signatures and results match the numpy fallback exactly; see that module for
the detector indexing convention.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, lgamma

cnp.import_array()

SUCCESS_MASKS = (3, 12, 9, 6)


cdef inline bint _is_success(int mask) noexcept nogil:
    return mask == 3 or mask == 12 or mask == 9 or mask == 6


def fock_lit_distribution(int j, int k, ca, cb):
    cdef int n = j + k
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(16)
    if n == 0:
        out[0] = 1.0
        return out
    cdef double complex[:] a = np.ascontiguousarray(ca, dtype=complex)
    cdef double complex[:] b = np.ascontiguousarray(cb, dtype=complex)
    cdef int dim = n + 1
    cdef Py_ssize_t s3 = 1, s2 = dim, s1 = dim * dim, s0 = dim * dim * dim
    cdef Py_ssize_t size = s0 * dim
    cdef double complex[:] poly = np.zeros(size, dtype=complex)
    cdef double complex[:] new = np.zeros(size, dtype=complex)
    cdef double complex[:] tmp
    cdef double complex[:] c
    cdef double complex v
    cdef int step, n0, n1, n2, n3
    cdef Py_ssize_t idx
    poly[0] = 1.0
    for step in range(n):
        c = a if step < j else b
        new[:] = 0
        # only patterns with total photon number == step are populated
        for n0 in range(step + 1):
            for n1 in range(step + 1 - n0):
                for n2 in range(step + 1 - n0 - n1):
                    n3 = step - n0 - n1 - n2
                    idx = n0 * s0 + n1 * s1 + n2 * s2 + n3 * s3
                    v = poly[idx]
                    if v == 0:
                        continue
                    new[idx + s0] += c[0] * v
                    new[idx + s1] += c[1] * v
                    new[idx + s2] += c[2] * v
                    new[idx + s3] += c[3] * v
        tmp = poly
        poly = new
        new = tmp
    cdef double norm = lgamma(j + 1.0) + lgamma(k + 1.0)
    cdef double p
    cdef int mask
    for n0 in range(n + 1):
        for n1 in range(n + 1 - n0):
            for n2 in range(n + 1 - n0 - n1):
                n3 = n - n0 - n1 - n2
                idx = n0 * s0 + n1 * s1 + n2 * s2 + n3 * s3
                v = poly[idx]
                p = (v.real * v.real + v.imag * v.imag) * exp(
                    lgamma(n0 + 1.0) + lgamma(n1 + 1.0) + lgamma(n2 + 1.0) + lgamma(n3 + 1.0) - norm
                )
                mask = (n0 > 0) | ((n1 > 0) << 1) | ((n2 > 0) << 2) | ((n3 > 0) << 3)
                out[mask] += p
    return out


def bb84_trials(arrived, u_dark, u_err, double p_d, double e_d, double e_0):
    cdef cnp.int64_t[:] arr = np.ascontiguousarray(arrived, dtype=np.int64)
    cdef double[:] ud = np.ascontiguousarray(u_dark, dtype=np.float64)
    cdef double[:] ue = np.ascontiguousarray(u_err, dtype=np.float64)
    cdef Py_ssize_t i, n = arr.shape[0]
    cdef long clicks = 0, errors = 0
    with nogil:
        for i in range(n):
            if arr[i] > 0:
                clicks += 1
                if ue[i] < e_d:
                    errors += 1
            elif ud[i] < p_d:
                clicks += 1
                if ue[i] < e_0:
                    errors += 1
    return int(clicks), int(errors)


def mdi_z_single_trials(u, double eta_s, double e_d, double p_d):
    cdef double[:, :] w = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t i, n = w.shape[0]
    cdef long succ = 0, errors = 0
    cdef int bit_a, bit_b, pol_a, pol_b, port_a, port_b, mask, d
    cdef bint arr_a, arr_b
    with nogil:
        for i in range(n):
            bit_a = w[i, 0] < 0.5
            bit_b = w[i, 1] < 0.5
            pol_a = bit_a ^ (w[i, 2] < e_d)
            pol_b = bit_b ^ (w[i, 3] < e_d)
            arr_a = w[i, 4] < eta_s
            arr_b = w[i, 5] < eta_s
            port_a = w[i, 6] < 0.5
            port_b = w[i, 7] < 0.5
            if arr_a and arr_b and pol_a == pol_b:
                port_b = port_a
            mask = 0
            if arr_a:
                mask |= 1 << (2 * port_a + pol_a)
            if arr_b:
                mask |= 1 << (2 * port_b + pol_b)
            for d in range(4):
                if w[i, 8 + d] < p_d:
                    mask |= 1 << d
            if _is_success(mask):
                succ += 1
                if bit_a == bit_b:
                    errors += 1
    return int(succ), int(errors)
