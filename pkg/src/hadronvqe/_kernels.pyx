# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels: in-place gate application and Pauli expectations."""

import numpy as np
from libc.math cimport cos, sin, sqrt

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

# gate codes, mirrored in _kernels_py
cdef enum:
    G_RX = 0
    G_RY = 1
    G_RZ = 2
    G_X = 3
    G_H = 4
    G_SDG = 5
    G_CX = 6


cdef inline void _one_qubit(double complex[::1] s, Py_ssize_t dim, int q,
                            double complex m00, double complex m01,
                            double complex m10, double complex m11) noexcept nogil:
    cdef Py_ssize_t step = (<Py_ssize_t>1) << q
    cdef Py_ssize_t i, j
    cdef double complex a, b
    i = 0
    while i < dim:
        for j in range(i, i + step):
            a = s[j]
            b = s[j + step]
            s[j] = m00 * a + m01 * b
            s[j + step] = m10 * a + m11 * b
        i += 2 * step


cdef inline void _diag(double complex[::1] s, Py_ssize_t dim, int q,
                       double complex d0, double complex d1) noexcept nogil:
    cdef Py_ssize_t step = (<Py_ssize_t>1) << q
    cdef Py_ssize_t i, j
    i = 0
    while i < dim:
        for j in range(i, i + step):
            s[j] = d0 * s[j]
            s[j + step] = d1 * s[j + step]
        i += 2 * step


cdef inline void _cx(double complex[::1] s, Py_ssize_t dim, int c, int t) noexcept nogil:
    cdef Py_ssize_t cm = (<Py_ssize_t>1) << c
    cdef Py_ssize_t tm = (<Py_ssize_t>1) << t
    cdef Py_ssize_t k
    cdef double complex tmp
    for k in range(dim):
        if (k & cm) and not (k & tm):
            tmp = s[k]
            s[k] = s[k | tm]
            s[k | tm] = tmp


def apply_gates(double complex[::1] state, int[::1] kinds, int[::1] targets,
                int[::1] controls, double[::1] angles):
    """Apply a gate list to ``state`` in place."""
    cdef Py_ssize_t dim = state.shape[0]
    cdef Py_ssize_t g, ng = kinds.shape[0]
    cdef double h = 1.0 / sqrt(2.0)
    cdef double c, sn
    cdef int k, t
    with nogil:
        for g in range(ng):
            k = kinds[g]
            t = targets[g]
            if k == G_RX:
                c = cos(angles[g] / 2)
                sn = sin(angles[g] / 2)
                _one_qubit(state, dim, t, c, -1j * sn, -1j * sn, c)
            elif k == G_RY:
                c = cos(angles[g] / 2)
                sn = sin(angles[g] / 2)
                _one_qubit(state, dim, t, c, -sn, sn, c)
            elif k == G_RZ:
                c = cos(angles[g] / 2)
                sn = sin(angles[g] / 2)
                _diag(state, dim, t, c - 1j * sn, c + 1j * sn)
            elif k == G_X:
                _one_qubit(state, dim, t, 0, 1, 1, 0)
            elif k == G_H:
                _one_qubit(state, dim, t, h, h, h, -h)
            elif k == G_SDG:
                _diag(state, dim, t, 1, -1j)
            elif k == G_CX:
                _cx(state, dim, controls[g], t)


def pauli_expectations(double complex[::1] state, long long[::1] xs, long long[::1] zs,
                       long long[::1] nys):
    """Real parts of <psi|P|psi> for each symplectic Pauli string (x, z, n_y)."""
    cdef Py_ssize_t dim = state.shape[0]
    cdef Py_ssize_t nt = xs.shape[0]
    out = np.empty(nt, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t t, k
    cdef unsigned long long x, z
    cdef double complex acc, a, b
    cdef double re, im
    cdef int ph
    with nogil:
        for t in range(nt):
            x = <unsigned long long>xs[t]
            z = <unsigned long long>zs[t]
            acc = 0
            for k in range(<Py_ssize_t>dim):
                a = state[k]
                b = state[<Py_ssize_t>(k ^ x)]
                if __builtin_popcountll(k & z) & 1:
                    acc = acc - b.conjugate() * a
                else:
                    acc = acc + b.conjugate() * a
            ph = nys[t] & 3
            re = acc.real
            im = acc.imag
            # multiply by i^ph and keep the real part
            if ph == 0:
                res[t] = re
            elif ph == 1:
                res[t] = -im
            elif ph == 2:
                res[t] = -re
            else:
                res[t] = im
    return out
