# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy selection loop; mirrors lddr._select_py.greedy_phi.

Plain C over contiguous float64 buffers, no BLAS: the dominant cost is a
row-wise dot product that is memory-bound at these shapes, and avoiding
library calls keeps the per-step gain update fused with the projection
pass. The whole budget loop runs without the GIL.
"""

from libc.math cimport fabs, sqrt

import numpy as np


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    # plain reduction: the build enables reassociation so the compiler can
    # vectorize it; order is fixed per build, results stay deterministic
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(n):
        s += a[i] * b[i]
    return s


cdef inline void _project_out(const double[:, ::1] basis, double* v,
                              double* coef, Py_ssize_t nbasis,
                              Py_ssize_t d) noexcept nogil:
    # classical Gram-Schmidt step: all coefficients from the incoming v,
    # then one combined subtraction (same operation order as the fallback)
    cdef Py_ssize_t k, i
    for k in range(nbasis):
        coef[k] = _dot(&basis[k, 0], v, d)
    for k in range(nbasis):
        for i in range(d):
            v[i] -= coef[k] * basis[k, i]


def greedy_phi(const double[:, ::1] phi, gains0, Py_ssize_t budget,
               double eps_rank, double reorth_tol):
    """Same contract as the numpy fallback: (selected, gains, basis, exhausted)."""
    cdef Py_ssize_t T = phi.shape[0]
    cdef Py_ssize_t d = phi.shape[1]
    cdef Py_ssize_t i, t, j, n_sel = 0

    sel_arr = np.empty(budget, dtype=np.int64)
    gain_arr = np.empty(budget, dtype=np.float64)
    basis_arr = np.zeros((budget, d), dtype=np.float64)
    dvec_arr = np.array(gains0, dtype=np.float64, copy=True)
    taken_arr = np.zeros(T, dtype=np.uint8)
    coef_arr = np.empty(max(budget, 1), dtype=np.float64)
    v_arr = np.empty(d, dtype=np.float64)

    cdef long long[::1] sel = sel_arr
    cdef double[::1] gain = gain_arr
    cdef double[:, ::1] basis = basis_arr
    cdef double[::1] dvec = dvec_arr
    cdef unsigned char[::1] taken = taken_arr
    cdef double[::1] coef = coef_arr
    cdef double[::1] v = v_arr

    cdef double gj, nv2, best, scale, p
    cdef bint exhausted = False

    with nogil:
        for i in range(budget):
            j = -1
            best = -1.0
            for t in range(T):
                if not taken[t] and dvec[t] > best:
                    best = dvec[t]
                    j = t
            if j < 0 or dvec[j] <= eps_rank:
                exhausted = True
                break
            gj = dvec[j]
            for t in range(d):
                v[t] = phi[j, t]
            if i > 0:
                _project_out(basis, &v[0], &coef[0], i, d)
                nv2 = _dot(&v[0], &v[0], d)
                if fabs(nv2 / gj - 1.0) > reorth_tol:
                    _project_out(basis, &v[0], &coef[0], i, d)
                    nv2 = _dot(&v[0], &v[0], d)
                    if nv2 <= 0.0:
                        exhausted = True
                        break
                    scale = 1.0 / sqrt(nv2)
                else:
                    scale = 1.0 / sqrt(gj)
            else:
                scale = 1.0 / sqrt(gj)
            for t in range(d):
                basis[i, t] = v[t] * scale
            sel[n_sel] = j
            gain[n_sel] = gj
            n_sel += 1
            taken[j] = 1
            # fused projection + gain update over the remaining rows
            for t in range(T):
                if not taken[t]:
                    p = _dot(&phi[t, 0], &basis[i, 0], d)
                    dvec[t] -= p * p
                    if dvec[t] < 0.0:
                        dvec[t] = 0.0

    return (sel_arr[:n_sel].copy(), gain_arr[:n_sel].copy(),
            basis_arr[:n_sel].copy(), bool(exhausted))
