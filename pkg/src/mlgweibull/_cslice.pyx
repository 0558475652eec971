# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled coordinate-sweep slice sampler for cMLG kernels.

Mirrors ``mlgweibull._pyslice.slice_sweep`` operation for operation and draws
uniforms from the same numpy bit generator, so both backends consume the
random stream identically.
"""
import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, floor, isfinite
from numpy.random cimport bitgen_t


cdef inline double _coord_logf(double t, double lin_j, const double *lc,
                               const double *h, Py_ssize_t nnz) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t r
    for r in range(nnz):
        s += exp(lc[r] + h[r] * t)
    return lin_j * t - s


def slice_sweep(const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] indices,
                const double[::1] data, const double[::1] lin,
                const double[::1] log_rate, double[::1] q, double[::1] eta,
                double width, int max_steps, object rng):
    """One in-place sweep over all coordinates of ``q``; see the Python twin."""
    cdef Py_ssize_t p = q.shape[0]
    cdef Py_ssize_t j, r, start, nnz, maxnnz = 0, row
    cdef double x0, x1, f0, f1, logy, left, right, delta
    cdef int steps_left, steps_right, n_shrink
    cdef int status = 0
    cdef Py_ssize_t bad = -1

    for j in range(p):
        if indptr[j + 1] - indptr[j] > maxnnz:
            maxnnz = indptr[j + 1] - indptr[j]
    lc_buf = np.empty(max(maxnnz, 1), dtype=np.float64)
    h_buf = np.empty(max(maxnnz, 1), dtype=np.float64)
    cdef double[::1] lc = lc_buf
    cdef double[::1] h = h_buf

    capsule = rng.bit_generator.capsule
    cdef bitgen_t *bg = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    with rng.bit_generator.lock, nogil:
        for j in range(p):
            start = indptr[j]
            nnz = indptr[j + 1] - start
            x0 = q[j]
            for r in range(nnz):
                row = indices[start + r]
                h[r] = data[start + r]
                lc[r] = log_rate[row] + eta[row] - h[r] * x0
            f0 = _coord_logf(x0, lin[j], &lc[0], &h[0], nnz)
            if not isfinite(f0):
                status = 1
                bad = j
                break
            logy = f0 + log(1.0 - bg.next_double(bg.state))

            left = x0 - width * bg.next_double(bg.state)
            right = left + width
            steps_left = <int> floor(max_steps * bg.next_double(bg.state))
            steps_right = max_steps - 1 - steps_left
            while steps_left > 0 and _coord_logf(left, lin[j], &lc[0], &h[0], nnz) > logy:
                left -= width
                steps_left -= 1
            while steps_right > 0 and _coord_logf(right, lin[j], &lc[0], &h[0], nnz) > logy:
                right += width
                steps_right -= 1

            n_shrink = 0
            while True:
                x1 = left + bg.next_double(bg.state) * (right - left)
                f1 = _coord_logf(x1, lin[j], &lc[0], &h[0], nnz)
                if f1 >= logy:
                    break
                if x1 < x0:
                    left = x1
                else:
                    right = x1
                n_shrink += 1
                if n_shrink > 200:
                    status = 2
                    bad = j
                    break
            if status != 0:
                break

            delta = x1 - x0
            for r in range(nnz):
                eta[indices[start + r]] += h[r] * delta
            q[j] = x1
    return status, bad
