# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled cyclic complex Jacobi sweeps. Same contract as ``_jacobi_py``."""

from libc.math cimport sqrt, fabs


cdef double _off_norm(double complex[:, ::1] a) nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j
    cdef double total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += a[i, j].real * a[i, j].real + a[i, j].imag * a[i, j].imag
    return sqrt(total)


def off_norm(a):
    return _off_norm(a)


def jacobi_sweeps(double complex[:, ::1] a, double complex[:, ::1] v,
                  double tol, int max_sweeps):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, i
    cdef int sweep
    cdef double r, theta, t, c, s
    cdef double complex apq, ph, cph, xp, xq
    cdef double off = _off_norm(a)
    with nogil:
        for sweep in range(max_sweeps):
            if off <= tol:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    r = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                    if r < 1e-300:
                        continue
                    ph = apq / r
                    cph = ph.conjugate()
                    theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for i in range(n):
                        xp = a[i, p]
                        xq = a[i, q]
                        a[i, p] = c * xp - s * cph * xq
                        a[i, q] = s * xp + c * cph * xq
                    for i in range(n):
                        xp = a[p, i]
                        xq = a[q, i]
                        a[p, i] = c * xp - s * ph * xq
                        a[q, i] = s * xp + c * ph * xq
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    a[p, p] = a[p, p].real
                    a[q, q] = a[q, q].real
                    for i in range(n):
                        xp = v[i, p]
                        xq = v[i, q]
                        v[i, p] = c * xp - s * cph * xq
                        v[i, q] = s * xp + c * cph * xq
            off = _off_norm(a)
        else:
            sweep = max_sweeps
    return sweep, off
