# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

Every kernel mutates its first argument in place and releases the GIL, so
callers may run them on disjoint row blocks from several threads.
The pure-numpy twin lives in ``_fallback.py`` and must keep identical
signatures.
"""

from libc.math cimport cos, sin, sqrt, fabs, hypot

ctypedef double complex cplx

ctypedef fused scalar:
    double
    double complex


def apply_1q(cplx[:, ::1] psi, Py_ssize_t stride, cplx[:, ::1] m):
    """Apply the 2x2 matrix ``m`` to the qubit whose index bit is ``stride``."""
    cdef Py_ssize_t rows = psi.shape[0], N = psi.shape[1]
    cdef Py_ssize_t r, i, j, base, blk
    cdef cplx m00 = m[0, 0], m01 = m[0, 1], m10 = m[1, 0], m11 = m[1, 1]
    cdef cplx a0, a1
    with nogil:
        for r in range(rows):
            for blk in range(N // (2 * stride)):
                base = blk * 2 * stride
                for i in range(base, base + stride):
                    j = i + stride
                    a0 = psi[r, i]
                    a1 = psi[r, j]
                    psi[r, i] = m00 * a0 + m01 * a1
                    psi[r, j] = m10 * a0 + m11 * a1


def apply_cphase(cplx[:, ::1] psi, Py_ssize_t stride_c, Py_ssize_t stride_t, cplx phase):
    cdef Py_ssize_t rows = psi.shape[0], N = psi.shape[1]
    cdef Py_ssize_t r, i
    cdef Py_ssize_t both = stride_c | stride_t
    with nogil:
        for r in range(rows):
            for i in range(N):
                if (i & both) == both:
                    psi[r, i] = psi[r, i] * phase


cdef inline void _rot_row(double* row, Py_ssize_t N, Py_ssize_t stride,
                          int axis, double theta) nogil:
    # row holds N interleaved (re, im) pairs; axis: 0 = X, 1 = Y, 2 = Z
    cdef double c = cos(0.5 * theta), s = sin(0.5 * theta)
    cdef Py_ssize_t base, i, j, blk
    cdef double xr, xi, yr, yi
    for blk in range(N // (2 * stride)):
        base = blk * 2 * stride
        for i in range(2 * base, 2 * (base + stride), 2):
            j = i + 2 * stride
            xr = row[i]
            xi = row[i + 1]
            yr = row[j]
            yi = row[j + 1]
            if axis == 2:
                # diag(e^{-i t/2}, e^{i t/2})
                row[i] = c * xr + s * xi
                row[i + 1] = c * xi - s * xr
                row[j] = c * yr - s * yi
                row[j + 1] = c * yi + s * yr
            elif axis == 1:
                row[i] = c * xr - s * yr
                row[i + 1] = c * xi - s * yi
                row[j] = s * xr + c * yr
                row[j + 1] = s * xi + c * yi
            else:
                # -i*s*y = s*y.imag - i*s*y.real
                row[i] = c * xr + s * yi
                row[i + 1] = c * xi - s * yr
                row[j] = c * yr + s * xi
                row[j + 1] = c * yi - s * xr


def apply_layers(cplx[:, ::1] psi, signed char[:, :, ::1] axes, double[:, :, ::1] angles,
                 Py_ssize_t[::1] row_circuit, double[::1] signs, bint inverse=False):
    """Run rotation+CZ-ladder layers, one circuit per row.

    ``axes``/``angles`` have shape (circuits, depth, n); row ``r`` uses
    circuit ``row_circuit[r]``.  ``signs`` is the +-1 diagonal of the CZ
    ladder.  With ``inverse`` the adjoint is applied.
    """
    cdef Py_ssize_t rows = psi.shape[0], N = psi.shape[1]
    cdef Py_ssize_t depth = axes.shape[1], n = axes.shape[2]
    cdef Py_ssize_t r, d, dd, q, i, c
    cdef double* row
    with nogil:
        for r in range(rows):
            c = row_circuit[r]
            row = <double*> &psi[r, 0]
            for dd in range(depth):
                if inverse:
                    d = depth - 1 - dd
                    for i in range(N):
                        row[2 * i] *= signs[i]
                        row[2 * i + 1] *= signs[i]
                    for q in range(n):
                        _rot_row(row, N, N >> (q + 1), axes[c, d, q], -angles[c, d, q])
                else:
                    d = dd
                    for q in range(n):
                        _rot_row(row, N, N >> (q + 1), axes[c, d, q], angles[c, d, q])
                    for i in range(N):
                        row[2 * i] *= signs[i]
                        row[2 * i + 1] *= signs[i]


def fwht_rows(double[:, ::1] x):
    """Normalized Walsh-Hadamard transform of every row, in place."""
    cdef Py_ssize_t rows = x.shape[0], N = x.shape[1]
    cdef Py_ssize_t r, h, base, i, blk
    cdef double a, b, scale = 1.0 / sqrt(<double> N)
    with nogil:
        for r in range(rows):
            h = 1
            while h < N:
                for blk in range(N // (2 * h)):
                    base = blk * 2 * h
                    for i in range(base, base + h):
                        a = x[r, i]
                        b = x[r, i + h]
                        x[r, i] = a + b
                        x[r, i + h] = a - b
                h *= 2
            for i in range(N):
                x[r, i] = x[r, i] * scale


cdef int _jacobi_real(double* cols, Py_ssize_t n, Py_ssize_t m, double* v,
                      Py_ssize_t nv, double tol, double floor, int max_sweeps) nogil:
    cdef Py_ssize_t p, q, i
    cdef int sweep
    cdef bint rotated
    cdef double alpha, beta, gamma, g_abs, zeta, t, cs, sn, ph, x, y
    cdef double* a
    cdef double* b
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                a = cols + p * m
                b = cols + q * m
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    alpha += a[i] * a[i]
                    beta += b[i] * b[i]
                    gamma += a[i] * b[i]
                g_abs = fabs(gamma)
                if g_abs == 0.0 or alpha < floor or beta < floor or g_abs <= tol * sqrt(alpha * beta):
                    continue
                rotated = True
                ph = 1.0 if gamma > 0 else -1.0
                zeta = (beta - alpha) / (2.0 * g_abs)
                if zeta >= 0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                cs = 1.0 / sqrt(1.0 + t * t)
                sn = cs * t
                for i in range(m):
                    x = a[i]
                    y = b[i]
                    a[i] = cs * x - sn * ph * y
                    b[i] = sn * ph * x + cs * y
                if nv > 0:
                    a = v + p * nv
                    b = v + q * nv
                    for i in range(nv):
                        x = a[i]
                        y = b[i]
                        a[i] = cs * x - sn * ph * y
                        b[i] = sn * ph * x + cs * y
        if not rotated:
            return sweep
    return -1


cdef int _jacobi_cplx(double* cols, Py_ssize_t n, Py_ssize_t m, double* v,
                      Py_ssize_t nv, double tol, double floor, int max_sweeps) nogil:
    # interleaved (re, im) storage; m and nv count complex entries
    cdef Py_ssize_t p, q, i
    cdef int sweep
    cdef bint rotated
    cdef double alpha, beta, gr, gi, g_abs, zeta, t, cs, sn, pr, pi
    cdef double xr, xi, yr, yi
    cdef double* a
    cdef double* b
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                a = cols + 2 * p * m
                b = cols + 2 * q * m
                alpha = 0.0
                beta = 0.0
                gr = 0.0
                gi = 0.0
                for i in range(0, 2 * m, 2):
                    alpha += a[i] * a[i] + a[i + 1] * a[i + 1]
                    beta += b[i] * b[i] + b[i + 1] * b[i + 1]
                    # conj(a) * b
                    gr += a[i] * b[i] + a[i + 1] * b[i + 1]
                    gi += a[i] * b[i + 1] - a[i + 1] * b[i]
                g_abs = hypot(gr, gi)
                if g_abs == 0.0 or alpha < floor or beta < floor or g_abs <= tol * sqrt(alpha * beta):
                    continue
                rotated = True
                # ph = conj(gamma) / |gamma|; the phase rides on the rotation so a
                # near-identity step leaves both columns nearly unchanged
                pr = gr / g_abs
                pi = -gi / g_abs
                zeta = (beta - alpha) / (2.0 * g_abs)
                if zeta >= 0:
                    t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                cs = 1.0 / sqrt(1.0 + t * t)
                sn = cs * t
                for i in range(0, 2 * m, 2):
                    xr = a[i]
                    xi = a[i + 1]
                    yr = b[i]
                    yi = b[i + 1]
                    a[i] = cs * xr - sn * (pr * yr - pi * yi)
                    a[i + 1] = cs * xi - sn * (pr * yi + pi * yr)
                    b[i] = sn * (pr * xr + pi * xi) + cs * yr
                    b[i + 1] = sn * (pr * xi - pi * xr) + cs * yi
                if nv > 0:
                    a = v + 2 * p * nv
                    b = v + 2 * q * nv
                    for i in range(0, 2 * nv, 2):
                        xr = a[i]
                        xi = a[i + 1]
                        yr = b[i]
                        yi = b[i + 1]
                        a[i] = cs * xr - sn * (pr * yr - pi * yi)
                        a[i + 1] = cs * xi - sn * (pr * yi + pi * yr)
                        b[i] = sn * (pr * xr + pi * xi) + cs * yr
                        b[i + 1] = sn * (pr * xi - pi * xr) + cs * yi
        if not rotated:
            return sweep
    return -1


def jacobi_sweeps(scalar[:, ::1] cols, scalar[:, ::1] v, double tol, double floor, int max_sweeps):
    """One-sided (Hestenes) Jacobi on the rows of ``cols``.

    Rows of ``cols`` are the columns of the matrix being orthogonalized.
    ``v`` (possibly 0 rows) accumulates the same rotations.  Pairs where either squared
    norm is below ``floor`` are treated as converged.  Returns the
    number of sweeps used, or -1 if ``max_sweeps`` ran out.
    """
    cdef Py_ssize_t n = cols.shape[0], m = cols.shape[1]
    cdef Py_ssize_t nv = v.shape[1] if v.shape[0] > 0 else 0
    cdef double* vp = NULL
    cdef int used
    if n == 0 or m == 0:
        return 1
    if nv > 0:
        vp = <double*> &v[0, 0]
    with nogil:
        if scalar is double:
            used = _jacobi_real(<double*> &cols[0, 0], n, m, vp, nv, tol, floor, max_sweeps)
        else:
            used = _jacobi_cplx(<double*> &cols[0, 0], n, m, vp, nv, tol, floor, max_sweeps)
    return used
