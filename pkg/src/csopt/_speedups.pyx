# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the sphere quadratic problem (identity mass).

These kernels mirror the pure-Python drivers exactly: same stage order, same
stopping logic, same trace columns. They exist only to strip per-step Python
overhead from long runs; csopt.backend decides whether they are used.
"""

from libc.math cimport exp, fabs, pow, sqrt

import numpy as np


cdef double _dot(double[::1] a, double[::1] b) noexcept nogil:
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double s = 0.0
    for i in range(n):
        s += a[i] * b[i]
    return s


cdef void _matvec(double[:, ::1] A, double[::1] x, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j, n = A.shape[0]
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += A[i, j] * x[j]
        out[i] = s


cdef int _rattle(double[:, ::1] A, double[::1] q, double[::1] p, double h,
                 double newton_tol, int newton_max,
                 double[::1] aq, double[::1] kick, double[::1] base,
                 double[::1] q1) noexcept nogil:
    """One RATTLE step in place. Returns Newton iterations, or -1 on failure.

    Sphere constraint g = q.q - 1 (G = 2 q^T), potential q^T A q
    (grad = 2 A q), identity mass. Newton unknown nu = h*lambda.
    """
    cdef Py_ssize_t i, n = q.shape[0]
    cdef double nu = 0.0, r, J, y, hnu
    cdef int iters = 0

    _matvec(A, q, aq)
    for i in range(n):
        kick[i] = p[i] - h * aq[i]
        base[i] = q[i] + h * kick[i]
    while True:
        hnu = h * nu
        for i in range(n):
            q1[i] = base[i] - hnu * q[i]
        r = _dot(q1, q1) - 1.0
        if r != r:  # NaN
            return -1
        if fabs(r) <= newton_tol:
            break
        if iters >= newton_max:
            return -1
        J = -2.0 * h * _dot(q1, q)
        if J == 0.0:
            return -1
        nu -= r / J
        iters += 1

    # p_half stored into kick, then the exact momentum projection.
    for i in range(n):
        kick[i] -= nu * q[i]
    _matvec(A, q1, aq)
    for i in range(n):
        kick[i] -= h * aq[i]
    y = _dot(q1, kick) / (2.0 * _dot(q1, q1))
    for i in range(n):
        p[i] = kick[i] - 2.0 * y * q1[i]
        q[i] = q1[i]
    return iters


cdef void _trace_row(double[:, ::1] tr, Py_ssize_t idx, double t,
                     double[:, ::1] A, double[::1] q, double[::1] p,
                     double h, double[::1] aq) noexcept nogil:
    cdef double f, g, tan
    _matvec(A, q, aq)
    f = _dot(q, aq)
    g = fabs(_dot(q, q) - 1.0)
    tan = fabs(2.0 * _dot(q, p))
    tr[idx, 0] = <double> idx
    tr[idx, 1] = t
    tr[idx, 2] = f
    tr[idx, 3] = f + 0.5 * _dot(p, p)
    tr[idx, 4] = g
    tr[idx, 5] = tan
    tr[idx, 6] = h


cdef double _controller(double h, double delta, double r, double theta,
                        double h_min, double h_max) noexcept nogil:
    cdef double factor
    if theta == 0.0:
        factor = 1.0
    elif delta == 0.0:
        factor = 2.0
    else:
        factor = pow(r / delta, 0.5 * theta)
        if factor > 2.0:
            factor = 2.0
    h = h * factor
    if h < h_min:
        h = h_min
    if h > h_max:
        h = h_max
    return h


def sm_fixed_loop(double[:, ::1] A, double[::1] q, double[::1] p,
                  double h, double gamma, int order,
                  double newton_tol, int newton_max,
                  double f_target, double tol, long max_iter):
    """Fixed-step splitting run. Returns (status, iters, trace, q, p)."""
    cdef Py_ssize_t i, dim = q.shape[0]
    work = np.empty((4, dim))
    cdef double[::1] aq = work[0], kick = work[1], base = work[2], q1 = work[3]
    trace = np.empty((max_iter + 1, 7))
    cdef double[:, ::1] tr = trace
    cdef long n = 0
    cdef double t = 0.0, scale = exp(-gamma * h)
    cdef int status = -1, it

    _trace_row(tr, 0, 0.0, A, q, p, h, aq)
    while True:
        if fabs(tr[n, 2] - f_target) <= tol:
            status = 0
            break
        if n >= max_iter:
            status = 1
            break
        if order == 1:
            if gamma != 0.0:
                for i in range(dim):
                    p[i] *= scale
            it = _rattle(A, q, p, h, newton_tol, newton_max, aq, kick, base, q1)
            if it < 0:
                status = 2
                break
        else:
            it = _rattle(A, q, p, 0.5 * h, newton_tol, newton_max, aq, kick, base, q1)
            if it < 0:
                status = 2
                break
            if gamma != 0.0:
                for i in range(dim):
                    p[i] *= scale
            it = _rattle(A, q, p, 0.5 * h, newton_tol, newton_max, aq, kick, base, q1)
            if it < 0:
                status = 2
                break
        n += 1
        t += h
        _trace_row(tr, n, t, A, q, p, h, aq)
    return status, n, trace[:n + 1].copy(), np.asarray(q).copy(), np.asarray(p).copy()


def adaptive_loop(double[:, ::1] A, double[::1] q, double[::1] p,
                  double h0, double gamma, double r, double theta,
                  double h_min, double h_max,
                  double newton_tol, int newton_max,
                  double f_target, double tol, long max_iter):
    """Controlled run advancing with the order-1 step; order-2 is the reference."""
    cdef Py_ssize_t i, dim = q.shape[0]
    work = np.empty((8, dim))
    cdef double[::1] aq = work[0], kick = work[1], base = work[2], q1w = work[3]
    cdef double[::1] qa = work[4], pa = work[5], qb = work[6], pb = work[7]
    trace = np.empty((max_iter + 1, 7))
    cdef double[:, ::1] tr = trace
    cdef long n = 0
    cdef double t = 0.0, h = h0, scale, delta, acc
    cdef int status = -1, it

    _trace_row(tr, 0, 0.0, A, q, p, h, aq)
    while True:
        if fabs(tr[n, 2] - f_target) <= tol:
            status = 0
            break
        if n >= max_iter:
            status = 1
            break
        scale = exp(-gamma * h)
        # order-1 candidate
        for i in range(dim):
            qa[i] = q[i]
            pa[i] = p[i]
        if gamma != 0.0:
            for i in range(dim):
                pa[i] *= scale
        it = _rattle(A, qa, pa, h, newton_tol, newton_max, aq, kick, base, q1w)
        if it < 0:
            status = 2
            break
        # order-2 reference
        for i in range(dim):
            qb[i] = q[i]
            pb[i] = p[i]
        it = _rattle(A, qb, pb, 0.5 * h, newton_tol, newton_max, aq, kick, base, q1w)
        if it < 0:
            status = 2
            break
        if gamma != 0.0:
            for i in range(dim):
                pb[i] *= scale
        it = _rattle(A, qb, pb, 0.5 * h, newton_tol, newton_max, aq, kick, base, q1w)
        if it < 0:
            status = 2
            break
        acc = 0.0
        for i in range(dim):
            acc += (qa[i] - qb[i]) * (qa[i] - qb[i]) + (pa[i] - pb[i]) * (pa[i] - pb[i])
        delta = sqrt(acc)
        for i in range(dim):
            q[i] = qa[i]
            p[i] = pa[i]
        n += 1
        t += h
        h = _controller(h, delta, r, theta, h_min, h_max)
        _trace_row(tr, n, t, A, q, p, h, aq)
    return status, n, trace[:n + 1].copy(), np.asarray(q).copy(), np.asarray(p).copy()


def gd_loop(double[:, ::1] A, double[::1] q, double h,
            double f_target, double tol, long max_iter):
    """Projected gradient descent run. Returns (status, iters, trace, q)."""
    cdef Py_ssize_t i, dim = q.shape[0]
    work = np.empty((2, dim))
    cdef double[::1] aq = work[0], v = work[1]
    trace = np.empty((max_iter + 1, 7))
    cdef double[:, ::1] tr = trace
    cdef long n = 0
    cdef double c, nv, f
    cdef int status = -1

    _matvec(A, q, aq)
    f = _dot(q, aq)
    tr[0, 0] = 0.0
    tr[0, 1] = 0.0
    tr[0, 2] = f
    tr[0, 3] = f
    tr[0, 4] = fabs(_dot(q, q) - 1.0)
    tr[0, 5] = 0.0
    tr[0, 6] = h
    while True:
        if fabs(tr[n, 2] - f_target) <= tol:
            status = 0
            break
        if n >= max_iter:
            status = 1
            break
        _matvec(A, q, aq)
        c = _dot(q, aq)
        for i in range(dim):
            v[i] = q[i] - 2.0 * h * (aq[i] - c * q[i])
        nv = sqrt(_dot(v, v))
        if nv < 1e-300:
            status = 2
            break
        for i in range(dim):
            q[i] = v[i] / nv
        n += 1
        _matvec(A, q, aq)
        f = _dot(q, aq)
        tr[n, 0] = <double> n
        tr[n, 1] = n * h
        tr[n, 2] = f
        tr[n, 3] = f
        tr[n, 4] = fabs(_dot(q, q) - 1.0)
        tr[n, 5] = 0.0
        tr[n, 6] = h
    return status, n, trace[:n + 1].copy(), np.asarray(q).copy()
