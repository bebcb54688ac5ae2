# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte-Carlo weight kernel.

Same random stream, change of variables, singularity guard and accumulation
order as ``_reference.py``.
"""
from libc.math cimport tan, fabs, isfinite, M_PI, hypot
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef int STRIDE = 8
cdef double GUARD = 1e-12
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, uint64_t ctr) nogil:
    return (<double>(mix64(key + ctr * GOLDEN) >> 11) + 0.5) * INV53


cdef double det(double* a, int m) nogil:
    # LU with partial pivoting, in place on an m x m row-major buffer
    cdef int i, j, k, p
    cdef double d = 1.0, big, t, f
    for k in range(m):
        p = k
        big = fabs(a[k * m + k])
        for i in range(k + 1, m):
            t = fabs(a[i * m + k])
            if t > big:
                big = t
                p = i
        if big == 0.0:
            return 0.0
        if p != k:
            for j in range(m):
                t = a[k * m + j]
                a[k * m + j] = a[p * m + j]
                a[p * m + j] = t
            d = -d
        d *= a[k * m + k]
        for i in range(k + 1, m):
            f = a[i * m + k] / a[k * m + k]
            if f != 0.0:
                for j in range(k + 1, m):
                    a[i * m + j] -= f * a[k * m + j]
    return d


cdef int sample_value(const int64_t* targets, int n, uint64_t key, uint64_t s,
                      double* xs, double* ys, double* mat, double* out) nogil:
    cdef int k, slot, t, row, i, j, m = 2 * n
    cdef double u, v, a, jac = 1.0, x2, y2, r1re, r1im, r2re, r2im, den
    for k in range(n):
        u = uniform(key, s * STRIDE + 2 * k + 1)
        v = uniform(key, s * STRIDE + 2 * k + 2)
        a = M_PI * (u - 0.5)
        xs[k] = tan(a)
        ys[k] = v / (1.0 - v)
        jac *= M_PI * (1.0 + xs[k] * xs[k]) * (1.0 + ys[k]) * (1.0 + ys[k])
    # singularity guard over {z_k, conj z_k, 0, 1}
    for i in range(n):
        if 2.0 * ys[i] < GUARD:
            return 0
        if hypot(xs[i], ys[i]) < GUARD or hypot(xs[i] - 1.0, ys[i]) < GUARD:
            return 0
        for j in range(i + 1, n):
            if hypot(xs[i] - xs[j], ys[i] - ys[j]) < GUARD:
                return 0
            if hypot(xs[i] - xs[j], ys[i] + ys[j]) < GUARD:
                return 0
    for i in range(m * m):
        mat[i] = 0.0
    for k in range(n):
        for slot in range(2):
            row = 2 * k + slot
            t = <int>targets[2 * k + slot]
            if t == -1:
                x2 = 0.0
                y2 = 0.0
            elif t == -2:
                x2 = 1.0
                y2 = 0.0
            else:
                x2 = xs[t]
                y2 = ys[t]
            # r1 = 1 / (z2 - zk), r2 = 1 / (conj(z2) - zk)
            den = (x2 - xs[k]) * (x2 - xs[k]) + (y2 - ys[k]) * (y2 - ys[k])
            r1re = (x2 - xs[k]) / den
            r1im = -(y2 - ys[k]) / den
            den = (x2 - xs[k]) * (x2 - xs[k]) + (y2 + ys[k]) * (y2 + ys[k])
            r2re = (x2 - xs[k]) / den
            r2im = (y2 + ys[k]) / den
            mat[row * m + 2 * k] = -(r1im + r2im)
            mat[row * m + 2 * k + 1] = -(r1re + r2re)
            if t >= 0:
                mat[row * m + 2 * t] += r1im + r2im
                mat[row * m + 2 * t + 1] += r1re - r2re
    out[0] = det(mat, m) * jac
    if not isfinite(out[0]):
        return 0
    return 1


def block_stats(targets, uint64_t key, uint64_t start, Py_ssize_t count):
    """``(accepted, mean, m2, discarded)`` for one block of samples."""
    cdef int n = len(targets)
    cdef int64_t tg[6]
    cdef double xs[3]
    cdef double ys[3]
    cdef double mat[36]
    cdef double val
    cdef Py_ssize_t i, acc = 0
    cdef double mean = 0.0, m2 = 0.0, dev
    cdef double* buf
    if n < 1 or n > 3:
        raise ValueError("compiled kernel supports 1 <= n <= 3")
    for i in range(n):
        tg[2 * i] = targets[i][0]
        tg[2 * i + 1] = targets[i][1]
    buf = <double*>malloc(count * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(count):
                if sample_value(tg, n, key, start + i, xs, ys, mat, &val):
                    buf[acc] = val
                    acc += 1
            for i in range(acc):
                mean += buf[i]
            if acc:
                mean /= acc
            for i in range(acc):
                dev = buf[i] - mean
                m2 += dev * dev
    finally:
        free(buf)
    return acc, mean, m2, count - acc
