# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled all-pairs overlap sweep.  Mirrors usq._kernels_py exactly."""


def colliding_pairs(const double[::1] xs, const double[::1] ys, double two_r):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i, j
    cdef double lim = two_r * two_r
    cdef double xi, yi, dx, dy
    if ys.shape[0] != n:
        raise ValueError("xs and ys differ in length")
    out = []
    for i in range(n):
        xi = xs[i]
        yi = ys[i]
        for j in range(i + 1, n):
            dx = xi - xs[j]
            dy = yi - ys[j]
            if dx * dx + dy * dy < lim:
                out.append((i, j))
    return out


def count_within(const double[::1] xs, const double[::1] ys, double two_r):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i, j, hits = 0
    cdef double lim = two_r * two_r
    cdef double dx, dy
    if ys.shape[0] != n:
        raise ValueError("xs and ys differ in length")
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx * dx + dy * dy < lim:
                hits += 1
    return hits
