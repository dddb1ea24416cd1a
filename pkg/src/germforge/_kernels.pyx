# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: truncated series composition/inversion and
walk-on-spheres sampling on piecewise boundaries.

Array conventions match the pure-Python twin in ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2, fmod, log, cos, sin, fabs, M_PI
from libc.stdint cimport uint64_t

cnp.import_array()


def compose_series(const double complex[::1] f, const double complex[::1] g):
    """Coefficients of f(g(z)) truncated at len(f)-1; g[0] must be 0."""
    cdef Py_ssize_t n = f.shape[0] - 1
    cdef Py_ssize_t k, i, j
    cdef double complex[::1] acc = np.zeros(n + 1, dtype=np.complex128)
    cdef double complex[::1] tmp = np.zeros(n + 1, dtype=np.complex128)
    cdef double complex s
    if n < 1:
        return np.zeros(n + 1, dtype=np.complex128)
    acc[0] = f[n]
    for k in range(n - 1, -1, -1):
        # acc <- acc * g + f[k], truncated; g has no constant term
        for i in range(n, 0, -1):
            s = 0
            for j in range(1, i + 1):
                s = s + g[j] * acc[i - j]
            tmp[i] = s
        tmp[0] = 0
        for i in range(n + 1):
            acc[i] = tmp[i]
        acc[0] = acc[0] + f[k]
    return np.asarray(acc)


def invert_series(const double complex[::1] f):
    """Compositional inverse of f (f[0] = 0, f[1] != 0) to order len(f)-1."""
    cdef Py_ssize_t n = f.shape[0] - 1
    cdef Py_ssize_t m, k, j
    cdef double complex s
    cdef double complex[:, ::1] pw = np.zeros((n + 1, n + 1), dtype=np.complex128)
    cdef double complex[::1] g = np.zeros(n + 1, dtype=np.complex128)
    if n < 1:
        return np.asarray(g)
    g[1] = 1.0 / f[1]
    pw[1, 1] = g[1]
    for m in range(2, n + 1):
        # pw[k, m] = [z^m] g^k for k >= 2 uses only g_1 .. g_{m-1}
        for k in range(2, m + 1):
            s = 0
            for j in range(1, m - k + 2):
                s = s + g[j] * pw[k - 1, m - j]
            pw[k, m] = s
        s = 0
        for k in range(2, m + 1):
            s = s + f[k] * pw[k, m]
        g[m] = -s / f[1]
        pw[1, m] = g[m]
    return np.asarray(g)


cdef inline uint64_t splitmix64(uint64_t z) nogil:
    z = z + <uint64_t>0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline void nearest_on_boundary(const double[:, ::1] tab, double x, double y,
                                     double *dist, double *nx, double *ny) nogil:
    cdef Py_ssize_t p
    cdef double best = 1e300
    cdef double bx = 0, by = 0
    cdef double ax, ay, ex, ey, dx, dy, t, qx, qy, d, cx, cy, r, th0, sw, ang, rel, wx, wy, wn
    cdef double p0x, p0y, p1x, p1y, d0, d1, span
    for p in range(tab.shape[0]):
        if tab[p, 0] == 0:
            ax = tab[p, 1]; ay = tab[p, 2]; ex = tab[p, 3]; ey = tab[p, 4]
            dx = ex - ax; dy = ey - ay
            t = ((x - ax) * dx + (y - ay) * dy) / (dx * dx + dy * dy)
            if t < 0:
                t = 0
            elif t > 1:
                t = 1
            qx = ax + t * dx; qy = ay + t * dy
        else:
            cx = tab[p, 1]; cy = tab[p, 2]; r = tab[p, 3]; th0 = tab[p, 4]; sw = tab[p, 5]
            wx = x - cx; wy = y - cy
            ang = atan2(wy, wx)
            span = fabs(sw)
            if sw > 0:
                rel = fmod(ang - th0, 2 * M_PI)
            else:
                rel = fmod(th0 - ang, 2 * M_PI)
            if rel < 0:
                rel = rel + 2 * M_PI
            if rel <= span:
                wn = sqrt(wx * wx + wy * wy)
                qx = cx + r * wx / wn; qy = cy + r * wy / wn
            else:
                p0x = cx + r * cos(th0); p0y = cy + r * sin(th0)
                p1x = cx + r * cos(th0 + sw); p1y = cy + r * sin(th0 + sw)
                d0 = (x - p0x) * (x - p0x) + (y - p0y) * (y - p0y)
                d1 = (x - p1x) * (x - p1x) + (y - p1y) * (y - p1y)
                if d0 <= d1:
                    qx = p0x; qy = p0y
                else:
                    qx = p1x; qy = p1y
        d = sqrt((x - qx) * (x - qx) + (y - qy) * (y - qy))
        if d < best:
            best = d; bx = qx; by = qy
    dist[0] = best
    nx[0] = bx
    ny[0] = by


def wos_log_modulus(double complex start, const double[:, ::1] table, double eps,
                    Py_ssize_t n_walks, uint64_t key, Py_ssize_t max_steps=100000):
    """Walk-on-spheres estimate of the harmonic function with boundary data
    log|zeta|.  Returns (sum, sum of squares, total steps)."""
    cdef Py_ssize_t w, step
    cdef double x, y, d, nx = 0, ny = 0, theta, val
    cdef double acc = 0, acc2 = 0
    cdef long long steps = 0
    cdef uint64_t wkey, u
    with nogil:
        for w in range(n_walks):
            wkey = splitmix64(key ^ (<uint64_t>w * <uint64_t>0xD1B54A32D192ED03))
            x = start.real; y = start.imag
            step = 0
            while True:
                nearest_on_boundary(table, x, y, &d, &nx, &ny)
                if d < eps or step >= max_steps:
                    break
                u = splitmix64(wkey + <uint64_t>step)
                theta = 2 * M_PI * (<double>(u >> 11)) * (1.0 / 9007199254740992.0)
                x = x + d * cos(theta)
                y = y + d * sin(theta)
                step += 1
            steps += step
            val = 0.5 * log(nx * nx + ny * ny)
            acc += val
            acc2 += val * val
    return acc, acc2, steps
