"""Pure-Python/numpy implementations of the compiled kernels.

Same signatures and array conventions as ``_kernels.pyx``; selected
automatically when the extension is unavailable.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_WALK = np.uint64(0xD1B54A32D192ED03)


def compose_series(f, g):
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    n = len(f) - 1
    acc = np.zeros(n + 1, dtype=complex)
    if n < 1:
        return acc
    acc[0] = f[n]
    for k in range(n - 1, -1, -1):
        acc = np.convolve(acc, g)[: n + 1]
        acc[0] += f[k]
    return acc


def invert_series(f):
    f = np.asarray(f, dtype=complex)
    n = len(f) - 1
    g = np.zeros(n + 1, dtype=complex)
    if n < 1:
        return g
    pw = np.zeros((n + 1, n + 1), dtype=complex)
    g[1] = 1.0 / f[1]
    pw[1, 1] = g[1]
    for m in range(2, n + 1):
        for k in range(2, m + 1):
            j = np.arange(1, m - k + 2)
            pw[k, m] = np.dot(g[j], pw[k - 1, m - j])
        g[m] = -np.dot(f[2 : m + 1], pw[2 : m + 1, m]) / f[1]
        pw[1, m] = g[m]
    return g


def _splitmix64(z):
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _nearest(table, x, y):
    best = np.full(x.shape, np.inf)
    bx = np.zeros(x.shape)
    by = np.zeros(x.shape)
    for row in table:
        if row[0] == 0:
            ax, ay, ex, ey = row[1:5]
            dx, dy = ex - ax, ey - ay
            t = np.clip(((x - ax) * dx + (y - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
            qx, qy = ax + t * dx, ay + t * dy
        else:
            cx, cy, r, th0, sw = row[1:6]
            wx, wy = x - cx, y - cy
            ang = np.arctan2(wy, wx)
            rel = np.fmod(ang - th0, 2 * np.pi) if sw > 0 else np.fmod(th0 - ang, 2 * np.pi)
            rel = np.where(rel < 0, rel + 2 * np.pi, rel)
            wn = np.sqrt(wx * wx + wy * wy)
            p0x, p0y = cx + r * np.cos(th0), cy + r * np.sin(th0)
            p1x, p1y = cx + r * np.cos(th0 + sw), cy + r * np.sin(th0 + sw)
            d0 = (x - p0x) ** 2 + (y - p0y) ** 2
            d1 = (x - p1x) ** 2 + (y - p1y) ** 2
            on = rel <= abs(sw)
            with np.errstate(invalid="ignore", divide="ignore"):
                qx = np.where(on, cx + r * wx / wn, np.where(d0 <= d1, p0x, p1x))
                qy = np.where(on, cy + r * wy / wn, np.where(d0 <= d1, p0y, p1y))
        d = np.sqrt((x - qx) ** 2 + (y - qy) ** 2)
        closer = d < best
        best = np.where(closer, d, best)
        bx = np.where(closer, qx, bx)
        by = np.where(closer, qy, by)
    return best, bx, by


def wos_log_modulus(start, table, eps, n_walks, key, max_steps=100000, chunk=200_000):
    table = np.asarray(table, dtype=float)
    acc = acc2 = 0.0
    steps = 0
    key = np.uint64(key)
    for lo in range(0, n_walks, chunk):
        w = np.arange(lo, min(n_walks, lo + chunk), dtype=np.uint64)
        with np.errstate(over="ignore"):
            wkey = _splitmix64(key ^ (w * _WALK))
        x = np.full(w.shape, complex(start).real)
        y = np.full(w.shape, complex(start).imag)
        vals = np.empty(w.shape)
        idx = np.arange(len(w))
        step = 0
        while len(idx):
            d, nx, ny = _nearest(table, x[idx], y[idx])
            done = (d < eps) | (step >= max_steps)
            if done.any():
                fin = idx[done]
                vals[fin] = 0.5 * np.log(nx[done] ** 2 + ny[done] ** 2)
                steps += int(done.sum()) * step
            keep = ~done
            idx, d = idx[keep], d[keep]
            if not len(idx):
                break
            with np.errstate(over="ignore"):
                u = _splitmix64(wkey[idx] + np.uint64(step))
            theta = 2 * np.pi * (u >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
            x[idx] += d * np.cos(theta)
            y[idx] += d * np.sin(theta)
            step += 1
        acc += float(vals.sum())
        acc2 += float((vals * vals).sum())
    return acc, acc2, steps
