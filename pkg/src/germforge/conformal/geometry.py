"""Piecewise-analytic Jordan curves: teardrop neighbourhoods and test discs.

A boundary is a counter-clockwise list of pieces (straight segments and
circular arcs).  Every piece knows how to evaluate itself, measure the
distance to a point and produce Gauss-Legendre panels, which is all the
boundary-integral solver and the walk-on-spheres oracle need.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import GeometryError

PANEL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(PANEL_ORDER)


def _legendre_diff_matrix(x: np.ndarray) -> np.ndarray:
    # barycentric differentiation matrix on arbitrary distinct nodes
    n = len(x)
    w = np.array([1.0 / np.prod([x[j] - x[k] for k in range(n) if k != j]) for j in range(n)])
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (w[j] / w[i]) / (x[i] - x[j])
        D[i, i] = -D[i].sum()
    return D


_GL_DIFF = _legendre_diff_matrix(_GL_NODES)


@dataclass(frozen=True)
class Segment:
    a: complex
    b: complex

    @property
    def length(self) -> float:
        return abs(self.b - self.a)

    def point(self, t):
        return self.a + (self.b - self.a) * np.asarray(t)

    def tangent(self, t):
        d = (self.b - self.a) / abs(self.b - self.a)
        return np.full(np.shape(t), d, dtype=complex)

    def curvature(self, t):
        return np.zeros(np.shape(t))

    def distance(self, z):
        d = self.b - self.a
        t = np.clip(((z - self.a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
        return np.abs(z - (self.a + d * t))

    def nearest(self, z):
        d = self.b - self.a
        t = np.clip(((z - self.a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
        return self.a + d * t

    def params(self) -> tuple:
        return (0, self.a.real, self.a.imag, self.b.real, self.b.imag, 0.0)


@dataclass(frozen=True)
class Arc:
    """Arc of the circle ``center + radius*e^{i theta}``, theta from ``theta0``
    to ``theta0 + sweep``; negative sweep runs clockwise (concave piece)."""

    center: complex
    radius: float
    theta0: float
    sweep: float

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    def point(self, t):
        return self.center + self.radius * np.exp(1j * (self.theta0 + self.sweep * np.asarray(t)))

    def tangent(self, t):
        s = np.sign(self.sweep)
        return s * 1j * np.exp(1j * (self.theta0 + self.sweep * np.asarray(t)))

    def curvature(self, t):
        return np.full(np.shape(t), np.sign(self.sweep) / self.radius)

    def _param_of(self, z):
        ang = np.angle(z - self.center)
        # offset along the sweep direction, reduced to [0, 2pi)
        rel = np.mod((ang - self.theta0) * np.sign(self.sweep), 2 * np.pi)
        return rel / abs(self.sweep)

    def distance(self, z):
        z = np.asarray(z, dtype=complex)
        t = self._param_of(z)
        on_arc = t <= 1.0
        radial = np.abs(np.abs(z - self.center) - self.radius)
        ends = np.minimum(np.abs(z - self.point(0.0)), np.abs(z - self.point(1.0)))
        return np.where(on_arc, radial, ends)

    def nearest(self, z):
        z = np.asarray(z, dtype=complex)
        t = self._param_of(z)
        on_arc = t <= 1.0
        w = z - self.center
        with np.errstate(invalid="ignore", divide="ignore"):
            radial = self.center + self.radius * w / np.abs(w)
        p0, p1 = self.point(0.0), self.point(1.0)
        end = np.where(np.abs(z - p0) <= np.abs(z - p1), p0, p1)
        return np.where(on_arc, radial, end)

    def params(self) -> tuple:
        return (1, self.center.real, self.center.imag, self.radius, self.theta0, self.sweep)


@dataclass(frozen=True)
class Panels:
    """Gauss-Legendre discretisation of a closed curve."""

    z: np.ndarray          # nodes
    tangent: np.ndarray    # unit tangents (counter-clockwise orientation)
    ws: np.ndarray         # arclength quadrature weights
    kappa: np.ndarray      # signed curvature
    panel_length: np.ndarray  # arclength of the panel owning each node

    @property
    def n(self) -> int:
        return len(self.z)

    @property
    def dz(self) -> np.ndarray:
        return self.tangent * self.ws

    def d_ds(self, values: np.ndarray) -> np.ndarray:
        """Arclength derivative of nodal values, panel by panel."""
        v = np.asarray(values).reshape(-1, PANEL_ORDER)
        h = self.panel_length.reshape(-1, PANEL_ORDER)[:, :1]
        return ((v @ _GL_DIFF.T) * (2.0 / h)).reshape(-1)


def _graded_breaks(n_uniform: int, levels_start: int, levels_end: int) -> np.ndarray:
    """Parameter breakpoints in [0, 1]: uniform panels plus dyadic refinement
    of the first and last panel toward the piece ends."""
    base = np.linspace(0.0, 1.0, n_uniform + 1)
    h = base[1] - base[0]
    inner = list(base[1:-1])
    start = [h * 0.5 ** k for k in range(1, levels_start + 1)]
    end = [1.0 - h * 0.5 ** k for k in range(1, levels_end + 1)]
    return np.array(sorted(set([0.0, 1.0] + inner + start + end)))


def discretize(pieces, max_panel, grade_levels) -> Panels:
    """Split every piece into panels no longer than ``max_panel[i]`` with
    ``grade_levels[i]`` dyadic refinements at both piece ends."""
    zs, ts, ws, ks, hs = [], [], [], [], []
    for piece, hmax, lev in zip(pieces, max_panel, grade_levels):
        n_uni = max(1, int(np.ceil(piece.length / hmax)))
        breaks = _graded_breaks(n_uni, lev, lev)
        for t0, t1 in zip(breaks[:-1], breaks[1:]):
            t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * _GL_NODES
            plen = piece.length * (t1 - t0)
            zs.append(piece.point(t))
            ts.append(piece.tangent(t))
            ks.append(piece.curvature(t))
            ws.append(0.5 * plen * _GL_WEIGHTS)
            hs.append(np.full(PANEL_ORDER, plen))
    return Panels(
        z=np.concatenate(zs),
        tangent=np.concatenate(ts),
        ws=np.concatenate(ws),
        kappa=np.concatenate(ks),
        panel_length=np.concatenate(hs),
    )


class BoundaryCurve:
    """Common behaviour of the closed curves handled by the solver."""

    pieces: tuple

    def distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.min([p.distance(z) for p in self.pieces], axis=0)

    def nearest(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        d = np.array([p.distance(z) for p in self.pieces])
        pts = np.array([p.nearest(z) for p in self.pieces])
        idx = np.argmin(d, axis=0)
        return np.take_along_axis(pts, idx[None, ...], axis=0)[0]

    def piece_table(self) -> np.ndarray:
        """Flat float table (kind, p1..p5) consumed by the compiled kernels."""
        return np.array([p.params() for p in self.pieces], dtype=np.float64)

    @property
    def perimeter(self) -> float:
        return float(sum(p.length for p in self.pieces))

    def winding_number(self, z0: complex = 0.0, samples: int = 4096) -> int:
        pts = np.concatenate([p.point(np.linspace(0, 1, max(8, samples // len(self.pieces)), endpoint=False))
                              for p in self.pieces])
        ang = np.unwrap(np.angle(np.append(pts, pts[0]) - z0))
        return int(round((ang[-1] - ang[0]) / (2 * np.pi)))

    def area(self, samples: int = 20000) -> float:
        pts = np.concatenate([p.point(np.linspace(0, 1, max(8, samples // len(self.pieces)), endpoint=False))
                              for p in self.pieces])
        x, y = pts.real, pts.imag
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class DiscDomain(BoundaryCurve):
    """Round disc about 0; a geometry-free test hook for the conformal solver."""

    radius: float = 1.0
    node_count: int = 256

    @cached_property
    def pieces(self) -> tuple:
        return (Arc(0j, self.radius, -np.pi, 2 * np.pi),)

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z)) < self.radius

    def panels(self) -> Panels:
        n_pan = max(4, self.node_count // PANEL_ORDER)
        return discretize(self.pieces, [self.pieces[0].length / n_pan], [0])


@dataclass(frozen=True)
class TeardropDomain(BoundaryCurve):
    """The ``alpha``-neighbourhood of the closed unit disc joined with the real
    segment ``[1, delta]``, with the two re-entrant corners rounded by fillet
    arcs of radius ``alpha``.

    Pieces run counter-clockwise starting at the lower end of the channel:
    lower wall, cap, upper wall, upper fillet, big arc, lower fillet.
    """

    delta: float
    alpha: float
    node_count: int = 1024
    pieces: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d, a = float(self.delta), float(self.alpha)
        if not d > 1.0:
            raise GeometryError(f"delta must exceed 1, got {d}")
        if not a > 0.0:
            raise GeometryError("alpha must be positive (the bare slit is not supported)")
        # the boundary case alpha == (delta-1)/4 is admitted (rounding slack)
        if a > (d - 1.0) / 4.0 * (1.0 + 1e-9):
            raise GeometryError(f"alpha={a} too large for delta={d}: need alpha <= (delta-1)/4")
        if self.node_count < 256:
            raise GeometryError("node_count must be at least 256")
        rf = a
        big = 1.0 + a
        cy = a + rf
        cx = np.sqrt((big + rf) ** 2 - cy ** 2)
        cf = complex(cx, cy)
        theta_big = np.angle(cf)
        phi_t1 = np.angle(-cf)              # direction from fillet centre to tangency
        pieces = (
            Segment(complex(cx, -a), complex(d, -a)),
            Arc(complex(d, 0.0), a, -np.pi / 2, np.pi),
            Segment(complex(d, a), complex(cx, a)),
            Arc(cf, rf, -np.pi / 2, phi_t1 + np.pi / 2),                 # clockwise
            Arc(0j, big, theta_big, 2 * np.pi - 2 * theta_big),
            Arc(cf.conjugate(), rf, -phi_t1, np.pi / 2 + phi_t1),        # clockwise
        )
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_fillet_center", cf)

    @property
    def fillet_radius(self) -> float:
        return self.alpha

    @property
    def channel_start(self) -> float:
        """Abscissa where the straight channel walls begin."""
        return self._fillet_center.real

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        a, d = self.alpha, self.delta
        x, y = z.real, z.imag
        inside = (np.abs(z) < 1 + a) | ((x >= 0) & (x <= d) & (np.abs(y) < a)) | (np.abs(z - d) < a)
        cf = self._fillet_center
        for w in (z, np.conj(z)):
            # region cut off by the upper fillet: above the wall, outside both
            # circles, left of the fillet centre and below the line of centres
            zone = (w.imag >= a) & (np.abs(w) >= 1 + a) & (np.abs(w - cf) > self.fillet_radius) \
                & (w.real <= cf.real) & ((w * np.conj(cf)).imag < 0)
            inside |= zone
        return inside

    def panels(self, resolution: float = 1.0) -> Panels:
        """Panels sized to the local feature scale: the channel and its
        fillets use panels of about ``alpha/2``; the big arc gets the rest of
        the node budget."""
        a = self.alpha
        h_fine = 0.5 * a / resolution
        n_fine_nodes = sum(
            int(np.ceil(p.length / h_fine)) for i, p in enumerate(self.pieces) if i != 4
        ) * PANEL_ORDER
        budget = max(self.node_count - n_fine_nodes, 16 * PANEL_ORDER)
        big = self.pieces[4]
        h_big = min(0.12 / resolution, big.length / (budget / PANEL_ORDER))
        max_panel = [h_fine, h_fine, h_fine, h_fine, h_big, h_fine]
        levels = [10, 10, 10, 10, 10, 10]
        return discretize(self.pieces, max_panel, levels)


@dataclass(frozen=True)
class StadiumDomain(BoundaryCurve):
    """Channel ``|Im z| < 1`` between two unit semicircular caps centred at
    ``-length`` and ``0``; used for the universal channel-end solution."""

    length: float = 10.0
    panel: float = 0.25

    @cached_property
    def pieces(self) -> tuple:
        T = self.length
        return (
            Segment(complex(-T, -1.0), complex(0.0, -1.0)),
            Arc(0j, 1.0, -np.pi / 2, np.pi),
            Segment(complex(0.0, 1.0), complex(-T, 1.0)),
            Arc(complex(-T, 0.0), 1.0, np.pi / 2, np.pi),
        )

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        return ((x >= -self.length) & (x <= 0) & (np.abs(y) < 1)) | (np.abs(z) < 1) \
            | (np.abs(z + self.length) < 1)

    def panels(self) -> Panels:
        return discretize(self.pieces, [self.panel] * 4, [6, 6, 6, 6])
