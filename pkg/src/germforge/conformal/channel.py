"""Crowding-safe representation of a Riemann map inside a long thin channel.

Deep inside a straight channel of half-width ``alpha`` closed by a
semicircular cap, the Green's function decays like
``exp(-pi x / (2 alpha))``; at the far end it is far below double precision
relative to the values near the origin, so ``phi`` itself collapses onto a
single floating-point number there.  Separation of variables gives

    -log phi(z) = A * Xi((z - cap_centre) / alpha)

up to modes that decay at least ``exp(-pi/alpha)`` faster, where ``Xi`` is a
universal function of the unit-width channel:
``Xi(zeta) = exp(-pi zeta / 2) + C(zeta)`` with ``Re Xi = 0`` on the walls
and on the cap.  ``C`` is solved once on a long stadium.  The amplitude ``A``
is matched to the global solution at a cut a few widths inside the channel,
where the global solution still carries full relative accuracy.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from ..errors import NewtonDivergence, SolverFailure
from .geometry import StadiumDomain, TeardropDomain
from .riemann import CauchyDensity, RiemannMap, double_layer_matrix

CUT_DEPTH = 3.0           # matching cut, in channel half-widths past the fillet
MIN_CHANNEL_DEPTH = 6.0   # shortest straight channel the representation accepts


@dataclass(frozen=True)
class CapFunction:
    density: CauchyDensity
    shift: float
    length: float

    def _correction(self, zeta, fn):
        # beyond the solved stadium the correction is below exp(-4 pi) while
        # the leading exponential exceeds exp(4 pi)
        far = zeta.real < -(self.length - 2.0)
        out = np.zeros(zeta.shape, dtype=complex)
        if (~far).any():
            out[~far] = fn(zeta[~far])
        return out

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        corr = self._correction(zeta, lambda s: self.density(s) - 1j * self.shift)
        return np.exp(-0.5 * np.pi * zeta) + corr

    def derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return -0.5 * np.pi * np.exp(-0.5 * np.pi * zeta) + self._correction(zeta, self.density.derivative)


@lru_cache(maxsize=1)
def cap_function(length: float = 10.0) -> CapFunction:
    dom = StadiumDomain(length=length)
    P = dom.panels()
    data = np.where(P.z.real > 0, -np.real(np.exp(-0.5 * np.pi * P.z)), 0.0)
    # the right cap also covers its two end nodes at x = 0 exactly
    A = double_layer_matrix(P)
    mu = scipy.linalg.solve(A, data)
    dens = CauchyDensity(P, mu)
    return CapFunction(dens, float(dens(-0.5 + 0j).imag), length)


@dataclass(frozen=True)
class ChannelRepresentation:
    """``-log phi`` restricted to the straight channel and cap of a teardrop."""

    domain: TeardropDomain
    amplitude: float
    cut: float
    mode3_ratio: float

    @property
    def centre(self) -> float:
        return self.domain.delta

    def _zeta(self, z):
        return (np.asarray(z, dtype=complex) - self.centre) / self.domain.alpha

    def neg_log_phi(self, z):
        return self.amplitude * cap_function()(self._zeta(z))

    def green(self, z):
        return self.neg_log_phi(z).real

    def covers(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return (z.real >= self.cut) & self.domain.contains(z)

    def solve(self, target, z0=None, tol: float = 1e-13, max_iter: int = 60):
        """Find z in the channel with ``-log phi(z) = target``."""
        Xi = cap_function()
        a = self.domain.alpha
        goal = np.asarray(target, dtype=complex) / self.amplitude
        zeta = self._zeta(self.centre if z0 is None else z0) * np.ones_like(goal)
        for _ in range(max_iter):
            r = Xi(zeta) - goal
            if np.all(np.abs(r) <= tol * np.abs(goal) + 1e-300):
                break
            step = r / Xi.derivative(zeta)
            # log-scale damping: Xi is roughly exponential in zeta
            big = np.abs(step) > 1.0
            step = np.where(big, step / np.abs(step), step)
            zeta = zeta - step
        else:
            raise NewtonDivergence("channel inversion did not converge")
        return self.centre + a * zeta


def channel_representation(rmap: RiemannMap) -> ChannelRepresentation:
    dom = rmap.domain
    if not isinstance(dom, TeardropDomain):
        raise SolverFailure("channel representation requires a teardrop domain")
    a = dom.alpha
    x_cut = dom.channel_start + CUT_DEPTH * a
    if dom.delta - dom.channel_start < MIN_CHANNEL_DEPTH * a:
        raise SolverFailure("straight channel too short for the channel representation")
    Xi = cap_function()
    # fit first and third symmetric channel modes from two samples on the cut
    z0, z1 = complex(x_cut, 0.0), complex(x_cut, 0.5 * a)
    G0, G1 = rmap.green(z0), rmap.green(z1)
    X0 = Xi((z0 - dom.delta) / a).real
    X1 = Xi((z1 - dom.delta) / a).real
    # G0 = A X0 + B ;  G1 = A X1 + B cos(3 pi / 4)
    c3 = np.cos(0.75 * np.pi)
    M = np.array([[X0, 1.0], [X1, c3]])
    A, B = np.linalg.solve(M, [G0, G1])
    return ChannelRepresentation(dom, float(A), x_cut, float(B / (A * X0)))
