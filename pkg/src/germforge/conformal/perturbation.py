"""Perturbations ``H(z) = phi^-1(p z)`` built from the Riemann map ``phi`` of
a teardrop domain, with ``p = phi(delta)`` so that ``H(1) = delta``.

Everything is carried in logarithmic form: ``ell = -log p`` is kept
instead of ``p``, because for thin teardrops ``p`` is within rounding of 1
and ``phi`` is flat to machine precision inside the channel.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import JetExtractionFailure, NewtonDivergence, NonRealRatio, OutOfDomain, SolverFailure
from ..germ_expr import Inverse, Polynomial, eval_at
from ..jets import Jet, deviation
from ..parallel import pmap
from .channel import ChannelRepresentation, channel_representation
from .geometry import BoundaryCurve, DiscDomain, TeardropDomain
from .riemann import BOUNDARY_TOL, RiemannMap, riemann_map

JET_RADIUS = 0.1
JET_POINTS = 128
TANGENCY_TOL = 1e-8
SUP_RADIUS = 0.8
SUP_SAMPLES = 256


def build_teardrop(delta: float, alpha: float, node_count: int = 1024) -> TeardropDomain:
    return TeardropDomain(delta, alpha, node_count)


def _far_point(domain: BoundaryCurve) -> float:
    if isinstance(domain, TeardropDomain):
        return domain.delta
    if isinstance(domain, DiscDomain):
        return domain.radius
    raise SolverFailure(f"no distinguished real point for {type(domain).__name__}")


@dataclass
class Perturbation:
    """``H = phi^-1 o (p z)``, defined for ``log|z| <= ell``."""

    rmap: RiemannMap
    channel: Optional[ChannelRepresentation]
    delta: float
    neg_log_p: float

    @property
    def p(self) -> float:
        return float(np.exp(-self.neg_log_p))

    @property
    def domain(self) -> BoundaryCurve:
        return self.rmap.domain

    def _channel_level(self) -> float:
        return float(self.channel.green(complex(self.channel.cut, 0.0)))

    def defined_at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            # closed at |z| = 1/p so that H(1) makes sense when p = 1
            return np.log(np.abs(z)) <= self.neg_log_p

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if not np.all(self.defined_at(z)):
            raise OutOfDomain("H is defined only for |z| < 1/p")
        flat = z.reshape(-1)
        out = np.zeros(flat.shape, dtype=complex)
        nz = flat != 0
        with np.errstate(divide="ignore"):
            target = self.neg_log_p - np.log(np.where(nz, flat, 1.0))
        deep = np.zeros(flat.shape, dtype=bool)
        if self.channel is not None:
            deep = nz & (target.real <= self._channel_level())
        if deep.any():
            out[deep] = self.channel.solve(target[deep])
        bulk = nz & ~deep
        if bulk.any():
            out[bulk] = self.rmap.inverse(self.p * flat[bulk])
        return out.reshape(z.shape)

    def inverse(self, w):
        """``H^-1(w) = phi(w) / p`` for ``w`` in the teardrop."""
        w = np.asarray(w, dtype=complex)
        if not np.all(self.domain.contains(w)):
            raise OutOfDomain("H^-1 is defined only on the teardrop domain")
        flat = w.reshape(-1)
        out = np.empty(flat.shape, dtype=complex)
        deep = np.zeros(flat.shape, dtype=bool)
        if self.channel is not None:
            deep = self.channel.covers(flat)
        if deep.any():
            out[deep] = np.exp(self.neg_log_p - self.channel.neg_log_phi(flat[deep]))
        if (~deep).any():
            out[~deep] = self.rmap(flat[~deep]) * np.exp(self.neg_log_p)
        return out.reshape(w.shape)

    def sup_deviation(self, radius: float = SUP_RADIUS, samples: int = SUP_SAMPLES) -> float:
        """``max |H(z) - z|`` on ``|z| = radius`` (the maximum over the closed
        disc, by the maximum principle)."""
        z = radius * np.exp(2j * np.pi * np.arange(samples) / samples)
        return float(np.max(np.abs(self(z) - z)))

    def value_at_one(self) -> complex:
        return complex(self(np.array([1.0 + 0j]))[0])


def _neg_log_phi(rmap: RiemannMap, channel: Optional[ChannelRepresentation], z: complex) -> complex:
    if channel is not None and channel.covers(np.array([z]))[0]:
        return complex(channel.neg_log_phi(np.array([z]))[0])
    return complex(rmap.g(np.array([z]))[0] - np.log(z))


def build_perturbation(rmap: RiemannMap) -> Perturbation:
    """The perturbation attached to ``rmap``; ``p = phi(delta)`` must be real."""
    dom = rmap.domain
    delta = _far_point(dom)
    channel = None
    if isinstance(dom, TeardropDomain):
        try:
            channel = channel_representation(rmap)
        except SolverFailure:
            channel = None              # short channel: the global solution is accurate
    nl = _neg_log_phi(rmap, channel, complex(delta, 0.0))
    # |Im p| = p |Im log p|
    if abs(nl.imag) * np.exp(-nl.real) > BOUNDARY_TOL:
        raise NonRealRatio(f"phi(delta) has imaginary part {nl.imag:.3e}")
    ell = nl.real
    if ell < 0:
        if ell < -BOUNDARY_TOL:
            raise SolverFailure(f"phi(delta) has modulus above 1 (log p = {-ell:.3e})")
        ell = 0.0                       # disc hook: delta lies on the boundary
    return Perturbation(rmap, channel, float(delta), float(ell))


def jet_of(germ: Callable, order: int, radius: float = JET_RADIUS, points: int = JET_POINTS) -> Jet:
    """Taylor coefficients 1..order from Cauchy integrals on ``|z| = radius``."""
    if order < 1 or points <= 2 * order:
        raise JetExtractionFailure("need order >= 1 and more than 2*order sample points")
    z = radius * np.exp(2j * np.pi * np.arange(points) / points)
    try:
        vals = np.asarray(germ(z), dtype=complex)
    except (NewtonDivergence, OutOfDomain) as exc:
        raise JetExtractionFailure(f"germ could not be sampled on |z| = {radius}: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise JetExtractionFailure("non-finite samples")
    c = np.fft.fft(vals) / points
    n = np.arange(1, order + 1)
    coeffs = c[1:order + 1] / radius ** n
    if abs(c[0]) > 1e-10 * np.max(np.abs(vals)):
        raise JetExtractionFailure("sampled map does not fix the origin")
    return Jet(coeffs)


@dataclass
class NormalizedGerm:
    """``S o H`` where ``S`` is the true inverse of the order-``N`` Taylor
    polynomial ``R`` of ``H``; its ``N``-jet is the identity."""

    base: Callable
    order: int
    taylor: Jet
    S: Inverse
    jet: Jet
    value_at_one: complex

    def __call__(self, z):
        return eval_at(self.S, self.base(z), check_domain=False)

    @property
    def tangency_error(self) -> float:
        return float(np.max(deviation(self.jet)))


def normalize_tangency(H: Callable, N: int) -> NormalizedGerm:
    if N < 1:
        raise JetExtractionFailure("N must be at least 1")
    R = jet_of(H, N)
    if abs(R.coeffs[0] - 1) >= 0.5:
        raise JetExtractionFailure(f"linear coefficient {R.coeffs[0]:.4g} is too far from 1")
    S = Inverse(Polynomial(tuple(R.coeffs)))

    def SH(z):
        return eval_at(S, H(z), check_domain=False)

    check = jet_of(SH, N)
    err = float(np.max(deviation(check)))
    if not err <= TANGENCY_TOL:
        raise JetExtractionFailure(f"normalized jet deviates from the identity by {err:.3e}")
    one = H.value_at_one() if hasattr(H, "value_at_one") else complex(H(np.array([1.0 + 0j]))[0])
    v1 = complex(eval_at(S, np.array([one]), check_domain=False)[0])
    return NormalizedGerm(H, N, R, S, check, v1)


# ------------------------------------------------------------------ studies

@dataclass(frozen=True)
class ConvergenceRow:
    alpha: float
    p: float
    neg_log_p: float
    sup_deviation: float
    h_at_one: float
    nodes: int
    boundary_residual: float


def perturbation_for(delta: float, alpha: float, node_count: int = 1024) -> Perturbation:
    return build_perturbation(riemann_map(build_teardrop(delta, alpha, node_count)))


def convergence_study(delta: float, alphas, node_count: int = 1024) -> list:
    def one(a):
        H = perturbation_for(delta, a, node_count)
        return ConvergenceRow(
            alpha=float(a),
            p=H.p,
            neg_log_p=H.neg_log_p,
            sup_deviation=H.sup_deviation(),
            h_at_one=H.value_at_one().real,
            nodes=H.rmap.panels.n,
            boundary_residual=H.rmap.boundary_residual,
        )

    return pmap(one, list(alphas))


def convergence_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "p_m", "neg_log_p", "sup_dev_0.8", "H(1)", "nodes", "boundary_residual"])
    for r in rows:
        w.writerow([repr(r.alpha), repr(r.p), repr(r.neg_log_p), repr(r.sup_deviation),
                    repr(r.h_at_one), r.nodes, repr(r.boundary_residual)])
    return buf.getvalue()


def boundary_dump(rmap: RiemannMap) -> dict:
    P = rmap.panels
    return {
        "nodes_re": P.z.real.tolist(),
        "nodes_im": P.z.imag.tolist(),
        "angle": rmap.boundary_angle.tolist(),
        "boundary_residual": rmap.boundary_residual,
        "symmetry_residual": rmap.symmetry_residual,
        "monotone": rmap.correspondence_monotone(),
    }


def boundary_json(rmap: RiemannMap) -> str:
    return json.dumps(boundary_dump(rmap), sort_keys=True)
