"""Riemann maps of Jordan domains onto the unit disc.

The map is written ``phi(z) = z * exp(-g(z))`` where ``Re g`` solves the
Dirichlet problem with boundary data ``log|z|`` and ``Im g`` is its harmonic
conjugate normalised by ``Im g(0) = 0``.  Then ``|phi| = 1`` on the
boundary, ``phi(0) = 0`` and ``phi'(0) = exp(-g(0)) > 0``.

``g`` is represented as a Cauchy integral of a real double-layer density
obtained from a second-kind Nystrom system on Gauss-Legendre panels.
Interior values use the barycentric form of the Cauchy integral, which
stays accurate close to the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.spatial

from ..errors import NewtonDivergence, SolverFailure
from .geometry import BoundaryCurve, Panels

BOUNDARY_TOL = 1e-7


def double_layer_matrix(P: Panels) -> np.ndarray:
    """Nystrom matrix of ``mu/2 + K mu`` for the interior Dirichlet problem."""
    diff = P.z[None, :] - P.z[:, None]
    np.fill_diagonal(diff, 1.0)
    A = (P.dz[None, :] / diff).imag / (2 * np.pi)
    np.fill_diagonal(A, 0.5 + P.kappa * P.ws / (4 * np.pi))
    return A


class CauchyDensity:
    """A real density on panels together with the analytic function
    ``F(z) = (1/2 pi i) int mu(zeta) / (zeta - z) dzeta`` it generates."""

    def __init__(self, panels: Panels, mu: np.ndarray):
        self.panels = panels
        self.mu = np.asarray(mu, dtype=float)
        # the barycentric formula needs the boundary values of F itself (not
        # the density) to stay accurate right up to the boundary
        self.fb = self.boundary_values()
        dfb_ds = panels.d_ds(self.fb.real) + 1j * panels.d_ds(self.fb.imag)
        self.dfb_dzeta = dfb_ds / panels.tangent

    def _bary(self, values, z):
        z = np.asarray(z, dtype=complex)
        P = self.panels
        flat = z.reshape(-1)
        out = np.empty(flat.shape, dtype=complex)
        for start in range(0, len(flat), 512):
            zz = flat[start:start + 512]
            diff = P.z[None, :] - zz[:, None]
            hit = diff == 0
            diff[hit] = 1.0
            c = P.dz[None, :] / diff
            c[hit] = 0.0
            num = c @ values
            den = c.sum(axis=1)
            res = num / den
            rows = np.nonzero(hit.any(axis=1))[0]
            for r in rows:
                res[r] = values[np.nonzero(hit[r])[0][0]]
            out[start:start + 512] = res
        return out.reshape(z.shape)

    def __call__(self, z):
        return self._bary(self.fb, z)

    def derivative(self, z):
        return self._bary(self.dfb_dzeta, z)

    def boundary_values(self, values=None) -> np.ndarray:
        """Interior limit of the Cauchy integral at the nodes."""
        P = self.panels
        v = self.mu.astype(complex) if values is None else np.asarray(values, dtype=complex)
        if values is None:
            dv_ds = P.d_ds(self.mu)
        else:
            dv_ds = P.d_ds(v.real) + 1j * P.d_ds(v.imag)
        diff = P.z[None, :] - P.z[:, None]
        np.fill_diagonal(diff, 1.0)
        num = (v[None, :] - v[:, None]) * P.dz[None, :] / diff
        np.fill_diagonal(num, dv_ds * P.ws)
        return v + num.sum(axis=1) / (2j * np.pi)


@dataclass
class RiemannMap:
    """Discrete conformal map ``phi`` of ``domain`` onto the unit disc with
    ``phi(0) = 0`` and ``phi'(0) > 0``."""

    domain: BoundaryCurve
    density: CauchyDensity
    shift: float                    # Im F(0), removed so that Im g(0) = 0
    boundary_angle: np.ndarray      # arg phi at the boundary nodes (unwrapped)
    boundary_residual: float        # max | |phi(node)| - 1 |
    symmetry_residual: float

    @property
    def panels(self) -> Panels:
        return self.density.panels

    def g(self, z):
        return self.density(z) - 1j * self.shift

    def log_phi_over_z(self, z):
        return -self.g(z)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return z * np.exp(-self.g(z))

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return np.exp(-self.g(z)) * (1.0 - z * self.density.derivative(z))

    @property
    def derivative_at_zero(self) -> float:
        return float(np.exp(-self.g(0j).real))

    def green(self, z):
        """Green's function with pole at 0: ``-log|phi(z)|``."""
        z = np.asarray(z, dtype=complex)
        return self.g(z).real - np.log(np.abs(z))

    def inverse(self, w, z0=None, tol: float = 1e-14, max_iter: int = 80):
        """Solve ``phi(z) = w`` by damped Newton iteration."""
        w = np.asarray(w, dtype=complex)
        z = (w / self.derivative_at_zero if z0 is None else np.asarray(z0, dtype=complex)).copy()
        flat_w = w.reshape(-1)
        flat_z = z.reshape(-1).copy()
        active = np.ones(flat_w.shape, dtype=bool)
        res = self(flat_z) - flat_w
        for _ in range(max_iter):
            active = np.abs(res) > tol * np.maximum(1.0, np.abs(flat_w))
            if not active.any():
                break
            za = flat_z[active]
            step = res[active] / self.derivative(za)
            t = np.ones(step.shape)
            new = za - step
            new_res = self(new) - flat_w[active]
            for _h in range(30):
                worse = ~self.domain.contains(new) | (np.abs(new_res) > np.abs(res[active]))
                if not worse.any():
                    break
                t[worse] *= 0.5
                new[worse] = za[worse] - t[worse] * step[worse]
                new_res[worse] = self(new[worse]) - flat_w[active][worse]
            flat_z[active] = new
            res[active] = new_res
        else:
            if np.any(np.abs(res) > 1e3 * tol * np.maximum(1.0, np.abs(flat_w))):
                raise NewtonDivergence("inverse Riemann map did not converge")
        return flat_z.reshape(w.shape)

    def correspondence_monotone(self, slack: float | None = None) -> bool:
        """Angles increase around the boundary and sweep one full turn.  In a
        crowded channel consecutive angles differ by less than the solver
        residual, so decreases below ``slack`` (default: twice the boundary
        residual) are not counted."""
        th = self.boundary_angle
        if slack is None:
            slack = max(1e-12, 2 * self.boundary_residual)
        turn = abs(th[-1] - th[0] + (th[1] - th[0]) - 2 * np.pi) < 0.5
        return bool(np.all(np.diff(th) > -slack) and turn)


def riemann_map(domain: BoundaryCurve, panels: Panels | None = None) -> RiemannMap:
    """Solve for the Riemann map of ``domain`` (which must contain 0)."""
    P = domain.panels() if panels is None else panels
    if not domain.contains(0j):
        raise SolverFailure("domain does not contain the origin")
    A = double_layer_matrix(P)
    rhs = np.log(np.abs(P.z))
    try:
        lu = scipy.linalg.lu_factor(A, check_finite=True)
        mu = scipy.linalg.lu_solve(lu, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverFailure(f"boundary system could not be solved: {exc}; raise node_count") from exc
    cond_probe = np.linalg.norm(A @ mu - rhs, np.inf)
    if not np.isfinite(mu).all() or cond_probe > 1e-8:
        raise SolverFailure("boundary system is ill-conditioned; raise node_count")
    density = CauchyDensity(P, mu)
    shift = float(density(0j).imag)
    Fb = density.boundary_values()
    boundary_residual = float(np.max(np.abs(Fb.real - rhs)))
    theta = np.unwrap(np.angle(P.z) - (Fb.imag - shift))
    # the discretisation is mirror-symmetric, so phi must commute with
    # conjugation node by node
    dist, mate = scipy.spatial.cKDTree(np.c_[P.z.real, P.z.imag]).query(np.c_[P.z.real, -P.z.imag])
    if np.max(dist) < 1e-10:
        phi_nodes = np.exp(1j * theta)
        sym = float(np.max(np.abs(phi_nodes[mate] - np.conj(phi_nodes))))
    else:
        sym = float("nan")
    return RiemannMap(
        domain=domain,
        density=density,
        shift=shift,
        boundary_angle=theta,
        boundary_residual=boundary_residual,
        symmetry_residual=sym,
    )
