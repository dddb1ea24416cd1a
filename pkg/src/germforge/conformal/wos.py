"""Walk-on-spheres solution of the Dirichlet problem ``u = log|z|`` on the
boundary, used as an independent check of the boundary-integral solver:
``|phi(z)| = |z| exp(-u(z))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OutOfDomain
from ..kernels import wos_log_modulus
from ..parallel import pmap
from ..rng import MASK64, splitmix64
from .geometry import BoundaryCurve

WOS_EPS = 1e-6
CHUNK = 250_000


@dataclass(frozen=True)
class WosEstimate:
    z: complex
    u: float
    u_stderr: float
    modulus: float
    modulus_stderr: float
    walks: int
    mean_steps: float


def wos_modulus(domain: BoundaryCurve, z: complex, n_walks: int, seed: int = 0,
                eps: float = WOS_EPS, point_index: int = 0) -> WosEstimate:
    """Estimate ``|phi(z)|``.  Walks are split into fixed chunks whose keys
    depend only on ``(seed, point_index, chunk)``, so the result does not
    depend on the number of threads."""
    z = complex(z)
    if not domain.contains(np.array([z]))[0]:
        raise OutOfDomain(f"{z} is not inside the domain")
    table = np.ascontiguousarray(domain.piece_table())
    chunks = [(lo, min(CHUNK, n_walks - lo)) for lo in range(0, n_walks, CHUNK)]

    def run(c):
        k = splitmix64(splitmix64(splitmix64(seed & MASK64) ^ point_index) ^ (c[0] // CHUNK))
        return wos_log_modulus(z, table, eps, c[1], k)

    parts = pmap(run, chunks)
    s = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    steps = sum(p[2] for p in parts)
    mean = s / n_walks
    var = max(s2 / n_walks - mean * mean, 0.0) * n_walks / max(n_walks - 1, 1)
    se = float(np.sqrt(var / n_walks))
    mod = abs(z) * float(np.exp(-mean))
    return WosEstimate(z, float(mean), se, mod, mod * se, n_walks, steps / n_walks)
