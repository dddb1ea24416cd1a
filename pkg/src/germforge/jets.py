"""Truncated Taylor series of germs fixing the origin.

A :class:`Jet` of order ``N`` stores ``c_1 .. c_N``; the constant term is
implicitly zero.  All operations are pure and truncate at ``N``.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import NotInvertible, OrderMismatch
from .kernels import compose_series, invert_series

DEFAULT_ORDER = 24
IDENTITY_RTOL = 1e-12


class Jet:
    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[complex]):
        c = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs, dtype=complex)
        if c.ndim != 1 or len(c) < 1:
            raise OrderMismatch("a jet needs at least the linear coefficient")
        c.setflags(write=False)
        self._c = c

    @classmethod
    def identity(cls, order: int) -> "Jet":
        return cls.linear(1.0, order)

    @classmethod
    def linear(cls, lam: complex, order: int) -> "Jet":
        c = np.zeros(order, dtype=complex)
        c[0] = lam
        return cls(c)

    @classmethod
    def from_series(cls, s) -> "Jet":
        """From an array indexed by power (index 0 is the constant term)."""
        return cls(np.asarray(s, dtype=complex)[1:])

    @property
    def order(self) -> int:
        return len(self._c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def series(self) -> np.ndarray:
        return np.concatenate(([0j], self._c))

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self._c)))

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderMismatch(f"cannot raise jet order {self.order} to {order} by truncation")
        return Jet(self._c[:order])

    def pad(self, order: int) -> "Jet":
        """Extend with zero coefficients (only meaningful for polynomials)."""
        if order < self.order:
            return self.truncate(order)
        c = np.zeros(order, dtype=complex)
        c[: self.order] = self._c
        return Jet(c)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for c in self._c[::-1]:
            acc = (acc + c) * z
        return acc

    def __eq__(self, other) -> bool:
        return isinstance(other, Jet) and self.order == other.order and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash(self._c.tobytes())

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, coeffs={np.array2string(self._c, precision=6)})"


def _check(f: Jet, g: Jet) -> None:
    if f.order != g.order:
        raise OrderMismatch(f"jet orders differ: {f.order} vs {g.order}")


def compose(f: Jet, g: Jet) -> Jet:
    """Jet of ``f o g``."""
    _check(f, g)
    return Jet.from_series(compose_series(f.series, g.series))


def invert(f: Jet) -> Jet:
    if f.coeffs[0] == 0:
        raise NotInvertible("linear coefficient vanishes")
    return Jet.from_series(invert_series(f.series))


def conjugate(g: Jet, h: Jet) -> Jet:
    """Jet of ``h^{-1} o g o h``."""
    _check(g, h)
    return compose(invert(h), compose(g, h))


def power(f: Jet, k: int) -> Jet:
    if k == 0:
        return Jet.identity(f.order)
    base = invert(f) if k < 0 else f
    k = abs(k)
    result = None
    while k:
        if k & 1:
            result = base if result is None else compose(result, base)
        k >>= 1
        if k:
            base = compose(base, base)
    return result


def deviation(f: Jet) -> np.ndarray:
    """``|c_j - delta_{j1}|`` for ``j = 1..N``."""
    d = np.abs(f.coeffs.copy())
    d[0] = abs(f.coeffs[0] - 1)
    return d


def is_identity_jet(f: Jet, tol: float) -> bool:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return bool(np.all(deviation(f) <= tol))


def witness(f: Jet, tol: float):
    """Smallest order whose coefficient differs from the identity, or None."""
    hits = np.nonzero(deviation(f) > tol)[0]
    if not len(hits):
        return None
    j = int(hits[0])
    return j + 1, complex(f.coeffs[j])


def sup_norm_on_disc(coeffs, r: float, samples: int = 4096) -> float:
    """``max |p(z)|`` over ``|z| = r`` for ``p(z) = sum c_j z^j`` (``j >= 1``).

    Sampled on ``samples`` equispaced points, so the result is a lower bound
    with relative error ``O(d^2 / samples^2)`` for degree ``d``.
    """
    c = np.asarray(coeffs, dtype=complex)
    zs = r * np.exp(2j * np.pi * np.arange(samples) / samples)
    return float(np.max(np.abs(Jet(c)(zs))))
