"""Destroying a relation ``W(f, g)(z) = z`` at one point by conjugating the
second generator with a perturbation ``H`` from a teardrop Riemann map.

Coordinates are changed so that the point of largest modulus on the cycle
is ``1`` and the block applied to it is a power of ``g``.  The start point
is pulled back from ``1`` through the perturbed blocks, so the perturbed
itinerary passes through ``1`` where ``H(1) = delta`` moves it off the
unperturbed cycle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import (
    EvaluationFailure,
    InvalidWord,
    NewtonDivergence,
    NoUniqueMaximum,
    NotARelation,
    OutOfDomain,
    PerturbationExhausted,
    SolverFailure,
)
from ..germ_expr import Compose, Inverse, MapExpr, Polynomial, format_complex, inverse_of
from ..words import Word, format_word, reduce_blocks
from ..words import Block
from .perturbation import Perturbation, perturbation_for

RELATION_TOL = 1e-9
TIE_RTOL = 1e-9
DEFAULT_DELTAS = (1.2, 1.1, 1.05)
ALPHA_FRACTIONS = (0.2, 0.1, 0.05)
TIE_BREAKERS = (-0.25, 0.25, -0.25j, 0.25j)
MIN_DISPLACEMENT = 1e-9


def _apply(m: MapExpr, z: complex) -> complex:
    v, _, ok = m.evaluate_masked(np.array([z]))
    if not ok[0]:
        raise EvaluationFailure(f"evaluation failed at {z}")
    if abs(v[0]) >= m.radius_hint:
        raise OutOfDomain(f"{v[0]} leaves the validity disc")
    return complex(v[0])


def _apply_block(maps: dict, base: str, e: int, z: complex) -> complex:
    m = maps[base if e > 0 else base.lower()]
    for _ in range(abs(e)):
        if abs(z) >= m.radius_hint:
            raise OutOfDomain(f"{z} is outside the validity disc")
        z = _apply(m, z)
    return z


def _cycle(f: MapExpr, g: MapExpr, blocks, z0: complex) -> list:
    maps = {"A": f, "a": inverse_of(f), "B": g, "b": inverse_of(g)}
    pts = [complex(z0)]
    for b in blocks:
        pts.append(_apply_block(maps, b.base, b.exponent, pts[-1]))
    return pts


def _max_occurrences(pts) -> list:
    """Indices (mod the cycle length) where the maximal modulus is attained,
    provided a single point value attains it; raises otherwise."""
    cyc = pts[:-1]
    mods = np.abs(cyc)
    top = mods.max()
    idx = [i for i, r in enumerate(mods) if r >= top * (1 - TIE_RTOL)]
    ref = cyc[idx[0]]
    if any(abs(cyc[i] - ref) > TIE_RTOL * max(1.0, top) for i in idx):
        raise NoUniqueMaximum(f"{len(idx)} itinerary points share the maximal modulus {top:.6g}")
    return idx


def _coordinate_change(c: complex, scale: complex) -> MapExpr:
    """``T(z) = (z + c z^2) / scale``."""
    kappa = Polynomial((1.0,)) if c == 0 else Polynomial((1.0, c))
    return Compose(Polynomial((1 / scale,)), kappa)


def _transported(gen: MapExpr, T: MapExpr) -> MapExpr:
    return Compose(T, Compose(gen, Inverse(T)))


@dataclass
class DemoAttempt:
    delta: float
    alpha: float
    outcome: str
    displacement: Optional[float] = None

    def to_json(self) -> dict:
        return {"delta": self.delta, "alpha": self.alpha, "outcome": self.outcome, "displacement": self.displacement}


@dataclass
class DemoReport:
    word: Word
    cycle_word: str
    swapped: bool
    coordinate_c: complex
    scale: complex
    itinerary: list
    perturbed: list
    delta: float
    alpha: float
    neg_log_p: float
    displacement: float
    closure_residual: float
    in_domain: bool
    H: Perturbation = field(repr=False)
    attempts: list = field(default_factory=list)

    def to_json(self) -> dict:
        def pts(v):
            return [[p.real, p.imag] for p in v]

        return {
            "word": format_word(self.word),
            "cycle_word": self.cycle_word,
            "swapped_generators": self.swapped,
            "coordinate_change_c": format_complex(self.coordinate_c),
            "scale": format_complex(self.scale),
            "delta": self.delta,
            "alpha": self.alpha,
            "neg_log_p": self.neg_log_p,
            "itinerary": pts(self.itinerary),
            "perturbed_itinerary": pts(self.perturbed),
            "displacement": self.displacement,
            "closure_residual": self.closure_residual,
            "in_domain": self.in_domain,
            "attempts": [a.to_json() for a in self.attempts],
        }


class _Perturbed:
    """Block maps with ``g``-blocks replaced by ``H^-1 g^j H``."""

    def __init__(self, f, g, H: Perturbation):
        self.maps = {"A": f, "a": inverse_of(f), "B": g, "b": inverse_of(g)}
        self.H = H

    def _H(self, z):
        if not self.H.defined_at(np.array([z]))[0]:
            raise OutOfDomain("H undefined")
        return complex(self.H(np.array([z]))[0])

    def _Hinv(self, w):
        if not self.H.domain.contains(np.array([w]))[0]:
            raise OutOfDomain("H^-1 undefined")
        return complex(self.H.inverse(np.array([w]))[0])

    def block(self, b: Block, z: complex, inverse: bool = False) -> complex:
        e = -b.exponent if inverse else b.exponent
        if b.base == "A":
            return _apply_block(self.maps, "A", e, z)
        return self._Hinv(_apply_block(self.maps, "B", e, self._H(z)))


def _try(f, g, blocks, H: Perturbation):
    """Back-propagate from ``1`` and run the perturbed cycle forward."""
    P = _Perturbed(f, g, H)
    k = len(blocks)
    w = 1.0 + 0j
    for b in reversed(blocks[:-1]):
        w = P.block(b, w, inverse=True)
    fwd = [w]
    for b in blocks:
        fwd.append(P.block(b, fwd[-1]))
    return fwd, abs(fwd[k - 1] - 1.0)


def relation_breaking_demo(
    f: MapExpr,
    g: MapExpr,
    w: Word,
    z_start: complex,
    deltas=DEFAULT_DELTAS,
    alpha_fractions=ALPHA_FRACTIONS,
    tie_break: bool = True,
    node_count: int = 1024,
) -> DemoReport:
    """Find a perturbation ``H`` for which the word, with ``g`` replaced by
    ``H^-1 g H``, no longer closes up at the pulled-back start point."""
    z_start = complex(z_start)
    try:
        pts = _cycle(f, g, w.blocks, z_start)
    except (EvaluationFailure, OutOfDomain, NewtonDivergence) as exc:
        raise NotARelation(f"itinerary of {z_start} is not defined: {exc}") from exc
    if abs(pts[-1] - z_start) > RELATION_TOL:
        raise NotARelation(f"W(z) - z = {abs(pts[-1] - z_start):.3e} at z = {z_start}")
    if w.is_pure_power:
        raise InvalidWord("pure powers are not relations between two generators")

    breakers = (0.0,) + (TIE_BREAKERS if tie_break else ())
    chosen = None
    last_err = None
    for c in breakers:
        T0 = _coordinate_change(c, 1.0)
        fT, gT = (f, g) if c == 0 else (_transported(f, T0), _transported(g, T0))
        try:
            zc = z_start if c == 0 else _apply(T0, z_start)
            cyc = _cycle(fT, gT, w.blocks, zc)
            occ = _max_occurrences(cyc)
        except NoUniqueMaximum as exc:
            last_err = exc
            continue
        chosen = (c, cyc, occ)
        break
    if chosen is None:
        raise NoUniqueMaximum(str(last_err))
    c, cyc, occ = chosen

    blocks = list(w.blocks)
    k = len(blocks)
    swapped = False
    follow = [i for i in occ if blocks[i].base == "B"]
    if not follow:
        follow = [i for i in occ if blocks[i].base == "A"]
        swapped = True
    i0 = follow[0]                     # block i0 (0-based) acts on the maximal point
    cycle_blocks = blocks[i0 + 1:] + blocks[:i0 + 1]
    if swapped:
        cycle_blocks = [Block("B" if b.base == "A" else "A", b.exponent) for b in cycle_blocks]
    scale = cyc[i0]
    T = _coordinate_change(c, scale)
    fN, gN = _transported(f, T), _transported(g, T)
    if swapped:
        fN, gN = gN, fN
    unperturbed = [p / scale for p in (cyc[i0 + 1:k] + cyc[:i0 + 1])]
    unperturbed.append(unperturbed[0])
    label = format_word(Word(tuple(cycle_blocks)))

    attempts = []
    for delta in deltas:
        for frac in alpha_fractions:
            alpha = frac * (delta - 1.0)
            try:
                H = perturbation_for(delta, alpha, node_count)
                fwd, resid = _try(fN, gN, cycle_blocks, H)
            except (OutOfDomain, EvaluationFailure, NewtonDivergence, SolverFailure) as exc:
                attempts.append(DemoAttempt(delta, alpha, f"left the domain: {exc}"))
                continue
            disp = abs(fwd[-1] - fwd[0])
            if not disp > MIN_DISPLACEMENT:
                attempts.append(DemoAttempt(delta, alpha, "closed up", disp))
                continue
            attempts.append(DemoAttempt(delta, alpha, "broken", disp))
            return DemoReport(
                word=w, cycle_word=label, swapped=swapped, coordinate_c=complex(c), scale=complex(scale),
                itinerary=unperturbed, perturbed=fwd, delta=delta, alpha=alpha, neg_log_p=H.neg_log_p,
                displacement=float(disp), closure_residual=float(resid), in_domain=True, H=H, attempts=attempts,
            )
    raise PerturbationExhausted(
        "no perturbation broke the relation: "
        + "; ".join(f"delta={a.delta:g} alpha={a.alpha:g}: {a.outcome}" for a in attempts)
    )
