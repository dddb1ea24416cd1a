"""Jet-level evaluation of words ``W(f, h^{-1} g h)`` and relation breaking.

Substitution is ``A -> f`` and ``B -> h^{-1} o g o h``.  A word is applied
left to right: its first block acts first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import InvalidOrders, InvalidWord, OrderMismatch, TorsionViolated
from .germ_expr import MapExpr, Polynomial, jet_of_expr
from .jets import IDENTITY_RTOL, Jet, compose, conjugate, deviation, invert, is_identity_jet, power, witness
from .parallel import pmap
from .rng import task_rng
from .words import Torsion, Word, enumerate_words, format_word

DEFAULT_K = 8
DEFAULT_ORDER = 24
DEFAULT_SAMPLES = 16
SAMPLE_DECAY = 0.3

GermLike = Union[Jet, MapExpr]


@dataclass(frozen=True)
class ConjugatorPoint:
    """Truncated conjugator ``a_1 z + ... + a_K z^K`` as a point of C^K."""

    coefficients: tuple

    def __post_init__(self):
        c = tuple(complex(a) for a in self.coefficients)
        if not c or c[0] == 0:
            raise InvalidOrders("conjugator needs a nonzero linear coefficient")
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    def jet(self, order: int) -> Jet:
        return Jet(self.coefficients).pad(order)

    def as_expr(self) -> MapExpr:
        return Polynomial(self.coefficients)


@dataclass(frozen=True)
class RelationVerdict:
    word: Word
    broken: bool
    witness_order: Optional[int]
    witness_coefficient: Optional[complex]
    order_used: int
    max_deviation: float
    tolerance: float
    seed: Optional[int] = None
    sample_index: Optional[int] = None

    def to_json(self) -> dict:
        wc = self.witness_coefficient
        return {
            "word": format_word(self.word),
            "broken": self.broken,
            "witness_order": self.witness_order,
            "witness_coefficient": None if wc is None else [wc.real, wc.imag],
            "order_used": self.order_used,
            "seed": self.seed,
            "sample_index": self.sample_index,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
        }


def as_jet(x: GermLike, order: int) -> Jet:
    if isinstance(x, Jet):
        if x.order < order:
            raise OrderMismatch(f"jet of order {x.order} cannot be promoted to order {order}")
        return x.truncate(order)
    return jet_of_expr(x, order)


def _conjugator_jet(h, order: int) -> Optional[Jet]:
    if h is None:
        return None
    if isinstance(h, ConjugatorPoint):
        return h.jet(order)
    return as_jet(h, order)


def _can_reach(x: GermLike, order: int) -> bool:
    return not isinstance(x, Jet) or x.order >= order


def word_jet_and_scale(w: Word, f: GermLike, g: GermLike, h, order: int):
    """Jet of the word plus the largest coefficient magnitude met on the way."""
    fj = as_jet(f, order)
    gj = as_jet(g, order)
    hj = _conjugator_jet(h, order)
    gt = gj if hj is None else conjugate(gj, hj)
    scale = max(1.0, fj.scale, gt.scale, 0.0 if hj is None else max(hj.scale, invert(hj).scale))
    cache: dict = {}
    result = Jet.identity(order)
    for blk in w.blocks:
        key = (blk.base, blk.exponent)
        if key not in cache:
            cache[key] = power(fj if blk.base == "A" else gt, blk.exponent)
        p = cache[key]
        result = compose(p, result)
        scale = max(scale, p.scale, result.scale)
    return result, scale


def evaluate_word_jet(w: Word, f: GermLike, g: GermLike, h, order: int) -> Jet:
    return word_jet_and_scale(w, f, g, h, order)[0]


def verdict_for(w, f, g, h, order, tol=None, seed=None, sample_index=None) -> RelationVerdict:
    """``tol=None`` uses 1e-12 times the largest coefficient magnitude met."""
    j, scale = word_jet_and_scale(w, f, g, h, order)
    t = IDENTITY_RTOL * scale if tol is None else tol
    wit = witness(j, t)
    return RelationVerdict(
        word=w,
        broken=wit is not None,
        witness_order=None if wit is None else wit[0],
        witness_coefficient=None if wit is None else wit[1],
        order_used=order,
        max_deviation=float(np.max(deviation(j))),
        tolerance=t,
        seed=seed,
        sample_index=sample_index,
    )


def sample_conjugator(K: int, seed: int, index: int) -> ConjugatorPoint:
    """``a_1 = 1`` and ``a_j`` uniform in the disc ``|a_j| <= 0.3^(j-1)``."""
    rng = task_rng(seed, index)
    u = rng.random((K - 1, 2))
    j = np.arange(2, K + 1)
    rad = SAMPLE_DECAY ** (j - 1) * np.sqrt(u[:, 0])
    a = rad * np.exp(2j * np.pi * u[:, 1])
    return ConjugatorPoint((1.0,) + tuple(a))


def _check_breakable(w: Word):
    if w.is_pure_power:
        raise InvalidWord(f"word {format_word(w)} is empty or a pure power of one generator")


def break_relation(
    w: Word,
    f: GermLike,
    g: GermLike,
    K: int = DEFAULT_K,
    order: int = DEFAULT_ORDER,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    tol: Optional[float] = None,
):
    """Sample conjugators until one breaks the relation ``W = id``.

    Returns ``(verdict, point)``.  A sample whose jet is the identity at
    ``order`` is re-evaluated once at ``2 * order`` when the inputs allow.
    When nothing breaks, the sample with the largest deviation is returned.
    """
    _check_breakable(w)
    if not (2 <= K <= order):
        raise InvalidOrders(f"need 2 <= K <= order, got K={K}, order={order}")
    if samples < 1:
        raise InvalidOrders("samples must be positive")

    def run(i):
        h = sample_conjugator(K, seed, i)
        v = verdict_for(w, f, g, h, order, tol, seed, i)
        if not v.broken and _can_reach(f, 2 * order) and _can_reach(g, 2 * order):
            v2 = verdict_for(w, f, g, h, 2 * order, tol, seed, i)
            if v2.broken:
                v = v2
        return v, h

    results = pmap(run, range(samples))
    for v, h in results:
        if v.broken:
            return v, h
    return max(results, key=lambda vh: vh[0].max_deviation)


@dataclass
class CertificationReport:
    torsion: Torsion
    max_blocks: int
    order: int
    words_checked: int
    records: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [r for r in self.records if r["status"] == "possible relation"]

    def to_json(self) -> dict:
        def rec(r):
            wc = r["witness_coefficient"]
            return {
                "word": format_word(r["word"]),
                "status": r["status"],
                "witness_order": r["witness_order"],
                "witness_coefficient": None if wc is None else [wc.real, wc.imag],
                "order_used": r["order_used"],
            }

        return {
            "torsion": None if self.torsion is None else list(self.torsion),
            "max_blocks": self.max_blocks,
            "order": self.order,
            "words_checked": self.words_checked,
            "failures": [format_word(r["word"]) for r in self.failures],
            "records": [rec(r) for r in self.records],
            "note": "certificate holds only up to the stated jet order and word bound",
        }


def certify_free_product(
    f: GermLike,
    g: GermLike,
    h,
    torsion: Torsion,
    max_blocks: int,
    order: int = DEFAULT_ORDER,
    tol: Optional[float] = None,
    max_letters: Optional[int] = None,
) -> CertificationReport:
    """Evaluate every normal-form word (pure powers excluded) and flag those
    whose jet is the identity.  Words that are the identity at ``order`` but
    not at ``2 * order`` are reported as resolved rather than failed."""
    fj, gj = as_jet(f, order), as_jet(g, order)
    hj = _conjugator_jet(h, order)
    gt = gj if hj is None else conjugate(gj, hj)
    if torsion is not None:
        k, l = torsion
        for name, jet, n in (("f", fj, k), ("g", gt, l)):
            if n and not is_identity_jet(power(jet, n), IDENTITY_RTOL * max(1.0, jet.scale) if tol is None else tol):
                raise TorsionViolated(f"{name}^{n} is not the identity jet")
    if (torsion is None or 0 in torsion) and max_letters is None:
        raise InvalidOrders("free case needs max_letters to bound the enumeration")
    words = list(enumerate_words(torsion, max_blocks, exclude_pure_powers=True, max_letters=max_letters))
    retry_ok = _can_reach(f, 2 * order) and _can_reach(g, 2 * order)

    def check(w):
        v = verdict_for(w, f, g, h, order, tol)
        status = "broken"
        if not v.broken:
            status = "possible relation"
            if retry_ok:
                v2 = verdict_for(w, f, g, h, 2 * order, tol)
                if v2.broken:
                    v, status = v2, f"resolved at order {2 * order}"
        return {
            "word": w,
            "status": status,
            "witness_order": v.witness_order,
            "witness_coefficient": v.witness_coefficient,
            "order_used": v.order_used,
        }

    records = pmap(check, words)
    return CertificationReport(torsion, max_blocks, order, len(words), records)
