"""The pseudogroup generated by ``f, f^-1, g, g^-1`` on a disc ``|z| < R``.

A point is in the domain of a word when every letterwise partial
composition, the final one included, stays inside the disc.  When a
``conjugator`` ``h`` is supplied the letter ``B`` stands for
``h^-1 o g o h``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.ndimage

from .errors import EvaluationFailure, InputError, OutOfDomain, ResolutionTooCoarse, TorsionViolated
from .germ_expr import Compose, Conjugate, MapExpr, Polynomial, Rotation, inverse_of, jet_of_expr
from .jets import is_identity_jet, power
from .parallel import pmap
from .words import Torsion, Word, enumerate_words, format_word

NEWTON_TOL = 1e-11
NEWTON_STEPS = 60
MERGE_TOL = 1e-8
EPS_H = 1e-4
FD_STEP = 1e-6


@dataclass(frozen=True)
class DiscContext:
    radius: float
    f: MapExpr
    g: MapExpr
    grid_resolution: float = 0.02

    def __post_init__(self):
        if not self.radius > 0 or not self.grid_resolution > 0:
            raise InputError("radius and grid_resolution must be positive")

    @property
    def radius_hint_exceeded(self) -> bool:
        """True when R is beyond the heuristic univalence radius of a generator."""
        hints = [e.radius_hint for e in (self.f, self.g, inverse_of(self.f), inverse_of(self.g))]
        return self.radius > min(hints)


def letter_maps(ctx: DiscContext, conjugator: Optional[MapExpr] = None) -> dict:
    gt = ctx.g if conjugator is None else Conjugate(ctx.g, conjugator)
    return {"A": ctx.f, "a": inverse_of(ctx.f), "B": gt, "b": inverse_of(gt)}


def word_expr(ctx: DiscContext, w: Word, conjugator: Optional[MapExpr] = None) -> MapExpr:
    """The full composition as one expression (first letter innermost)."""
    maps = letter_maps(ctx, conjugator)
    expr: MapExpr = Polynomial((1,))
    for ch in w.letters:
        expr = Compose(maps[ch], expr)
    return expr


@dataclass
class WordRun:
    """Vectorised letterwise evaluation of a word on many points."""

    value: np.ndarray
    derivative: np.ndarray
    in_domain: np.ndarray
    failed: np.ndarray
    escape_block: np.ndarray          # 1-based block index of escape, 0 if none
    block_points: Optional[list] = None


def run_word(ctx: DiscContext, w: Word, z, conjugator=None, maps=None, track=False) -> WordRun:
    maps = letter_maps(ctx, conjugator) if maps is None else maps
    z = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    R = ctx.radius
    dz = np.ones(z.shape, dtype=complex)
    alive = np.abs(z) < R
    failed = np.zeros(z.shape, dtype=bool)
    escape = np.zeros(z.shape, dtype=int)
    points = [z.copy()] if track else None
    for bi, blk in enumerate(w.blocks, start=1):
        ch = blk.base if blk.exponent > 0 else blk.base.lower()
        m = maps[ch]
        for _ in range(abs(blk.exponent)):
            idx = np.nonzero(alive)[0]
            if not len(idx):
                break
            v, d, ok = m.evaluate_masked(z[idx])
            bad = ~ok
            failed[idx[bad]] = True
            out = ok & ~(np.abs(v) < R)
            escape[idx[out]] = bi
            good = ok & ~out
            alive[idx[~good]] = False
            gi = idx[good]
            z[gi] = v[good]
            dz[gi] *= d[good]
        if track:
            points.append(z.copy())
    return WordRun(z, dz, alive, failed, escape, points)


@dataclass(frozen=True)
class Itinerary:
    points: tuple
    word: Word
    in_domain: bool
    escape_index: Optional[int]
    escape_point: Optional[complex] = None


def itinerary(ctx: DiscContext, w: Word, z: complex, conjugator: Optional[MapExpr] = None) -> Itinerary:
    """Block points ``z_0 .. z_s`` of ``z`` under ``w``, stopping at the first escape."""
    z = complex(z)
    if not abs(z) < ctx.radius:
        raise OutOfDomain(f"|z| = {abs(z):.6g} is not inside the disc of radius {ctx.radius}")
    maps = letter_maps(ctx, conjugator)
    pts = [z]
    cur = z
    for bi, blk in enumerate(w.blocks, start=1):
        ch = blk.base if blk.exponent > 0 else blk.base.lower()
        for _ in range(abs(blk.exponent)):
            v, _, ok = maps[ch].evaluate_masked(np.array([cur]))
            if not ok[0]:
                raise EvaluationFailure(f"inverse evaluation failed at {cur} in block {bi} of {format_word(w)}")
            cur = complex(v[0])
            if not abs(cur) < ctx.radius:
                return Itinerary(tuple(pts), w, False, bi, cur)
        pts.append(cur)
    return Itinerary(tuple(pts), w, True, None)


# ------------------------------------------------------------------ domains

@dataclass
class DomainGrid:
    pitch: float
    axis: np.ndarray
    nodes: np.ndarray
    in_disc: np.ndarray
    mask: np.ndarray
    failed: np.ndarray
    labels: np.ndarray
    n_components: int
    sizes: list
    origin_index: tuple
    origin_label: int

    def to_json(self) -> dict:
        return {
            "pitch": self.pitch,
            "shape": list(self.labels.shape),
            "n_components": self.n_components,
            "component_sizes": self.sizes,
            "origin_label": self.origin_label,
            "nodes_in_disc": int(self.in_disc.sum()),
            "nodes_in_domain": int(self.mask.sum()),
            "evaluation_failures": int(self.failed.sum()),
        }


def grid_axis(R: float, pitch: float) -> np.ndarray:
    n = int(math.ceil(R / pitch))
    return pitch * np.arange(-n, n + 1)


def domain_components(ctx: DiscContext, w: Word, conjugator: Optional[MapExpr] = None) -> DomainGrid:
    R, h = ctx.radius, ctx.grid_resolution
    if not h < R / 16:
        raise ResolutionTooCoarse(f"grid pitch {h} must be below R/16 = {R / 16}")
    ax = grid_axis(R, h)
    nodes = ax[None, :] + 1j * ax[:, None]
    in_disc = np.abs(nodes) < R
    mask = np.zeros(nodes.shape, dtype=bool)
    failed = np.zeros(nodes.shape, dtype=bool)
    run = run_word(ctx, w, nodes[in_disc], conjugator)
    mask[in_disc] = run.in_domain
    failed[in_disc] = run.failed
    # 4-connected components
    labels, n = scipy.ndimage.label(mask)
    sizes = [int(s) for s in np.bincount(labels.ravel())[1:]]
    c = len(ax) // 2
    return DomainGrid(h, ax, nodes, in_disc, mask, failed, labels, int(n), sizes, (c, c), int(labels[c, c]))


# ------------------------------------------------------------ fixed points

@dataclass(frozen=True)
class FixedPointRecord:
    location: complex
    word: Word
    multiplier: complex
    hyperbolic: bool
    residual: float

    def to_row(self) -> dict:
        return {
            "word": format_word(self.word),
            "re_z": self.location.real,
            "im_z": self.location.imag,
            "re_mult": self.multiplier.real,
            "im_mult": self.multiplier.imag,
            "hyperbolic": self.hyperbolic,
        }


def is_identity_word(ctx: DiscContext, w: Word, conjugator: Optional[MapExpr] = None, order: int = 16) -> bool:
    """Identity jet to ``order``; such words have no isolated fixed points."""
    j = jet_of_expr(word_expr(ctx, w, conjugator), order)
    return is_identity_jet(j, 1e-10 * max(1.0, j.scale))


def spiral_order(nodes: np.ndarray) -> np.ndarray:
    """Indices sorting nodes by ring (max-norm) and then by angle."""
    ring = np.maximum(np.abs(nodes.real), np.abs(nodes.imag))
    ang = np.mod(np.angle(nodes), 2 * np.pi)
    return np.lexsort((ang, np.round(ring, 12)))


def _annulus_seeds(ctx: DiscContext, r_in: float, r_out: float) -> np.ndarray:
    ax = grid_axis(ctx.radius, ctx.grid_resolution)
    nodes = (ax[None, :] + 1j * ax[:, None]).ravel()
    r = np.abs(nodes)
    nodes = nodes[(r >= r_in) & (r <= r_out) & (r < ctx.radius)]
    return nodes[spiral_order(nodes)]


def _check_annulus(ctx, annulus):
    r_in, r_out = annulus
    if not (0 < r_in < r_out < ctx.radius):
        raise InputError(f"annulus must satisfy 0 < r_in < r_out < R, got {annulus} with R={ctx.radius}")
    return r_in, r_out


def _dedupe(points: np.ndarray, tol: float) -> np.ndarray:
    kept: list = []
    for p in sorted(points, key=lambda c: (c.real, c.imag)):
        if all(abs(p - q) > tol for q in kept[-64:]) and all(abs(p - q) > tol for q in kept):
            kept.append(p)
    return np.array(kept, dtype=complex)


def find_fixed_points(ctx: DiscContext, w: Word, conjugator: Optional[MapExpr], annulus) -> list:
    """Fixed points of ``w`` in the closed annulus, found by Newton from every
    in-domain grid node.  Words acting as the identity have no isolated fixed
    points and give an empty list."""
    r_in, r_out = _check_annulus(ctx, annulus)
    maps = letter_maps(ctx, conjugator)
    seeds = _annulus_seeds(ctx, r_in, r_out)
    if is_identity_word(ctx, w, conjugator):
        return []
    first = run_word(ctx, w, seeds, maps=maps)
    z = seeds[first.in_domain]
    if not len(z):
        return []
    alive = np.ones(z.shape, dtype=bool)
    conv = np.zeros(z.shape, dtype=bool)
    for _ in range(NEWTON_STEPS):
        idx = np.nonzero(alive & ~conv)[0]
        if not len(idx):
            break
        run = run_word(ctx, w, z[idx], maps=maps)
        ok = run.in_domain
        alive[idx[~ok]] = False
        res = run.value - z[idx]
        conv[idx[ok & (np.abs(res) <= NEWTON_TOL)]] = True
        step_idx = ok & ~(np.abs(res) <= NEWTON_TOL)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = res / (run.derivative - 1.0)
        bad = ~np.isfinite(step)
        alive[idx[step_idx & bad]] = False
        mv = step_idx & ~bad
        z[idx[mv]] -= step[mv]
    roots = z[conv]
    r = np.abs(roots)
    roots = roots[(r >= r_in) & (r <= r_out)]
    roots = _dedupe(roots, 10 * NEWTON_TOL)
    records = []
    for p in roots:
        final = run_word(ctx, w, np.array([p]), maps=maps)
        if not final.in_domain[0]:
            continue
        resid = float(abs(final.value[0] - p))
        if resid > NEWTON_TOL:
            continue
        s = FD_STEP * abs(p)
        pm = run_word(ctx, w, np.array([p + s, p - s]), maps=maps)
        if not pm.in_domain.all():
            continue
        mult = complex((pm.value[0] - pm.value[1]) / (2 * s))
        records.append(FixedPointRecord(complex(p), w, mult, bool(abs(abs(mult) - 1) > EPS_H), resid))
    return records


# ------------------------------------------------------------------ orbits

@dataclass(frozen=True)
class OrbitVerdict:
    meets: bool
    witness: Optional[Word]
    closest_distance: float
    orbit_size: int
    max_blocks: int
    max_letters: int

    @property
    def text(self) -> str:
        return "meets" if self.meets else f"disjoint up to {self.max_blocks} blocks"

    def to_json(self) -> dict:
        return {
            "verdict": self.text,
            "meets": self.meets,
            "witness": None if self.witness is None else format_word(self.witness),
            "closest_distance": self.closest_distance,
            "orbit_size": self.orbit_size,
            "max_blocks": self.max_blocks,
            "max_letters": self.max_letters,
        }


def orbits_disjoint(
    ctx: DiscContext,
    z1: complex,
    z2: complex,
    max_blocks: int,
    conjugator: Optional[MapExpr] = None,
    torsion: Torsion = None,
    max_letters: Optional[int] = None,
) -> OrbitVerdict:
    """Bounded search for a word carrying ``z1`` to within MERGE_TOL of ``z2``.

    Words with infinite-order generators are bounded by ``max_letters``
    (default ``3 * max_blocks``); the answer is a bounded certificate only.
    """
    from .words import reduce_word

    for p in (z1, z2):
        if not abs(p) < ctx.radius:
            raise OutOfDomain(f"|{p}| is not inside the disc of radius {ctx.radius}")
    if max_letters is None:
        max_letters = 3 * max_blocks
    maps = letter_maps(ctx, conjugator)
    caps = {}
    for ch in "AaBb":
        n = 0 if torsion is None else (torsion[0] if ch in "Aa" else torsion[1])
        caps[ch] = max_letters if n == 0 else (n // 2 if ch.isupper() else (n - 1) // 2)
    # frontier entries: letters string, last letter, run length, blocks
    pts = np.array([complex(z1)])
    words = [""]
    last = [""]
    runs = np.zeros(1, dtype=int)
    blocks = np.zeros(1, dtype=int)
    best = abs(complex(z1) - complex(z2))
    best_word = ""
    size = 1
    for _ in range(max_letters):
        new_pts, new_words, new_last, new_runs, new_blocks = [], [], [], [], []
        for ch in "AaBb":
            sel = [i for i, l in enumerate(last) if not (l and l != ch and l.lower() == ch.lower())]
            if not sel:
                continue
            sel = np.array(sel)
            same = np.array([last[i] == ch for i in sel])
            r = np.where(same, runs[sel] + 1, 1)
            b = np.where(same, blocks[sel], blocks[sel] + 1)
            keep = (b <= max_blocks) & (r <= caps[ch])
            sel, r, b = sel[keep], r[keep], b[keep]
            if not len(sel):
                continue
            v, _, ok = maps[ch].evaluate_masked(pts[sel])
            good = ok & (np.abs(v) < ctx.radius)
            for k in np.nonzero(good)[0]:
                new_words.append(words[sel[k]] + ch)
                new_last.append(ch)
            new_pts.append(v[good])
            new_runs.append(r[good])
            new_blocks.append(b[good])
        if not new_words:
            break
        pts = np.concatenate(new_pts)
        runs = np.concatenate(new_runs)
        blocks = np.concatenate(new_blocks)
        words, last = new_words, new_last
        size += len(pts)
        d = np.abs(pts - complex(z2))
        k = int(np.argmin(d))
        if d[k] < best:
            best, best_word = float(d[k]), words[k]
    meets = best <= MERGE_TOL
    witness = reduce_word(best_word, torsion) if meets else None
    return OrbitVerdict(meets, witness, float(best), size, max_blocks, max_letters)


# ------------------------------------------------------------------ census

def holonomy_model(k: int, conjugator: MapExpr, radius: float = 0.8, grid_resolution: float = 0.02):
    """Generators of orders ``k+1`` and ``2``: ``f = rot(2 pi/(k+1))`` and the
    half-turn, to be conjugated by ``conjugator``.  Returns ``(ctx, torsion)``."""
    if k < 1:
        raise InputError("k must be at least 1")
    ctx = DiscContext(radius, Rotation(2 * math.pi / (k + 1)), Rotation(math.pi), grid_resolution)
    return ctx, (k + 1, 2)


@dataclass
class CensusReport:
    torsion: tuple
    max_blocks: int
    annulus: tuple
    records: list = field(default_factory=list)
    per_word: dict = field(default_factory=dict)
    cumulative: dict = field(default_factory=dict)
    degenerate_words: list = field(default_factory=list)
    distinct: list = field(default_factory=list)

    @property
    def distinct_count(self) -> int:
        return len(self.distinct)

    def multiplier_stats(self) -> dict:
        if not self.records:
            return {"count": 0}
        m = np.array([abs(r.multiplier) for r in self.records])
        return {
            "count": int(len(m)),
            "hyperbolic": int(sum(r.hyperbolic for r in self.records)),
            "min_abs": float(m.min()),
            "max_abs": float(m.max()),
            "median_abs": float(np.median(m)),
        }

    def to_json(self) -> dict:
        return {
            "torsion": list(self.torsion),
            "max_blocks": self.max_blocks,
            "annulus": list(self.annulus),
            "per_word": self.per_word,
            "cumulative_distinct": {str(k): v for k, v in self.cumulative.items()},
            "distinct_count": self.distinct_count,
            "degenerate_words": self.degenerate_words,
            "multiplier_stats": self.multiplier_stats(),
            "records": [r.to_row() for r in self.records],
            "note": "each fixed point is a holonomy-level witness, not a certified leaf",
        }


def census_nonsimply(ctx: DiscContext, torsion, conjugator: Optional[MapExpr], max_blocks: int, annulus) -> CensusReport:
    _check_annulus(ctx, annulus)
    maps = letter_maps(ctx, conjugator)
    k, l = torsion
    for name, m, n in (("f", maps["A"], k), ("g", maps["B"], l)):
        j = jet_of_expr(m, 12)
        if not is_identity_jet(power(j, n), 1e-10 * max(1.0, j.scale) ** n):
            raise TorsionViolated(f"{name} does not have order {n}")
    words = list(enumerate_words(tuple(torsion), max_blocks, exclude_pure_powers=True))

    def one(w):
        trivial = is_identity_word(ctx, w, conjugator)
        return w, trivial, ([] if trivial else find_fixed_points(ctx, w, conjugator, annulus))

    results = pmap(one, words)
    rep = CensusReport(tuple(torsion), max_blocks, tuple(annulus))
    by_blocks: dict = {}
    for w, trivial, recs in results:
        name = format_word(w)
        if trivial:
            rep.degenerate_words.append(name)
        rep.per_word[name] = len(recs)
        rep.records.extend(recs)
        by_blocks.setdefault(len(w.blocks), []).extend(recs)
    distinct: list = []
    for nb in range(1, max_blocks + 1):
        for r in by_blocks.get(nb, []):
            if all(abs(r.location - q) > MERGE_TOL for q in distinct):
                distinct.append(r.location)
        rep.cumulative[nb] = len(distinct)
    rep.distinct = sorted(distinct, key=lambda c: (c.real, c.imag))
    rep.records.sort(key=lambda r: (r.location.real, r.location.imag, format_word(r.word)))
    return rep
