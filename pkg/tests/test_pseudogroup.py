import cmath
import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from germforge.errors import InputError, ResolutionTooCoarse
from germforge.germ_expr import eval_at, parse_expr
from germforge.pseudogroup import (
    DiscContext,
    census_nonsimply,
    domain_components,
    find_fixed_points,
    holonomy_model,
    itinerary,
    orbits_disjoint,
    word_expr,
)
from germforge.words import enumerate_words, parse_word

HALF = parse_expr("poly(0.5)")
TWO = parse_expr("poly(2)")
THIRD = parse_expr("poly(0.333333333333333333)")


def ctx_of(f, g=None, R=1.0, h=0.05):
    return DiscContext(R, parse_expr(f) if isinstance(f, str) else f,
                       parse_expr(g or "rot(1)") if g is None or isinstance(g, str) else g, h)


def test_itinerary_examples():
    it = itinerary(ctx_of(HALF), parse_word("A"), 0.5)
    assert it.in_domain and it.escape_index is None
    assert np.allclose(it.points, [0.5, 0.25])
    it = itinerary(ctx_of(TWO), parse_word("A"), 0.6)
    assert not it.in_domain and it.escape_index == 1


def test_itinerary_matches_direct_composition():
    ctx = DiscContext(0.9, parse_expr("rot(2pi/3)"), parse_expr("conj(rot(pi), poly(1,1))"), 0.05)
    it = itinerary(ctx, parse_word("AB"), 0.2)
    assert it.in_domain and len(it.points) == 3
    u = cmath.exp(2j * math.pi / 3) * 0.2
    hu = u + u * u
    v = -hu
    direct = (-1 + cmath.sqrt(1 + 4 * v)) / 2          # h^{-1} by the quadratic formula
    assert abs(it.points[-1] - direct) < 1e-12


def test_conjugator_argument_substitutes_b():
    base = DiscContext(0.9, parse_expr("rot(2pi/3)"), parse_expr("rot(pi)"), 0.05)
    via_arg = itinerary(base, parse_word("AB"), 0.2, conjugator=parse_expr("poly(1,1)"))
    explicit = itinerary(
        DiscContext(0.9, parse_expr("rot(2pi/3)"), parse_expr("conj(rot(pi), poly(1,1))"), 0.05),
        parse_word("AB"), 0.2)
    assert np.allclose(via_arg.points, explicit.points, atol=1e-14)


def test_domain_components_examples():
    d = domain_components(ctx_of(HALF, h=0.05), parse_word("A"))
    assert d.n_components == 1 and d.mask[d.in_disc].all()
    d = domain_components(ctx_of(TWO, h=0.05), parse_word("A"))
    assert d.n_components == 1
    zz = d.nodes
    assert np.array_equal(d.mask, d.in_disc & (np.abs(2 * zz) < 1))
    assert d.origin_label == d.labels[d.origin_index]
    with pytest.raises(ResolutionTooCoarse):
        domain_components(ctx_of(HALF, h=0.1), parse_word("A"))


def brute_components(ctx, w, pitch):
    n = int(math.ceil(ctx.radius / pitch))
    inside = {}
    for i in range(-n, n + 1):
        for j in range(-n, n + 1):
            z = complex(i * pitch, j * pitch)
            if abs(z) < ctx.radius:
                inside[(i, j)] = itinerary(ctx, w, z).in_domain
    seen, count = set(), 0
    for key, ok in inside.items():
        if not ok or key in seen:
            continue
        count += 1
        queue = deque([key])
        seen.add(key)
        while queue:
            i, j = queue.popleft()
            for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                if inside.get(nb) and nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
    return count


def test_component_count_matches_refined_brute_force():
    ctx = DiscContext(1.0, parse_expr("poly(1, -2)"), parse_expr("poly(0.1)"), 1 / 20)
    w = parse_word("A.B^-1.A")
    fast = domain_components(ctx, w)
    # zeros of f at 0 and 1/2 are separated by the critical value 1/8 > 0.1
    assert fast.n_components >= 2
    fine = DiscContext(1.0, ctx.f, ctx.g, 1 / 32)
    assert domain_components(fine, w).n_components == fast.n_components
    assert brute_components(ctx, w, 1 / 32) == fast.n_components


def test_shrinking_radius_never_adds_points():
    f, g = parse_expr("poly(1.5, 0, 0.9)"), parse_expr("poly(0.6, 0.5)")
    w = parse_word("A^2.B^-1.A")
    big = domain_components(DiscContext(1.0, f, g, 1 / 32), w)
    small = domain_components(DiscContext(0.7, f, g, 1 / 32), w)
    lookup = {complex(z): m for z, m in zip(big.nodes[big.in_disc], big.mask[big.in_disc])}
    for z, m in zip(small.nodes[small.in_disc], small.mask[small.in_disc]):
        assert not m or lookup[complex(z)]


def test_fixed_point_examples():
    assert find_fixed_points(ctx_of(HALF), parse_word("A"), None, (0.1, 0.8)) == []
    assert find_fixed_points(ctx_of("rot(pi)"), parse_word("A"), None, (0.1, 0.8)) == []
    with pytest.raises(InputError):
        find_fixed_points(ctx_of(HALF), parse_word("A"), None, (0.5, 0.5))


def test_parabolic_mix_has_hyperbolic_fixed_point():
    ctx = DiscContext(0.45, parse_expr("poly(1,1)"), parse_expr("poly(0.5)"), 0.01)
    w = parse_word("A^4.B")
    recs = find_fixed_points(ctx, w, None, (0.1, 0.4))
    assert recs and any(r.hyperbolic for r in recs)
    # independent locator: dense grid minimum of |W(z) - z| with scalar arithmetic
    def W(z):
        for _ in range(4):
            z = z + z * z
        return 0.5 * z
    xs = np.linspace(-0.4, 0.4, 801)
    zz = xs[None, :] + 1j * xs[:, None]
    keep = (np.abs(zz) > 0.1) & (np.abs(zz) < 0.4)
    res = np.where(keep, np.abs(W(zz) - zz), np.inf)
    best = zz.flat[np.argmin(res)]
    assert min(abs(r.location - best) for r in recs) < 2e-3
    for r in recs:
        assert r.residual <= 1e-11
        assert r.hyperbolic == (abs(abs(r.multiplier) - 1) > 1e-4)


def test_orbit_examples():
    ctx = DiscContext(1.0, HALF, THIRD, 0.05)
    assert orbits_disjoint(ctx, 0.3, 0.3, 2).meets
    v = orbits_disjoint(ctx, 0.5, 0.7, 3)
    assert not v.meets and v.max_blocks == 3
    assert orbits_disjoint(DiscContext(1.0, HALF, parse_expr("rot(1)"), 0.05), 0.5, 0.25, 1).meets


def test_orbit_bruteforce_agrees():
    ctx = DiscContext(1.0, HALF, THIRD, 0.05)
    v = orbits_disjoint(ctx, 0.5, 0.7, 3)
    factors = {"A": 0.5, "a": 2.0, "B": 1 / 3, "b": 3.0}
    points = []

    def walk(z, last, blocks, letters):
        points.append(z)
        if letters == v.max_letters:
            return
        for ch, m in factors.items():
            if last and ch != last and ch.lower() == last.lower():
                continue
            nb = blocks + (ch.lower() != (last or " ").lower())
            w = z * m
            if nb <= 3 and abs(w) < 1:
                walk(w, ch, nb, letters + 1)

    walk(0.5, None, 0, 0)
    assert v.orbit_size == len(points)
    assert min(abs(p - 0.7) for p in points) == pytest.approx(v.closest_distance)


def test_census_degenerate_and_precondition():
    ctx, tor = holonomy_model(1, parse_expr("poly(1)"), 0.8, 0.05)
    rep = census_nonsimply(ctx, tor, parse_expr("poly(1)"), 3, (0.1, 0.6))
    assert rep.distinct_count == 0
    with pytest.raises(InputError):
        census_nonsimply(ctx, tor, parse_expr("poly(1)"), 3, (0.3, 0.3))


CASES = [(w, z) for w in list(enumerate_words((3, 2), 4))[:40] for z in (0.05 + 0.1j, -0.2 + 0.07j, 0.3, -0.1j, 0.25 - 0.25j)]


def test_zero_fixed_and_endpoints_match_composition():
    ctx, tor = holonomy_model(2, parse_expr("poly(1, 0.4, 0.1)"), 0.8, 0.05)
    conj = parse_expr("poly(1, 0.4, 0.1)")
    checked = 0
    for w, z in CASES[:200]:
        it0 = itinerary(ctx, w, 0j, conjugator=conj)
        assert it0.in_domain and all(p == 0 for p in it0.points)
        it = itinerary(ctx, w, z, conjugator=conj)
        if it.in_domain:
            direct = eval_at(word_expr(ctx, w, conj), z, check_domain=False)
            assert abs(it.points[-1] - direct) <= 1e-10
            checked += 1
    assert checked >= 100


GENERIC = "poly(1, 0.29-0.6i, -0.24+1.07i, 0.36+0.2i)"


def test_census_generic_conjugator_matches_dense_locator():
    conj = parse_expr(GENERIC)
    ctx, tor = holonomy_model(2, conj, 0.8, 0.02)
    rep = census_nonsimply(ctx, tor, conj, 4, (0.1, 0.6))
    assert rep.distinct_count > 0
    counts = [rep.cumulative[b] for b in range(1, 5)]
    assert counts == sorted(counts)
    # every record sits at a local minimum of |W(z) - z| found on a fine grid
    for r in rep.records[:6]:
        xs = r.location + 0.004 * (np.arange(-20, 21)[None, :] + 1j * np.arange(-20, 21)[:, None]) / 20
        W = word_expr(ctx, r.word, conj)
        vals = np.abs(eval_at(W, xs.ravel(), check_domain=False) - xs.ravel())
        best = xs.ravel()[np.argmin(vals)]
        assert abs(best - r.location) <= 0.0003
        assert abs(abs(r.multiplier) - 1) > 1e-4 or not r.hyperbolic


def test_words_acting_as_identity_are_skipped():
    # an odd conjugator commutes with the half turn, so A.B.A^-1.B is trivial
    conj = parse_expr("poly(1, 0, 1)")
    ctx, tor = holonomy_model(2, conj, 0.8, 0.05)
    assert find_fixed_points(ctx, parse_word("A.B.a.B"), conj, (0.1, 0.6)) == []
    rep = census_nonsimply(ctx, tor, conj, 4, (0.1, 0.6))
    assert "A^1.B^1.A^-1.B^1" in rep.degenerate_words
