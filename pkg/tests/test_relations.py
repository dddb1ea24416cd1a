import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from germforge.errors import InvalidOrders, InvalidWord, TorsionViolated
from germforge.germ_expr import Polynomial, parse_expr
from germforge.jets import Jet, conjugate, is_identity_jet
from germforge.relations import (
    ConjugatorPoint,
    break_relation,
    certify_free_product,
    evaluate_word_jet,
    sample_conjugator,
    verdict_for,
    word_jet_and_scale,
)
from germforge.words import enumerate_words, parse_word, reduce_word

from .conftest import random_jet_coeffs

ROT_PI = Jet.linear(-1.0, 24)
COMM = parse_word("ABab")
z = sp.symbols("z")


def sym_series(expr, order):
    s = sp.series(expr, z, 0, order + 1).removeO()
    return np.array([complex(s.coeff(z, n)) for n in range(1, order + 1)])


def test_single_letters(rng):
    f = Jet(random_jet_coeffs(rng, 8))
    g = Jet(random_jet_coeffs(rng, 8))
    h = ConjugatorPoint((1, 0.2, -0.1))
    assert np.allclose(evaluate_word_jet(parse_word("A"), f, g, h, 8).coeffs, f.coeffs)
    assert np.allclose(evaluate_word_jet(parse_word("B"), f, g, None, 8).coeffs, g.coeffs)


def test_commuting_rotations_without_conjugation():
    j = evaluate_word_jet(COMM, ROT_PI, ROT_PI, None, 8)
    assert is_identity_jet(j, 1e-15)


def test_commutator_against_symbolic_expansion():
    # h = z + z^2 + z^3 (an odd h would commute with -z and give the identity)
    order = 7
    w = sp.symbols("w")
    hinv_poly = sum(c * w ** (n + 1) for n, c in enumerate(sym_series_inverse([1, 1, 1], order)))
    hz = z + z**2 + z**3
    gt = hinv_poly.subs(w, -hz)
    gt_s = sp.expand(sp.series(gt, z, 0, order + 1).removeO())
    # W = b o a o B o A with A = -z, B = g~, and g~, -z both involutions
    step1 = -z
    step2 = gt_s.subs(z, step1)
    step3 = -step2
    step4 = gt_s.subs(z, step3)
    expected = sym_series(sp.expand(step4), order)
    got = evaluate_word_jet(COMM, Jet.linear(-1, order), Jet.linear(-1, order), ConjugatorPoint((1, 1, 1)), order)
    assert np.allclose(got.coeffs, expected, atol=1e-12)
    assert not is_identity_jet(got, 1e-6)


def sym_series_inverse(coeffs, order):
    """Series reversion by undetermined coefficients with sympy."""
    bs = sp.symbols(f"b1:{order + 1}")
    inv = sum(b * z ** (n + 1) for n, b in enumerate(bs))
    fwd = sum(sp.Rational(c) * inv ** (n + 1) for n, c in enumerate(coeffs))
    ser = sp.expand(sp.series(fwd, z, 0, order + 1).removeO())
    sol = {}
    for n in range(1, order + 1):
        eq = ser.coeff(z, n).subs(sol) - (1 if n == 1 else 0)
        sol[bs[n - 1]] = sp.solve(eq, bs[n - 1])[0]
    return [sol[b] for b in bs]


def test_hand_computed_witness():
    v = verdict_for(COMM, Jet.linear(2, 6), Jet.linear(3, 6), ConjugatorPoint((1, 0.1)), 6)
    assert v.broken and v.witness_order == 2
    assert v.witness_coefficient == pytest.approx(-0.2)


def test_break_relation_every_sample_breaks():
    for i in range(20):
        h = sample_conjugator(4, seed=11, index=i)
        assert h.coefficients[0] == 1
        assert all(abs(a) <= 0.3 ** j for j, a in enumerate(h.coefficients))
        v = verdict_for(COMM, ROT_PI.truncate(12), ROT_PI.truncate(12), h, 12)
        assert v.broken and v.witness_order <= 12
    verdict, point = break_relation(COMM, ROT_PI, ROT_PI, K=4, order=12, samples=20, seed=11)
    assert verdict.broken and point.degree == 4


def test_break_relation_errors():
    with pytest.raises(InvalidWord):
        break_relation(reduce_word("AA", torsion=(2, 3)), ROT_PI, ROT_PI, K=4, order=12)
    with pytest.raises(InvalidWord):
        break_relation(parse_word("AAA"), ROT_PI, ROT_PI, K=4, order=12)
    with pytest.raises(InvalidOrders):
        break_relation(COMM, ROT_PI, ROT_PI, K=1, order=12)
    with pytest.raises(InvalidOrders):
        break_relation(COMM, ROT_PI, ROT_PI, K=13, order=12)


def test_sampling_is_deterministic():
    assert sample_conjugator(8, 5, 3) == sample_conjugator(8, 5, 3)
    assert sample_conjugator(8, 5, 3) != sample_conjugator(8, 5, 4)


def test_certify_torsion_free_product():
    f = Jet.linear(np.exp(2j * np.pi / 3), 24)
    g = conjugate(ROT_PI, Jet([1, 1, 0.2]).pad(24))
    rep = certify_free_product(f, g, None, (3, 2), 4, order=24)
    assert rep.words_checked > 0 and rep.failures == []


def test_certify_spot_check_ab_symbolically():
    g = conjugate(ROT_PI.truncate(6), Jet([1, 1, 0.2]).pad(6))
    h = sp.Rational(1) * z + z**2 + sp.Rational(1, 5) * z**3
    hinv = sum(c * z ** (n + 1) for n, c in enumerate(sym_series_inverse([1, 1, sp.Rational(1, 5)], 6)))
    gt = sp.expand(sp.series(hinv.subs(z, -h), z, 0, 7).removeO())
    om = sp.exp(2 * sp.pi * sp.I / 3)
    expected = sym_series(sp.expand(gt.subs(z, om * z)), 6)   # AB: first A, then B
    f = Jet.linear(complex(om.evalf()), 6)
    got = evaluate_word_jet(parse_word("AB"), f, g, None, 6)
    assert np.allclose(got.coeffs, expected, atol=1e-12)


def test_certify_degenerate_inputs():
    ident = Jet.identity(12)
    rep = certify_free_product(ident, ident, None, None, 2, order=12, max_letters=3)
    assert len(rep.failures) == rep.words_checked > 0
    rep = certify_free_product(ROT_PI.truncate(12), ROT_PI.truncate(12), None, (2, 2), 2, order=12)
    assert [str(f["word"]) for f in rep.failures] == ["A^1.B^1", "B^1.A^1"]


def test_certify_precondition():
    with pytest.raises(TorsionViolated):
        certify_free_product(ROT_PI, Jet.linear(2, 24), None, (2, 2), 2)


def test_order_doubling_separates_truncation_artifacts():
    f = Polynomial((1,) + (0,) * 11 + (1,))        # z + z^13
    g = Polynomial((1,) + (0,) * 12 + (1,))        # z + z^14
    rep = certify_free_product(f, g, None, None, 2, order=12, max_letters=2)
    statuses = {str(r["word"]): r["status"] for r in rep.records}
    assert statuses["A^1.B^1"] == "resolved at order 24"
    assert rep.failures == []


WORDS6 = list(enumerate_words(None, 6, max_letters=7))
words6 = st.sampled_from(WORDS6)


@given(words6, st.integers(0, 2**32 - 1))
def test_word_jet_truncation_coherence(w, s):
    rng = np.random.default_rng(s)
    f = Jet(random_jet_coeffs(rng, 12))
    g = Jet(random_jet_coeffs(rng, 12))
    h = ConjugatorPoint(tuple(random_jet_coeffs(rng, 5, c1=1.0)))
    big = evaluate_word_jet(w, f, g, h, 12).truncate(6)
    small = evaluate_word_jet(w, f.truncate(6), g.truncate(6), h, 6)
    assert np.allclose(big.coeffs, small.coeffs, rtol=0, atol=1e-12 * max(1.0, np.abs(big.coeffs).max()))


@given(st.text(alphabet="AaBb", max_size=12), st.integers(0, 2**32 - 1))
def test_relators_give_identity_for_finite_order_generators(s, seed):
    rng = np.random.default_rng(seed)
    tor = (3, 2)
    inv_s = s[::-1].swapcase()
    raw = s + "AAA" + inv_s + "BB"          # trivial in Z/3 * Z/2
    assert reduce_word(raw, torsion=tor).is_empty
    f = conjugate(Jet.linear(np.exp(2j * np.pi / 3), 10), Jet(random_jet_coeffs(rng, 10, c1=1.0, decay=0.3)))
    g = conjugate(Jet.linear(-1.0, 10), Jet(random_jet_coeffs(rng, 10, c1=1.0, decay=0.3)))
    j, scale = word_jet_and_scale(reduce_word(raw), f, g, None, 10)
    assert is_identity_jet(j, 1e-12 * scale)
