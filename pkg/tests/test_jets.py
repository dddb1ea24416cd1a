from math import comb

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from germforge.errors import NotInvertible, OrderMismatch
from germforge.jets import (
    Jet,
    compose,
    conjugate,
    invert,
    is_identity_jet,
    power,
    sup_norm_on_disc,
)

from .conftest import random_jet_coeffs

z = sp.symbols("z")


def sympy_jet(expr, order):
    poly = sp.series(expr, z, 0, order + 1).removeO()
    return np.array([complex(poly.coeff(z, n)) for n in range(1, order + 1)])


def signed_catalan(n):
    # coefficient of z^n in the inverse of z + z^2, from Lagrange inversion
    m = n - 1
    return (-1) ** m * comb(2 * m, m) // (m + 1)


def test_compose_matches_symbolic_expansion():
    f = Jet([1, 1, 0, 0])
    expected = sympy_jet((z + z**2) + (z + z**2) ** 2, 4)
    assert np.allclose(compose(f, f).coeffs, expected, atol=0)
    assert np.allclose(expected, [1, 2, 2, 1])


def test_invert_matches_lagrange_inversion():
    f = Jet([1, 1] + [0] * 6)
    g = invert(f)
    expected = [signed_catalan(n) for n in range(1, 9)]
    assert expected == [1, -1, 2, -5, 14, -42, 132, -429]
    assert np.max(np.abs(g.coeffs - expected) / np.abs(expected)) <= 1e-12


def test_invert_linear_and_identity():
    assert np.allclose(invert(Jet.linear(4.0, 5)).coeffs, [0.25, 0, 0, 0, 0])
    assert is_identity_jet(invert(Jet.identity(7)), 0.0)


def test_invert_rejects_zero_linear_term():
    with pytest.raises(NotInvertible):
        invert(Jet([0, 1, 0]))


def test_compose_order_mismatch():
    with pytest.raises(OrderMismatch):
        compose(Jet.identity(3), Jet.identity(4))


def test_rotation_of_order_three():
    r = Jet.linear(np.exp(2j * np.pi / 3), 9)
    assert is_identity_jet(compose(r, compose(r, r)), 1e-14)
    assert is_identity_jet(power(Jet.linear(np.exp(2j * np.pi / 5), 6), 5), 1e-14)


def test_conjugate_second_coefficient_by_hand():
    # h = z + z^2, h^{-1} = z - z^2 + ..., h^{-1}(2 h(z)) = 2z + 2z^2 - 4z^2 + O(z^3)
    got = conjugate(Jet([2, 0]), Jet([1, 1]))
    hinv_expr = (sp.sqrt(1 + 4 * z) - 1) / 2   # branch through 0
    expected = sympy_jet(hinv_expr.subs(z, 2 * (z + z**2)), 2)
    assert np.allclose(got.coeffs, expected)
    assert np.allclose(got.coeffs, [2, -2])


def test_conjugated_involution_squares_to_identity(rng):
    h = Jet(random_jet_coeffs(rng, 10))
    g = conjugate(Jet.linear(-1.0, 10), h)
    assert is_identity_jet(compose(g, g), 1e-10)


def test_power_conventions(rng):
    f = Jet(random_jet_coeffs(rng, 8))
    assert is_identity_jet(power(f, 0), 0.0)
    assert np.allclose(power(f, 2).coeffs, compose(f, f).coeffs)
    assert np.allclose(power(f, -3).coeffs, invert(power(f, 3)).coeffs)


def test_is_identity_tolerance():
    assert is_identity_jet(Jet([1, 1e-15, 0]), 1e-12)
    assert not is_identity_jet(Jet([1, 1e-11, 0]), 1e-12)


def test_sup_norm_examples():
    assert sup_norm_on_disc([1], 2.0) == pytest.approx(2.0)
    assert sup_norm_on_disc([0, 1], 3.0) == pytest.approx(9.0)
    assert sup_norm_on_disc([1, 1], 1.0) == pytest.approx(2.0)


def test_truncation_rules():
    f = Jet([1, 2, 3, 4])
    assert f.truncate(2) == Jet([1, 2])
    with pytest.raises(OrderMismatch):
        f.truncate(5)


coeff_lists = st.integers(min_value=0, max_value=2**32 - 1).map(
    lambda s: random_jet_coeffs(np.random.default_rng(s), 12)
)


@given(coeff_lists, coeff_lists, coeff_lists)
def test_associativity(a, b, c):
    f, g, h = Jet(a), Jet(b), Jet(c)
    lhs = compose(compose(f, g), h).coeffs
    rhs = compose(f, compose(g, h)).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))


@given(coeff_lists)
def test_inverse_law(a):
    f = Jet(a)
    g = invert(f)
    scale = max(1.0, np.max(np.abs(g.coeffs)))
    assert is_identity_jet(compose(f, g), 1e-10 * scale)
    assert is_identity_jet(compose(g, f), 1e-10 * scale)


@given(coeff_lists, coeff_lists, st.integers(min_value=2, max_value=11))
def test_truncation_coherence(a, b, m):
    f, g = Jet(a), Jet(b)
    full = compose(f, invert(g)).truncate(m)
    direct = compose(f.truncate(m), invert(g.truncate(m)))
    assert np.allclose(full.coeffs, direct.coeffs, rtol=0, atol=1e-12 * max(1, np.abs(full.coeffs).max()))


@given(coeff_lists, st.integers(min_value=2, max_value=6))
def test_finite_order_is_conjugation_invariant(a, k):
    h = Jet(a)
    rot = Jet.linear(np.exp(2j * np.pi / k), 12)
    assert is_identity_jet(power(conjugate(rot, h), k), 1e-8 * max(1, np.abs(invert(h).coeffs).max()))
    not_finite = Jet.linear(1.3, 12)
    assert not is_identity_jet(power(conjugate(not_finite, h), k), 1e-8)
