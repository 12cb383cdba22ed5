"""
Tests for the Faa di Bruno formulas.
"""

from itertools import combinations_with_replacement

import pytest

from jetsym.combinatorics import set_partitions
from jetsym.exceptions import JetsymError
from jetsym.faa_di_bruno import (CompositionSpec, bell_check, bell_sum, composition_functions, fdb_closed,
                                 fdb_derivations, fdb_oracle, identity_outer, scalar_coefficients,
                                 scalar_monomial)
from jetsym.kernel import DerivSym, Poly
from jetsym.reference import composition_template, reference_fdb, reference_fdb_coefficients, template_orders


def test_scalar_low_orders():
    """Test h1 = f1 g1 and h2 = f2 g1^2 + f1 g2."""
    assert fdb_closed(CompositionSpec.scalar(1)) == scalar_monomial(1, [1])
    assert fdb_closed(CompositionSpec.scalar(2)) == scalar_monomial(2, [1, 1]) + scalar_monomial(1, [2])


def test_mixed_second_derivative():
    """Test h_{12} for two variables and one inner map."""
    f, (g,) = composition_functions(2, 1)
    expected = (Poly.from_atom(DerivSym(f, (2,))) * Poly.from_atom(DerivSym(g, (1, 0)))
                * Poly.from_atom(DerivSym(g, (0, 1)))
                + Poly.from_atom(DerivSym(f, (1,))) * Poly.from_atom(DerivSym(g, (1, 1))))
    assert fdb_closed(CompositionSpec(2, 1, (2, 1))) == expected


def test_closed_matches_oracle_small():
    """Test closed against the chain rule for n, m <= 2 up to order 4."""
    for n in (1, 2):
        for m in (1, 2):
            for order in range(1, 5):
                spec = CompositionSpec(n, m, (n,) * order)
                assert fdb_closed(spec) == fdb_oracle(spec)
                assert fdb_closed(spec) == fdb_derivations(spec)


@pytest.mark.slow
def test_closed_matches_oracle_full_grid():
    """Test closed against the chain rule for n, m <= 3 up to order 5."""
    from jetsym.utils import multi_indices
    for n in (1, 2, 3):
        for m in (1, 2, 3):
            for order in range(1, 6):
                for idx in multi_indices(n, order):
                    spec = CompositionSpec(n, m, idx)
                    assert fdb_closed(spec) == fdb_oracle(spec), (n, m, idx)


def test_scalar_oracle_to_seven():
    """Test the scalar h_k against the chain rule up to k = 7."""
    for order in range(1, 8):
        spec = CompositionSpec.scalar(order)
        assert fdb_closed(spec) == fdb_oracle(spec)


def test_reference_tables():
    """Test h_1..h_6 against the stored coefficient tables."""
    for order in range(1, 7):
        assert fdb_closed(CompositionSpec.scalar(order)) == reference_fdb(order)
        assert scalar_coefficients(order) == reference_fdb_coefficients(order)


def test_fifth_order_coefficients():
    """Test the two coefficients of h_5 that are easy to misprint."""
    h5 = fdb_closed(CompositionSpec.scalar(5))
    (mono_a, c_a), = scalar_monomial(3, [1, 2, 2]).items()
    (mono_b, c_b), = scalar_monomial(3, [1, 1, 3]).items()
    assert h5.coefficient(mono_a) == 15
    assert h5.coefficient(mono_b) == 10


def test_bell_numbers():
    """Test that h_k at ones is the k-th Bell number."""
    for order in range(1, 8):
        assert bell_check(order)


def test_bell_check_counts_set_partitions():
    """Test h_k at ones against an enumeration of the set partitions of 1..k."""
    expected = [1, 2, 5, 15, 52, 203]
    for order, count in enumerate(expected, start=1):
        h = fdb_closed(CompositionSpec.scalar(order))
        assert bell_sum(h) == count == len(list(set_partitions(range(order))))
    assert bell_sum(Poly()) == 0


def test_identity_outer():
    """Test that f = y^1 leaves the derivative of g^1."""
    _, gs = composition_functions(2, 2)
    h = fdb_closed(CompositionSpec(2, 2, (1, 2)))
    assert identity_outer(h, m=2) == Poly.from_atom(DerivSym(gs[0], (1, 1)))


def test_spec_validation():
    """Test malformed composition specs."""
    with pytest.raises(JetsymError):
        CompositionSpec(0, 1, (1,))
    with pytest.raises(JetsymError):
        CompositionSpec(1, 1, ())
    with pytest.raises(JetsymError):
        CompositionSpec(2, 1, (3,))
    assert CompositionSpec(2, 1, (2, 1)).target == (1, 2)


def _composition_agrees(name, n, m, order):
    for idx in combinations_with_replacement(range(1, n + 1), order):
        assert composition_template(name, n, m, idx) == fdb_closed(CompositionSpec(n, m, idx)), idx


def test_composition_templates():
    """Test the written h_{i1..ik} for one outer variable, one inner variable and in general."""
    for order in template_orders('composition_templates', 'one_outer_variable'):
        for n in (1, 2, 3):
            _composition_agrees('one_outer_variable', n, 1, order)
    for order in template_orders('composition_templates', 'one_inner_variable'):
        for m in (1, 2):
            _composition_agrees('one_inner_variable', 1, m, order)
    for order in template_orders('composition_templates', 'general'):
        _composition_agrees('general', 2, 2, order)


def test_composition_template_restrictions():
    """Test that families written for one variable refuse other shapes."""
    with pytest.raises(JetsymError):
        composition_template('one_outer_variable', 2, 2, (1, 2))
    with pytest.raises(JetsymError):
        composition_template('one_inner_variable', 2, 1, (1, 2))
    with pytest.raises(JetsymError):
        composition_template('general', 2, 2, (1, 1, 1, 1, 2))
