"""
Tests for the exact polynomial kernel.
"""

from fractions import Fraction

import pytest

from jetsym.exceptions import (ExpansionLimitError, JetsymError, NegativePowerError,
                               ZeroDenominatorError)
from jetsym.kernel import (Add, DerivSym, FormalFraction, FuncSym, JetVar, Mul, Neg, Num, Poly, Pow,
                           Sym, formal_partial, fraction_equal, normalize)


def test_normalize_commutative_product(scalar_ctx):
    """Test that y1*y2 - y2*y1 normalizes to zero."""
    a, b = Sym(JetVar(1, (1,))), Sym(JetVar(1, (1, 1)))
    assert normalize(Add(Mul(a, b), Neg(Mul(b, a)))).is_zero()


def test_normalize_canonical_order(XY, scalar_ctx):
    """Test that factor order does not change the normal form."""
    X, Y = XY
    x, y = scalar_ctx.x(1), scalar_ctx.y(1)
    y1 = Sym(scalar_ctx.y(1, (1,)))
    bracket = Add(Sym(DerivSym(Y, (0, 1))), Neg(Sym(DerivSym(X, (1, 0)))))
    bracket_swapped = Add(Neg(Sym(DerivSym(X, (1, 0)))), Sym(DerivSym(Y, (0, 1))))
    first = normalize(Mul(Pow(y1, 2), bracket))
    second = normalize(Mul(bracket_swapped, y1, y1))
    assert first == second
    assert first == (Y.derivative(y) - X.derivative(x)) * Poly.from_atom(scalar_ctx.y(1, (1,)), 2)


def test_normalize_binomial(plane_ctx):
    """Test the expansion of (y1 + y2)^2."""
    y1, y2 = Poly.from_atom(plane_ctx.y(1, (1,))), Poly.from_atom(plane_ctx.y(1, (2,)))
    square = normalize(Pow(Add(Sym(plane_ctx.y(1, (1,))), Sym(plane_ctx.y(1, (2,)))), 2))
    assert square == y1 * y1 + y1 * y2 * 2 + y2 * y2
    assert len(square) == 3


def test_normalize_idempotent(scalar_ctx):
    """Test that normalizing a normal form returns it unchanged."""
    p = normalize(Add(Num(Fraction(1, 2)), Mul(Num(3), Sym(scalar_ctx.x(1)))))
    assert normalize(p) == p


def test_normalize_negative_power(scalar_ctx):
    """Test that negative exponents are rejected."""
    with pytest.raises(NegativePowerError):
        normalize(Pow(Sym(scalar_ctx.x(1)), -1))
    with pytest.raises(NegativePowerError):
        Poly.from_atom(scalar_ctx.x(1)) ** -2


def test_ring_axioms(XY, scalar_ctx):
    """Test associativity and distributivity on small expressions."""
    X, Y = XY
    a = Poly.from_atom(scalar_ctx.y(1, (1,))) * 3 - X.derivative(scalar_ctx.x(1))
    b = Y.poly() * Fraction(2, 3) + 1
    c = Poly.from_atom(scalar_ctx.y(1, (1, 1))) - Poly.from_atom(scalar_ctx.x(1)) ** 2
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == Poly()


def test_jet_index_symmetry():
    """Test that mixed partials are stored once and labels are ignored."""
    assert JetVar(1, (2, 1, 2)) == JetVar(1, (1, 2, 2))
    assert JetVar(1, (1,), 'u') == JetVar(1, (1,), 'y')
    assert str(JetVar(1, (2, 1), 'u')) == 'u[1,2]'


def test_formal_partial_in_dependency(XY, scalar_ctx):
    """Test that d/dx of Y and d/dy of X_x add the direction."""
    X, Y = XY
    x, y = scalar_ctx.x(1), scalar_ctx.y(1)
    assert formal_partial(Y.sym, x) == Poly.from_atom(DerivSym(Y, (1, 0)))
    assert formal_partial(DerivSym(X, (1, 0)), y) == Poly.from_atom(DerivSym(X, (1, 1)))


def test_formal_partial_outside_dependency(plane_ctx):
    """Test that a function not depending on the coordinate differentiates to zero."""
    x1, x2 = plane_ctx.x(1), plane_ctx.x(2)
    G = FuncSym('G', (1, 2), (x1, x2, plane_ctx.y(1)))
    assert formal_partial(G.sym, x2) == Poly.from_atom(DerivSym(G, (0, 1, 0)))
    assert formal_partial(G.sym, plane_ctx.y(1, (1,))).is_zero()


def test_formal_partial_commutes(plane_ctx):
    """Test that formal partial derivatives commute."""
    x1, y = plane_ctx.x(1), plane_ctx.y(1)
    G = FuncSym('G', (1, 1), (x1, plane_ctx.x(2), y))
    assert G.derivative(x1, y) == G.derivative(y, x1)
    assert G.derivative(x1, x1, y) == G.derivative(y, x1, x1)


def test_funcsym_rejects_bad_dependency(scalar_ctx):
    """Test that a FuncSym needs distinct, nonempty dependencies."""
    with pytest.raises(JetsymError):
        FuncSym('F', (), ())
    with pytest.raises(JetsymError):
        FuncSym('F', (), (scalar_ctx.x(1), scalar_ctx.x(1)))


def test_funcsym_equality(scalar_ctx):
    """Test that FuncSyms are equal exactly when all three fields agree."""
    x, y = scalar_ctx.x(1), scalar_ctx.y(1)
    assert FuncSym('F', (1,), (x, y)) == FuncSym('F', (1,), (x, y))
    assert FuncSym('F', (1,), (x, y)) != FuncSym('F', (2,), (x, y))
    assert FuncSym('F', (), (x, y)) != FuncSym('F', (), (y, x))


def test_division_by_constant(scalar_ctx):
    """Test exact division by rationals and rejection of polynomial divisors."""
    p = Poly.from_atom(scalar_ctx.x(1)) * 3
    assert p / 6 == Poly.from_atom(scalar_ctx.x(1)) * Fraction(1, 2)
    with pytest.raises(ZeroDenominatorError):
        p / 0
    with pytest.raises(JetsymError):
        p / Poly.from_atom(scalar_ctx.y(1))


def test_fraction_equal_scaling(XY):
    """Test that p/q equals (r*p)/(r*q)."""
    X, Y = XY
    p, q, r = X.poly() + 1, Y.poly() - X.poly(), Y.poly() * 5 + 2
    assert fraction_equal(FormalFraction(p, q), FormalFraction(r * p, r * q))
    assert not fraction_equal(FormalFraction(p, q), FormalFraction(q, p))


def test_fraction_equal_zero_numerators(XY):
    """Test that 0/q equals 0/q' for any nonzero denominators."""
    X, Y = XY
    assert FormalFraction(0, X.poly()) == FormalFraction(0, Y.poly() + 3)


def test_fraction_zero_denominator(XY):
    """Test that a zero denominator is rejected."""
    X, _ = XY
    with pytest.raises(ZeroDenominatorError):
        FormalFraction(X.poly(), 0)
    with pytest.raises(ZeroDenominatorError):
        FormalFraction(X.poly(), 1) / FormalFraction(0, 1)


def test_fraction_arithmetic(XY):
    """Test that fraction sums and products agree with the field operations."""
    X, Y = XY
    a = FormalFraction(X.poly(), Y.poly())
    b = FormalFraction(1, X.poly())
    assert a * b == FormalFraction(1, Y.poly())
    assert a + b == FormalFraction(X.poly() ** 2 + Y.poly(), X.poly() * Y.poly())
    assert (a - a).is_zero()


def test_replace_functions(XY, scalar_ctx):
    """Test that derivative symbols become derivatives of the replacement."""
    X, Y = XY
    x, y = scalar_ctx.x(1), scalar_ctx.y(1)
    expr = Y.derivative(x, y) + X.derivative(y)
    value = expr.replace_functions({Y: Poly.from_atom(x) ** 2 * Poly.from_atom(y), X: Poly.from_atom(y) * 3})
    assert value == Poly.from_atom(x) * 2 + 3


def test_term_cap(monkeypatch, scalar_ctx):
    """Test that a product larger than the configured cap raises."""
    monkeypatch.setattr('jetsym.kernel.max_terms', lambda: 100)
    atoms = [Poly.from_atom(JetVar(1, (1,) * k)) for k in range(1, 101)]
    total = Poly.sum(atoms)
    with pytest.raises(ExpansionLimitError) as info:
        total * total
    assert info.value.limit == 100
