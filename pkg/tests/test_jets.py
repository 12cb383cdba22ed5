"""
Tests for jet spaces and total differentiation.
"""

import pytest

from jetsym.exceptions import IncompleteSkeletonError, JetOrderError, JetsymError
from jetsym.jets import (Derivation, JetContext, PDESystem, frobenius_defects, jet_dimension,
                         restricted_total_ops, substitute_skeleton, total_diff)
from jetsym.kernel import FuncSym, Poly
from jetsym.parser import parse_system, read_text


def test_jet_dimension_examples():
    """Test the coordinate count n + m*C(n+order, order)."""
    assert jet_dimension(JetContext(1, 1, 2)) == 4
    assert jet_dimension(JetContext(2, 1, 1)) == 5
    assert jet_dimension(JetContext(3, 2, 3)) == 43


def test_coordinates_match_dimension():
    """Test that the enumerated coordinates agree with the count."""
    for ctx in (JetContext(1, 1, 2), JetContext(2, 1, 1), JetContext(3, 2, 3)):
        assert len(ctx.coordinates()) == jet_dimension(ctx)


def test_context_names():
    """Test the default coordinate names and validation."""
    assert JetContext(1, 1).xnames == ('x',)
    assert JetContext(2, 3).ynames == ('y1', 'y2', 'y3')
    with pytest.raises(JetsymError):
        JetContext(0, 1)
    with pytest.raises(JetsymError):
        JetContext(1, 2, 1, ('x',), ('u', 'u'))
    with pytest.raises(JetOrderError):
        JetContext(2, 1).y(1, (3,))


def test_total_diff_generic_coefficient(XY, scalar_ctx):
    """Test that D(Y) = Y_x + y1*Y_y."""
    _, Y = XY
    x, y = scalar_ctx.x(1), scalar_ctx.y(1)
    expected = Y.derivative(x) + Poly.from_atom(scalar_ctx.y(1, (1,))) * Y.derivative(y)
    assert total_diff(scalar_ctx, 1, 1, Y.poly()) == expected


def test_total_diff_constant(scalar_ctx):
    """Test that constants differentiate to zero."""
    assert total_diff(scalar_ctx, 1, 1, Poly.constant(7)).is_zero()


def test_total_diff_leibniz(XY, scalar_ctx):
    """Test the product rule for D."""
    X, Y = XY
    a = X.poly() * Poly.from_atom(scalar_ctx.y(1, (1,)))
    b = Y.poly() + Poly.from_atom(scalar_ctx.x(1))
    lhs = total_diff(scalar_ctx, 1, 2, a * b)
    rhs = total_diff(scalar_ctx, 1, 2, a) * b + a * total_diff(scalar_ctx, 1, 2, b)
    assert lhs == rhs


def test_total_operators_commute():
    """Test that D1 D1 D2 D2 and D2 D2 D1 D1 agree on y."""
    ctx = JetContext(2, 1, 4)
    y = Poly.from_atom(ctx.y(1))
    first, second = y, y
    for i in (2, 2, 1, 1):
        first = total_diff(ctx, i, None, first)
    for i in (1, 1, 2, 2):
        second = total_diff(ctx, i, None, second)
    assert first == second == Poly.from_atom(ctx.y(1, (1, 1, 2, 2)))


def test_total_diff_truncation(scalar_ctx):
    """Test that a truncated operator refuses jets at its order."""
    with pytest.raises(JetOrderError):
        total_diff(scalar_ctx, 1, 1, Poly.from_atom(scalar_ctx.y(1, (1,))))


def test_derivation_bracket(scalar_ctx):
    """Test [x d/dx, d/dx] = -d/dx."""
    x = scalar_ctx.x(1)
    euler = Derivation({x: Poly.from_atom(x)})
    shift = Derivation({x: Poly.constant(1)})
    assert euler.bracket(shift) == shift.scale(-1)
    assert shift.bracket(shift).is_zero()


def test_derivation_coerces_components(scalar_ctx):
    """Test that plain numbers and atoms become polynomials and zeros are dropped."""
    x, y, y1 = scalar_ctx.x(1), scalar_ctx.y(1), scalar_ctx.y(1, (1,))
    D = Derivation({x: 2, y: 0, y1: y1, scalar_ctx.y(1, (1, 1)): Poly()})
    assert set(D.components) == {x, y1}
    assert D[x] == Poly.constant(2)
    assert D[y1] == Poly.from_atom(y1)
    assert D[y].is_zero()


def test_restricted_ops_flat(fixture_path):
    """Test the restricted operator of y'' = 0."""
    system = parse_system(read_text(fixture_path('flat.sys')))
    (D,) = restricted_total_ops(system)
    ctx = system.ctx
    assert D[ctx.x(1)] == Poly.constant(1)
    assert D[ctx.y(1)] == Poly.from_atom(ctx.y(1, (1,)))
    assert D[ctx.y(1, (1,))].is_zero()


def test_restricted_ops_missing_entry():
    """Test that a missing skeleton entry is named."""
    ctx = JetContext(2, 1, 1)
    system = PDESystem(ctx, frozenset(), {ctx.y(1, (1,)): Poly()})
    with pytest.raises(IncompleteSkeletonError) as info:
        restricted_total_ops(system)
    assert ctx.y(1, (2,)) in info.value.missing


def test_frobenius_defects():
    """Test a commuting and a non-commuting pair of restricted operators."""
    ctx = JetContext(2, 1, 1)
    y, x2 = Poly.from_atom(ctx.y(1)), Poly.from_atom(ctx.x(2))
    consistent = PDESystem(ctx, frozenset(), {ctx.y(1, (1,)): y, ctx.y(1, (2,)): y})
    assert frobenius_defects(consistent) == []
    broken = PDESystem(ctx, frozenset(), {ctx.y(1, (1,)): x2, ctx.y(1, (2,)): Poly()})
    defects = frobenius_defects(broken)
    assert defects == [(1, 2, ctx.y(1), Poly.constant(-1))]


def test_substitute_skeleton(fixture_path):
    """Test replacement of non-parametric jets."""
    system = parse_system(read_text(fixture_path('e5.sys')))
    ctx = system.ctx
    p = Poly.from_atom(ctx.y(1, (2,))) * 4
    assert substitute_skeleton(system, p) == Poly.from_atom(ctx.y(1, (1,))) ** 2
    with pytest.raises(IncompleteSkeletonError):
        substitute_skeleton(system, Poly.from_atom(ctx.y(1, (1, 2))))


def test_parametric_must_be_jets():
    """Test that y itself cannot be listed as parametric."""
    ctx = JetContext(1, 1, 1)
    with pytest.raises(JetsymError):
        PDESystem(ctx, frozenset({ctx.y(1)}))


def test_function_dependency_on_jets(scalar_ctx):
    """Test that D differentiates functions of y1 through the chain rule."""
    p = scalar_ctx.y(1, (1,))
    F = FuncSym('F', (), (scalar_ctx.x(1), scalar_ctx.y(1), p))
    value = total_diff(scalar_ctx, 1, 2, F.poly())
    assert value == (F.derivative(scalar_ctx.x(1))
                     + Poly.from_atom(p) * F.derivative(scalar_ctx.y(1))
                     + Poly.from_atom(scalar_ctx.y(1, (1, 1))) * F.derivative(p))
