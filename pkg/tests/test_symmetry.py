"""
Tests for completion, tangency, determining equations and brackets.
"""

from fractions import Fraction

import pytest

from jetsym.exceptions import IncompleteSkeletonError, InconsistentClosureError, NonPolynomialSystemError
from jetsym.jets import JetContext, PDESystem
from jetsym.kernel import Poly
from jetsym.models import model_fields, model_system
from jetsym.parser import Scope, parse_expression, parse_fields, parse_system, read_text
from jetsym.prolongation import VectorField
from jetsym.reference import bracket_mismatches
from jetsym.symmetry import (bracket_table, complete_skeleton, determining_system, invariants_E1,
                             is_flat_scalar, is_symmetry, jacobi_defects, lie_bracket, rank_at_point,
                             tangency_defect, taylor_rank, verify_prolong_bracket)


def _e5(fixture_path):
    system = complete_skeleton(parse_system(read_text(fixture_path('e5.sys'))))
    fields = parse_fields(read_text(fixture_path('e5.vf')), ctx=system.ctx)
    return system, fields


def test_complete_e4():
    """Test that cross differentiation adds v[1,1] = 2 u[1]."""
    system = model_system('e4')
    ctx = system.ctx
    assert system.skeleton[ctx.y(2, (1, 1))] == Poly.from_atom(ctx.y(1, (1,))) * 2
    assert system.missing() == []


def test_complete_e5(fixture_path):
    """Test the closure of y_2 = y_1^2/4, y_111 = 0."""
    system, _ = _e5(fixture_path)
    ctx = system.ctx
    y1, y11 = Poly.from_atom(ctx.y(1, (1,))), Poly.from_atom(ctx.y(1, (1, 1)))
    assert system.skeleton[ctx.y(1, (1, 2))] == y1 * y11 * Fraction(1, 2)
    assert system.skeleton[ctx.y(1, (2, 2))] == y1 * y1 * y11 * Fraction(1, 4)
    assert system.skeleton[ctx.y(1, (1, 1, 2))] == y11 * y11 * Fraction(1, 2)


def test_complete_inconsistent():
    """Test that conflicting cross derivatives are reported."""
    ctx = JetContext(2, 1, 1)
    system = PDESystem(ctx, frozenset(), {ctx.y(1, (1,)): Poly.from_atom(ctx.y(1)),
                                          ctx.y(1, (2,)): Poly.from_atom(ctx.x(1))})
    with pytest.raises(InconsistentClosureError) as info:
        complete_skeleton(system)
    assert info.value.jet == ctx.y(1, (1, 2))


def test_complete_underdetermined():
    """Test that jets left without an equation are named."""
    ctx = JetContext(1, 1, 1)
    system = PDESystem(ctx, frozenset(), {ctx.y(1, (1, 1)): Poly()})
    with pytest.raises(IncompleteSkeletonError) as info:
        complete_skeleton(system)
    assert ctx.y(1, (1,)) in info.value.missing


def test_flat_generators_tangent():
    """Test that the eight fields of y'' = 0 are symmetries."""
    system = model_system('flat')
    fields = model_fields('flat')
    assert len(fields) == 8
    assert all(is_symmetry(system, f) for f in fields)


def test_non_symmetry_defect():
    """Test that y^2 d/dy leaves a nonzero defect on y'' = 0."""
    system = model_system('flat')
    ctx = system.ctx
    f = VectorField(ctx, (Poly(),), (Poly.from_atom(ctx.y(1), 2),))
    (defect,) = tangency_defect(system, f)
    assert defect == Poly.from_atom(ctx.y(1, (1,)), 2) * -2


def test_e4_generators_tangent():
    """Test the five generators of the e4 model."""
    system = model_system('e4')
    assert all(is_symmetry(system, f) for f in model_fields('e4'))


def test_e5_generators_tangent(fixture_path):
    """Test the ten generators read from files."""
    system, fields = _e5(fixture_path)
    assert len(fields) == 10
    assert all(is_symmetry(system, f) for f in fields)


def test_determining_flat():
    """Test the four linear equations of y'' = 0 and their solutions."""
    ds = determining_system(model_system('flat'))
    assert len(ds) == 4
    assert ds.is_linear()
    for f in model_fields('flat'):
        assert ds.check(f) == []
    ctx = ds.ctx
    bad = VectorField(ctx, (Poly(),), (Poly.from_atom(ctx.y(1), 2),))
    assert ds.check(bad)


GENERIC_SCALAR_IDENTITY = (
    "-Y_{x^2} + (X_{x^2} - 2*Y_{x,y})*y[1] + (2*X_{x,y} - Y_{y^2})*y[1]^2 + X_{y^2}*y[1]^3"
    " + (2*X_{x} - Y_{y})*F + 3*X_{y}*y[1]*F"
    " + X*F_{x} + Y*F_{y} + Y_{x}*F_{y[1]} + (Y_{y} - X_{x})*y[1]*F_{y[1]} - X_{y}*y[1]^2*F_{y[1]}"
)


def test_determining_generic_scalar():
    """Test that y'' = F gives one identity, and refuses monomial collection."""
    system = model_system('generic_scalar')
    ds = determining_system(system, expand=False)
    assert len(ds) == 1
    assert ds.is_linear()
    scope = Scope.for_generic_field(system.ctx)
    scope.declare(system.functions['F'])
    assert ds.equations[0] == parse_expression(GENERIC_SCALAR_IDENTITY, scope)
    with pytest.raises(NonPolynomialSystemError):
        determining_system(system)


def test_lie_bracket():
    """Test [d/dx, x d/dx] = d/dx."""
    ctx = JetContext(1, 1, 1)
    shift = VectorField(ctx, (Poly.constant(1),), (Poly(),))
    euler = VectorField(ctx, (Poly.from_atom(ctx.x(1)),), (Poly(),))
    assert lie_bracket(shift, euler) == shift
    assert lie_bracket(shift, shift).is_zero()


def test_bracket_tables_match_reference():
    """Test the commutator tables of the flat and e4 models entry for entry."""
    for model in ('flat', 'e4'):
        fields = model_fields(model)
        table = bracket_table(fields, [f.name for f in fields])
        assert table.closed()
        assert bracket_mismatches(table, model) == []


def test_bracket_table_outside_span():
    """Test that a non-closed family is reported with a witness."""
    ctx = JetContext(1, 1, 1)
    x = Poly.from_atom(ctx.x(1))
    fields = [VectorField(ctx, (Poly.constant(1),), (Poly(),), 'A'),
              VectorField(ctx, (x * x,), (Poly(),), 'B')]
    table = bracket_table(fields)
    entry = table.entries['A', 'B']
    assert entry.status == 'outside_span'
    assert entry.witness == VectorField(ctx, (x * 2,), (Poly(),))
    assert not table.closed()


def test_e5_algebra(fixture_path):
    """Test closure, Jacobi identity and independence of the e5 generators."""
    _, fields = _e5(fixture_path)
    table = bracket_table(fields)
    assert table.closed()
    assert table.expansion('L1', 'L2') == {}
    assert jacobi_defects(fields) == []
    assert taylor_rank(fields) == 10


def test_prolongation_commutes_with_bracket():
    """Test [f, g]^(3) = [f^(3), g^(3)] on flat generators."""
    fields = model_fields('flat')
    assert verify_prolong_bracket(fields[6], fields[7], 3)
    assert verify_prolong_bracket(fields[2], fields[5], 3)


def test_rank_computations(fixture_path):
    """Test Taylor rank of dependent fields and the rank at the origin."""
    system, fields = _e5(fixture_path)
    ctx = system.ctx
    assert taylor_rank(fields + [fields[0].scale(3)]) == 10
    origin = {ctx.x(1): 0, ctx.x(2): 0, ctx.y(1): 0}
    assert rank_at_point(fields, origin) == 3


def test_scalar_invariants(fixture_path):
    """Test the two invariants on flat and non-flat equations."""
    for name in ('flat.sys', 'cubic_flat.sys'):
        system = parse_system(read_text(fixture_path(name)))
        assert is_flat_scalar(system.skeleton[system.ctx.y(1, (1, 1))], system.ctx)
    system = parse_system(read_text(fixture_path('nonflat.sys')))
    first, second = invariants_E1(system.skeleton[system.ctx.y(1, (1, 1))], system.ctx)
    assert first.is_zero()
    assert second == Poly.constant(12)
