"""
Lie's algorithm on graphed PDE systems.

Completion of a partial skeleton by cross differentiation, tangency of
prolonged fields, extraction of the determining equations, Lie brackets
with their structure constants, and the two fundamental invariants of a
scalar second order equation.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exceptions import (InconsistentClosureError, IncompleteSkeletonError, InconsistentLinearSystem,
                         NonPolynomialSystemError)
from .jets import (Derivation, JetContext, PDESystem, frobenius_defects, substitute_skeleton,
                   total_diff)
from .kernel import DerivSym, FuncSym, JetVar, ONE, Poly
from .linalg import SparseEliminator, solve_rational
from .prolongation import ProlongedField, VectorField, generic_functions, prolong_inductive

logger = logging.getLogger(__name__)


def _unresolved(system: PDESystem, known: Mapping[JetVar, Poly], p: Poly) -> List[JetVar]:
    return [a for a in p.atoms()
            if isinstance(a, JetVar) and not system.is_coordinate(a) and a not in known]


def complete_skeleton(partial: PDESystem, check: bool = True) -> PDESystem:
    """
    Add every equation obtained by cross differentiation up to order
    order + 1.

    Each pass applies D_i to the known equations and substitutes the known
    right-hand sides; a candidate is kept only once it is expressed in the
    coordinates (x, y, parametric jets). When two routes reach the same
    jet their results must agree.

    Args:
        partial: System with some graphed equations
        check: Also require the restricted total operators to commute

    Returns:
        New PDESystem whose skeleton covers every target jet

    Raises:
        InconsistentClosureError: Two closures disagree, or the operators
            do not commute
        IncompleteSkeletonError: Some jets of order <= order + 1 stay
            undetermined
    """
    ctx = partial.ctx
    top = ctx.order + 1
    known: Dict[JetVar, Poly] = {}
    pending = dict(partial.skeleton)
    # Input right-hand sides may themselves use other graphed jets.
    for _ in range(len(pending) + 1):
        progress = False
        for jet, rhs in list(pending.items()):
            rhs = rhs.substitute({a: known[a] for a in rhs.atoms() if a in known})
            if not _unresolved(partial, known, rhs):
                known[jet] = rhs
                del pending[jet]
                progress = True
            else:
                pending[jet] = rhs
        if not progress:
            break
    if pending:
        missing = sorted({a for rhs in pending.values() for a in _unresolved(partial, known, rhs)},
                         key=lambda a: a.key)
        raise IncompleteSkeletonError(missing)

    passes = 0
    changed = True
    while changed:
        changed = False
        passes += 1
        for jet, rhs in sorted(known.items(), key=lambda t: t[0].key):
            if jet.order >= top:
                continue
            for i in range(1, ctx.n + 1):
                target = jet.extend(i)
                if partial.is_coordinate(target):
                    continue
                candidate = total_diff(ctx, i, None, rhs)
                candidate = candidate.substitute(
                    {a: known[a] for a in candidate.atoms() if isinstance(a, JetVar) and a in known})
                if _unresolved(partial, known, candidate):
                    continue
                if target in known:
                    if known[target] != candidate:
                        raise InconsistentClosureError(target, known[target], candidate)
                    continue
                known[target] = candidate
                changed = True
        logger.debug("closure pass %d: %d equations", passes, len(known))

    completed = PDESystem(ctx, partial.parametric,
                          {jet: rhs for jet, rhs in known.items() if jet.order <= top},
                          dict(partial.functions))
    missing = completed.missing()
    if missing:
        raise IncompleteSkeletonError(missing)
    if check:
        defects = frobenius_defects(completed)
        if defects:
            a, b, coord, value = defects[0]
            raise InconsistentClosureError(f"[D{a},D{b}]({coord})", value, Poly())
    return completed


def _prolong_for(system: PDESystem, f: VectorField) -> ProlongedField:
    return prolong_inductive(f, max(system.max_skeleton_order(), 1))


def tangency_defects(system: PDESystem, f: VectorField) -> Dict[JetVar, Poly]:
    """
    Tangency defect of the prolonged field for every skeleton entry:
    -Y^j_a + sum X^i dF/dx^i + sum Y^l dF/dy^l + sum Y_p dF/dp over the
    parametric jets p, each prolonged coefficient reduced on the skeleton.
    """
    prolonged = _prolong_for(system, f)
    ctx = system.ctx
    reduced: Dict[JetVar, Poly] = {}

    def hat(jet: JetVar) -> Poly:
        if jet not in reduced:
            reduced[jet] = substitute_skeleton(system, prolonged.coefficient(jet.dep, jet.idx))
        return reduced[jet]

    defects: Dict[JetVar, Poly] = {}
    for jet in sorted(system.skeleton, key=lambda a: a.key):
        rhs = system.skeleton[jet]
        terms = [-hat(jet)]
        for x, X in zip(ctx.xs(), f.xcoeffs):
            if not X.is_zero():
                terms.append(X * rhs.diff(x))
        for y, Y in zip(ctx.ys(), f.ycoeffs):
            if not Y.is_zero():
                terms.append(Y * rhs.diff(y))
        for p in sorted(system.parametric, key=lambda a: a.key):
            d = rhs.diff(p)
            if not d.is_zero():
                terms.append(hat(p) * d)
        defects[jet] = Poly.sum(terms)
    return defects


def tangency_defect(system: PDESystem, f: VectorField) -> List[Poly]:
    """Defects in the order of the sorted skeleton jets; all zero iff f is a symmetry."""
    return list(tangency_defects(system, f).values())


def is_symmetry(system: PDESystem, f: VectorField) -> bool:
    return all(d.is_zero() for d in tangency_defect(system, f))


@dataclass
class DeterminingSystem:
    """
    Linear equations on the derivatives of the unknown coefficients X, Y.

    `labels[k]` names the skeleton jet and the parametric monomial
    equation k was collected from.
    """

    ctx: JetContext
    equations: List[Poly]
    labels: List[Tuple[JetVar, tuple]] = field(default_factory=list)
    unknowns: List[FuncSym] = field(default_factory=list)

    def __len__(self):
        return len(self.equations)

    def is_linear(self) -> bool:
        """Every equation has degree at most one in the unknown derivatives."""
        unknown = set(self.unknowns)
        return all(eq.degree(lambda a: isinstance(a, DerivSym) and a.func in unknown) <= 1
                   for eq in self.equations)

    def check(self, f: VectorField) -> List[Poly]:
        """Residuals of the equations at an explicit field; empty if f solves them."""
        xs, ys = generic_functions(self.ctx)
        mapping = dict(zip(xs, f.xcoeffs))
        mapping.update(zip(ys, f.ycoeffs))
        residuals = []
        for eq in self.equations:
            value = eq.replace_functions(mapping)
            if not value.is_zero():
                residuals.append(value)
        return residuals


def determining_system(system: PDESystem, expand: bool = True) -> DeterminingSystem:
    """
    Determining equations of a complete system.

    The defects of the generic field are expanded in monomials of the
    parametric jets and every coefficient becomes one equation.

    Args:
        system: Complete system
        expand: Collect by parametric monomials. With False each defect is
            returned whole, which is what systems with unknown functions of
            the parametric jets need.

    Raises:
        NonPolynomialSystemError: When expanding a system whose right-hand
            sides depend on parametric jets through unknown functions
    """
    ctx = system.ctx
    generic = VectorField.generic(ctx)
    xs, ys = generic_functions(ctx)
    defects = tangency_defects(system, generic)
    if expand:
        for rhs in system.skeleton.values():
            for atom in rhs.atoms():
                if isinstance(atom, DerivSym) and any(
                        isinstance(c, JetVar) and c in system.parametric for c in atom.func.dependency):
                    raise NonPolynomialSystemError(
                        f"{atom.func} depends on parametric jets; pass expand=False")
    equations: List[Poly] = []
    labels: List[Tuple[JetVar, tuple]] = []
    for jet, defect in defects.items():
        if not expand:
            if not defect.is_zero():
                equations.append(defect)
                labels.append((jet, ()))
            continue
        groups = defect.split(lambda a: isinstance(a, JetVar) and a in system.parametric)
        for head in sorted(groups, key=lambda h: tuple((a.key, e) for a, e in h)):
            coeff = groups[head]
            if coeff.is_zero() or any(c == coeff or c == -coeff for c in equations):
                continue
            equations.append(coeff)
            labels.append((jet, head))
    logger.debug("determining system: %d equations", len(equations))
    return DeterminingSystem(ctx, equations, labels, xs + ys)


def lie_bracket(f: VectorField, g: VectorField) -> VectorField:
    """[f, g] as first-order derivations on (x, y)."""
    return VectorField.from_derivation(f.ctx, f.as_derivation().bracket(g.as_derivation()))


def _field_vector(f: VectorField) -> Dict[tuple, Fraction]:
    vector = {}
    for k, c in enumerate(f.xcoeffs + f.ycoeffs):
        for mono, value in c.items():
            vector[k, mono] = Fraction(value)
    return vector


@dataclass
class BracketEntry:
    left: str
    right: str
    status: str  # 'ok' or 'outside_span'
    coefficients: Dict[str, Fraction] = field(default_factory=dict)
    witness: Optional[VectorField] = None


@dataclass
class BracketTable:
    """Structure constants of a list of fields, one entry per ordered pair."""

    names: List[str]
    entries: Dict[Tuple[str, str], BracketEntry] = field(default_factory=dict)

    def expansion(self, left: str, right: str) -> Dict[str, Fraction]:
        return self.entries[left, right].coefficients

    def closed(self) -> bool:
        return all(e.status == 'ok' for e in self.entries.values())

    def rows(self) -> List[List[BracketEntry]]:
        return [[self.entries[a, b] for b in self.names] for a in self.names]


def bracket_table(fields: Sequence[VectorField], names: Optional[Sequence[str]] = None) -> BracketTable:
    """
    Express every [f_a, f_b] in the basis `fields` by an exact rational solve.

    A bracket outside the span is reported with status 'outside_span'
    and the bracket itself as witness.
    """
    names = list(names) if names is not None else [f.name or f"L{k + 1}" for k, f in enumerate(fields)]
    columns = [_field_vector(f) for f in fields]
    table = BracketTable(names)
    for a, fa in zip(names, fields):
        for b, fb in zip(names, fields):
            bracket = lie_bracket(fa, fb)
            try:
                coeffs = solve_rational(columns, _field_vector(bracket))
            except InconsistentLinearSystem:
                logger.debug("[%s, %s] is outside the span", a, b)
                table.entries[a, b] = BracketEntry(a, b, 'outside_span', witness=bracket)
                continue
            table.entries[a, b] = BracketEntry(
                a, b, 'ok', {name: c for name, c in zip(names, coeffs) if c})
    return table


def jacobi_defects(fields: Sequence[VectorField]) -> List[Tuple[int, int, int]]:
    """Index triples for which [[a,b],c] + [[b,c],a] + [[c,a],b] is nonzero."""
    bad = []
    count = len(fields)
    for a in range(count):
        for b in range(a + 1, count):
            for c in range(b + 1, count):
                fa, fb, fc = fields[a], fields[b], fields[c]
                total = (lie_bracket(lie_bracket(fa, fb), fc)
                         + lie_bracket(lie_bracket(fb, fc), fa)
                         + lie_bracket(lie_bracket(fc, fa), fb))
                if not total.is_zero():
                    bad.append((a, b, c))
    return bad


def verify_prolong_bracket(f: VectorField, g: VectorField, order: int) -> bool:
    """
    [f^(k), g^(k)] == [f, g]^(k) as fields on the jet space of order k.
    """
    left = prolong_inductive(f, order).as_derivation().bracket(
        prolong_inductive(g, order).as_derivation())
    right = prolong_inductive(lie_bracket(f, g), order).as_derivation()
    return left == right


def taylor_rank(fields: Sequence[VectorField]) -> int:
    """
    Rank of the fields as vectors of scaled Taylor coefficients at the
    origin (monomial coefficient times alpha!); equals the number of fields
    exactly when they are linearly independent over the constants.
    """
    eliminator = SparseEliminator()
    rank = 0
    for f in fields:
        vector = {}
        for key, value in _field_vector(f).items():
            weight = 1
            for _, e in key[1]:
                weight *= factorial(e)
            vector[repr((key[0], tuple((a.key, e) for a, e in key[1])))] = value * weight
        if eliminator.add(vector):
            rank += 1
    return rank


def rank_at_point(fields: Sequence[VectorField], point: Mapping) -> int:
    """Rank of the field values at a point given as {coordinate: value}."""
    eliminator = SparseEliminator()
    rank = 0
    for f in fields:
        vector = {}
        for k, c in enumerate(f.xcoeffs + f.ycoeffs):
            value = c.evaluate(point)
            if not value.is_constant():
                raise InconsistentLinearSystem(f"point does not fix every coordinate of {f.name}",
                                               witness=value)
            if value.constant_term():
                vector[k] = Fraction(value.constant_term())
        if eliminator.add(vector):
            rank += 1
    return rank


def scalar_second_order_ops(rhs: Poly, ctx: JetContext) -> Derivation:
    """D = d/dx + y1 d/dy + F d/dy1 for y_xx = F(x, y, y1)."""
    return Derivation({ctx.x(1): ONE, ctx.y(1): Poly.from_atom(ctx.y(1, (1,))), ctx.y(1, (1,)): rhs})


def invariants_E1(rhs: Poly, ctx: Optional[JetContext] = None) -> Tuple[Poly, Poly]:
    """
    The two fundamental invariants of y_xx = F(x, y, y1).

    I1 = F_{y1 y1 y1 y1} and
    I2 = D(D(F_{y1y1})) - F_{y1} D(F_{y1y1}) - 4 D(F_{y y1}) + 6 F_{yy}
         - 3 F_y F_{y1y1} + 4 F_{y1} F_{y y1}.

    Args:
        rhs: F as a polynomial in x, y, y[1] and formal functions of them
        ctx: Scalar jet space (default n = m = 1)
    """
    ctx = ctx or JetContext(1, 1, 1)
    x, y, p = ctx.x(1), ctx.y(1), ctx.y(1, (1,))
    D = scalar_second_order_ops(rhs, ctx)
    f_p = rhs.diff(p)
    f_pp = f_p.diff(p)
    first = f_pp.diff(p).diff(p)
    f_y = rhs.diff(y)
    f_yp = f_y.diff(p)
    second = Poly.sum([
        D.apply(D.apply(f_pp)),
        -(f_p * D.apply(f_pp)),
        D.apply(f_yp) * -4,
        f_y.diff(y) * 6,
        f_y * f_pp * -3,
        f_p * f_yp * 4,
    ])
    return first, second


def is_flat_scalar(rhs: Poly, ctx: Optional[JetContext] = None) -> bool:
    """Both fundamental invariants vanish identically."""
    first, second = invariants_E1(rhs, ctx)
    return first.is_zero() and second.is_zero()
