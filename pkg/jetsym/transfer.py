"""
Transfer of derivatives between y_xx = F(x, y, y_x) and its solutions
y = Pi(x, a, b).

The parameters are recovered as functions a = A(x, y, y1), b = B(x, y, y1)
of the identities y = Pi(x, A, B), y1 = Pi_x(x, A, B); differentiating
them and solving by Cramer's rule gives the first derivatives of A and B,
and then those of F = Pi_xx(x, A, B).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict

from .jets import JetContext
from .kernel import BaseVar, FormalFraction, FuncSym, Poly, fraction_equal
from .linalg import cramer

logger = logging.getLogger(__name__)


@dataclass
class SolutionManifold:
    """Pi(x, a, b) together with the parameter functions A, B of (x, y, y1)."""

    ctx: JetContext = field(default_factory=lambda: JetContext(1, 1, 1))
    a: BaseVar = field(default_factory=lambda: BaseVar('a'))
    b: BaseVar = field(default_factory=lambda: BaseVar('b'))

    def __post_init__(self):
        x = self.ctx.x(1)
        self.pi = FuncSym('Pi', (), (x, self.a, self.b))
        jet_coords = (x, self.ctx.y(1), self.ctx.y(1, (1,)))
        self.A = FuncSym('A', (), jet_coords)
        self.B = FuncSym('B', (), jet_coords)

    @property
    def x(self) -> BaseVar:
        return self.ctx.x(1)

    def d(self, *coords) -> Poly:
        """A derivative of Pi, e.g. d(x, a) for Pi_{xa}."""
        return self.pi.derivative(*coords)

    def jacobian(self):
        return [[self.d(self.a), self.d(self.b)],
                [self.d(self.x, self.a), self.d(self.x, self.b)]]

    def denominator(self) -> Poly:
        return self.d(self.a) * self.d(self.x, self.b) - self.d(self.b) * self.d(self.x, self.a)


def solve_AB(manifold: SolutionManifold) -> Dict[str, FormalFraction]:
    """
    First derivatives of A and B.

    Differentiating y = Pi(x, A, B) and y1 = Pi_x(x, A, B) along x, y and
    y1 gives three 2x2 systems with matrix [[Pi_a, Pi_b], [Pi_xa, Pi_xb]].

    Returns:
        {'A_x', 'A_y', 'A_y1', 'B_x', 'B_y', 'B_y1'} as fractions over the
        common determinant
    """
    mf = manifold
    matrix = mf.jacobian()
    rhs = {
        'x': [-mf.d(mf.x), -mf.d(mf.x, mf.x)],
        'y': [Poly.constant(1), Poly()],
        'y1': [Poly(), Poly.constant(1)],
    }
    result: Dict[str, FormalFraction] = {}
    for coord, column in rhs.items():
        a_part, b_part = cramer(matrix, column)
        result[f"A_{coord}"] = a_part
        result[f"B_{coord}"] = b_part
    return result


def transfer_F_derivatives(manifold: SolutionManifold) -> Dict[str, FormalFraction]:
    """
    F_x, F_y, F_y1 for F = Pi_xx(x, A, B), through the chain rule and solve_AB.
    """
    mf = manifold
    ab = solve_AB(mf)
    pxxa = FormalFraction(mf.d(mf.x, mf.x, mf.a))
    pxxb = FormalFraction(mf.d(mf.x, mf.x, mf.b))
    return {
        'F_x': FormalFraction(mf.d(mf.x, mf.x, mf.x)) + pxxa * ab['A_x'] + pxxb * ab['B_x'],
        'F_y': pxxa * ab['A_y'] + pxxb * ab['B_y'],
        'F_y1': pxxa * ab['A_y1'] + pxxb * ab['B_y1'],
    }


def verify_total_derivative(manifold: SolutionManifold) -> bool:
    """
    The pull-back of D = d/dx + y1 d/dy + F d/dy1 applied to F:
    F_x + Pi_x F_y + Pi_xx F_y1 == Pi_xxx, with y1 -> Pi_x and F -> Pi_xx.
    """
    mf = manifold
    fd = transfer_F_derivatives(mf)
    lhs = fd['F_x'] + FormalFraction(mf.d(mf.x)) * fd['F_y'] + FormalFraction(mf.d(mf.x, mf.x)) * fd['F_y1']
    return fraction_equal(lhs, FormalFraction(mf.d(mf.x, mf.x, mf.x)))


def specialize(q: FormalFraction, manifold: SolutionManifold, pi: Poly) -> FormalFraction:
    """Replace the formal Pi by an explicit polynomial in x, a, b."""
    mapping = {manifold.pi: pi}
    return FormalFraction(q.num.replace_functions(mapping), q.den.replace_functions(mapping))


def flat_solutions(manifold: SolutionManifold) -> Poly:
    """Pi = b + x a, the solutions of y_xx = 0."""
    return Poly.from_atom(manifold.b) + Poly.from_atom(manifold.x) * Poly.from_atom(manifold.a)
