"""
Multivariate Faa di Bruno formulas.

The composite h(x) = f(g^1(x), .., g^m(x)) is differentiated three ways:
the closed block formula (the pure Y-part of the prolongation formula,
with every target index placed in some block), the plain chain rule on
jet placeholders, and the pair of derivations that drives the induction
directly on f- and g-derivative symbols.
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Sequence, Tuple

from .combinatorics import fdb_coefficient, integer_partitions, set_partitions
from .exceptions import JetsymError
from .jets import JetContext, total_diff
from .kernel import Atom, DerivSym, FuncSym, JetVar, Poly, _clean, formal_partial
from .prolongation import accumulate_term, block_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompositionSpec:
    """
    Which derivative of h = f(g(x)) to compute.

    Args:
        n: Number of variables of the inner maps g^l
        m: Number of inner maps, the arity of f
        target: Directions i1..ik of the derivative, each in 1..n
    """

    n: int
    m: int
    target: Tuple[int, ...]

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise JetsymError("composition needs n, m >= 1")
        if not self.target:
            raise JetsymError("composition needs a derivative order >= 1")
        if any(not 1 <= i <= self.n for i in self.target):
            raise JetsymError(f"target directions must lie in 1..{self.n}")
        object.__setattr__(self, 'target', tuple(sorted(self.target)))

    @property
    def order(self) -> int:
        return len(self.target)

    @classmethod
    def scalar(cls, order: int) -> 'CompositionSpec':
        return cls(1, 1, (1,) * order)


def composition_functions(n: int, m: int) -> Tuple[FuncSym, List[FuncSym]]:
    """The outer function f(y^1..y^m) and the inner maps g^l(x^1..x^n)."""
    ctx = JetContext(n, m, 0)
    f = FuncSym('f', (), ctx.ys())
    gs = [FuncSym('g', (l,) if m > 1 else (), ctx.xs()) for l in range(1, m + 1)]
    return f, gs


def _counts(length: int, positions: Sequence[int]) -> Tuple[int, ...]:
    order = [0] * length
    for p in positions:
        order[p - 1] += 1
    return tuple(order)


def fdb_closed(spec: CompositionSpec) -> Poly:
    """
    Closed form of h_{i1..ik}: sum over block decompositions of the target
    of f_{y^l1..y^ld} * prod_b g^{lb}_{x^block_b}.

    Returns:
        Polynomial in f- and g-derivative symbols with positive integer
        coefficients
    """
    f, gs = composition_functions(spec.n, spec.m)
    y_part, _ = block_weights(spec.target)
    out: Dict[tuple, object] = {}
    for (blocks, rest), weight in y_part.items():
        if rest:
            continue
        for ls in product(range(1, spec.m + 1), repeat=len(blocks)):
            atoms: List[Atom] = [DerivSym(f, _counts(spec.m, ls))]
            atoms.extend(DerivSym(gs[l - 1], _counts(spec.n, b)) for l, b in zip(ls, blocks))
            accumulate_term(out, atoms, weight)
    return Poly({k: _clean(c) for k, c in out.items()})


def fdb_oracle(spec: CompositionSpec) -> Poly:
    """
    h_{i1..ik} by the chain rule: differentiate f(y) totally, then replace
    each jet y^l_a by g^l_{x^a}.
    """
    f, gs = composition_functions(spec.n, spec.m)
    ctx = JetContext(spec.n, spec.m, spec.order)
    h = f.poly()
    for i in spec.target:
        h = total_diff(ctx, i, None, h)
    images = {}
    for atom in h.atoms():
        if isinstance(atom, JetVar):
            images[atom] = Poly.from_atom(DerivSym(gs[atom.dep - 1], _counts(spec.n, atom.idx)))
    logger.debug("chain rule oracle at order %d: %d terms", spec.order, len(h))
    return h.substitute(images)


def fdb_derivations(spec: CompositionSpec) -> Poly:
    """
    h_{i1..ik} by the induction h_{a,i} = F_i(h_a), where F_i sends
    g^l_K to g^l_{K+i} and f_L to sum_l g^l_i f_{L+l}.
    """
    f, gs = composition_functions(spec.n, spec.m)
    ctx = JetContext(spec.n, spec.m, 0)

    def step(i: int):
        xi = ctx.x(i)
        first = [Poly.from_atom(DerivSym(g, _counts(spec.n, (i,)))) for g in gs]

        def image(atom: Atom):
            if not isinstance(atom, DerivSym):
                return None
            if atom.func == f:
                return Poly.sum(formal_partial(atom, y) * first[l]
                                for l, y in enumerate(ctx.ys()))
            return formal_partial(atom, xi)
        return image

    h = f.poly()
    for i in spec.target:
        h = h.derive(step(i))
    return h


def scalar_monomial(f_order: int, g_orders: Sequence[int]) -> Poly:
    """The scalar monomial f_{f_order} * prod g_{k} for k in g_orders."""
    f, (g,) = composition_functions(1, 1)
    result = Poly.from_atom(DerivSym(f, (f_order,)))
    for k in g_orders:
        result = result * Poly.from_atom(DerivSym(g, (k,)))
    return result


def scalar_coefficients(order: int) -> Dict[Tuple[int, ...], int]:
    """
    Coefficients of the scalar h_order keyed by the block shape, from the
    counting formula k! / prod((lambda!)^mu mu!).
    """
    return {shape: fdb_coefficient(shape) for shape in integer_partitions(order)}


def bell_sum(h: Poly) -> int:
    """Value of h with every f- and g-derivative set to one."""
    return sum(h.evaluate({a: 1 for a in h.atoms()}).terms.values()) if h else 0


def bell_check(order: int) -> bool:
    """The scalar closed h_order evaluated at ones counts the set partitions of 1..order."""
    return bell_sum(fdb_closed(CompositionSpec.scalar(order))) == sum(1 for _ in set_partitions(range(order)))


def identity_outer(h: Poly, m: int = 1) -> Poly:
    """Substitute f = y^1: first derivative f_{y^1} = 1, all others zero."""
    values = {}
    for atom in h.atoms():
        if isinstance(atom, DerivSym) and atom.func.name == 'f':
            values[atom] = 1 if atom.order == _counts(m, (1,)) else 0
    return h.evaluate(values)
