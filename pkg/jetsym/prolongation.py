"""
Prolongation of vector fields to jet spaces.

Two independent routes compute the coefficients Y^j_{i1..ik} of the
prolonged field:

* `prolong_inductive` follows the recursion
  Y^j_{a,i} = D_i(Y^j_a) - sum_k D_i(X^k) y^j_{a,k};
* `prolong_closed` evaluates the closed combinatorial formula, summing over
  all block shapes, all placements of the target indices into blocks and
  all orderings, each divided by the stabilizer order |H|.

The closed route has no shared state with the inductive one, so their
agreement is a genuine check.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from math import comb
from typing import Dict, List, Sequence, Tuple

from .combinatorics import cut_blocks, shapes_up_to, stabilizer_order, subset_perms
from .exceptions import JetsymError
from .jets import Derivation, JetContext, jet_weight, total_diff
from .kernel import Atom, DerivSym, FuncSym, JetVar, Poly, _clean
from .utils import multi_indices

logger = logging.getLogger(__name__)

_SENTINEL = -1


def generic_functions(ctx: JetContext) -> Tuple[List[FuncSym], List[FuncSym]]:
    """
    The formal coefficient functions X^1..X^n and Y^1..Y^m of (x, y).

    Components are dropped when n (resp. m) is one, matching the scalar
    notation X, Y.
    """
    deps = ctx.base_coordinates()
    xs = [FuncSym('X', (k,) if ctx.n > 1 else (), deps) for k in range(1, ctx.n + 1)]
    ys = [FuncSym('Y', (j,) if ctx.m > 1 else (), deps) for j in range(1, ctx.m + 1)]
    return xs, ys


@dataclass
class VectorField:
    """
    The field sum_i X^i d/dx^i + sum_j Y^j d/dy^j; coefficients depend on
    (x, y) only.
    """

    ctx: JetContext
    xcoeffs: Tuple[Poly, ...]
    ycoeffs: Tuple[Poly, ...]
    name: str = ''

    def __post_init__(self):
        self.xcoeffs = tuple(Poly.coerce(c) for c in self.xcoeffs)
        self.ycoeffs = tuple(Poly.coerce(c) for c in self.ycoeffs)
        if len(self.xcoeffs) != self.ctx.n or len(self.ycoeffs) != self.ctx.m:
            raise JetsymError(f"field {self.name or '?'} needs {self.ctx.n} X and {self.ctx.m} Y coefficients")
        for c in self.xcoeffs + self.ycoeffs:
            for atom in c.atoms():
                if isinstance(atom, JetVar) and atom.order > 0:
                    raise JetsymError(f"field coefficient depends on the jet {atom}")

    @classmethod
    def generic(cls, ctx: JetContext) -> 'VectorField':
        xs, ys = generic_functions(ctx)
        return cls(ctx, tuple(f.poly() for f in xs), tuple(f.poly() for f in ys), name='generic')

    @classmethod
    def from_derivation(cls, ctx: JetContext, d: Derivation, name: str = '') -> 'VectorField':
        return cls(ctx, tuple(d[x] for x in ctx.xs()), tuple(d[y] for y in ctx.ys()), name=name)

    def as_derivation(self) -> Derivation:
        comps = {x: c for x, c in zip(self.ctx.xs(), self.xcoeffs)}
        comps.update({y: c for y, c in zip(self.ctx.ys(), self.ycoeffs)})
        return Derivation(comps)

    def __add__(self, other: 'VectorField') -> 'VectorField':
        return VectorField(self.ctx,
                           tuple(a + b for a, b in zip(self.xcoeffs, other.xcoeffs)),
                           tuple(a + b for a, b in zip(self.ycoeffs, other.ycoeffs)))

    def scale(self, factor) -> 'VectorField':
        return VectorField(self.ctx, tuple(c * factor for c in self.xcoeffs),
                           tuple(c * factor for c in self.ycoeffs), name=self.name)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.xcoeffs + self.ycoeffs)

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.xcoeffs == other.xcoeffs and self.ycoeffs == other.ycoeffs

    __hash__ = None


@dataclass
class ProlongedField:
    """Coefficients Y^j_a of a prolonged field, keyed by the jet y^j_a."""

    base: VectorField
    order: int
    coeffs: Dict[JetVar, Poly] = field(default_factory=dict)

    def coefficient(self, j: int, idx: Sequence[int]) -> Poly:
        if not idx:
            return self.base.ycoeffs[j - 1]
        return self.coeffs[self.base.ctx.y(j, idx)]

    def as_derivation(self) -> Derivation:
        """The prolonged field as a derivation on the jet space of its order."""
        comps = self.base.as_derivation().components
        comps.update(self.coeffs)
        return Derivation(comps)


def prolong_inductive(f: VectorField, order: int) -> ProlongedField:
    """
    Prolong a field by the inductive formula, memoizing every coefficient.

    Args:
        f: Vector field on (x, y)
        order: Highest jet order, >= 1

    Returns:
        ProlongedField holding Y^j_a for 1 <= |a| <= order
    """
    if order < 1:
        raise JetsymError("prolongation order must be at least 1")
    ctx = f.ctx
    dx = {
        (i, k): total_diff(ctx, i, 1, f.xcoeffs[k - 1])
        for i in range(1, ctx.n + 1) for k in range(1, ctx.n + 1)
    }
    coeffs: Dict[JetVar, Poly] = {}
    for length in range(1, order + 1):
        for j in range(1, ctx.m + 1):
            for idx in multi_indices(ctx.n, length):
                parent, i = idx[:-1], idx[-1]
                previous = f.ycoeffs[j - 1] if not parent else coeffs[ctx.y(j, parent)]
                value = total_diff(ctx, i, length, previous)
                corrections = [dx[i, k] * Poly.from_atom(ctx.y(j, parent + (k,)))
                               for k in range(1, ctx.n + 1) if not dx[i, k].is_zero()]
                coeffs[ctx.y(j, idx)] = value - Poly.sum(corrections)
        logger.debug("prolonged to order %d: %d coefficients", length, len(coeffs))
    return ProlongedField(f, order, coeffs)


def prolong_along(f: VectorField, j: int, directions: Sequence[int]) -> Poly:
    """
    Run the inductive recursion along `directions` in the given order,
    without sorting; used to check symmetry of the coefficients.
    """
    ctx = f.ctx
    current = f.ycoeffs[j - 1]
    done: Tuple[int, ...] = ()
    for length, i in enumerate(directions, start=1):
        current = total_diff(ctx, i, length, current) - Poly.sum(
            total_diff(ctx, i, 1, f.xcoeffs[k - 1]) * Poly.from_atom(ctx.y(j, done + (k,)))
            for k in range(1, ctx.n + 1))
        done = done + (i,)
    return current


@lru_cache(maxsize=None)
def block_weights(dirs: Tuple[int, ...]):
    """
    Weighted block decompositions of a target index sequence.

    Returns:
        (y_part, x_part): y_part maps (blocks, rest) to its weight and
        x_part maps (other blocks, remainder of the sentinel block, rest)
        to its weight. Blocks and rests are sorted direction tuples.
    """
    kappa = len(dirs)
    y_part: Counter = Counter()
    x_part: Counter = Counter()
    for shape in shapes_up_to(kappa + 1, max(kappa, 1)):
        p = sum(shape)
        weight = Fraction(1, stabilizer_order(shape))
        if p <= kappa:
            for perm in subset_perms(kappa, p):
                chosen = [v - 1 for v in perm[:p]]
                rest = tuple(sorted(dirs[v - 1] for v in perm[p:]))
                for arrangement in permutations(chosen):
                    blocks = cut_blocks(arrangement, shape)
                    key = tuple(sorted(tuple(sorted(dirs[v] for v in b)) for b in blocks))
                    y_part[key, rest] += weight
        if p >= 1:
            for perm in subset_perms(kappa, p - 1):
                chosen = [v - 1 for v in perm[:p - 1]] + [_SENTINEL]
                rest = tuple(sorted(dirs[v - 1] for v in perm[p - 1:]))
                for arrangement in permutations(chosen):
                    blocks = cut_blocks(arrangement, shape)
                    others = []
                    star: Tuple[int, ...] = ()
                    for b in blocks:
                        if _SENTINEL in b:
                            star = tuple(sorted(dirs[v] for v in b if v != _SENTINEL))
                        else:
                            others.append(tuple(sorted(dirs[v] for v in b)))
                    x_part[tuple(sorted(others)), star, rest] += weight
    return dict(y_part), dict(x_part)


def _derivative_order(ctx: JetContext, xdirs: Sequence[int], ydeps: Sequence[int]) -> Tuple[int, ...]:
    order = [0] * (ctx.n + ctx.m)
    for i in xdirs:
        order[i - 1] += 1
    for l in ydeps:
        order[ctx.n + l - 1] += 1
    return tuple(order)


def accumulate_term(out: dict, atoms: List[Atom], weight) -> None:
    counts = Counter(atoms)
    mono = tuple(sorted(counts.items(), key=lambda t: t[0].key))
    s = out.get(mono, 0) + weight
    if s:
        out[mono] = s
    else:
        out.pop(mono, None)


def prolong_closed(ctx: JetContext, target: JetVar) -> Poly:
    """
    Closed-form coefficient Y^j_{i1..ik} of the generic prolonged field.

    Args:
        ctx: Jet space (n, m)
        target: The jet y^j_{i1..ik}, k >= 1

    Returns:
        Normalized polynomial in X, Y derivatives and jets
    """
    if target.order < 1:
        raise JetsymError("closed prolongation needs a jet of order >= 1")
    xs, ys = generic_functions(ctx)
    j = target.dep
    y_part, x_part = block_weights(target.idx)
    out: dict = {}
    for (blocks, rest), weight in y_part.items():
        for ls in product(range(1, ctx.m + 1), repeat=len(blocks)):
            atoms: List[Atom] = [DerivSym(ys[j - 1], _derivative_order(ctx, rest, ls))]
            atoms.extend(ctx.y(l, b) for l, b in zip(ls, blocks))
            accumulate_term(out, atoms, weight)
    for (others, star, rest), weight in x_part.items():
        for k in range(1, ctx.n + 1):
            for ls in product(range(1, ctx.m + 1), repeat=len(others)):
                atoms = [DerivSym(xs[k - 1], _derivative_order(ctx, rest, ls)), ctx.y(j, star + (k,))]
                atoms.extend(ctx.y(l, b) for l, b in zip(ls, others))
                accumulate_term(out, atoms, -weight)
    return Poly({m: _clean(c) for m, c in out.items()})


def degree_bound_holds(p: Poly, order: int) -> bool:
    """Every monomial has weighted jet degree at most order + 1."""
    return all(jet_weight(mono) <= order + 1 for mono in p.terms)


def slice_by_jets(p: Poly, allowed) -> Poly:
    """Terms of p whose jet variables of order >= 1 all belong to `allowed`."""
    kept = {}
    for mono, c in p.items():
        if all(not isinstance(a, JetVar) or a.order == 0 or a in allowed for a, _ in mono):
            kept[mono] = c
    return Poly(kept)


def binomial_slice(order: int) -> Poly:
    """
    The part of the scalar Y_k made of powers of y_1 alone:
    Y_{x^k} + sum_l [C(k,l) Y_{x^(k-l) y^l} - C(k,l-1) X_{x^(k-l+1) y^(l-1)}] y_1^l
    - X_{y^k} y_1^(k+1).
    """
    ctx = JetContext(1, 1, order)
    (X,), (Y,) = generic_functions(ctx)
    y1 = ctx.y(1, (1,))
    terms = [Poly.from_atom(DerivSym(Y, (order, 0)))]
    for l in range(1, order + 1):
        bracket = (Poly.from_atom(DerivSym(Y, (order - l, l))) * comb(order, l)
                   - Poly.from_atom(DerivSym(X, (order - l + 1, l - 1))) * comb(order, l - 1))
        terms.append(bracket * Poly.from_atom(y1, l))
    terms.append(-Poly.from_atom(DerivSym(X, (0, order))) * Poly.from_atom(y1, order + 1))
    return Poly.sum(terms)

