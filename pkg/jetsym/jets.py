"""
Jet spaces, total differentiation and first-order derivations.

A JetContext fixes the numbers n of independent and m of dependent
variables together with a jet order. Directions and dependent indices are
1-based.
"""

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .exceptions import IncompleteSkeletonError, JetOrderError, JetsymError
from .kernel import Atom, BaseVar, Coordinate, FuncSym, JetVar, ONE, Poly, chain_image
from .utils import multi_indices

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JetContext:
    """
    Jet space J^order_{n,m} with display names for its base coordinates.

    Default names are x (or x1..xn) and y (or y1..ym).
    """

    n: int
    m: int = 1
    order: int = 1
    xnames: Tuple[str, ...] = ()
    ynames: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.order < 0:
            raise JetsymError(f"invalid jet space n={self.n}, m={self.m}, order={self.order}")
        if not self.xnames:
            names = ('x',) if self.n == 1 else tuple(f"x{i}" for i in range(1, self.n + 1))
            object.__setattr__(self, 'xnames', names)
        if not self.ynames:
            names = ('y',) if self.m == 1 else tuple(f"y{j}" for j in range(1, self.m + 1))
            object.__setattr__(self, 'ynames', names)
        object.__setattr__(self, 'xnames', tuple(self.xnames))
        object.__setattr__(self, 'ynames', tuple(self.ynames))
        if len(self.xnames) != self.n or len(self.ynames) != self.m:
            raise JetsymError("coordinate names do not match n and m")
        if len(set(self.xnames) | set(self.ynames)) != self.n + self.m:
            raise JetsymError("coordinate names must be distinct")

    def with_order(self, order: int) -> 'JetContext':
        return JetContext(self.n, self.m, order, self.xnames, self.ynames)

    def x(self, i: int) -> BaseVar:
        if not 1 <= i <= self.n:
            raise JetOrderError(f"direction {i} outside 1..{self.n}")
        return BaseVar(self.xnames[i - 1])

    def y(self, j: int = 1, idx: Sequence[int] = ()) -> JetVar:
        if not 1 <= j <= self.m:
            raise JetOrderError(f"dependent index {j} outside 1..{self.m}")
        for i in idx:
            if not 1 <= i <= self.n:
                raise JetOrderError(f"direction {i} outside 1..{self.n}")
        return JetVar(j, idx, self.ynames[j - 1])

    def xs(self) -> List[BaseVar]:
        return [self.x(i) for i in range(1, self.n + 1)]

    def ys(self) -> List[JetVar]:
        return [self.y(j) for j in range(1, self.m + 1)]

    def base_coordinates(self) -> List[Coordinate]:
        return self.xs() + self.ys()

    def jets(self, min_order: int = 0, max_order: Optional[int] = None) -> Iterator[JetVar]:
        """Every canonical jet variable with index length in the given range."""
        top = self.order if max_order is None else max_order
        for length in range(min_order, top + 1):
            for j in range(1, self.m + 1):
                for idx in multi_indices(self.n, length):
                    yield self.y(j, idx)

    def coordinates(self) -> List[Coordinate]:
        """All coordinates of the jet space, counted up to symmetry."""
        return self.xs() + list(self.jets())


def jet_dimension(ctx: JetContext) -> int:
    """Number of coordinates of J^order_{n,m}: n + m * C(n + order, order)."""
    return ctx.n + ctx.m * comb(ctx.n + ctx.order, ctx.order)


def total_diff(ctx: JetContext, i: int, order: Optional[int], p: Poly) -> Poly:
    """
    Apply the total differentiation operator D_i, truncated at `order`.

    Args:
        ctx: Jet space
        i: Direction, 1..n
        order: Truncation order; jets of length >= order are rejected.
            None means no truncation.
        p: Polynomial in x, jets and formal derivative symbols

    Returns:
        D_i(p)

    Raises:
        JetOrderError: If p contains a jet the truncated operator cannot see
    """
    xi = ctx.x(i)

    def base(atom: Atom) -> Optional[Poly]:
        if isinstance(atom, BaseVar):
            return ONE if atom == xi else None
        if isinstance(atom, JetVar):
            if order is not None and atom.order >= order:
                raise JetOrderError(
                    f"D_{i} truncated at order {order} cannot differentiate {atom}")
            return Poly.from_atom(atom.extend(i))
        return None

    return p.derive(chain_image(base))


class Derivation:
    """
    A first-order derivation sum_c V_c d/dc on a set of coordinates.

    Components are stored only when nonzero; formal functions are
    differentiated through the chain rule.
    """

    __slots__ = ('components',)

    def __init__(self, components: Mapping[Coordinate, Poly]):
        coerced = ((c, Poly.coerce(v)) for c, v in components.items())
        self.components = {c: v for c, v in coerced if not v.is_zero()}

    def __getitem__(self, coord: Coordinate) -> Poly:
        return self.components.get(coord, Poly())

    def apply(self, p: Poly) -> Poly:
        comps = self.components
        return p.derive(chain_image(lambda a: comps.get(a)))

    def bracket(self, other: 'Derivation') -> 'Derivation':
        """[U, V]_c = U(V_c) - V(U_c)."""
        coords = set(self.components) | set(other.components)
        return Derivation({
            c: self.apply(other[c]) - other.apply(self[c]) for c in coords
        })

    def __add__(self, other: 'Derivation') -> 'Derivation':
        coords = set(self.components) | set(other.components)
        return Derivation({c: self[c] + other[c] for c in coords})

    def __sub__(self, other: 'Derivation') -> 'Derivation':
        coords = set(self.components) | set(other.components)
        return Derivation({c: self[c] - other[c] for c in coords})

    def scale(self, factor) -> 'Derivation':
        return Derivation({c: v * factor for c, v in self.components.items()})

    def is_zero(self) -> bool:
        return not self.components

    def __eq__(self, other):
        if not isinstance(other, Derivation):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self):
        inner = ', '.join(f"{c}: {v}" for c, v in sorted(self.components.items(), key=lambda t: t[0].key))
        return f"Derivation({{{inner}}})"


@dataclass
class PDESystem:
    """
    A system in graph form: non-parametric jets expressed through the
    independent variables, y^1..y^m and the parametric jets.
    """

    ctx: JetContext
    parametric: frozenset
    skeleton: Dict[JetVar, Poly] = field(default_factory=dict)
    functions: Dict[str, FuncSym] = field(default_factory=dict)

    def __post_init__(self):
        self.parametric = frozenset(self.parametric)
        for jet in self.parametric:
            if jet.order == 0:
                raise JetsymError("y^j themselves are always coordinates; list only jets of order >= 1")

    def coordinates(self) -> List[Coordinate]:
        """Coordinates of the skeleton: x, y and the parametric jets."""
        params = sorted(self.parametric, key=lambda a: a.key)
        return self.ctx.xs() + self.ctx.ys() + params

    def is_coordinate(self, jet: JetVar) -> bool:
        return jet.order == 0 or jet in self.parametric

    def target_jets(self) -> List[JetVar]:
        """Non-parametric jets of order 1..order+1, the scope of completion."""
        return [jet for jet in self.ctx.jets(1, self.ctx.order + 1) if jet not in self.parametric]

    def missing(self) -> List[JetVar]:
        return [jet for jet in self.target_jets() if jet not in self.skeleton]

    def max_skeleton_order(self) -> int:
        return max((jet.order for jet in self.skeleton), default=0)


def restricted_total_ops(system: PDESystem) -> List[Derivation]:
    """
    Total differentiation operators restricted to the skeleton.

    D_i sends x^i to 1 and each coordinate y^j_b to y^j_{b+i} when that jet
    is a coordinate, and to its skeleton right-hand side otherwise.

    Raises:
        IncompleteSkeletonError: Naming the jets that have no entry
    """
    ctx = system.ctx
    ops = []
    missing = []
    for i in range(1, ctx.n + 1):
        comps: Dict[Coordinate, Poly] = {ctx.x(i): ONE}
        for coord in system.coordinates():
            if not isinstance(coord, JetVar):
                continue
            target = coord.extend(i)
            if system.is_coordinate(target):
                comps[coord] = Poly.from_atom(target)
            elif target in system.skeleton:
                comps[coord] = system.skeleton[target]
            else:
                missing.append(target)
        ops.append(Derivation(comps))
    if missing:
        unique = sorted(set(missing), key=lambda a: a.key)
        raise IncompleteSkeletonError(unique)
    return ops


def frobenius_defects(system: PDESystem) -> List[Tuple[int, int, Coordinate, Poly]]:
    """
    Nonzero components of the commutators [D_a, D_b], a < b.

    An empty list means the restricted operators commute.
    """
    ops = restricted_total_ops(system)
    defects = []
    for a in range(len(ops)):
        for b in range(a + 1, len(ops)):
            commutator = ops[a].bracket(ops[b])
            for coord, value in sorted(commutator.components.items(), key=lambda t: t[0].key):
                defects.append((a + 1, b + 1, coord, value))
    logger.debug("frobenius check: %d nonzero commutator components", len(defects))
    return defects


def substitute_skeleton(system: PDESystem, p: Poly) -> Poly:
    """
    Replace every non-parametric jet of `p` by its skeleton entry.

    Raises:
        IncompleteSkeletonError: If such a jet has no entry
    """
    subs = {}
    missing = []
    for atom in p.atoms():
        if isinstance(atom, JetVar) and not system.is_coordinate(atom):
            if atom in system.skeleton:
                subs[atom] = system.skeleton[atom]
            else:
                missing.append(atom)
    if missing:
        raise IncompleteSkeletonError(sorted(missing, key=lambda a: a.key))
    return p.substitute(subs)


def jet_weight(mono) -> int:
    """Sum of (index length x exponent) over the jets of a monomial."""
    return sum(atom.order * e for atom, e in mono if isinstance(atom, JetVar))
