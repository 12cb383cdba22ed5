"""
Flatness of completely integrable systems y_{x^j1 x^j2} = F^{j1,j2}(x, y, y_x).

A system is point-equivalent to Y_{X^j1 X^j2} = 0 exactly when every
F^{j1,j2} is a cubic polynomial in the first-order jets, built from
functions G, H, L, M of (x, y), and those functions satisfy four families
of first-order equations. This module produces both sides of that
statement: the compatibility expansion of a cubic system and the families
it must reduce to, the transformation side through the square functions
Pi, and the auxiliary systems linking the two.

Coordinates are x^1..x^n and y; index n+1 always stands for y, so
Pi^k_{j,n+1} is the square function along (x^j, y) and d(p, n+1) is a
y-derivative.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, permutations, product
from math import factorial
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .exceptions import InconsistentLinearSystem, JetOrderError, JetsymError, ResidualDegreeError
from .jets import JetContext, PDESystem, total_diff
from .kernel import (Atom, BaseVar, DerivSym, FormalFraction, FuncSym, JetVar, ONE, Poly,
                     chain_image)
from .linalg import SparseEliminator, det, poly_vector, replace_column, solve_affine
from .utils import canonical_pair, load_settings

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
FAMILY_NAMES = ('I', 'II', 'III', 'IV')

# ('G', a, b) | ('H', k, a, b) | ('L', k, a) | ('M', k)
GHLMKey = Tuple
BoxFunction = Callable[[int, int, int], Poly]


def ghlm_key(kind: str, *indices: int) -> GHLMKey:
    """Canonical key; the lower pair of G and H is sorted."""
    if kind == 'G':
        return ('G',) + canonical_pair(*indices)
    if kind == 'H':
        k, a, b = indices
        return ('H', k) + canonical_pair(a, b)
    return (kind,) + tuple(indices)


def ghlm_keys(n: int) -> List[GHLMKey]:
    """Every G, H, L, M function of the cubic form in n independent variables."""
    r = range(1, n + 1)
    pairs = list(combinations_with_replacement(r, 2))
    keys: List[GHLMKey] = [('G', a, b) for a, b in pairs]
    keys += [('H', k, a, b) for k in r for a, b in pairs]
    keys += [('L', k, a) for k in r for a in r]
    keys += [('M', k) for k in r]
    return keys


def ghlm_counts(n: int) -> Dict[str, int]:
    return {
        'G': n * (n + 1) // 2,
        'H': n * n * (n + 1) // 2,
        'L': n * n,
        'M': n,
    }


def square_count(n: int) -> int:
    """Number of distinct square functions Pi^k_{a,b}, 1 <= k, a <= b <= n+1."""
    return (n + 1) * (n + 1) * (n + 2) // 2


class GHLMSymbols:
    """
    Formal functions of (x^1..x^n, y) for one value of n.

    G, H, L, M are the coefficients of the cubic form, Theta^1..Theta^{n+1}
    the principal unknowns and Pi^k_{a,b} the square functions. Every
    accessor returns the undifferentiated function as a polynomial.
    """

    def __init__(self, n: int):
        if n < 1:
            raise JetsymError("flatness computations need n >= 1")
        self.n = n
        self.N = n + 1
        self.ctx = JetContext(n, 1, 2)
        self.coords = self.ctx.xs() + [self.ctx.y()]

    def coord(self, a: int):
        if not 1 <= a <= self.N:
            raise JetOrderError(f"index {a} outside 1..{self.N}")
        return self.coords[a - 1]

    def function(self, name: str, component: Sequence[int]) -> FuncSym:
        return FuncSym(name, tuple(component), self.coords)

    def G(self, a: int, b: int) -> Poly:
        return self.function('G', canonical_pair(a, b)).poly()

    def H(self, k: int, a: int, b: int) -> Poly:
        return self.function('H', (k,) + canonical_pair(a, b)).poly()

    def L(self, k: int, a: int) -> Poly:
        return self.function('L', (k, a)).poly()

    def M(self, k: int) -> Poly:
        return self.function('M', (k,)).poly()

    def Theta(self, a: int) -> Poly:
        return self.function('Theta', (a,)).poly()

    def pi_function(self, k: int, a: int, b: int) -> FuncSym:
        return self.function('Pi', (k,) + canonical_pair(a, b))

    def Pi(self, k: int, a: int, b: int) -> Poly:
        return self.pi_function(k, a, b).poly()

    def value(self, key: GHLMKey) -> Poly:
        return getattr(self, key[0])(*key[1:])

    def ghlm(self) -> Dict[GHLMKey, Poly]:
        return {key: self.value(key) for key in ghlm_keys(self.n)}

    def d(self, p: Poly, *axes: int) -> Poly:
        """Partial derivative along x^a (a <= n) or y (a = n+1)."""
        for a in axes:
            p = p.diff(self.coord(a))
        return p

    def jet(self, *idx: int) -> Poly:
        return Poly.from_atom(self.ctx.y(1, idx))

    def transformation(self) -> List[FuncSym]:
        """The unknown point transformation X^1..X^n, Y."""
        xs = [self.function('X', (k,) if self.n > 1 else ()) for k in range(1, self.n + 1)]
        return xs + [FuncSym('Y', (), self.coords)]


def _single_atom(p: Poly) -> Atom:
    (atom,) = p.atoms()
    return atom


def _theta_derivatives(p: Poly) -> List[DerivSym]:
    return [a for a in p.atoms()
            if isinstance(a, DerivSym) and a.func.name == 'Theta' and a.total_order > 0]


# cubic systems -------------------------------------------------------------

def cubic_rhs(ctx: JetContext, ghlm: Mapping[GHLMKey, Poly], j1: int, j2: int) -> Poly:
    """
    G_{j1,j2} + sum_k y_k (H^k_{j1,j2} + 1/2 y_j1 L^k_j2 + 1/2 y_j2 L^k_j1
    + y_j1 y_j2 M^k), with missing keys read as zero.
    """
    n = ctx.n
    y = [None] + [Poly.from_atom(ctx.y(1, (k,))) for k in range(1, n + 1)]

    def get(*key) -> Poly:
        return ghlm.get(ghlm_key(*key), Poly())

    total = get('G', j1, j2)
    for k in range(1, n + 1):
        inner = (get('H', k, j1, j2)
                 + (y[j1] * get('L', k, j2)).scale(HALF)
                 + (y[j2] * get('L', k, j1)).scale(HALF)
                 + y[j1] * y[j2] * get('M', k))
        total = total + y[k] * inner
    return total


@dataclass
class SecondOrderSystem:
    """
    y_{x^j1 x^j2} = F^{j1,j2}(x, y, y_x) for all 1 <= j1 <= j2 <= n.

    Keys are normalized to sorted pairs; giving both (a, b) and (b, a) with
    different right-hand sides is an error. Missing pairs read as zero.
    """

    n: int
    rhs: Dict[Tuple[int, int], Poly] = field(default_factory=dict)
    ctx: Optional[JetContext] = None

    def __post_init__(self):
        if self.ctx is None:
            self.ctx = JetContext(self.n, 1, 2)
        normalized: Dict[Tuple[int, int], Poly] = {}
        for (a, b), value in self.rhs.items():
            if not (1 <= a <= self.n and 1 <= b <= self.n):
                raise JetOrderError(f"pair ({a},{b}) outside 1..{self.n}")
            key = canonical_pair(a, b)
            value = Poly.coerce(value)
            if key in normalized and normalized[key] != value:
                raise JetsymError(f"F^{a},{b} and F^{b},{a} differ")
            normalized[key] = value
            for atom in value.atoms():
                if isinstance(atom, JetVar) and atom.order > 1:
                    raise JetOrderError(f"right-hand side of y[{a},{b}] contains {atom}")
        self.rhs = normalized

    def F(self, a: int, b: int) -> Poly:
        return self.rhs.get(canonical_pair(a, b), Poly())

    @classmethod
    def from_ghlm(cls, n: int, ghlm: Mapping[GHLMKey, Poly]) -> 'SecondOrderSystem':
        ctx = JetContext(n, 1, 2)
        pairs = combinations_with_replacement(range(1, n + 1), 2)
        return cls(n, {pair: cubic_rhs(ctx, ghlm, *pair) for pair in pairs}, ctx)

    @classmethod
    def from_pde(cls, system: PDESystem) -> 'SecondOrderSystem':
        """Read the second-order skeleton entries of a scalar system."""
        ctx = system.ctx
        if ctx.m != 1:
            raise JetsymError("flatness applies to one dependent variable")
        rhs = {jet.idx: value for jet, value in system.skeleton.items() if jet.order == 2}
        return cls(ctx.n, rhs, ctx.with_order(2))


def total_op(system: SecondOrderSystem, j: int, p: Poly) -> Poly:
    """D_j = d/dx^j + y_j d/dy + sum_l F^{j,l} d/dy_l."""
    ctx = system.ctx
    xj = ctx.x(j)
    yj = Poly.from_atom(ctx.y(1, (j,)))

    def base(atom: Atom) -> Optional[Poly]:
        if isinstance(atom, BaseVar):
            return ONE if atom == xj else None
        if isinstance(atom, JetVar):
            if atom.order == 0:
                return yj
            if atom.order == 1:
                return system.F(j, atom.idx[0])
            raise JetOrderError(f"D_{j} is not defined on {atom}")
        return None

    return p.derive(chain_image(base))


def compatibility_expand(system: SecondOrderSystem, j1: int, j2: int, j3: int) -> Poly:
    """D_j3(F^{j1,j2}) - D_j2(F^{j1,j3})."""
    return total_op(system, j3, system.F(j1, j2)) - total_op(system, j2, system.F(j1, j3))


def collect_symmetric(defect: Poly) -> Dict[Tuple[int, ...], Poly]:
    """
    Split a compatibility defect into its symmetrized coefficient equations.

    The coefficient of each monomial y_k1..y_kd is multiplied by d!, the
    number of orderings of its index list, so that y_1 y_2 * c gives 2c.

    Returns:
        Sorted index tuple (k1..kd), d <= 3, to its nonzero equation

    Raises:
        ResidualDegreeError: If a jet monomial of degree above three or a
            jet of order two or more survives
    """
    out: Dict[Tuple[int, ...], Poly] = {}
    for head, coeff in defect.jet_view().items():
        indices: List[int] = []
        for atom, e in head:
            if atom.order != 1:
                raise ResidualDegreeError(f"unexpected jet {atom} in compatibility defect")
            indices.extend([atom.idx[0]] * e)
        if len(indices) > 3:
            raise ResidualDegreeError(
                f"jet monomial of degree {len(indices)} did not cancel: {Poly.from_monomial(head)}")
        if coeff.is_zero():
            continue
        out[tuple(sorted(indices))] = coeff.scale(factorial(len(indices)))
    return out


FamilyMap = Dict[str, Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], Poly]]


def collect_families(system: SecondOrderSystem) -> FamilyMap:
    """collect_symmetric over every triple (j1, j2, j3) with j2 != j3."""
    families: FamilyMap = {name: {} for name in FAMILY_NAMES}
    n = system.n
    for js in product(range(1, n + 1), repeat=3):
        if js[1] == js[2]:
            continue
        defect = compatibility_expand(system, *js)
        for ks, eq in collect_symmetric(defect).items():
            families[FAMILY_NAMES[len(ks)]][(js, ks)] = eq
    logger.debug("collected %s equations at n=%d",
                 {k: len(v) for k, v in families.items()}, n)
    return families


# the four families ---------------------------------------------------------

def _family_I(s: GHLMSymbols, j1: int, j2: int, j3: int) -> Poly:
    r = range(1, s.n + 1)
    return (s.d(s.G(j1, j2), j3) - s.d(s.G(j1, j3), j2)
            + Poly.sum(s.H(k, j1, j2) * s.G(k, j3) - s.H(k, j1, j3) * s.G(k, j2) for k in r))


def _family_II(s: GHLMSymbols, j1: int, j2: int, j3: int, k1: int) -> Poly:
    r = range(1, s.n + 1)
    y = s.N
    e = s.d(s.H(k1, j1, j2), j3) - s.d(s.H(k1, j1, j3), j2)
    if k1 == j3:
        e = e + s.d(s.G(j1, j2), y)
    if k1 == j2:
        e = e - s.d(s.G(j1, j3), y)
    e = e + (s.G(j1, j3) * s.L(k1, j2) - s.G(j1, j2) * s.L(k1, j3)).scale(HALF)
    if k1 == j1:
        e = e + Poly.sum(s.G(l, j3) * s.L(l, j2) - s.G(l, j2) * s.L(l, j3) for l in r).scale(HALF)
    if k1 == j2:
        e = e + Poly.sum(s.G(l, j3) * s.L(l, j1) for l in r).scale(HALF)
    if k1 == j3:
        e = e - Poly.sum(s.G(l, j2) * s.L(l, j1) for l in r).scale(HALF)
    return e + Poly.sum(s.H(k1, l, j3) * s.H(l, j1, j2) - s.H(k1, l, j2) * s.H(l, j1, j3) for l in r)


def _tensor_III(s: GHLMSymbols, j1: int, j2: int, j3: int, a: int, b: int) -> Poly:
    r = range(1, s.n + 1)
    y = s.N
    parts: List[Poly] = []
    if b == j3:
        parts.append(s.d(s.H(a, j1, j2), y))
        parts.append(-(s.d(s.L(a, j1), j2)).scale(HALF))
        parts.append(-(s.G(j1, j2) * s.M(a)))
    if b == j2:
        parts.append(-s.d(s.H(a, j1, j3), y))
        parts.append(s.d(s.L(a, j1), j3).scale(HALF))
        parts.append(s.G(j1, j3) * s.M(a))
    if b == j1:
        parts.append((s.d(s.L(a, j2), j3) - s.d(s.L(a, j3), j2)).scale(HALF))
    if a == j1:
        if b == j2:
            parts.append(Poly.sum(s.G(l, j3) * s.M(l) for l in r))
        if b == j3:
            parts.append(-Poly.sum(s.G(l, j2) * s.M(l) for l in r))
        parts.append(Poly.sum(s.H(b, l, j3) * s.L(l, j2) - s.H(b, l, j2) * s.L(l, j3)
                              for l in r).scale(HALF))
    if a == j2:
        parts.append(Poly.sum(s.H(b, l, j3) * s.L(l, j1) for l in r).scale(HALF))
        parts.append(-Poly.sum(s.H(l, j1, j3) * s.L(b, l) for l in r).scale(HALF))
    if a == j3:
        parts.append(-Poly.sum(s.H(b, l, j2) * s.L(l, j1) for l in r).scale(HALF))
        parts.append(Poly.sum(s.H(l, j1, j2) * s.L(b, l) for l in r).scale(HALF))
    return Poly.sum(parts)


def _tensor_IV(s: GHLMSymbols, j1: int, j2: int, j3: int, p: int, q: int, r_: int) -> Poly:
    r = range(1, s.n + 1)
    y = s.N
    parts: List[Poly] = []
    if q == j1:
        if r_ == j3:
            parts.append(s.d(s.L(p, j2), y).scale(HALF))
            parts.append(-s.d(s.M(p), j2))
        if r_ == j2:
            parts.append(-(s.d(s.L(p, j3), y)).scale(HALF))
            parts.append(s.d(s.M(p), j3))
    if p == j1:
        if r_ == j2:
            parts.append(Poly.sum(s.H(q, l, j3) * s.M(l) for l in r))
            parts.append(-Poly.sum(s.L(q, l) * s.L(l, j3) for l in r).scale(QUARTER))
        if r_ == j3:
            parts.append(-Poly.sum(s.H(q, l, j2) * s.M(l) for l in r))
            parts.append(Poly.sum(s.L(q, l) * s.L(l, j2) for l in r).scale(QUARTER))
    return Poly.sum(parts)


def emit_families(n: int, symbols: Optional[GHLMSymbols] = None) -> FamilyMap:
    """
    The four families of first-order equations on G, H, L, M.

    The third family is summed over both orderings of (k1, k2) and the
    fourth over all six orderings of (k1, k2, k3). Zero instances are
    dropped, so every family is empty at n = 1.

    Returns:
        Family name ('I'..'IV') to {((j1, j2, j3), (k1..kd)): equation},
        with the k's sorted
    """
    s = symbols or GHLMSymbols(n)
    r = range(1, n + 1)
    families: FamilyMap = {name: {} for name in FAMILY_NAMES}
    for js in product(r, repeat=3):
        if js[1] == js[2]:
            continue
        candidates = {
            ('I', ()): _family_I(s, *js),
        }
        for k1 in r:
            candidates[('II', (k1,))] = _family_II(s, *js, k1)
        for ks in combinations_with_replacement(r, 2):
            candidates[('III', ks)] = Poly.sum(_tensor_III(s, *js, a, b) for a, b in permutations(ks))
        for ks in combinations_with_replacement(r, 3):
            candidates[('IV', ks)] = Poly.sum(_tensor_IV(s, *js, *perm) for perm in permutations(ks))
        for (name, ks), eq in candidates.items():
            if not eq.is_zero():
                families[name][(js, ks)] = eq
    logger.debug("emitted %s equations at n=%d", {k: len(v) for k, v in families.items()}, n)
    return families


def proportional(p: Poly, q: Poly) -> bool:
    """True when p = c * q for a nonzero rational c (or both vanish)."""
    if p.is_zero() or q.is_zero():
        return p.is_zero() and q.is_zero()
    mono, c = next(iter(p.items()))
    d = q.coefficient(mono)
    if not d:
        return False
    return (p - q.scale(Fraction(c) / Fraction(d))).is_zero()


def match_families(collected: FamilyMap, emitted: FamilyMap) -> List[Tuple[str, tuple]]:
    """
    Keys on which the two family maps disagree beyond a rational factor.

    An empty list means collect_families and emit_families agree.
    """
    mismatches = []
    for name in FAMILY_NAMES:
        left = collected.get(name, {})
        right = emitted.get(name, {})
        for key in sorted(set(left) | set(right)):
            if not proportional(left.get(key, Poly()), right.get(key, Poly())):
                mismatches.append((name, key))
    return mismatches


def unique_up_to_sign(equations) -> List[Poly]:
    seen = set()
    out = []
    for eq in equations:
        if eq.is_zero() or eq in seen or -eq in seen:
            continue
        seen.add(eq)
        out.append(eq)
    return out


# cubic template test -------------------------------------------------------

@dataclass
class CubicTest:
    """Outcome of cubic_test: the extracted G, H, L, M or a witness."""

    ghlm: Optional[Dict[GHLMKey, Poly]]
    witness: Optional[Poly] = None

    @property
    def is_cubic(self) -> bool:
        return self.ghlm is not None


def cubic_test(system: SecondOrderSystem) -> CubicTest:
    """
    Decide whether every F^{j1,j2} has the cubic form and extract G, H, L, M.

    The template is filled with placeholder unknowns; matching coefficients
    of each jet monomial gives a linear system with rational coefficients
    whose solution is the answer.

    Returns:
        CubicTest with ghlm set, or with ghlm None and the first violating
        monomial (or residual equation) as witness
    """
    n = system.n
    ctx = system.ctx
    placeholders = {key: BaseVar('?' + key[0] + ''.join(str(i) for i in key[1:]))
                    for key in ghlm_keys(n)}
    template_values = {key: Poly.from_atom(atom) for key, atom in placeholders.items()}

    equations: List[Poly] = []
    for j1, j2 in combinations_with_replacement(range(1, n + 1), 2):
        target = system.F(j1, j2).jet_view()
        for head in sorted(target, key=lambda h: tuple(a.key for a, _ in h)):
            degree = sum(e for _, e in head)
            if degree > 3 or any(atom.order != 1 for atom, _ in head):
                return CubicTest(None, Poly.from_monomial(head) * target[head])
        template = cubic_rhs(ctx, template_values, j1, j2).jet_view()
        for head in set(template) | set(target):
            eq = template.get(head, Poly()) - target.get(head, Poly())
            if not eq.is_zero():
                equations.append(eq)

    unknowns = list(placeholders.values())
    try:
        solution, residuals = solve_affine(equations, unknowns)
    except InconsistentLinearSystem as exc:
        return CubicTest(None, exc.witness)
    if residuals:
        return CubicTest(None, residuals[0])
    ghlm = {key: solution.get(atom, Poly()) for key, atom in placeholders.items()}
    return CubicTest(ghlm)


# transformation side -------------------------------------------------------

def ghlm_in_terms_of(n: int, box: BoxFunction) -> Dict[GHLMKey, Poly]:
    """
    G, H, L, M as combinations of the square functions given by `box`:
    G = -box^{n+1}_{a,b}, H^k = box^k_{a,b} - d^k_a box^{n+1}_{b,n+1}
    - d^k_b box^{n+1}_{a,n+1}, L^k_a = 2 box^k_{a,n+1} - d^k_a box^{n+1}_{n+1,n+1},
    M^k = box^k_{n+1,n+1}.
    """
    N = n + 1
    out: Dict[GHLMKey, Poly] = {}
    for key in ghlm_keys(n):
        kind = key[0]
        if kind == 'G':
            out[key] = -box(N, key[1], key[2])
        elif kind == 'H':
            k, a, b = key[1:]
            value = box(k, a, b)
            if k == a:
                value = value - box(N, b, N)
            if k == b:
                value = value - box(N, a, N)
            out[key] = value
        elif kind == 'L':
            k, a = key[1:]
            value = box(k, a, N) * 2
            if k == a:
                value = value - box(N, N, N)
            out[key] = value
        else:
            out[key] = box(key[1], N, N)
    return out


def ghlm_from_squares(n: int, symbols: Optional[GHLMSymbols] = None) -> Dict[GHLMKey, Poly]:
    s = symbols or GHLMSymbols(n)
    return ghlm_in_terms_of(n, s.Pi)


def target_form(n: int, symbols: Optional[GHLMSymbols] = None) -> Dict[Tuple[int, int], Poly]:
    """
    y_{j1,j2} written through the square functions, as a polynomial in the
    Pi symbols and the first-order jets.
    """
    s = symbols or GHLMSymbols(n)
    N = s.N
    r = range(1, n + 1)
    out = {}
    for j1, j2 in combinations_with_replacement(r, 2):
        total = -s.Pi(N, j1, j2)
        for k in r:
            linear = s.Pi(k, j1, j2)
            if k == j1:
                linear = linear - s.Pi(N, j2, N)
            if k == j2:
                linear = linear - s.Pi(N, j1, N)
            quad1 = s.Pi(k, j2, N) - (s.Pi(N, N, N).scale(HALF) if k == j2 else Poly())
            quad2 = s.Pi(k, j1, N) - (s.Pi(N, N, N).scale(HALF) if k == j1 else Poly())
            inner = linear + s.jet(j1) * quad1 + s.jet(j2) * quad2 + s.jet(j1) * s.jet(j2) * s.Pi(k, N, N)
            total = total + s.jet(k) * inner
        out[(j1, j2)] = total
    return out


def square_functions(n: int, transform: Optional[Mapping[FuncSym, Poly]] = None,
                     symbols: Optional[GHLMSymbols] = None) -> Dict[Tuple[int, int, int], FormalFraction]:
    """
    Pi^k_{a,b} for the transformation (X^1..X^n, Y).

    Pi^k_{a,b} is the Jacobian determinant of (X^1..X^n, Y) with respect to
    (x^1..x^n, y), column k replaced by the second derivatives along
    coordinates a and b, divided by the Jacobian itself.

    Args:
        n: Number of independent variables
        transform: Optional explicit polynomials replacing X^k and Y
    """
    s = symbols or GHLMSymbols(n)
    funcs = s.transformation()
    values = [f.poly() for f in funcs]
    if transform:
        values = [v.replace_functions(transform) for v in values]
    jac = [[s.d(v, c) for c in range(1, s.N + 1)] for v in values]
    delta_ = det(jac)
    if delta_.is_zero():
        raise JetsymError("the transformation has a vanishing Jacobian")
    out = {}
    for k in range(1, s.N + 1):
        for a, b in combinations_with_replacement(range(1, s.N + 1), 2):
            column = [s.d(v, a, b) for v in values]
            out[(k, a, b)] = FormalFraction(det(replace_column(jac, k - 1, column)), delta_)
    return out


def evaluate_squares(p: Poly, squares: Mapping[Tuple[int, int, int], FormalFraction]) -> FormalFraction:
    """Replace the Pi symbols of a polynomial linear in them by fractions."""
    total = FormalFraction(0)
    for mono, c in p.items():
        box = None
        rest = []
        for atom, e in mono:
            if isinstance(atom, DerivSym) and atom.func.name == 'Pi' and atom.total_order == 0:
                if box is not None or e != 1:
                    raise JetsymError("expression is not linear in the square functions")
                box = squares[atom.func.component]
            else:
                rest.append((atom, e))
        term = FormalFraction(Poly.from_monomial(tuple(rest), c))
        total = total + (term * box if box is not None else term)
    return total


def derive_target_system(n: int, symbols: Optional[GHLMSymbols] = None) -> Dict[Tuple[int, int], FormalFraction]:
    """
    The system satisfied by y(x) when Y(X) has vanishing second derivatives.

    With Y_X = p solving DX . p = DY by Cramer's rule (numerators N_j,
    denominator Delta), the conditions D_k(p) = 0 read
    sum_j D_k D_i X^j N_j - Delta D_k D_i Y = 0, each affine in y_{ik}.

    Returns:
        (i, k), i <= k, to y_{ik} as a fraction in the derivatives of X, Y
        and the first-order jets

    Raises:
        InconsistentLinearSystem: If the coefficient of some y_{ik} vanishes
    """
    s = symbols or GHLMSymbols(n)
    ctx = s.ctx
    funcs = s.transformation()
    xs, yf = [f.poly() for f in funcs[:-1]], funcs[-1].poly()
    r = range(1, n + 1)
    dx = [[total_diff(ctx, i, None, xk) for xk in xs] for i in r]
    dy = [total_diff(ctx, i, None, yf) for i in r]
    delta_n = det(dx)
    numerators = [det(replace_column(dx, col, dy)) for col in range(n)]

    out = {}
    for i, k in combinations_with_replacement(r, 2):
        jet = ctx.y(1, (i, k))
        ddx = [total_diff(ctx, k, None, row) for row in dx[i - 1]]
        ddy = total_diff(ctx, k, None, dy[i - 1])
        eq = Poly.sum(a * b for a, b in zip(ddx, numerators)) - delta_n * ddy
        coeff = eq.partial(jet)
        if coeff.is_zero():
            raise InconsistentLinearSystem(f"y[{i},{k}] drops out of its equation", witness=eq)
        rest = eq.substitute({jet: Poly()})
        out[(i, k)] = FormalFraction(-rest, coeff)
    logger.debug("target system at n=%d derived", n)
    return out


# auxiliary systems ---------------------------------------------------------

AuxKey = Tuple[int, int, int, int]


def first_aux_compat(n: int, symbols: Optional[GHLMSymbols] = None) -> Dict[AuxKey, Poly]:
    """
    Cross-differentiation conditions of Pi_{a,b,x^c} = -sum Pi Pi:

    d_j3 Pi^k1_{j1,j2} - d_j2 Pi^k1_{j1,j3}
        + sum_k2 Pi^k2_{j1,j2} Pi^k1_{j3,k2} - sum_k2 Pi^k2_{j1,j3} Pi^k1_{j2,k2}

    for all k1, j1, j2, j3 in 1..n+1, keyed (k1, j1, j2, j3). Zero
    instances (j2 = j3) are dropped.
    """
    s = symbols or GHLMSymbols(n)
    R = range(1, s.N + 1)
    out: Dict[AuxKey, Poly] = {}
    for k1, j1, j2, j3 in product(R, repeat=4):
        eq = (s.d(s.Pi(k1, j1, j2), j3) - s.d(s.Pi(k1, j1, j3), j2)
              + Poly.sum(s.Pi(k2, j1, j2) * s.Pi(k1, j3, k2) - s.Pi(k2, j1, j3) * s.Pi(k1, j2, k2)
                         for k2 in R))
        if not eq.is_zero():
            out[(k1, j1, j2, j3)] = eq
    return out


def split_first_aux(n: int, equations: Mapping[AuxKey, Poly]) -> Dict[str, Dict[AuxKey, Poly]]:
    """
    Six families according to which of k1 and (j1, j2, j3) equal n+1:

        'N;j1,j2,j3'  'N;j1,j2,N'  'N;N,j,N'
        'k;j1,j2,j3'  'k;j1,j2,N'  'k;N,j,N'

    with j2 < j3 in the first pattern. The remaining instances are negatives
    or cyclic combinations of these.
    """
    N = n + 1
    families: Dict[str, Dict[AuxKey, Poly]] = {
        f"{upper};{pattern}": {}
        for upper in ('N', 'k') for pattern in ('j1,j2,j3', 'j1,j2,N', 'N,j,N')
    }
    for key, eq in equations.items():
        k1, j1, j2, j3 = key
        upper = 'N' if k1 == N else 'k'
        if j1 <= n and j2 <= n and j3 <= n and j2 < j3:
            pattern = 'j1,j2,j3'
        elif j1 <= n and j2 <= n and j3 == N:
            pattern = 'j1,j2,N'
        elif j1 == N and j2 <= n and j3 == N:
            pattern = 'N,j,N'
        else:
            continue
        families[f"{upper};{pattern}"][key] = eq
    return families


def quasi_inversion(n: int, symbols: Optional[GHLMSymbols] = None) -> Dict[Tuple[int, int, int], Poly]:
    """
    Every Pi^k_{a,b} through G, H, L, M and the principal unknowns
    Theta^a = Pi^a_{a,a} (a <= n), Theta^{n+1} = Pi^{n+1}_{n+1,n+1}.
    """
    s = symbols or GHLMSymbols(n)
    N = s.N
    out: Dict[Tuple[int, int, int], Poly] = {}
    for k in range(1, N + 1):
        for a, b in combinations_with_replacement(range(1, N + 1), 2):
            if k <= n and b <= n:
                value = s.H(k, a, b)
                if k == a:
                    value = value + (s.Theta(b) - s.H(b, b, b)).scale(HALF)
                if k == b:
                    value = value + (s.Theta(a) - s.H(a, a, a)).scale(HALF)
            elif k <= n and a <= n:
                value = s.L(k, a).scale(HALF)
                if k == a:
                    value = value + s.Theta(N).scale(HALF)
            elif k <= n:
                value = s.M(k)
            elif b <= n:
                value = -s.G(a, b)
            elif a <= n:
                value = (s.Theta(a) - s.H(a, a, a)).scale(HALF)
            else:
                value = s.Theta(N)
            out[(k, a, b)] = value
    return out


@dataclass
class SecondAuxSolution:
    """First derivatives of the principal unknowns, solved from the first auxiliary system."""

    symbols: GHLMSymbols
    solution: Dict[Atom, Poly]
    residuals: List[Poly]

    def _lookup(self, a: int, axis: int) -> Poly:
        atom = _single_atom(self.symbols.d(self.symbols.Theta(a), axis))
        return self.solution[atom]

    def theta_x(self, j1: int, j2: int) -> Poly:
        return self._lookup(j1, j2)

    def theta_y(self, j: int) -> Poly:
        return self._lookup(j, self.symbols.N)

    def theta_n_x(self, j: int) -> Poly:
        return self._lookup(self.symbols.N, j)

    def theta_n_y(self) -> Poly:
        return self._lookup(self.symbols.N, self.symbols.N)


def substituted_first_aux(n: int, symbols: Optional[GHLMSymbols] = None) -> Dict[AuxKey, Poly]:
    """first_aux_compat with every Pi replaced through quasi_inversion."""
    s = symbols or GHLMSymbols(n)
    inversion = quasi_inversion(n, s)
    mapping = {s.pi_function(*key): value for key, value in inversion.items()}
    return {key: eq.replace_functions(mapping) for key, eq in first_aux_compat(n, s).items()}


def solve_second_aux(n: int, symbols: Optional[GHLMSymbols] = None) -> SecondAuxSolution:
    """
    Solve the substituted first auxiliary system for the n(n+2)+1 first
    derivatives of Theta.

    Theta^j1_{x^j2} comes from (n+1; j1, j2, n+1), Theta^j_y and
    Theta^{n+1}_{x^j} from the pair (n+1; n+1, j, n+1), (j; j, j, n+1), and
    Theta^{n+1}_y from (1; n+1, 1, n+1). Every other equation is reduced
    by these values and kept as a residual.

    Raises:
        InconsistentLinearSystem: If the system is inconsistent or some
            derivative is left undetermined
    """
    if n < 2:
        raise JetsymError("the second auxiliary system needs n >= 2")
    s = symbols or GHLMSymbols(n)
    N = s.N
    r = range(1, n + 1)
    equations = substituted_first_aux(n, s)

    order: List[AuxKey] = [(N, j1, j2, N) for j1 in r for j2 in r]
    for j in r:
        order += [(N, N, j, N), (j, j, j, N)]
    order += [(j, N, j, N) for j in r]
    chosen = set(order)
    order += sorted(key for key in equations if key not in chosen)
    ordered = [equations[key] for key in order if key in equations]

    unknowns = [_single_atom(s.d(s.Theta(a), b)) for a in r for b in r]
    unknowns += [_single_atom(s.d(s.Theta(j), N)) for j in r]
    unknowns += [_single_atom(s.d(s.Theta(N), j)) for j in r]
    unknowns.append(_single_atom(s.d(s.Theta(N), N)))

    solution, residuals = solve_affine(ordered, unknowns)
    for u in unknowns:
        if u not in solution:
            raise InconsistentLinearSystem(f"{u} is not determined", witness=u)
        if any(v in solution[u].atoms() for v in unknowns):
            raise InconsistentLinearSystem(f"{u} depends on another Theta derivative", witness=solution[u])
    logger.debug("second auxiliary system at n=%d: %d residual equations", n, len(residuals))
    return SecondAuxSolution(s, solution, residuals)


def second_aux_formulas(n: int, symbols: Optional[GHLMSymbols] = None, j: int = 1) -> Dict[str, Dict]:
    """
    Closed forms of the Theta derivatives, for comparison with solve_second_aux.

    Theta^{n+1}_y is written with the free index set to `j`.

    Returns:
        {'theta_x': {(j1, j2): ...}, 'theta_y': {j: ...},
         'theta_n_x': {j: ...}, 'theta_n_y': ...}
    """
    s = symbols or GHLMSymbols(n)
    N = s.N
    r = range(1, n + 1)
    G, H, L, M, T = s.G, s.H, s.L, s.M, s.Theta

    def h(a):
        return H(a, a, a)

    theta_x = {}
    for j1, j2 in product(r, repeat=2):
        theta_x[(j1, j2)] = (
            -s.d(G(j1, j2), N) * 2 + s.d(h(j1), j2)
            + Poly.sum(G(j2, l) * L(l, j1) for l in r)
            + (h(j1) * h(j2)).scale(HALF)
            - Poly.sum(H(l, j1, j2) * h(l) for l in r)
            - G(j1, j2) * T(N)
            - (h(j1) * T(j2)).scale(HALF)
            - (h(j2) * T(j1)).scale(HALF)
            + Poly.sum(H(l, j1, j2) * T(l) for l in r)
            + (T(j1) * T(j2)).scale(HALF))

    def shared(a: int, lead: Fraction, mixed: Fraction) -> Poly:
        # terms common to Theta^a_y and Theta^{n+1}_{x^a}; lead weights
        # G_{a,a} M^a, mixed weights the H L pair
        return ((G(a, a) * M(a)).scale(lead)
                + Poly.sum(G(a, l) * M(l) for l in r).scale(2 - lead)
                - Poly.sum(h(l) * L(l, a) for l in r).scale(HALF)
                + Poly.sum(H(a, a, l) * L(l, a) - H(l, a, a) * L(a, l) for l in r).scale(mixed)
                - (h(a) * T(N)).scale(HALF)
                + Poly.sum(L(l, a) * T(l) for l in r).scale(HALF)
                + (T(a) * T(N)).scale(HALF))

    third = Fraction(1, 3)
    theta_y = {a: -s.d(h(a), N).scale(third) + s.d(L(a, a), a).scale(2 * third)
               + shared(a, 4 * third, 2 * third) for a in r}
    theta_n_x = {a: -s.d(h(a), N).scale(2 * third) + s.d(L(a, a), a).scale(third)
                 + shared(a, 2 * third, third) for a in r}
    theta_n_y = (-s.d(L(j, j), N) + s.d(M(j), j) * 2
                 + Poly.sum(H(j, j, l) * M(l) for l in r) * 2
                 - Poly.sum(h(l) * M(l) for l in r)
                 - Poly.sum(L(l, j) * L(j, l) for l in r).scale(HALF)
                 + Poly.sum(M(l) * T(l) for l in r)
                 + (T(N) * T(N)).scale(HALF))
    return {'theta_x': theta_x, 'theta_y': theta_y, 'theta_n_x': theta_n_x, 'theta_n_y': theta_n_y}


def expand_compat_first(n: int, j1: int, j2: int, j3: int,
                        solved: Optional[SecondAuxSolution] = None) -> Poly:
    """
    (Theta^j1_{x^j2})_{x^j3} - (Theta^j1_{x^j3})_{x^j2} with every first
    derivative of Theta replaced by its solved value.

    Raises:
        JetsymError: If a Theta derivative survives the substitution
    """
    sol = solved or solve_second_aux(n)
    s = sol.symbols

    def piece(a: int, b: int, c: int) -> Poly:
        return s.d(sol.theta_x(a, b), c).substitute(sol.solution)

    result = piece(j1, j2, j3) - piece(j1, j3, j2)
    leftover = _theta_derivatives(result)
    if leftover:
        raise JetsymError(f"Theta derivatives left after substitution: {leftover}")
    return result


def reduce_modulo_families(expr: Poly, n: int, multiplier_degree: Optional[int] = None,
                           derivatives: Optional[bool] = None,
                           symbols: Optional[GHLMSymbols] = None) -> str:
    """
    Test whether `expr` is a rational combination of family instances.

    The generating set is every instance of the four families, their first
    derivatives along x and y (unless disabled) and the products of these
    with monomials of degree <= multiplier_degree in the undifferentiated
    functions occurring in `expr`.

    Returns:
        'reduced' when expr lies in the span, 'inconclusive' otherwise
    """
    settings = load_settings()['reduction']
    if multiplier_degree is None:
        multiplier_degree = int(settings.get('multiplier_degree', 1))
    if derivatives is None:
        derivatives = bool(settings.get('derivatives', True))
    if multiplier_degree < 0 or multiplier_degree > 2:
        raise JetsymError("multiplier degree must be 0, 1 or 2")
    if expr.is_zero():
        return 'reduced'

    s = symbols or GHLMSymbols(n)
    families = emit_families(n, s)
    base = unique_up_to_sign(eq for fam in families.values() for eq in fam.values())
    generators = list(base)
    if derivatives:
        generators += [s.d(eq, a) for eq in base for a in range(1, s.N + 1)]

    plain = sorted({a for a in expr.atoms() if isinstance(a, DerivSym) and a.total_order == 0},
                   key=lambda a: a.key)
    multipliers = [ONE]
    for degree in range(1, multiplier_degree + 1):
        for combo in combinations_with_replacement(plain, degree):
            m = ONE
            for atom in combo:
                m = m * Poly.from_atom(atom)
            multipliers.append(m)

    eliminator = SparseEliminator()
    for g in generators:
        for m in multipliers:
            eliminator.add(poly_vector(g * m))
    logger.debug("reduction basis at n=%d: %d vectors", n, len(eliminator))
    return 'reduced' if eliminator.contains(poly_vector(expr)) else 'inconclusive'
