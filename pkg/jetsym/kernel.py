"""
Exact symbolic kernel.

Atoms (base variables, jet variables, derivative symbols of formal
functions), sparse polynomials with exact rational coefficients, formal
fractions compared by cross-multiplication, and the raw expression trees
produced by the parser.

A single sparse type, Poly, plays both roles of "jet polynomial" and
"coefficient polynomial": its alphabet mixes jet variables and derivative
symbols, and `jet_view()` regroups it by jet monomial when the bracketed
layout is wanted.
"""

import logging
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .exceptions import ExpansionLimitError, JetsymError, NegativePowerError, ZeroDenominatorError
from .utils import max_terms

logger = logging.getLogger(__name__)

Coefficient = Union[int, Fraction]
Monomial = Tuple[Tuple['Atom', int], ...]

# Only check the configured cap once a dict is this large.
_SIZE_CHECK_FLOOR = 4096


class Atom:
    """Base class of polynomial variables; ordered and hashed by `key`."""

    __slots__ = ('key', '_hash')

    def _set_key(self, key: tuple) -> None:
        self.key = key
        self._hash = hash(key)

    def __eq__(self, other):
        return isinstance(other, Atom) and self.key == other.key

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"{type(self).__name__}({self})"


class BaseVar(Atom):
    """An independent coordinate x^i, or a free parameter."""

    __slots__ = ('name',)

    def __init__(self, name: str):
        self.name = name
        self._set_key((0, name))

    def __str__(self):
        return self.name


class JetVar(Atom):
    """
    The jet coordinate y^j_{i1..il}; an empty index is y^j itself.

    The index is stored sorted, which realizes the symmetry of mixed
    partial derivatives. `label` is the display name of y^j and takes no
    part in equality.
    """

    __slots__ = ('dep', 'idx', 'label')

    def __init__(self, dep: int, idx: Sequence[int] = (), label: str = 'y'):
        self.dep = dep
        self.idx = tuple(sorted(idx))
        self.label = label
        self._set_key((1, dep, len(self.idx), self.idx))

    @property
    def order(self) -> int:
        return len(self.idx)

    def extend(self, *directions: int) -> 'JetVar':
        """The jet obtained by differentiating once more along each direction."""
        return JetVar(self.dep, self.idx + tuple(directions), self.label)

    def __str__(self):
        if not self.idx:
            return self.label
        return f"{self.label}[{','.join(str(i) for i in self.idx)}]"


Coordinate = Union[BaseVar, JetVar]


class FuncSym:
    """
    A formal function such as X^k, Y^j, G_{j1,j2} or Pi of its coordinates.

    Args:
        name: Function name
        component: Upper/lower indices distinguishing members of a family
        dependency: Coordinates the function depends on (nonempty, no repeats)
    """

    __slots__ = ('name', 'component', 'dependency', 'key', '_hash', '_positions')

    def __init__(self, name: str, component: Sequence[int] = (), dependency: Sequence[Coordinate] = ()):
        dependency = tuple(dependency)
        if not dependency:
            raise JetsymError(f"function {name} needs at least one dependency")
        if len(set(dependency)) != len(dependency):
            raise JetsymError(f"function {name} has a repeated dependency")
        self.name = name
        self.component = tuple(component)
        self.dependency = dependency
        self.key = (name, self.component, tuple(c.key for c in dependency))
        self._hash = hash(self.key)
        self._positions = {c: pos for pos, c in enumerate(dependency)}

    def __eq__(self, other):
        return isinstance(other, FuncSym) and self.key == other.key

    def __hash__(self):
        return self._hash

    def position(self, coord: Coordinate) -> Optional[int]:
        return self._positions.get(coord)

    @property
    def sym(self) -> 'DerivSym':
        """The undifferentiated function as a polynomial atom."""
        return DerivSym(self, (0,) * len(self.dependency))

    def poly(self) -> 'Poly':
        return Poly.from_atom(self.sym)

    def derivative(self, *coords: Coordinate) -> 'Poly':
        """Formal partial derivative along the given coordinates (repeats allowed)."""
        result = self.poly()
        for coord in coords:
            result = result.diff(coord)
        return result

    def __str__(self):
        if self.component:
            return f"{self.name}<{','.join(str(c) for c in self.component)}>"
        return self.name

    def __repr__(self):
        return f"FuncSym({self}({', '.join(str(c) for c in self.dependency)}))"


class DerivSym(Atom):
    """
    A partial derivative of a FuncSym.

    `order` is a count vector aligned with the function's dependency, so
    the accumulated directions form a multiset.
    """

    __slots__ = ('func', 'order')

    def __init__(self, func: FuncSym, order: Sequence[int]):
        order = tuple(order)
        if len(order) != len(func.dependency) or any(k < 0 for k in order):
            raise JetsymError(f"bad derivative order {order} for {func}")
        self.func = func
        self.order = order
        self._set_key((2, func.key, order))

    @property
    def total_order(self) -> int:
        return sum(self.order)

    def directions(self) -> List[Tuple[Coordinate, int]]:
        return [(c, k) for c, k in zip(self.func.dependency, self.order) if k]

    def __str__(self):
        parts = []
        for coord, k in self.directions():
            parts.append(str(coord) if k == 1 else f"{coord}^{k}")
        if not parts:
            return str(self.func)
        return f"{self.func}_{{{','.join(parts)}}}"


def _clean(c: Coefficient) -> Coefficient:
    if type(c) is Fraction and c.denominator == 1:
        return c.numerator
    return c


def _atom_of(item):
    return item[0].key


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    """Product of two canonical monomials."""
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for atom, e in b:
        merged[atom] = merged.get(atom, 0) + e
    return tuple(sorted(merged.items(), key=_atom_of))


def mono_degree(mono: Monomial) -> int:
    return sum(e for _, e in mono)


def monomial_sort_key(mono: Monomial):
    """Deterministic display order: by degree, then by atom keys."""
    return (mono_degree(mono), tuple((a.key, e) for a, e in mono))


def _check_size(terms: dict) -> None:
    if len(terms) > _SIZE_CHECK_FLOOR:
        limit = max_terms()
        if len(terms) > limit:
            raise ExpansionLimitError(len(terms), limit)


def _accumulate(out: dict, mono: Monomial, c: Coefficient) -> None:
    s = out.get(mono, 0) + c
    if s:
        out[mono] = s
    else:
        out.pop(mono, None)


class Poly:
    """
    Sparse polynomial with exact rational coefficients.

    `terms` maps canonical monomials (sorted tuples of (atom, exponent)) to
    nonzero coefficients. Instances are treated as immutable.
    """

    __slots__ = ('terms',)

    def __init__(self, terms: Optional[Dict[Monomial, Coefficient]] = None):
        self.terms = terms if terms is not None else {}

    # construction ---------------------------------------------------------

    @classmethod
    def constant(cls, c) -> 'Poly':
        c = _clean(Fraction(c)) if not isinstance(c, int) else c
        return cls({(): c}) if c else cls()

    @classmethod
    def from_atom(cls, atom: Atom, exponent: int = 1) -> 'Poly':
        return cls({((atom, exponent),): 1})

    @classmethod
    def from_monomial(cls, mono: Monomial, c: Coefficient = 1) -> 'Poly':
        return cls({mono: _clean(c)}) if c else cls()

    @classmethod
    def coerce(cls, value) -> 'Poly':
        if isinstance(value, Poly):
            return value
        if isinstance(value, (int, Fraction)):
            return cls.constant(value)
        if isinstance(value, Atom):
            return cls.from_atom(value)
        if isinstance(value, FuncSym):
            return value.poly()
        raise TypeError(f"cannot turn {type(value).__name__} into a polynomial")

    @classmethod
    def sum(cls, polys: Iterable['Poly']) -> 'Poly':
        out: dict = {}
        for p in polys:
            for mono, c in p.terms.items():
                _accumulate(out, mono, c)
        _check_size(out)
        return cls({m: _clean(c) for m, c in out.items()})

    # inspection -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_term(self) -> Coefficient:
        return self.terms.get((), 0)

    def coefficient(self, mono: Monomial) -> Coefficient:
        return self.terms.get(mono, 0)

    def items(self):
        return self.terms.items()

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda t: monomial_sort_key(t[0]))

    def atoms(self) -> set:
        found = set()
        for mono in self.terms:
            for atom, _ in mono:
                found.add(atom)
        return found

    def degree(self, predicate: Callable[[Atom], bool] = None) -> int:
        """Largest total degree, counting only atoms accepted by `predicate`."""
        best = 0
        for mono in self.terms:
            d = sum(e for a, e in mono if predicate is None or predicate(a))
            best = max(best, d)
        return best

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        try:
            other = Poly.coerce(other)
        except TypeError:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for mono, c in other.terms.items():
            _accumulate(out, mono, c)
        _check_size(out)
        return Poly({m: _clean(c) for m, c in out.items()})

    __radd__ = __add__

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        try:
            other = Poly.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Poly.coerce(other) - self

    def scale(self, factor) -> 'Poly':
        if not factor:
            return Poly()
        return Poly({m: _clean(c * factor) for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        try:
            other = Poly.coerce(other)
        except TypeError:
            return NotImplemented
        if not self.terms or not other.terms:
            return Poly()
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                _accumulate(out, mono_mul(m1, m2), c1 * c2)
        _check_size(out)
        return Poly({m: _clean(c) for m, c in out.items()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Poly):
            if not other.is_constant():
                raise JetsymError("polynomial division is only by nonzero constants")
            other = other.constant_term()
        if not other:
            raise ZeroDenominatorError("division by zero")
        return self.scale(Fraction(1) / Fraction(other))

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("exponent must be an integer")
        if k < 0:
            raise NegativePowerError(f"negative power {k}; use FormalFraction")
        result = Poly.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        try:
            other = Poly.coerce(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # calculus -------------------------------------------------------------

    def derive(self, image: Callable[[Atom], Optional['Poly']]) -> 'Poly':
        """
        Apply the derivation determined by its values on atoms.

        Args:
            image: Returns the derivative of an atom, or None for zero

        Returns:
            The derived polynomial
        """
        cache: Dict[Atom, Optional[Poly]] = {}
        out: dict = {}
        for mono, c in self.terms.items():
            for pos, (atom, e) in enumerate(mono):
                if atom in cache:
                    d = cache[atom]
                else:
                    d = cache[atom] = image(atom)
                if d is None or not d.terms:
                    continue
                if e == 1:
                    rest = mono[:pos] + mono[pos + 1:]
                else:
                    rest = mono[:pos] + ((atom, e - 1),) + mono[pos + 1:]
                factor = c * e
                for m2, c2 in d.terms.items():
                    _accumulate(out, mono_mul(rest, m2), factor * c2)
        _check_size(out)
        return Poly({m: _clean(c) for m, c in out.items()})

    def partial(self, atom: Atom) -> 'Poly':
        """Plain partial derivative with respect to one atom."""
        one = Poly.constant(1)
        return self.derive(lambda a: one if a == atom else None)

    def diff(self, coord: Coordinate) -> 'Poly':
        """
        Partial derivative along a coordinate, differentiating formal
        functions that depend on it through formal_partial.
        """
        one = Poly.constant(1)
        return self.derive(chain_image(lambda a: one if a == coord else None))

    def substitute(self, mapping: Mapping[Atom, 'Poly']) -> 'Poly':
        """Replace atoms by polynomials."""
        if not mapping:
            return self
        powers: Dict[Tuple[Atom, int], Poly] = {}
        out: dict = {}
        for mono, c in self.terms.items():
            factor = None
            rest = []
            for atom, e in mono:
                if atom in mapping:
                    key = (atom, e)
                    if key not in powers:
                        powers[key] = Poly.coerce(mapping[atom]) ** e
                    factor = powers[key] if factor is None else factor * powers[key]
                else:
                    rest.append((atom, e))
            if factor is None:
                _accumulate(out, mono, c)
                continue
            rest_mono = tuple(rest)
            for m2, c2 in factor.terms.items():
                _accumulate(out, mono_mul(rest_mono, m2), c * c2)
        _check_size(out)
        return Poly({m: _clean(c) for m, c in out.items()})

    def evaluate(self, values: Mapping[Atom, Coefficient]) -> 'Poly':
        return self.substitute({a: Poly.constant(v) for a, v in values.items()})

    def replace_functions(self, mapping: Mapping[FuncSym, 'Poly']) -> 'Poly':
        """
        Replace formal functions by explicit polynomials; a derivative
        symbol becomes the matching derivative of the replacement.
        """
        if not mapping:
            return self
        subs: Dict[Atom, Poly] = {}
        for atom in self.atoms():
            if isinstance(atom, DerivSym) and atom.func in mapping:
                value = Poly.coerce(mapping[atom.func])
                for coord, k in atom.directions():
                    for _ in range(k):
                        value = value.diff(coord)
                subs[atom] = value
        return self.substitute(subs)

    # views ----------------------------------------------------------------

    def split(self, predicate: Callable[[Atom], bool]) -> Dict[Monomial, 'Poly']:
        """
        Group terms by the part of their monomial made of accepted atoms.

        Returns:
            Map from the accepted sub-monomial to the polynomial cofactor
        """
        groups: Dict[Monomial, dict] = {}
        for mono, c in self.terms.items():
            head = tuple(t for t in mono if predicate(t[0]))
            tail = tuple(t for t in mono if not predicate(t[0]))
            groups.setdefault(head, {})[tail] = c
        return {head: Poly(terms) for head, terms in groups.items()}

    def jet_view(self, predicate: Callable[[Atom], bool] = None) -> Dict[Monomial, 'Poly']:
        """Regroup by monomials in jet variables of order one or more."""
        if predicate is None:
            predicate = is_proper_jet
        return self.split(predicate)

    def __str__(self):
        from .formatter import format_text
        return format_text(self)

    def __repr__(self):
        return f"Poly({self})"


def is_proper_jet(atom: Atom) -> bool:
    return isinstance(atom, JetVar) and atom.order > 0


ZERO = Poly()
ONE = Poly.constant(1)


def formal_partial(d: DerivSym, v: Coordinate) -> Poly:
    """
    Differentiate a derivative symbol once more along `v`.

    Returns:
        The symbol with `v` added to its order, or zero when the function
        does not depend on `v`
    """
    pos = d.func.position(v)
    if pos is None:
        return Poly()
    order = list(d.order)
    order[pos] += 1
    return Poly.from_atom(DerivSym(d.func, order))


def chain_image(base: Callable[[Atom], Optional[Poly]]) -> Callable[[Atom], Optional[Poly]]:
    """
    Extend a derivation given on coordinates to derivative symbols by the
    chain rule: V(f_a) = sum over c of f_{a,c} * V(c).
    """
    def image(atom: Atom) -> Optional[Poly]:
        if isinstance(atom, DerivSym):
            parts = []
            for coord in atom.func.dependency:
                value = base(coord)
                if value is None or not value.terms:
                    continue
                parts.append(formal_partial(atom, coord) * value)
            return Poly.sum(parts) if parts else None
        return base(atom)
    return image


class FormalFraction:
    """
    Unreduced quotient of two polynomials.

    Equality is decided by cross-multiplication, so no gcd is ever taken.
    """

    __slots__ = ('num', 'den')

    def __init__(self, num, den=1):
        num = Poly.coerce(num)
        den = Poly.coerce(den)
        if den.is_zero():
            raise ZeroDenominatorError("fraction with zero denominator")
        self.num = num
        self.den = den

    @classmethod
    def coerce(cls, value) -> 'FormalFraction':
        if isinstance(value, FormalFraction):
            return value
        return cls(value, 1)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other):
        other = FormalFraction.coerce(other)
        if self.den == other.den:
            return FormalFraction(self.num + other.num, self.den)
        return FormalFraction(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return FormalFraction(-self.num, self.den)

    def __sub__(self, other):
        return self + (-FormalFraction.coerce(other))

    def __rsub__(self, other):
        return FormalFraction.coerce(other) - self

    def __mul__(self, other):
        other = FormalFraction.coerce(other)
        return FormalFraction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = FormalFraction.coerce(other)
        if other.num.is_zero():
            raise ZeroDenominatorError("division by a zero fraction")
        return FormalFraction(self.num * other.den, self.den * other.num)

    def __eq__(self, other):
        if not isinstance(other, (FormalFraction, Poly, int, Fraction)):
            return NotImplemented
        return fraction_equal(self, FormalFraction.coerce(other))

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def __str__(self):
        from .formatter import format_text
        return f"({format_text(self.num)})/({format_text(self.den)})"

    def __repr__(self):
        return f"FormalFraction{self}"


def fraction_equal(a: FormalFraction, b: FormalFraction) -> bool:
    """
    Decide a == b as a.num * b.den - b.num * a.den == 0.

    Raises:
        ZeroDenominatorError: If either denominator is zero
    """
    if a.den.is_zero() or b.den.is_zero():
        raise ZeroDenominatorError("fraction with zero denominator")
    return (a.num * b.den - b.num * a.den).is_zero()


# raw expression trees ------------------------------------------------------

class Expr:
    """Unnormalized expression tree node."""

    __slots__ = ()


class Num(Expr):
    __slots__ = ('value',)

    def __init__(self, value):
        self.value = Fraction(value)


class Sym(Expr):
    __slots__ = ('atom',)

    def __init__(self, atom: Atom):
        self.atom = atom


class Add(Expr):
    __slots__ = ('args',)

    def __init__(self, *args: Expr):
        self.args = args


class Mul(Expr):
    __slots__ = ('args',)

    def __init__(self, *args: Expr):
        self.args = args


class Pow(Expr):
    __slots__ = ('base', 'exponent')

    def __init__(self, base: Expr, exponent: int):
        self.base = base
        self.exponent = exponent


class Neg(Expr):
    __slots__ = ('arg',)

    def __init__(self, arg: Expr):
        self.arg = arg


class Partial(Expr):
    """Partial derivative of a subexpression along a coordinate."""

    __slots__ = ('arg', 'coord')

    def __init__(self, arg: Expr, coord: Coordinate):
        self.arg = arg
        self.coord = coord


def normalize(tree) -> Poly:
    """
    Bring an expression tree (or an already normal polynomial) to canonical form.

    Raises:
        NegativePowerError: For a negative exponent
    """
    if isinstance(tree, Poly):
        return tree
    if isinstance(tree, (int, Fraction)):
        return Poly.constant(tree)
    if isinstance(tree, Atom):
        return Poly.from_atom(tree)
    if isinstance(tree, Num):
        return Poly.constant(tree.value)
    if isinstance(tree, Sym):
        return Poly.from_atom(tree.atom)
    if isinstance(tree, Add):
        return Poly.sum(normalize(a) for a in tree.args)
    if isinstance(tree, Mul):
        result = Poly.constant(1)
        for a in tree.args:
            result = result * normalize(a)
        return result
    if isinstance(tree, Neg):
        return -normalize(tree.arg)
    if isinstance(tree, Pow):
        if tree.exponent < 0:
            raise NegativePowerError(f"negative power {tree.exponent}; use FormalFraction")
        return normalize(tree.base) ** tree.exponent
    if isinstance(tree, Partial):
        return normalize(tree.arg).diff(tree.coord)
    raise TypeError(f"cannot normalize {type(tree).__name__}")
