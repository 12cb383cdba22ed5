"""
Regression tables and index templates for the prolongation and
composition formulas.

The scalar tables come from config/reference.yaml. The templates build
low order coefficients directly from their Kronecker-symbol expansion, a
route that shares no code with the inductive or the closed computation.
Template families and the n = 2 target system, both in its square-function
form and multiplied out over modified Jacobians, are tabulated in the same
file.
"""

import logging
import re
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement, product
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from .exceptions import JetsymError
from .faa_di_bruno import composition_functions, scalar_monomial
from .flatness import GHLMSymbols
from .jets import JetContext
from .kernel import FuncSym, Poly
from .linalg import det
from .parser import Scope, parse_expression
from .prolongation import generic_functions
from .symmetry import BracketTable
from .utils import delta, load_yaml

logger = logging.getLogger(__name__)

_TERM = re.compile(r"([+-]?)(?:(\d+(?:/\d+)?)\*)?([A-Za-z][A-Za-z0-9']*)")
_SCALAR_JET = re.compile(r"y\[(\d+)\]")


@lru_cache(maxsize=1)
def load_reference() -> Dict[str, Any]:
    """
    Load config/reference.yaml.

    Raises:
        JetsymError: If the table file is not installed
    """
    try:
        return load_yaml('reference.yaml')
    except FileNotFoundError:
        raise JetsymError("table file config/reference.yaml is missing from the installation")


def _table(section: str, order: int) -> Dict[str, Any]:
    tables = load_reference().get(section, {})
    if order not in tables:
        raise JetsymError(f"no {section} table for order {order}; available: {sorted(tables)}")
    return tables[order]


def reference_scalar_prolongation(order: int) -> Poly:
    """The tabulated scalar Y_order as a polynomial over the generic X, Y."""
    scope = Scope.for_generic_field(JetContext(1, 1, order))
    terms = []
    for mono, coeff in _table('scalar_prolongation', order).items():
        # y[k] in the table is the k-th derivative
        mono = _SCALAR_JET.sub(lambda m: f"y[{','.join('1' * int(m.group(1)))}]", str(mono))
        src = f"({coeff})" if mono == '1' else f"({coeff})*{mono}"
        terms.append(parse_expression(src, scope))
    return Poly.sum(terms)


def reference_fdb_coefficients(order: int) -> Dict[Tuple[int, ...], int]:
    """Tabulated coefficients of h_order keyed by block lengths."""
    return {tuple(int(part) for part in str(shape).split(',')): int(c)
            for shape, c in _table('faa_di_bruno', order).items()}


def reference_fdb(order: int) -> Poly:
    """The tabulated h_order as a polynomial in f- and g-derivatives."""
    return Poly.sum(scalar_monomial(len(shape), shape) * c
                    for shape, c in reference_fdb_coefficients(order).items())


def parse_combination(text: str) -> Dict[str, Fraction]:
    """
    Read a combination such as "-D - 2*E" back into {name: coefficient}.

    Raises:
        JetsymError: On text that is not a combination of names
    """
    compact = str(text).replace(' ', '')
    if compact == '0':
        return {}
    result: Dict[str, Fraction] = {}
    consumed = 0
    for match in _TERM.finditer(compact):
        if match.start() != consumed or (consumed and not match.group(1)):
            break
        sign, coeff, name = match.groups()
        value = Fraction(coeff) if coeff else Fraction(1)
        result[name] = result.get(name, Fraction(0)) + (-value if sign == '-' else value)
        consumed = match.end()
    if consumed != len(compact):
        raise JetsymError(f"cannot read combination '{text}'")
    return {name: c for name, c in result.items() if c}


def reference_brackets(model: str) -> Tuple[List[str], Dict[Tuple[str, str], Dict[str, Fraction]]]:
    """Basis names and tabulated [a, b] expansions of a model."""
    tables = load_reference().get('brackets', {})
    if model not in tables:
        raise JetsymError(f"no bracket table for '{model}'")
    names = [str(name) for name in tables[model]['names']]
    expected = {}
    for a, row in tables[model]['rows'].items():
        for b, entry in zip(names, row):
            expected[str(a), b] = parse_combination(entry)
    return names, expected


def bracket_mismatches(table: BracketTable, model: str) -> List[Tuple[str, str]]:
    """Ordered pairs whose computed expansion differs from the table."""
    names, expected = reference_brackets(model)
    bad = []
    for a in names:
        for b in names:
            entry = table.entries.get((a, b))
            if entry is None or entry.status != 'ok' or entry.coefficients != expected[a, b]:
                bad.append((a, b))
    return bad


# Kronecker templates -------------------------------------------------------

def first_order_template(ctx: JetContext, j: int, i: int) -> Poly:
    """
    Y^j_i written as

        Y^j_{x^i} + sum_{k,l} [delta^k_i Y^j_{y^l} - delta^j_l X^k_{x^i}] y^l_k
                  - sum_{k1,k2,l1,l2} delta^{k1}_i delta^j_{l2} X^{k2}_{y^l1} y^l1_k1 y^l2_k2
    """
    xs, ys = generic_functions(ctx)
    xi = ctx.x(i)
    terms = [ys[j - 1].derivative(xi)]
    for k, l in product(range(1, ctx.n + 1), range(1, ctx.m + 1)):
        bracket = ys[j - 1].derivative(ctx.y(l)) * delta(k, i) - xs[k - 1].derivative(xi) * delta(j, l)
        terms.append(bracket * Poly.from_atom(ctx.y(l, (k,))))
    for k1, k2, l1, l2 in product(range(1, ctx.n + 1), range(1, ctx.n + 1),
                                  range(1, ctx.m + 1), range(1, ctx.m + 1)):
        weight = delta(k1, i) * delta(j, l2)
        if weight:
            terms.append(-xs[k2 - 1].derivative(ctx.y(l1))
                         * Poly.from_atom(ctx.y(l1, (k1,))) * Poly.from_atom(ctx.y(l2, (k2,))))
    return Poly.sum(terms)


def second_order_template(ctx: JetContext, i1: int, i2: int) -> Poly:
    """
    Y_{i1,i2} for a single dependent variable, term by term in the jets
    y_k and y_{k1,k2}.
    """
    if ctx.m != 1:
        raise JetsymError("the second order template is written for m = 1")
    xs, (Y,) = generic_functions(ctx)
    x1, x2, y = ctx.x(i1), ctx.x(i2), ctx.y(1)

    def jet(*idx: int) -> Poly:
        return Poly.from_atom(ctx.y(1, idx))

    terms = [Y.derivative(x1, x2),
             Y.derivative(x1, y) * jet(i2),
             Y.derivative(x2, y) * jet(i1),
             Y.derivative(y, y) * jet(i1) * jet(i2),
             Y.derivative(y) * jet(i1, i2)]
    for k in range(1, ctx.n + 1):
        X = xs[k - 1]
        terms.extend([
            -X.derivative(x1, x2) * jet(k),
            -X.derivative(x2, y) * jet(i1) * jet(k),
            -X.derivative(x1, y) * jet(i2) * jet(k),
            -X.derivative(y, y) * jet(i1) * jet(i2) * jet(k),
            -X.derivative(x2) * jet(i1, k),
            -X.derivative(x1) * jet(i2, k),
            -X.derivative(y) * (jet(i1, i2) * jet(k) + jet(i2) * jet(i1, k) + jet(i1) * jet(i2, k)),
        ])
    return Poly.sum(terms)


# Kronecker block templates -------------------------------------------------

_TEMPLATE_TOKEN = re.compile(
    r"(?P<num>\d+(?:/\d+)?)"
    r"|d\((?P<lower>[\w,]+);(?P<upper>[\w,]+)\)"
    r"|(?P<jet>[yg])\[(?:(?P<dep>\w+);)?(?P<idx>[\w,]+)\]"
    r"|(?P<func>[XYf])(?:\^(?P<comp>\w+))?\{(?P<dirs>[\w,]*)\}")
_SUMMED = re.compile(r"\b[kl]\d+\b")


class _BlockReader:
    """
    Reads template text over the coordinates of a jet space.

    Names kN and lN are summed over 1..n and 1..m; every other index name
    must be bound by the caller.
    """

    def __init__(self, ctx: JetContext, functions: Dict[str, List[FuncSym]]):
        self.ctx = ctx
        self.functions = functions

    def span(self, name: str) -> range:
        return range(1, (self.ctx.n if name[0] == 'k' else self.ctx.m) + 1)

    @staticmethod
    def index(name: str, binding: Mapping[str, int]) -> int:
        if name.isdigit():
            return int(name)
        if name not in binding:
            raise JetsymError(f"template index '{name}' is not bound")
        return binding[name]

    def direction(self, name: str, binding: Mapping[str, int]):
        if name == 'x':
            return self.ctx.x(1)
        if name == 'y':
            return self.ctx.y(1)
        value = self.index(name, binding)
        return self.ctx.y(value) if name[0] == 'l' else self.ctx.x(value)

    def term(self, text: str, binding: Mapping[str, int]) -> Optional[Poly]:
        """The product a text names, or None when one of its Kronecker symbols vanishes."""
        text = text.strip()
        value = Poly.constant(-1 if text.startswith('-') else 1)
        for token in text.lstrip('+-').split():
            match = _TEMPLATE_TOKEN.fullmatch(token)
            if match is None:
                raise JetsymError(f"cannot read template token '{token}'")
            if match['num']:
                value = value.scale(Fraction(match['num']))
            elif match['lower']:
                lower = [self.index(a, binding) for a in match['lower'].split(',')]
                upper = [self.index(a, binding) for a in match['upper'].split(',')]
                if len(lower) != len(upper):
                    raise JetsymError(f"unbalanced Kronecker symbol '{token}'")
                if lower != upper:
                    return None
            elif match['jet']:
                dep = self.index(match['dep'], binding) if match['dep'] else 1
                idx = tuple(self.index(a, binding) for a in match['idx'].split(','))
                if match['jet'] == 'y':
                    value = value * Poly.from_atom(self.ctx.y(dep, idx))
                else:
                    g = self.functions['g'][dep - 1]
                    value = value * g.derivative(*(self.ctx.x(i) for i in idx))
            else:
                name = match['func']
                if name == 'Y':
                    func = self.functions['Y'][binding.get('j', 1) - 1]
                else:
                    comp = self.index(match['comp'], binding) if match['comp'] else 1
                    func = self.functions[name][comp - 1]
                dirs = [self.direction(a, binding) for a in match['dirs'].split(',') if a]
                value = value * func.derivative(*dirs)
        return value

    def expand(self, blocks: Sequence[Mapping[str, Any]], binding: Mapping[str, int]) -> Poly:
        terms = []
        for block in blocks:
            factor = str(block.get('factor', ''))
            texts = [str(t) for t in block['terms']]
            names = sorted(set(_SUMMED.findall(' '.join([factor] + texts))))
            for values in product(*(self.span(name) for name in names)):
                scope = dict(binding)
                scope.update(zip(names, values))
                head = self.term(factor, scope)
                body = [t for t in (self.term(text, scope) for text in texts) if t is not None]
                if head is not None and body:
                    terms.append(head * Poly.sum(body))
        return Poly.sum(terms)


def _template_blocks(section: str, name: str, n: int, m: int, order: int) -> List[Mapping[str, Any]]:
    families = load_reference().get(section, {})
    if name not in families:
        raise JetsymError(f"no {section} family '{name}'; available: {sorted(families)}")
    family = families[name]
    for key, value in (('n', n), ('m', m)):
        if key in family and family[key] != value:
            raise JetsymError(f"{section} family '{name}' is written for {key} = {family[key]}")
    orders = family['orders']
    if order not in orders:
        raise JetsymError(f"{section} family '{name}' has no order {order}; available: {sorted(orders)}")
    return orders[order]


def template_orders(section: str, name: str) -> List[int]:
    """Orders tabulated for a template family."""
    families = load_reference().get(section, {})
    if name not in families:
        raise JetsymError(f"no {section} family '{name}'")
    return sorted(families[name]['orders'])


def prolongation_template(name: str, ctx: JetContext, j: int, idx: Sequence[int]) -> Poly:
    """
    Y^j_{idx} of the generic field from a tabulated template family.

    Args:
        name: 'one_dependent', 'one_independent' or 'general'
        ctx: Jet space of the coefficient
        j: Dependent index
        idx: Directions i1..ik, bound in that order

    Raises:
        JetsymError: Unknown family or order, or a family written for
            another n or m
    """
    blocks = _template_blocks('prolongation_templates', name, ctx.n, ctx.m, len(idx))
    xs, ys = generic_functions(ctx)
    binding = {f"i{p}": i for p, i in enumerate(idx, 1)}
    binding['j'] = j
    logger.debug("%s template for j=%d, %s", name, j, tuple(idx))
    return _BlockReader(ctx, {'X': xs, 'Y': ys}).expand(blocks, binding)


def composition_template(name: str, n: int, m: int, idx: Sequence[int]) -> Poly:
    """
    h_{idx} of h = f(g^1, .., g^m) from a tabulated template family.

    Args:
        name: 'one_outer_variable', 'one_inner_variable' or 'general'
        n: Number of variables of the inner maps
        m: Number of inner maps
        idx: Directions i1..ik
    """
    blocks = _template_blocks('composition_templates', name, n, m, len(idx))
    f, gs = composition_functions(n, m)
    binding = {f"i{p}": i for p, i in enumerate(idx, 1)}
    return _BlockReader(JetContext(n, m, 0), {'f': [f], 'g': gs}).expand(blocks, binding)


# target system at n = 2 ----------------------------------------------------

_COLUMN_AXIS = re.compile(r"x(\d+)|y")


def _modified_jacobian(s: GHLMSymbols, columns: str) -> Poly:
    values = [f.poly() for f in s.transformation()]
    axes = [[int(a) if a else s.N for a in _COLUMN_AXIS.findall(column)] for column in columns.split('|')]
    if len(axes) != s.N:
        raise JetsymError(f"modified Jacobian '{columns}' needs {s.N} columns")
    return det([[s.d(v, *col) for col in axes] for v in values])


def _target_section(s: GHLMSymbols) -> Mapping[str, Any]:
    section = load_reference().get('target_system', {})
    if section.get('n') != s.n:
        raise JetsymError(f"the target system is tabulated for n = {section.get('n')} only")
    return section


def reference_target_entries(symbols: Optional[GHLMSymbols] = None) -> Dict[Tuple[int, int], Poly]:
    """Tabulated y_{a,b} of the target system through the square functions Pi."""
    s = symbols or GHLMSymbols(2)
    scope = Scope(s.ctx)
    for k in range(1, s.N + 1):
        for a, b in combinations_with_replacement(range(1, s.N + 1), 2):
            scope.declare(s.pi_function(k, a, b))
    return {tuple(int(i) for i in str(key).split(',')): parse_expression(str(text), scope)
            for key, text in _target_section(s)['entries'].items()}


def reference_cleared_target(symbols: Optional[GHLMSymbols] = None) -> Tuple[Dict[Tuple[int, int], Poly], Poly]:
    """
    The target system multiplied by the Jacobian of (X^1, X^2, Y).

    Returns:
        (a, b) to the sum R with 0 = y_{a,b} * J + R, and the Jacobian J
    """
    s = symbols or GHLMSymbols(2)
    section = _target_section(s)
    jacobian = _modified_jacobian(s, 'x1|x2|y')
    out = {}
    for key, rows in section['cleared'].items():
        terms = [parse_expression(str(mono), s.ctx) * _modified_jacobian(s, str(columns)) * int(c)
                 for mono, c, columns in rows]
        out[tuple(int(i) for i in str(key).split(','))] = Poly.sum(terms)
    return out, jacobian
