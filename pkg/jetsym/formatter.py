"""
Printers for polynomials, fractions and vector fields.

Three outputs are supported: plain text that parse_expression reads back,
LaTeX in the bracketed-coefficient layout ([ ... ] y_1^2), and JSON-ready
lists of [monomial, coefficient] strings.
"""

from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence

from .kernel import Atom, BaseVar, DerivSym, FormalFraction, JetVar, Monomial, Poly, monomial_sort_key


def format_coefficient(c) -> str:
    """Rational coefficient as 'p' or 'p/q'."""
    c = Fraction(c)
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def format_monomial(mono: Monomial) -> str:
    """Atoms joined by '*', exponents written with '^'."""
    parts = []
    for atom, e in mono:
        parts.append(str(atom) if e == 1 else f"{atom}^{e}")
    return '*'.join(parts)


def format_text(p: Poly) -> str:
    """
    Parseable text form of a polynomial.

    Terms are ordered by degree and then by atom, so equal polynomials
    always print the same way.

    Args:
        p: Polynomial

    Returns:
        Text such as "15*Y_{y^3} - 75*X_{x,y^2}"
    """
    if p.is_zero():
        return '0'
    pieces: List[str] = []
    for mono, c in p.sorted_items():
        negative = c < 0
        magnitude = -c if negative else c
        body = format_monomial(mono)
        if not body:
            text = format_coefficient(magnitude)
        elif magnitude == 1:
            text = body
        else:
            text = f"{format_coefficient(magnitude)}*{body}"
        if not pieces:
            pieces.append(f"-{text}" if negative else text)
        else:
            pieces.append(f"- {text}" if negative else f"+ {text}")
    return ' '.join(pieces)


def format_fraction(q: FormalFraction) -> str:
    if q.den == Poly.constant(1):
        return format_text(q.num)
    return f"({format_text(q.num)})/({format_text(q.den)})"


# LaTeX ---------------------------------------------------------------------

def _latex_atom(atom: Atom) -> str:
    if isinstance(atom, BaseVar):
        name = atom.name
        if len(name) > 1 and name[1:].isdigit():
            return f"{name[0]}^{{{name[1:]}}}"
        return name
    if isinstance(atom, JetVar):
        if not atom.idx:
            return atom.label
        return f"{atom.label}_{{{','.join(str(i) for i in atom.idx)}}}"
    if isinstance(atom, DerivSym):
        head = atom.func.name
        if atom.func.component:
            head += f"^{{{','.join(str(c) for c in atom.func.component)}}}"
        dirs = []
        for coord, k in atom.directions():
            inner = _latex_atom(coord)
            dirs.append(inner if k == 1 else f"{inner}^{{{k}}}")
        if not dirs:
            return head
        return f"{head}_{{{' '.join(dirs)}}}"
    return str(atom)


def _latex_monomial(mono: Monomial) -> str:
    parts = []
    for atom, e in mono:
        text = _latex_atom(atom)
        if e != 1:
            text = f"\\left({text}\\right)^{{{e}}}" if ('_' in text or '^' in text) else f"{text}^{{{e}}}"
        parts.append(text)
    return ' '.join(parts)


def _latex_flat(p: Poly) -> str:
    if p.is_zero():
        return '0'
    out = []
    for mono, c in p.sorted_items():
        c = Fraction(c)
        sign = '-' if c < 0 else '+'
        mag = abs(c)
        coef = '' if mag == 1 and mono else (
            str(mag.numerator) if mag.denominator == 1 else f"\\frac{{{mag.numerator}}}{{{mag.denominator}}}")
        body = _latex_monomial(mono)
        term = f"{coef} {body}".strip()
        if not out:
            out.append(term if sign == '+' else f"-{term}")
        else:
            out.append(f"{sign} {term}")
    return ' '.join(out)


def format_latex(p: Poly, grouped: bool = True) -> str:
    """
    LaTeX form; with `grouped` the coefficient of each jet monomial is
    put in square brackets in front of it.
    """
    if not grouped:
        return _latex_flat(p)
    view = p.jet_view()
    if not view:
        return '0'
    lines = []
    for head in sorted(view, key=monomial_sort_key):
        coeff = _latex_flat(view[head])
        if not head:
            lines.append(coeff)
        else:
            lines.append(f"\\left[{coeff}\\right] {_latex_monomial(head)}")
    return ' \\\\\n+ '.join(lines)


# JSON ----------------------------------------------------------------------

def poly_to_json(p: Poly) -> List[List[str]]:
    """[[monomial, coefficient], ...] in display order."""
    return [[format_monomial(mono) or '1', format_coefficient(c)] for mono, c in p.sorted_items()]


def fraction_to_json(q: FormalFraction) -> Dict[str, Any]:
    return {'numerator': poly_to_json(q.num), 'denominator': poly_to_json(q.den)}


def format_combination(coeffs: Mapping[str, Any], order: Optional[Sequence[str]] = None) -> str:
    """
    A linear combination of named basis elements, e.g. "D + 2*E".

    Args:
        coeffs: Basis name to rational coefficient
        order: Display order of the names (default: insertion order)
    """
    names = list(order) if order is not None else list(coeffs)
    pieces = []
    for name in names:
        c = Fraction(coeffs.get(name, 0))
        if not c:
            continue
        mag = abs(c)
        text = name if mag == 1 else f"{format_coefficient(mag)}*{name}"
        if not pieces:
            pieces.append(f"-{text}" if c < 0 else text)
        else:
            pieces.append(f"- {text}" if c < 0 else f"+ {text}")
    return ' '.join(pieces) if pieces else '0'


def format_output(p, output_format: str = 'text'):
    """Dispatch on the report format used by the CLI."""
    if isinstance(p, FormalFraction):
        if output_format == 'json':
            return fraction_to_json(p)
        if output_format == 'latex':
            return f"\\frac{{{format_latex(p.num, grouped=False)}}}{{{format_latex(p.den, grouped=False)}}}"
        return format_fraction(p)
    if output_format == 'json':
        return poly_to_json(p)
    if output_format == 'latex':
        return format_latex(p)
    return format_text(p)
