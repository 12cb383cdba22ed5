"""
Tests for the text, LaTeX and JSON printers.
"""

from fractions import Fraction

from jetsym.formatter import (format_coefficient, format_combination, format_latex, format_output,
                              format_text, poly_to_json)
from jetsym.kernel import FormalFraction, Poly
from jetsym.reference import parse_combination


def test_format_coefficient():
    """Test integer and rational coefficients."""
    assert format_coefficient(5) == '5'
    assert format_coefficient(Fraction(-3, 4)) == '-3/4'
    assert format_coefficient(Fraction(6, 3)) == '2'


def test_format_text_order(scalar_ctx):
    """Test that terms print by degree with signs between them."""
    p = Poly.from_atom(scalar_ctx.y(1, (1,))) * 3 - 2
    assert format_text(p) == '-2 + 3*y[1]'
    assert format_text(Poly()) == '0'
    assert format_text(Poly.from_atom(scalar_ctx.x(1), 2) * Fraction(1, 4)) == '1/4*x^2'


def test_format_latex_bracketed(XY, scalar_ctx):
    """Test the bracketed coefficient layout."""
    X, Y = XY
    p = (Y.derivative(scalar_ctx.y(1)) - X.derivative(scalar_ctx.x(1))) * Poly.from_atom(scalar_ctx.y(1, (1,)), 2)
    assert format_latex(p) == '\\left[-X_{x} + Y_{y}\\right] \\left(y_{1}\\right)^{2}'
    assert format_latex(p, grouped=False) == ('-\\left(y_{1}\\right)^{2} X_{x} '
                                            '+ \\left(y_{1}\\right)^{2} Y_{y}')


def test_format_latex_indexed_coordinates(plane_ctx):
    """Test that x1 prints as x^{1}."""
    assert format_latex(Poly.from_atom(plane_ctx.x(1))) == 'x^{1}'


def test_poly_to_json(scalar_ctx):
    """Test the [monomial, coefficient] encoding."""
    p = Poly.from_atom(scalar_ctx.y(1, (1,))) * Fraction(1, 2) + 1
    assert poly_to_json(p) == [['1', '1'], ['y[1]', '1/2']]


def test_format_output_dispatch(scalar_ctx):
    """Test the three report formats for polynomials and fractions."""
    p = Poly.from_atom(scalar_ctx.x(1))
    assert format_output(p, 'text') == 'x'
    assert format_output(p, 'json') == [['x', '1']]
    assert format_output(p, 'latex') == 'x'
    q = FormalFraction(p, p + 1)
    assert format_output(q, 'text') == '(x)/(1 + x)'
    assert format_output(q, 'json') == {'numerator': [['x', '1']], 'denominator': [['1', '1'], ['x', '1']]}


def test_format_combination_round_trip():
    """Test that printed bracket expansions read back."""
    coeffs = {'E': Fraction(-1), 'D': Fraction(-2)}
    text = format_combination(coeffs, ['E', 'D'])
    assert text == '-E - 2*D'
    assert parse_combination(text) == coeffs
    assert format_combination({}) == '0'
    assert parse_combination("L1' + 1/2*L3") == {"L1'": Fraction(1), 'L3': Fraction(1, 2)}
