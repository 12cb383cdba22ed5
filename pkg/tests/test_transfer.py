"""
Tests for derivative transfer between an equation and its solutions.
"""

from jetsym.kernel import FormalFraction, Poly, fraction_equal
from jetsym.transfer import (SolutionManifold, flat_solutions, solve_AB, specialize,
                             transfer_F_derivatives, verify_total_derivative)


def test_parameter_derivatives():
    """Test A_y1 = -Pi_b / det and B_y1 = Pi_a / det."""
    mf = SolutionManifold()
    ab = solve_AB(mf)
    den = mf.denominator()
    assert ab['A_y1'] == FormalFraction(-mf.d(mf.b), den)
    assert ab['B_y1'] == FormalFraction(mf.d(mf.a), den)
    assert ab['A_y'] == FormalFraction(mf.d(mf.x, mf.b), den)
    assert ab['B_y'] == FormalFraction(-mf.d(mf.x, mf.a), den)


def test_total_derivative_identity():
    """Test that D(F) pulls back to Pi_xxx on the solutions."""
    assert verify_total_derivative(SolutionManifold())


def test_flat_solutions():
    """Test that y = b + a x gives vanishing derivatives of F."""
    mf = SolutionManifold()
    pi = flat_solutions(mf)
    for q in transfer_F_derivatives(mf).values():
        assert specialize(q, mf, pi).num.is_zero()


def test_parabola_family():
    """Test y = a x^2 + b, whose equation is y'' = y'/x, so F_y1 = 1/x."""
    mf = SolutionManifold()
    x = Poly.from_atom(mf.x)
    pi = Poly.from_atom(mf.a) * x * x + Poly.from_atom(mf.b)
    derivatives = transfer_F_derivatives(mf)
    assert specialize(derivatives['F_y1'], mf, pi) == FormalFraction(Poly.constant(1), x)
    assert specialize(derivatives['F_y'], mf, pi).num.is_zero()


def test_printed_transfer_forms():
    """Test every parameter and F derivative against its Cramer form over Pi_b Pi_xa - Pi_a Pi_xb."""
    mf = SolutionManifold()
    x, a, b = mf.x, mf.a, mf.b
    p_x, p_xx, p_xxx = mf.d(x), mf.d(x, x), mf.d(x, x, x)
    p_a, p_b, p_xa, p_xb = mf.d(a), mf.d(b), mf.d(x, a), mf.d(x, b)
    p_xxa, p_xxb = mf.d(x, x, a), mf.d(x, x, b)
    den = p_b * p_xa - p_a * p_xb
    assert den == -mf.denominator()

    a_x_num = -p_b * p_xx + p_x * p_xb
    b_x_num = -p_x * p_xa + p_a * p_xx
    printed_ab = {
        'A_x': a_x_num, 'B_x': b_x_num,
        'A_y': -p_xb, 'B_y': p_xa,
        'A_y1': p_b, 'B_y1': -p_a,
    }
    ab = solve_AB(mf)
    assert set(ab) == set(printed_ab)
    for key, num in printed_ab.items():
        assert fraction_equal(ab[key], FormalFraction(num, den)), key

    printed_f = {
        'F_x': FormalFraction(p_xxx) + FormalFraction(p_xxa * a_x_num + p_xxb * b_x_num, den),
        'F_y': FormalFraction(-p_xxa * p_xb + p_xxb * p_xa, den),
        'F_y1': FormalFraction(p_xxa * p_b - p_xxb * p_a, den),
    }
    derivatives = transfer_F_derivatives(mf)
    assert set(derivatives) == set(printed_f)
    for key, value in printed_f.items():
        assert fraction_equal(derivatives[key], value), key
