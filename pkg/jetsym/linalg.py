"""
Exact linear algebra.

Determinants by cofactor expansion and Cramer's rule over the fraction
field of the kernel polynomials, Gaussian elimination over the rationals
(with polynomial right-hand sides when the unknowns are atoms), and an
incremental sparse eliminator for span membership tests.
"""

import logging
from fractions import Fraction
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

from .exceptions import InconsistentLinearSystem, ZeroDenominatorError
from .kernel import Atom, FormalFraction, Poly

logger = logging.getLogger(__name__)

Matrix = Sequence[Sequence[Poly]]


def det(matrix: Matrix, row: int = 0) -> Poly:
    """
    Determinant by Laplace expansion along `row`.

    Args:
        matrix: Square matrix of polynomials (or rationals)
        row: Row used for the top-level cofactor expansion

    Returns:
        The determinant
    """
    size = len(matrix)
    if size == 0:
        return Poly.constant(1)
    if size == 1:
        return Poly.coerce(matrix[0][0])
    if size == 2:
        a, b = Poly.coerce(matrix[0][0]), Poly.coerce(matrix[0][1])
        c, d = Poly.coerce(matrix[1][0]), Poly.coerce(matrix[1][1])
        return a * d - b * c
    terms = []
    for col in range(size):
        entry = Poly.coerce(matrix[row][col])
        if entry.is_zero():
            continue
        minor = [
            [matrix[r][c] for c in range(size) if c != col]
            for r in range(size) if r != row
        ]
        sign = -1 if (row + col) % 2 else 1
        terms.append(entry * det(minor) * sign)
    return Poly.sum(terms)


def replace_column(matrix: Matrix, col: int, column: Sequence[Poly]) -> List[List[Poly]]:
    """Copy of `matrix` with column `col` replaced."""
    return [
        [column[r] if c == col else matrix[r][c] for c in range(len(matrix[r]))]
        for r in range(len(matrix))
    ]


def cramer(matrix: Matrix, rhs: Sequence[Poly]) -> List[FormalFraction]:
    """
    Solve matrix * u = rhs by Cramer's rule.

    Returns:
        One FormalFraction per unknown, all over det(matrix)

    Raises:
        ZeroDenominatorError: If the determinant vanishes identically
    """
    denominator = det(matrix)
    if denominator.is_zero():
        raise ZeroDenominatorError("singular matrix in Cramer solve")
    return [
        FormalFraction(det(replace_column(matrix, col, rhs)), denominator)
        for col in range(len(matrix))
    ]


def rank(matrix: Sequence[Sequence]) -> int:
    """Rank of a rational matrix."""
    rows = [{c: Fraction(v) for c, v in enumerate(r) if v} for r in matrix]
    eliminator = SparseEliminator()
    return sum(1 for r in rows if eliminator.add(r))


def solve_rational(columns: Sequence[Mapping[Hashable, Fraction]],
                   target: Mapping[Hashable, Fraction]) -> List[Fraction]:
    """
    Find rational c with sum_k c_k * columns[k] == target.

    Vectors are sparse maps from a row key to a rational entry.

    Raises:
        InconsistentLinearSystem: If target is outside the span; the
            witness is the nonzero remainder
    """
    # Each column gets a marker coordinate so the combination can be read back.
    eliminator = SparseEliminator()
    for k, column in enumerate(columns):
        vector = {('row', key): Fraction(v) for key, v in column.items() if v}
        vector[('col', k)] = Fraction(1)
        eliminator.add(vector, marker_prefix='col')
    remainder = eliminator.reduce({('row', key): Fraction(v) for key, v in target.items() if v},
                                  marker_prefix='col')
    leftover = {k: v for k, v in remainder.items() if k[0] == 'row'}
    if leftover:
        raise InconsistentLinearSystem("target is outside the span", witness=leftover)
    # remainder = target - combination, on the marker coordinates it holds -c.
    return [-remainder.get(('col', k), Fraction(0)) for k in range(len(columns))]


class SparseEliminator:
    """
    Incremental row-echelon basis of sparse rational vectors.

    Keys of a vector are arbitrary hashables; pivots are chosen among keys
    not starting with `marker_prefix` (when a prefix is given) so that
    marker coordinates only record combinations.
    """

    def __init__(self):
        self.rows: Dict[Hashable, Dict[Hashable, Fraction]] = {}

    def __len__(self):
        return len(self.rows)

    def _choose_pivot(self, vector, marker_prefix):
        keys = [k for k in vector if not (marker_prefix and isinstance(k, tuple) and k[0] == marker_prefix)]
        if not keys:
            return None
        return min(keys, key=repr)

    def reduce(self, vector: Mapping[Hashable, Fraction], marker_prefix: Optional[str] = None) -> Dict[Hashable, Fraction]:
        """Remainder of `vector` after elimination against the stored basis."""
        work = {k: Fraction(v) for k, v in vector.items() if v}
        changed = True
        while changed:
            changed = False
            for key in list(work):
                if key not in work:
                    continue
                row = self.rows.get(key)
                if row is None:
                    continue
                factor = work[key] / row[key]
                for k, v in row.items():
                    s = work.get(k, 0) - factor * v
                    if s:
                        work[k] = s
                    else:
                        work.pop(k, None)
                changed = True
        return work

    def add(self, vector: Mapping[Hashable, Fraction], marker_prefix: Optional[str] = None) -> bool:
        """
        Add a vector to the basis.

        Returns:
            True if it was independent of the vectors already added
        """
        remainder = self.reduce(vector, marker_prefix)
        pivot = self._choose_pivot(remainder, marker_prefix)
        if pivot is None:
            return False
        # Keep pivots eliminated from earlier rows so reduce() terminates quickly.
        for key, row in self.rows.items():
            if pivot in row:
                factor = row[pivot] / remainder[pivot]
                for k, v in remainder.items():
                    s = row.get(k, 0) - factor * v
                    if s:
                        row[k] = s
                    else:
                        row.pop(k, None)
        self.rows[pivot] = remainder
        return True

    def contains(self, vector: Mapping[Hashable, Fraction]) -> bool:
        """True when `vector` lies in the span of the stored vectors."""
        return not self.reduce(vector)


def poly_vector(poly: Poly) -> Dict[Hashable, Fraction]:
    """Coefficient vector of a polynomial keyed by monomial."""
    return {mono: Fraction(c) for mono, c in poly.items()}


def solve_affine(equations: Sequence[Poly], unknowns: Sequence[Atom]) -> Tuple[Dict[Atom, Poly], List[Poly]]:
    """
    Solve equations 0 = sum_u a_u * u + b for the atoms `unknowns`.

    The coefficients a_u must be rational constants; b may be any
    polynomial free of the unknowns. Equations are used as pivots in the
    given order.

    Returns:
        (solution, residuals): values of the unknowns that could be pivoted,
        and the leftover equations once those values are substituted

    Raises:
        InconsistentLinearSystem: If some coefficient is not constant, or a
            residual is a nonzero rational constant
    """
    unknown_set = set(unknowns)
    rows: List[Tuple[Dict[Atom, Fraction], Poly]] = []
    for eq in equations:
        coeffs: Dict[Atom, Fraction] = {}
        for u in unknowns:
            a = eq.partial(u)
            if a.is_zero():
                continue
            if not a.is_constant():
                raise InconsistentLinearSystem(f"coefficient of {u} is not constant", witness=eq)
            coeffs[u] = Fraction(a.constant_term())
        rest = eq.substitute({u: Poly() for u in coeffs})
        if rest.atoms() & unknown_set:
            raise InconsistentLinearSystem("equation is not affine in the unknowns", witness=eq)
        rows.append((coeffs, rest))

    pivots: List[Tuple[Atom, Dict[Atom, Fraction], Poly]] = []
    residuals: List[Poly] = []
    for coeffs, rest in rows:
        coeffs = dict(coeffs)
        for u, prow, prest in pivots:
            f = coeffs.get(u)
            if not f:
                continue
            for k, v in prow.items():
                s = coeffs.get(k, 0) - f * v
                if s:
                    coeffs[k] = s
                else:
                    coeffs.pop(k, None)
            rest = rest - prest * f
        if not coeffs:
            if rest.is_constant() and not rest.is_zero():
                raise InconsistentLinearSystem("0 equals a nonzero constant", witness=rest)
            if not rest.is_zero():
                residuals.append(rest)
            continue
        u = next(x for x in unknowns if x in coeffs)
        scale = coeffs[u]
        prow = {k: v / scale for k, v in coeffs.items()}
        prest = rest * (Fraction(1) / scale)
        # back-substitute into earlier pivots
        updated = []
        for pu, qrow, qrest in pivots:
            f = qrow.get(u)
            if f:
                qrow = dict(qrow)
                for k, v in prow.items():
                    s = qrow.get(k, 0) - f * v
                    if s:
                        qrow[k] = s
                    else:
                        qrow.pop(k, None)
                qrest = qrest - prest * f
            updated.append((pu, qrow, qrest))
        pivots = updated + [(u, prow, prest)]

    solution: Dict[Atom, Poly] = {}
    for u, prow, prest in pivots:
        free = [k for k in prow if k != u]
        if free:
            logger.debug("unknown %s left depending on %s", u, free)
            # Free unknowns stay symbolic in the answer.
            value = -prest - Poly.sum(Poly.from_atom(k) * prow[k] for k in free)
        else:
            value = -prest
        solution[u] = value
    logger.debug("affine solve: %d pivots, %d residuals", len(solution), len(residuals))
    return solution, residuals


def solve_linear_rational(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> List[Fraction]:
    """
    Solve a square or overdetermined rational system with unique solution.

    Raises:
        InconsistentLinearSystem: No solution, or the solution is not unique
    """
    columns = []
    cols = len(matrix[0]) if matrix else 0
    for c in range(cols):
        columns.append({r: Fraction(matrix[r][c]) for r in range(len(matrix)) if matrix[r][c]})
    if rank([[matrix[r][c] for c in range(cols)] for r in range(len(matrix))]) < cols:
        raise InconsistentLinearSystem("solution is not unique")
    return solve_rational(columns, {r: Fraction(v) for r, v in enumerate(rhs) if v})
