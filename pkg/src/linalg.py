"""Exact integer and rational linear algebra for small symmetric forms."""

import math
from fractions import Fraction
from typing import Sequence

import sympy

from src.errors import CapacityError

Vector = tuple[int, ...]
RationalVector = tuple[Fraction, ...]
RationalMatrix = tuple[tuple[Fraction, ...], ...]

HALF = Fraction(1, 2)


def to_fraction(value: sympy.Rational | int) -> Fraction:
    """Convert a sympy rational (or int) to a Fraction."""
    rational = sympy.Rational(value)
    return Fraction(int(rational.p), int(rational.q))


def to_rational_matrix(matrix: sympy.Matrix) -> RationalMatrix:
    """Convert a sympy matrix into a tuple of Fraction rows."""
    rows, cols = matrix.shape
    return tuple(tuple(to_fraction(matrix[i, j]) for j in range(cols)) for i in range(rows))


def leading_minors(form: Sequence[Sequence[int]]) -> list[int]:
    """Return the leading principal minors of an integer matrix, orders 1..n."""
    matrix = sympy.Matrix(form)
    n = matrix.shape[0]
    return [int(matrix[:order, :order].det()) for order in range(1, n + 1)]


def determinant(form: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a square integer matrix (1 for the empty matrix)."""
    if not form:
        return 1
    return int(sympy.Matrix(form).det())


def inverse(form: Sequence[Sequence[int]]) -> RationalMatrix:
    """Exact inverse of a nonsingular integer matrix."""
    if not form:
        return ()
    return to_rational_matrix(sympy.Matrix(form).inv())


def ldl(form: Sequence[Sequence[Fraction | int]]) -> tuple[RationalMatrix, RationalVector]:
    """Factor a symmetric positive definite matrix as L·D·Lᵀ.

    Args:
        form: Symmetric positive definite matrix.

    Returns:
        Unit lower triangular L and the diagonal pivots of D.
    """
    if not form:
        return (), ()
    matrix = sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) if isinstance(v, Fraction) else v
                            for v in row] for row in form])
    lower, diagonal = matrix.LDLdecomposition()
    pivots = tuple(to_fraction(diagonal[i, i]) for i in range(matrix.shape[0]))
    return to_rational_matrix(lower), pivots


def smith_normal_form(form: Sequence[Sequence[int]]) -> tuple[list[int], sympy.Matrix, sympy.Matrix]:
    """Smith normal form with transforms: left·A·right = diag(d_1, ..., d_n).

    Invariant factors are non-negative and each divides the next.

    Args:
        form: Square integer matrix.

    Returns:
        Tuple of (invariant factors, left transform, right transform); both
        transforms are unimodular.
    """
    matr = sympy.Matrix(form)
    n = matr.shape[0]
    left = sympy.eye(n)
    right = sympy.eye(n)

    for s in range(n):
        while True:
            pos = None
            for i in range(s, n):
                for j in range(s, n):
                    if matr[i, j] != 0 and (pos is None or abs(matr[i, j]) < abs(matr[pos[0], pos[1]])):
                        pos = (i, j)
            if pos is None:
                return [abs(int(matr[i, i])) for i in range(n)], left, right

            if pos[0] != s:
                matr.row_swap(s, pos[0])
                left.row_swap(s, pos[0])
            if pos[1] != s:
                matr.col_swap(s, pos[1])
                right.col_swap(s, pos[1])

            pivot = matr[s, s]
            clean = True
            for i in range(s + 1, n):
                q = matr[i, s] // pivot
                if q != 0:
                    matr.row_op(i, lambda val, col, q=q: val - q * matr[s, col])
                    left.row_op(i, lambda val, col, q=q: val - q * left[s, col])
                if matr[i, s] != 0:
                    clean = False
            for j in range(s + 1, n):
                q = matr[s, j] // pivot
                if q != 0:
                    matr.col_op(j, lambda val, row, q=q: val - q * matr[row, s])
                    right.col_op(j, lambda val, row, q=q: val - q * right[row, s])
                if matr[s, j] != 0:
                    clean = False
            if not clean:
                continue

            # divisibility of the trailing block
            blocker = next(
                (i for i in range(s + 1, n) for j in range(s + 1, n) if matr[i, j] % pivot != 0),
                None,
            )
            if blocker is None:
                break
            matr.row_op(s, lambda val, col, b=blocker: val + matr[b, col])
            left.row_op(s, lambda val, col, b=blocker: val + left[b, col])

        if matr[s, s] < 0:
            matr.row_op(s, lambda val, col: -val)
            left.row_op(s, lambda val, col: -val)

    return [int(matr[i, i]) for i in range(n)], left, right


def mat_vec(matrix: Sequence[Sequence[Fraction | int]], vector: Sequence[Fraction | int]) -> tuple:
    """Matrix-vector product."""
    return tuple(sum((a * b for a, b in zip(row, vector)), 0) for row in matrix)


def dot(left: Sequence[Fraction | int], right: Sequence[Fraction | int]) -> Fraction | int:
    """Euclidean pairing of two vectors."""
    return sum((a * b for a, b in zip(left, right)), 0)


def quadratic(matrix: Sequence[Sequence[Fraction | int]], vector: Sequence[Fraction | int]) -> Fraction | int:
    """Evaluate xᵀ·A·x."""
    return dot(vector, mat_vec(matrix, vector))


def round_half_up(value: Fraction) -> int:
    """Nearest integer, halves rounded upwards."""
    return math.floor(value + HALF)


def eigen_lower_bound(form: RationalMatrix, form_inverse: RationalMatrix) -> Fraction:
    """Rational lower bound on the least eigenvalue of a positive definite form.

    Best of the Gershgorin disc bound and 1/trace(A⁻¹).
    """
    n = len(form)
    if n == 0:
        return Fraction(1)
    gershgorin = min(
        form[i][i] - sum(abs(form[i][j]) for j in range(n) if j != i) for i in range(n)
    )
    trace_bound = 1 / sum(form_inverse[i][i] for i in range(n))
    return max(Fraction(gershgorin), trace_bound)


def enumerate_ellipsoid(
    lower: RationalMatrix,
    pivots: RationalVector,
    center: RationalVector,
    bound: Fraction,
    limit: int | None = None,
) -> list[Vector]:
    """All integer points x with (x − c)ᵀ·M·(x − c) ≤ bound, M = L·D·Lᵀ.

    Fincke-Pohst enumeration over exact rationals. Each coordinate range is
    walked outwards from its rounded center, so no square roots are taken.

    Args:
        lower: Unit lower triangular factor L.
        pivots: Diagonal of D (all positive).
        center: Ellipsoid center c.
        bound: Inclusive bound on the quadratic form.
        limit: Optional cap on the number of points.

    Returns:
        Lexicographically sorted list of integer points.

    Raises:
        CapacityError: If more than ``limit`` points are found.
    """
    n = len(center)
    if n == 0:
        return [()] if bound >= 0 else []

    points: list[Vector] = []
    x = [0] * n

    def descend(i: int, remaining: Fraction) -> None:
        if i < 0:
            points.append(tuple(x))
            if limit is not None and len(points) > limit:
                raise CapacityError(f"Ellipsoid enumeration exceeded {limit} points")
            return
        shift = sum((lower[j][i] * (x[j] - center[j]) for j in range(i + 1, n)), Fraction(0))
        mid = center[i] - shift
        start = round_half_up(mid)
        for xi, step in ((start, 1), (start - 1, -1)):
            while True:
                cost = pivots[i] * (xi - mid) ** 2
                if cost > remaining:
                    break
                x[i] = xi
                descend(i - 1, remaining - cost)
                xi += step

    descend(n - 1, Fraction(bound))
    return sorted(points)
