"""Riemann-Roch quadratic functions, grading constants and the disk bound."""

from dataclasses import dataclass
from fractions import Fraction

import sympy

from src.errors import InvalidParams, ValidationError
from src.linalg import Vector, dot, mat_vec, quadratic, to_fraction
from src.plumbing import IntersectionLattice

T_MIN = Fraction(0)
T_MAX = Fraction(2)


def parse_t(value: str | int | Fraction) -> Fraction:
    """Parse a deformation parameter t ∈ [0, 2] given as "a/b", int or Fraction.

    Raises:
        InvalidParams: If the text is not a rational or t is out of range.
    """
    try:
        t = Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise InvalidParams(f"t must be a rational number, got {value!r}") from e
    if not T_MIN <= t <= T_MAX:
        raise InvalidParams(f"t must lie in [0, 2], got {t}")
    return t


@dataclass(frozen=True)
class GradingContext:
    """A characteristic vector together with its grading constants.

    Attributes:
        lattice: Intersection lattice.
        k: Characteristic vector.
        ksq: k² = kᵀ·Q⁻¹·k.
        c0: (k² + s)/4.
        c1: (k·F − F²)/2.
    """

    lattice: IntersectionLattice
    k: Vector
    ksq: Fraction
    c0: Fraction
    c1: Fraction

    @classmethod
    def build(cls, lat: IntersectionLattice, k: Vector) -> "GradingContext":
        """Attach grading data to k.

        Raises:
            ValidationError: If k is not characteristic for Q.
        """
        k = tuple(k)
        if not lat.is_characteristic(k):
            raise ValidationError(f"{k} is not a characteristic vector")
        ksq = lat.square(k)
        c0 = (ksq + lat.order) / 4
        c1 = (Fraction(dot(k, lat.dual)) - lat.dual_square) / 2
        return cls(lat, k, ksq, c0, c1)

    def shifted(self, x: Vector) -> "GradingContext":
        """Context of k + 2·Q·x."""
        return GradingContext.build(self.lattice, self.lattice.shift(self.k, x))

    def twisted(self) -> "GradingContext":
        """Context of k + 2u."""
        return GradingContext.build(self.lattice, tuple(ki + 2 * ui for ki, ui in zip(self.k, self.lattice.v0)))


def chi_k(ctx: GradingContext, x: Vector) -> Fraction:
    """χ_k(x) = −½(k·x + xᵀQx)."""
    return -Fraction(dot(ctx.k, x) + quadratic(ctx.lattice.form, x), 2)


def chi_t(ctx: GradingContext, t: Fraction, x: Vector) -> Fraction:
    """χ_t(x) = χ_k(x) − (t/2)·(u·x)."""
    return chi_k(ctx, x) - t * dot(ctx.lattice.v0, x) / 2


def grading_constant(ctx: GradingContext, t: Fraction) -> Fraction:
    """(k² + s)/4 − t·(k·F − F²)/2."""
    return ctx.c0 - t * ctx.c1


def zemke_bound(ctx: GradingContext, t: Fraction) -> Fraction:
    """Right-hand side of the disk inequality for one characteristic vector.

    Recomputed without the cached Q⁻¹, F or k²: both come from an LU solve
    against Q.
    """
    lat, k = ctx.lattice, ctx.k
    s = lat.order
    if s == 0:
        return Fraction(0)
    solve = _solver(lat.form)
    k_dual = solve(tuple(Fraction(v) for v in k))
    f = solve(tuple(-Fraction(v) for v in lat.v0))
    k_square = sum((a * b for a, b in zip(k, k_dual)), Fraction(0))
    f_square = sum((a * b for a, b in zip(mat_vec(lat.form, f), f)), Fraction(0))
    k_dot_f = sum((a * b for a, b in zip(k, f)), Fraction(0))
    return (k_square + s) / 4 - t * (k_dot_f - f_square) / 2


def _solver(form: tuple[tuple[int, ...], ...]):
    """Exact solver for Q·y = b by LU decomposition of Q."""
    matrix = sympy.Matrix([list(row) for row in form])

    def solve(rhs: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
        column = sympy.Matrix([sympy.Rational(v.numerator, v.denominator) for v in rhs])
        return tuple(to_fraction(v) for v in matrix.LUsolve(column))

    return solve
