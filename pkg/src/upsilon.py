"""Exact Υ(t) from certified minimization of the twisted Riemann-Roch function."""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from src.errors import AuditFailure, InvalidParams
from src.linalg import Vector, dot, enumerate_ellipsoid, mat_vec, quadratic, round_half_up
from src.plumbing import IntersectionLattice, SpincClass
from src.quadratic import T_MAX, T_MIN, GradingContext, chi_t, grading_constant, zemke_bound


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Continuous piecewise-linear function on [0, 2] given by its breakpoints."""

    breakpoints: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self) -> None:
        ts = [t for t, _ in self.breakpoints]
        if len(ts) < 2 or ts[0] != T_MIN or ts[-1] != T_MAX:
            raise InvalidParams("Breakpoints must start at t=0 and end at t=2")
        if any(a >= b for a, b in zip(ts, ts[1:])):
            raise InvalidParams("Breakpoint t values must be strictly increasing")

    def __call__(self, t: Fraction) -> Fraction:
        t = Fraction(t)
        for (t0, v0), (t1, v1) in zip(self.breakpoints, self.breakpoints[1:]):
            if t0 <= t <= t1:
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        raise InvalidParams(f"t={t} outside [0, 2]")

    def slopes(self) -> list[Fraction]:
        return [(v1 - v0) / (t1 - t0) for (t0, v0), (t1, v1) in zip(self.breakpoints, self.breakpoints[1:])]

    def is_convex(self) -> bool:
        slopes = self.slopes()
        return all(a <= b for a, b in zip(slopes, slopes[1:]))

    def __add__(self, other: "PiecewiseLinearFn") -> "PiecewiseLinearFn":
        ts = sorted({t for t, _ in self.breakpoints} | {t for t, _ in other.breakpoints})
        return simplify([(t, self(t) + other(t)) for t in ts])


def simplify(points: list[tuple[Fraction, Fraction]]) -> PiecewiseLinearFn:
    """Drop interior breakpoints where the slope does not change."""
    kept = [points[0]]
    for point in points[1:]:
        while len(kept) >= 2:
            (ta, va), (tb, vb) = kept[-2], kept[-1]
            tc, vc = point
            if (vb - va) * (tc - tb) == (vc - vb) * (tb - ta):
                kept.pop()
            else:
                break
        kept.append(point)
    return PiecewiseLinearFn(tuple(kept))


@dataclass(frozen=True)
class MinCertificate:
    """Global minimum of χ_t with the data that certifies it.

    Attributes:
        t: Deformation parameter.
        min_value: min over Z^s of χ_t.
        argmin: Lexicographically smallest minimizer.
        search_radius: Integer R with every minimizer within Euclidean distance
            R of the real minimizer x*.
        candidates_checked: Lattice points enumerated in the certified ellipsoid.
    """

    t: Fraction
    min_value: Fraction
    argmin: Vector
    search_radius: Fraction
    candidates_checked: int


def real_minimizer(ctx: GradingContext, t: Fraction) -> tuple[Fraction, ...]:
    """x* = −½·Q⁻¹·(k + t·u)."""
    lat = ctx.lattice
    target = tuple(ki + t * ui for ki, ui in zip(ctx.k, lat.v0))
    return tuple(-v / 2 for v in mat_vec(lat.inverse, target))


def _form_distance(lat: IntersectionLattice, x: tuple, y: tuple) -> Fraction:
    """(x − y)ᵀ·(−Q)·(x − y)."""
    diff = tuple(a - b for a, b in zip(x, y))
    return -Fraction(quadratic(lat.form, diff))


def _ceil_sqrt(value: Fraction) -> int:
    """Smallest non-negative integer R with R² ≥ value."""
    target = math.ceil(value)
    if target <= 0:
        return 0
    root = math.isqrt(target)
    return root if root * root == target else root + 1


def minimize_chi(ctx: GradingContext, t: Fraction) -> MinCertificate:
    """Certified global minimum of χ_t over Z^s.

    χ_t(x) = ½·q(x − x*) + χ_t(x*) with q the form of −Q, so every minimizer
    lies in the ellipsoid q(x − x*) ≤ q(round(x*) − x*). The ellipsoid is
    enumerated exactly.
    """
    lat = ctx.lattice
    t = Fraction(t)
    center = real_minimizer(ctx, t)
    nearest = tuple(round_half_up(c) for c in center)
    bound = _form_distance(lat, nearest, center)

    candidates = enumerate_ellipsoid(lat.lower, lat.pivots, center, bound)
    best_value = None
    best_point = None
    for x in candidates:
        value = chi_t(ctx, t, x)
        if best_value is None or value < best_value:
            best_value, best_point = value, x

    radius = _ceil_sqrt(bound / lat.eigen_bound)
    return MinCertificate(t, best_value, best_point, Fraction(radius), len(candidates))


def _upper_envelope(lines: dict[int, int]) -> list[tuple[Fraction, Fraction]]:
    """Breakpoints of max_x(α_x + β_x·t) on [0, 2] for lines given as slope -> intercept."""
    t = T_MIN
    current = max(lines.items(), key=lambda item: (item[1], item[0]))
    points = [(t, Fraction(current[1]))]
    while True:
        slope, intercept = current
        best = None
        for other_slope, other_intercept in lines.items():
            if other_slope <= slope:
                continue
            crossing = Fraction(intercept - other_intercept, other_slope - slope)
            if crossing >= T_MAX:
                continue
            if best is None or (crossing, -other_slope) < (best[0], -best[1]):
                best = (crossing, other_slope)
        if best is None:
            points.append((T_MAX, intercept + slope * T_MAX))
            return points
        t, next_slope = best
        current = (next_slope, lines[next_slope])
        points.append((t, intercept + slope * t))


def envelope_candidates(ctx: GradingContext, pieces: int = 4) -> set[Vector]:
    """Lattice points containing a minimizer of χ_t for every t ∈ [0, 2].

    [0, 2] is cut into pieces. On a piece [a, b] with midpoint m, every
    minimizer x of χ_t satisfies q(x − x*(t)) ≤ G, where G bounds
    q(round(x*(m)) − x*(t)) at both ends (it is convex in t). The center moves
    by at most h in q-norm, so q(x − x*(m)) ≤ 2G + 2h².
    """
    lat = ctx.lattice
    drift = tuple(-v / 2 for v in mat_vec(lat.inverse, lat.v0))
    drift_norm = -Fraction(quadratic(lat.form, drift))
    width = (T_MAX - T_MIN) / pieces

    found: set[Vector] = set()
    for piece in range(pieces):
        a = T_MIN + piece * width
        b = a + width
        mid = (a + b) / 2
        center = real_minimizer(ctx, mid)
        nearest = tuple(round_half_up(c) for c in center)
        gap = max(_form_distance(lat, nearest, real_minimizer(ctx, end)) for end in (a, b))
        h_squared = (width / 2) ** 2 * drift_norm
        found.update(enumerate_ellipsoid(lat.lower, lat.pivots, center, 2 * gap + 2 * h_squared))
    return found


def upsilon(lat: IntersectionLattice, spinc: SpincClass, pieces: int = 4) -> PiecewiseLinearFn:
    """Υ(t) = max_x[(k + t·u)·x + xᵀQx] + (k² + s)/4 − t·(k·F − F²)/2, exactly."""
    ctx = GradingContext.build(lat, spinc.representative)
    lines: dict[int, int] = {}
    for x in envelope_candidates(ctx, pieces):
        slope = dot(lat.v0, x)
        intercept = dot(ctx.k, x) + quadratic(lat.form, x)
        if slope not in lines or intercept > lines[slope]:
            lines[slope] = intercept
    points = [(t, value + grading_constant(ctx, t)) for t, value in _upper_envelope(lines)]
    return simplify(points)


def tau(f: PiecewiseLinearFn) -> Fraction:
    """τ = −Υ'(0⁺)."""
    return -f.slopes()[0]


def d_invariant(f: PiecewiseLinearFn) -> Fraction:
    """d = Υ(0)."""
    return f(T_MIN)


def d_oracle(lat: IntersectionLattice, spinc: SpincClass, radius: int) -> Fraction:
    """max (k'² + s)/4 over k' = rep + 2Q·z with ‖z‖∞ ≤ radius."""
    rep = spinc.representative
    best = None
    for z in itertools.product(range(-radius, radius + 1), repeat=lat.order):
        value = (lat.square(lat.shift(rep, z)) + lat.order) / 4
        if best is None or value > best:
            best = value
    return best


@dataclass(frozen=True)
class AuditPoint:
    """Disk-bound audit at a single t."""

    t: Fraction
    upsilon: Fraction
    max_bound: Fraction
    maximizer: Vector
    sharp: bool


@dataclass(frozen=True)
class AuditReport:
    """Result of auditing Υ against the disk bound over a window of vectors."""

    window_radius: int
    vectors_checked: int
    points: tuple[AuditPoint, ...]

    @property
    def sharp(self) -> bool:
        return all(point.sharp for point in self.points)


def zemke_audit(
    lat: IntersectionLattice,
    spinc: SpincClass,
    f: PiecewiseLinearFn,
    window_radius: int,
) -> AuditReport:
    """Check Υ(t) ≥ bound(k', t) for every k' in a window of the class.

    The window is k' = rep + 2Q·z over two boxes ‖z − c‖∞ ≤ radius: one
    around c = 0 and one around the rounded real minimizer at t = 1.

    Raises:
        AuditFailure: On the first (k', t) with Υ(t) < bound(k', t).
    """
    logger = logging.getLogger("PlumbCalc.Upsilon")
    rep = spinc.representative
    ctx = GradingContext.build(lat, rep)
    center = tuple(round_half_up(c) for c in real_minimizer(ctx, Fraction(1)))
    ts = sorted({t for t, _ in f.breakpoints} | {T_MIN, T_MAX})
    box = list(itertools.product(range(-window_radius, window_radius + 1), repeat=lat.order))
    shifts = sorted({
        tuple(c + zi for c, zi in zip(origin, z))
        for origin in ((0,) * lat.order, center)
        for z in box
    })

    best: dict[Fraction, tuple[Fraction, Vector]] = {}
    count = 0
    for shift in shifts:
        k_prime = lat.shift(rep, shift)
        k_ctx = GradingContext.build(lat, k_prime)
        count += 1
        for t in ts:
            bound = zemke_bound(k_ctx, t)
            if f(t) < bound:
                logger.error(f"Disk bound violated at t={t} by k'={k_prime}: {f(t)} < {bound}")
                raise AuditFailure(f"Upsilon({t}) = {f(t)} is below the bound {bound} of k' = {k_prime}")
            if t not in best or bound > best[t][0] or (bound == best[t][0] and k_prime < best[t][1]):
                best[t] = (bound, k_prime)

    points = tuple(AuditPoint(t, f(t), best[t][0], best[t][1], best[t][0] == f(t)) for t in ts)
    return AuditReport(window_radius, count, points)


@dataclass(frozen=True)
class ClassInvariants:
    """Upsilon, τ and d of one Spin^c class with its disk-bound audit."""

    spinc: SpincClass
    upsilon: PiecewiseLinearFn
    tau: Fraction
    d: Fraction
    audit: AuditReport
    sharp_expected: bool


class UpsilonEngine:
    """Compute the upsilon invariants of each Spin^c class of a lattice."""

    def __init__(self, config: dict[str, Any]) -> None:
        """Initialize the engine.

        Args:
            config: Configuration dictionary containing engine.envelope_pieces
                and engine.zemke_window.
        """
        self.logger = logging.getLogger("PlumbCalc.Upsilon")
        engine_cfg = config.get("engine", {})
        self.pieces = engine_cfg.get("envelope_pieces", 4)
        self.window = engine_cfg.get("zemke_window", 2)

    def compute(self, lat: IntersectionLattice, spinc: SpincClass, bad_count: int) -> ClassInvariants:
        """Υ, τ, d and the audit for one class.

        Args:
            lat: Intersection lattice.
            spinc: Spin^c class.
            bad_count: Number of bad vertices of the graph.
        """
        f = upsilon(lat, spinc, self.pieces)
        audit = zemke_audit(lat, spinc, f, self.window)
        sharp_expected = bad_count <= 2
        if sharp_expected and not audit.sharp:
            self.logger.warning(
                f"Class {spinc.index}: disk bound not attained in window radius {self.window}"
            )
        self.logger.info(
            f"Class {spinc.index}: {len(f.breakpoints)} breakpoints, tau={tau(f)}, d={d_invariant(f)}"
        )
        return ClassInvariants(spinc, f, tau(f), d_invariant(f), audit, sharp_expected)
