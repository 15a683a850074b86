"""Weighted cube complexes and their sublevel persistent homology."""

import itertools
import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from src.errors import CapacityError, ConfigError, InvalidParams, MissingFreePart
from src.linalg import Vector, enumerate_ellipsoid
from src.persistence import Barcode, reduce_boundary
from src.plumbing import IntersectionLattice, SpincClass
from src.quadratic import GradingContext, chi_k, chi_t, grading_constant
from src.upsilon import minimize_chi, real_minimizer

DEFAULT_MAX_CELLS = 2_000_000
CUTOFF_OFFSET = 8

Cell = tuple[Vector, tuple[int, ...]]


def max_cells_limit(config: dict[str, Any] | None = None) -> int:
    """Cell capacity: PLUMBCALC_MAX_CELLS, else engine.max_cells, else 2·10⁶."""
    env = os.environ.get("PLUMBCALC_MAX_CELLS")
    if env:
        try:
            return int(env)
        except ValueError as e:
            raise ConfigError(f"PLUMBCALC_MAX_CELLS must be an integer, got {env!r}") from e
    return (config or {}).get("engine", {}).get("max_cells", DEFAULT_MAX_CELLS)


def cell_count(order: int, box: int) -> int:
    """Number of cells (ℓ, I) of the box [−N, N]^s."""
    return (4 * box + 1) ** order


def faces(cell: Cell) -> list[Cell]:
    """The 2·dim codimension-one faces of (ℓ, I)."""
    base, support = cell
    result = []
    for i in support:
        rest = tuple(j for j in support if j != i)
        result.append((base, rest))
        result.append((tuple(b + (1 if j == i else 0) for j, b in enumerate(base)), rest))
    return result


@dataclass
class WeightedComplex:
    """Cube complex of the box [−N, N]^s with its three cell weights.

    Attributes:
        box: Radius N.
        t: Deformation parameter.
        context: Grading data of the class representative k.
        cells: Cells in filtration order.
        weight_k: max of χ_k over the vertices of each cell.
        weight_k2: max of χ_{k+2u} over the vertices of each cell.
        weight_t: (2 − t)·weight_k + t·weight_k2.
    """

    box: int
    t: Fraction
    context: GradingContext
    cells: list[Cell]
    weight_k: dict[Cell, Fraction]
    weight_k2: dict[Cell, Fraction]
    weight_t: dict[Cell, Fraction]


def build(
    lat: IntersectionLattice,
    spinc: SpincClass,
    t: Fraction,
    box: int,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> WeightedComplex:
    """Build the weighted cube complex of [−N, N]^s for one class and t.

    Raises:
        InvalidParams: If N is negative.
        CapacityError: If the cell count exceeds max_cells.
    """
    if box < 0:
        raise InvalidParams(f"Box radius must be non-negative, got {box}")
    total = cell_count(lat.order, box)
    if total > max_cells:
        raise CapacityError(f"Box N={box} needs {total} cells (limit {max_cells})")

    t = Fraction(t)
    ctx = GradingContext.build(lat, spinc.representative)
    twisted = ctx.twisted()

    per_coordinate = [(b, False) for b in range(-box, box + 1)] + [(b, True) for b in range(-box, box)]
    cells: list[Cell] = []
    for choice in itertools.product(per_coordinate, repeat=lat.order):
        base = tuple(b for b, _ in choice)
        support = tuple(i for i, (_, inside) in enumerate(choice) if inside)
        cells.append((base, support))
    cells.sort(key=lambda cell: len(cell[1]))

    weight_k: dict[Cell, Fraction] = {}
    weight_k2: dict[Cell, Fraction] = {}
    for cell in cells:
        base, support = cell
        if not support:
            weight_k[cell] = chi_k(ctx, base)
            weight_k2[cell] = chi_k(twisted, base)
            continue
        low, high = faces(cell)[:2]
        weight_k[cell] = max(weight_k[low], weight_k[high])
        weight_k2[cell] = max(weight_k2[low], weight_k2[high])

    weight_t = {cell: (2 - t) * weight_k[cell] + t * weight_k2[cell] for cell in cells}
    cells.sort(key=lambda cell: (weight_t[cell], len(cell[1]), cell[0], cell[1]))
    return WeightedComplex(box, t, ctx, cells, weight_k, weight_k2, weight_t)


def persistence(complex_: WeightedComplex) -> Barcode:
    """Sublevel persistence of weight_t over the two-element field."""
    position = {cell: i for i, cell in enumerate(complex_.cells)}
    levels = [complex_.weight_t[cell] for cell in complex_.cells]
    dims = [len(cell[1]) for cell in complex_.cells]
    columns = [{position[face] for face in faces(cell)} for cell in complex_.cells]
    return reduce_boundary(levels, dims, columns)


def upsilon_from_barcode(barcode: Barcode, ctx: GradingContext, t: Fraction) -> Fraction:
    """Υ(t) = −(birth of the infinite bar) + grading constant.

    Raises:
        MissingFreePart: If the barcode has no infinite degree-0 bar.
    """
    free = [bar for bar in barcode.infinite() if bar.degree == 0]
    if not free:
        raise MissingFreePart("Barcode has no infinite bar; enlarge the box")
    return -free[0].birth + grading_constant(ctx, Fraction(t))


def alexander(complex_: WeightedComplex, cell: Cell) -> Fraction:
    """A(□) = w_{k+2u}(□) − w_k(□) + (k·F − F²)/2."""
    return complex_.weight_k2[cell] - complex_.weight_k[cell] + complex_.context.c1


def reduced_barcode(barcode: Barcode) -> Barcode:
    """Barcode without its free part."""
    return barcode.reduced()


def sublevel_radius(ctx: GradingContext, t: Fraction, level: Fraction) -> int:
    """Smallest N whose box contains every cell of weight_t ≤ level.

    A cell's weight bounds 2χ_t at each of its vertices, and 2χ_t(x) ≤ level
    is the ellipsoid q(x − x*) ≤ level − 2χ_t(x*).
    """
    lat = ctx.lattice
    center = real_minimizer(ctx, Fraction(t))
    slack = Fraction(level) - 2 * chi_t(ctx, Fraction(t), center)
    if slack < 0:
        return 0
    points = enumerate_ellipsoid(lat.lower, lat.pivots, center, slack)
    return max((max((abs(v) for v in x), default=0) for x in points), default=0)


def stabilize(
    lat: IntersectionLattice,
    spinc: SpincClass,
    t: Fraction,
    start: int,
    cutoff: Fraction | None = None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> tuple[int, Barcode]:
    """Grow the box until the barcode below the cutoff is settled.

    The search stops as soon as the box reaches the sublevel radius of the
    cutoff, or earlier when two consecutive boxes agree below it.

    Args:
        lat: Intersection lattice.
        spinc: Spin^c class.
        t: Deformation parameter.
        start: Initial box radius N0.
        cutoff: Level cutoff; defaults to the infinite-bar birth + 8.
        max_cells: Cell capacity.

    Returns:
        Stable N and the barcode at N.

    Raises:
        CapacityError: If the box outgrows max_cells first.
    """
    logger = logging.getLogger("PlumbCalc.CubeComplex")
    t = Fraction(t)
    ctx = GradingContext.build(lat, spinc.representative)
    if cutoff is None:
        cutoff = 2 * minimize_chi(ctx, t).min_value + CUTOFF_OFFSET
    radius = sublevel_radius(ctx, t, cutoff)

    box = start
    current = persistence(build(lat, spinc, t, box, max_cells))
    while True:
        # every cell of weight ≤ cutoff lies in the box, so the cut barcode is final
        if box >= radius and any(bar.birth <= cutoff for bar in current.infinite()):
            logger.debug(f"Box N={box} covers the sublevel set of level {cutoff} (radius {radius})")
            return box, current
        following = persistence(build(lat, spinc, t, box + 1, max_cells))
        same_free = [bar.birth for bar in current.infinite()] == [bar.birth for bar in following.infinite()]
        if same_free and current.cut(cutoff) == following.cut(cutoff):
            logger.debug(f"Barcode stable at N={box} below level {cutoff}")
            return box, current
        box += 1
        current = following


@dataclass(frozen=True)
class HomologyResult:
    """Barcodes of one class at one t."""

    spinc: SpincClass
    t: Fraction
    box: int
    barcode: Barcode
    reduced: Barcode
    upsilon: Fraction


class CubeComplexEngine:
    """Compute cube-complex barcodes for the Spin^c classes of a lattice."""

    def __init__(self, config: dict[str, Any]) -> None:
        """Initialize the engine.

        Args:
            config: Configuration dictionary containing engine.max_cells and
                engine.level_cutoff_offset.
        """
        self.logger = logging.getLogger("PlumbCalc.CubeComplex")
        self.max_cells = max_cells_limit(config)
        self.cutoff_offset = config.get("engine", {}).get("level_cutoff_offset", CUTOFF_OFFSET)

    def homology(self, lat: IntersectionLattice, spinc: SpincClass, t: Fraction, box: int | None = None) -> HomologyResult:
        """Stabilized barcode of one class.

        An explicit box is used as the starting radius; the default starts at
        ‖argmin‖∞ + 2.
        """
        t = Fraction(t)
        ctx = GradingContext.build(lat, spinc.representative)
        certificate = minimize_chi(ctx, t)
        start = box if box is not None else max((abs(v) for v in certificate.argmin), default=0) + 2
        cutoff = 2 * certificate.min_value + self.cutoff_offset

        self.logger.info(f"Class {spinc.index}, t={t}: stabilizing from N={start} ({cell_count(lat.order, start)} cells)")
        stable_box, barcode = stabilize(lat, spinc, t, start, cutoff, self.max_cells)
        try:
            value = upsilon_from_barcode(barcode, ctx, t)
        except MissingFreePart:
            self.logger.warning(f"No free part at N={stable_box}; growing the box")
            stable_box, barcode = stabilize(lat, spinc, t, stable_box + 1, cutoff, self.max_cells)
            value = upsilon_from_barcode(barcode, ctx, t)
        return HomologyResult(spinc, t, stable_box, barcode, reduced_barcode(barcode), value)
