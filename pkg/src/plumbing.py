"""Plumbing trees with one unframed vertex and their intersection lattices."""

import functools
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import networkx as nx
import sympy

from src.errors import InvalidParams, NotNegativeDefinite, ParseError, ValidationError
from src.linalg import (
    RationalMatrix,
    RationalVector,
    Vector,
    determinant,
    dot,
    eigen_lower_bound,
    enumerate_ellipsoid,
    inverse,
    ldl,
    leading_minors,
    mat_vec,
    smith_normal_form,
    quadratic,
    round_half_up,
)

UNFRAMED = None


@dataclass(frozen=True)
class PlumbingGraph:
    """A plumbing tree with integer framings and one unframed vertex.

    Attributes:
        vertices: (id, weight) pairs; the unframed vertex has weight None.
        edges: Unordered id pairs.
        unframed_id: Id of the unframed vertex v0.
    """

    vertices: tuple[tuple[str, int | None], ...]
    edges: frozenset[frozenset[str]]
    unframed_id: str

    @property
    def weights(self) -> dict[str, int | None]:
        return dict(self.vertices)

    @property
    def framed_ids(self) -> list[str]:
        """Framed vertex ids in the canonical (sorted) order."""
        return sorted(vid for vid, weight in self.vertices if weight is not UNFRAMED)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        for vid, weight in self.vertices:
            graph.add_node(vid, weight=weight)
        graph.add_edges_from(tuple(edge) for edge in self.edges)
        return graph

    def neighbors(self, vid: str) -> set[str]:
        return {other for edge in self.edges if vid in edge for other in edge if other != vid}

    def to_text(self) -> str:
        """Serialize in the line-based plumbing format."""
        lines = [f"{vid} {'*' if weight is UNFRAMED else weight}" for vid, weight in self.vertices]
        lines.append("edges:")
        lines.extend(" ".join(sorted(edge)) for edge in sorted(self.edges, key=sorted))
        return "\n".join(lines) + "\n"


def _build_graph(vertices: list[tuple[str, int | None]], edges: list[tuple[str, str]]) -> PlumbingGraph:
    """Validate raw vertex and edge lists and assemble a PlumbingGraph."""
    ids = [vid for vid, _ in vertices]
    if len(set(ids)) != len(ids):
        raise ValidationError("Duplicate vertex id")

    unframed = [vid for vid, weight in vertices if weight is UNFRAMED]
    if len(unframed) != 1:
        raise ValidationError(f"Expected exactly one unframed vertex, found {len(unframed)}")
    if len(vertices) < 2:
        raise ValidationError("Graph has no framed vertices")

    known = set(ids)
    edge_set: set[frozenset[str]] = set()
    for a, b in edges:
        if a not in known or b not in known:
            raise ValidationError(f"Edge {a}-{b} references an unknown vertex")
        if a == b:
            raise ValidationError(f"Self-loop at {a}")
        edge = frozenset((a, b))
        if edge in edge_set:
            raise ValidationError(f"Duplicate edge {a}-{b}")
        edge_set.add(edge)

    graph = PlumbingGraph(tuple(vertices), frozenset(edge_set), unframed[0])
    if not nx.is_tree(graph.to_networkx()):
        raise ValidationError("Plumbing graph is not a tree")
    return graph


def _parse_json(text: str) -> PlumbingGraph:
    try:
        payload = json.loads(text)
        vertices = [(str(item["id"]), item.get("weight")) for item in payload["vertices"]]
        edges = [(str(a), str(b)) for a, b in payload.get("edges", [])]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Malformed JSON plumbing description: {e}") from e
    for vid, weight in vertices:
        if weight is not UNFRAMED and (isinstance(weight, bool) or not isinstance(weight, int)):
            raise ParseError(f"Weight of {vid} is not an integer: {weight!r}")
    return _build_graph(vertices, edges)


def parse(text: str) -> PlumbingGraph:
    """Parse a plumbing description in the text or JSON format.

    The text format lists one vertex per line as ``id weight`` (``*`` marks
    the unframed vertex), then an ``edges:`` line followed by ``id id`` pairs.
    ``#`` starts a comment.

    Args:
        text: Plumbing description.

    Returns:
        Validated plumbing graph.

    Raises:
        ParseError: On syntax errors.
        ValidationError: On tree or unframed-vertex violations.
    """
    if text.lstrip().startswith("{"):
        return _parse_json(text)

    vertices: list[tuple[str, int | None]] = []
    edges: list[tuple[str, str]] = []
    in_edges = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower() == "edges:":
            if in_edges:
                raise ParseError(f"Line {lineno}: repeated edges section")
            in_edges = True
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"Line {lineno}: expected two tokens, got {len(tokens)}")
        if in_edges:
            edges.append((tokens[0], tokens[1]))
            continue
        vid, weight_token = tokens
        if weight_token == "*":
            vertices.append((vid, UNFRAMED))
            continue
        try:
            vertices.append((vid, int(weight_token)))
        except ValueError as e:
            raise ParseError(f"Line {lineno}: weight {weight_token!r} is not an integer") from e

    return _build_graph(vertices, edges)


Form = tuple[tuple[int, ...], ...]


def weight_shifted_form(form: Form, at: int, delta: int = 1) -> Form:
    """Q with the diagonal entry at one vertex changed by delta."""
    return tuple(
        tuple(v + delta if i == j == at else v for j, v in enumerate(row))
        for i, row in enumerate(form)
    )


def blown_up_form(form: Form, at: int) -> Form:
    """Q with a new −1 vertex attached to one vertex, appended last."""
    n = len(form)
    rows = [tuple(row) + (1 if i == at else 0,) for i, row in enumerate(form)]
    rows.append(tuple(1 if j == at else 0 for j in range(n)) + (-1,))
    return tuple(rows)


@dataclass(frozen=True)
class IntersectionLattice:
    """Negative definite intersection form of G = Γ − v0 with cached exact data.

    Attributes:
        ids: Vertex ids indexing every vector and matrix.
        form: The integer matrix Q.
        inverse: Exact Q⁻¹.
        v0: Indicator u of the vertices adjacent to v0.
        dual: The rational class F with Q·F = −u.
        det: det Q.
        lower: Unit lower factor of −Q = L·D·Lᵀ.
        pivots: Diagonal of D.
        eigen_bound: Rational lower bound on the least eigenvalue of −Q.
    """

    ids: tuple[str, ...]
    form: tuple[tuple[int, ...], ...]
    inverse: RationalMatrix
    v0: Vector
    dual: RationalVector
    det: int
    lower: RationalMatrix
    pivots: RationalVector
    eigen_bound: Fraction

    @classmethod
    def from_form(cls, ids: tuple[str, ...], form: tuple[tuple[int, ...], ...], v0: Vector) -> "IntersectionLattice":
        """Build a lattice from an explicit form, checking negative definiteness.

        Args:
            ids: Vertex ids in matrix order (need not be connected).
            form: Symmetric integer matrix.
            v0: v0-adjacency indicator.

        Raises:
            NotNegativeDefinite: With the first leading minor of the wrong sign.
        """
        for order, minor in enumerate(leading_minors(form), start=1):
            if minor == 0 or (minor > 0) != (order % 2 == 0):
                raise NotNegativeDefinite(order, minor)

        q_inv = inverse(form)
        dual = tuple(-x for x in mat_vec(q_inv, v0))
        negated = tuple(tuple(-Fraction(v) for v in row) for row in form)
        neg_inverse = tuple(tuple(-v for v in row) for row in q_inv)
        lower, pivots = ldl(negated)
        return cls(
            ids=tuple(ids),
            form=tuple(tuple(row) for row in form),
            inverse=q_inv,
            v0=tuple(v0),
            dual=dual,
            det=determinant(form),
            lower=lower,
            pivots=pivots,
            eigen_bound=eigen_lower_bound(negated, neg_inverse),
        )

    @property
    def order(self) -> int:
        return len(self.ids)

    @property
    def dual_square(self) -> Fraction:
        """F² = Fᵀ·Q·F."""
        return Fraction(quadratic(self.form, self.dual))

    def index(self, vid: str) -> int:
        if vid not in self.ids:
            raise InvalidParams(f"Unknown framed vertex {vid!r}")
        return self.ids.index(vid)

    def vector(self, values: Mapping[str, int]) -> Vector:
        """Build a vector from an id -> value mapping (missing ids are 0)."""
        unknown = set(values) - set(self.ids)
        if unknown:
            raise InvalidParams(f"Unknown vertex ids: {sorted(unknown)}")
        return tuple(values.get(vid, 0) for vid in self.ids)

    def square(self, k: Vector) -> Fraction:
        """k² = kᵀ·Q⁻¹·k."""
        return Fraction(quadratic(self.inverse, k))

    def is_characteristic(self, k: Vector) -> bool:
        return len(k) == self.order and all((ki - self.form[i][i]) % 2 == 0 for i, ki in enumerate(k))

    def shift(self, k: Vector, x: Vector) -> Vector:
        """The characteristic vector k + 2·Q·x."""
        return tuple(ki + 2 * qi for ki, qi in zip(k, mat_vec(self.form, x)))

    def adjacent(self, i: int, j: int) -> bool:
        return i != j and self.form[i][j] != 0

    def without(self, vid: str) -> "IntersectionLattice":
        """Lattice of G − v (possibly disconnected or empty)."""
        drop = self.index(vid)
        keep = [i for i in range(self.order) if i != drop]
        return IntersectionLattice.from_form(
            tuple(self.ids[i] for i in keep),
            tuple(tuple(self.form[i][j] for j in keep) for i in keep),
            tuple(self.v0[i] for i in keep),
        )

    def with_weight_shift(self, vid: str, delta: int = 1) -> "IntersectionLattice":
        """Lattice with the weight of one vertex changed by delta."""
        return IntersectionLattice.from_form(self.ids, weight_shifted_form(self.form, self.index(vid), delta), self.v0)

    def with_blowup(self, vid: str, new_id: str) -> "IntersectionLattice":
        """Lattice with a new −1 vertex attached to vid, appended last."""
        form = blown_up_form(self.form, self.index(vid))
        return IntersectionLattice.from_form(self.ids + (new_id,), form, self.v0 + (0,))


def lattice(graph: PlumbingGraph) -> IntersectionLattice:
    """Assemble the intersection lattice of G = Γ − v0 in sorted-id order.

    Raises:
        NotNegativeDefinite: If Q is not negative definite.
    """
    ids = tuple(graph.framed_ids)
    weights = graph.weights
    position = {vid: i for i, vid in enumerate(ids)}
    form = [[0] * len(ids) for _ in ids]
    for vid, i in position.items():
        form[i][i] = weights[vid]
    for edge in graph.edges:
        a, b = tuple(edge)
        if a in position and b in position:
            form[position[a]][position[b]] = 1
            form[position[b]][position[a]] = 1
    near_v0 = graph.neighbors(graph.unframed_id)
    v0 = tuple(1 if vid in near_v0 else 0 for vid in ids)
    return IntersectionLattice.from_form(ids, tuple(map(tuple, form)), v0)


def bad_vertices(graph: PlumbingGraph) -> set[str]:
    """Framed vertices whose degree in Γ − v0 exceeds minus their weight."""
    weights = graph.weights
    bad = set()
    for vid in graph.framed_ids:
        degree = len(graph.neighbors(vid) - {graph.unframed_id})
        if degree > -weights[vid]:
            bad.add(vid)
    return bad


@dataclass(frozen=True)
class SpincClass:
    """A coset of characteristic vectors modulo the columns of 2Q."""

    representative: Vector
    index: int


def _integer_rows(matrix: sympy.Matrix) -> tuple[Vector, ...]:
    rows, cols = matrix.shape
    return tuple(tuple(int(matrix[i, j]) for j in range(cols)) for i in range(rows))


@functools.cache
def _coset_structure(lat: IntersectionLattice) -> tuple[tuple[int, ...], tuple[Vector, ...], tuple[Vector, ...]]:
    """Invariant factors of Q with the left SNF transform and its inverse.

    With U·Q·V = D, the class group Z^s / Q·Z^s is read off as U·y mod D.
    """
    if lat.order == 0:
        return (), (), ()
    factors, left, _ = smith_normal_form(lat.form)
    return tuple(factors), _integer_rows(left), _integer_rows(left.inv())


def _base_characteristic(lat: IntersectionLattice) -> Vector:
    return tuple(lat.form[i][i] % 2 for i in range(lat.order))


def class_of(lat: IntersectionLattice, k: Vector) -> int:
    """Index in [0, |det Q|) of the Spin^c class containing k."""
    if not lat.is_characteristic(k):
        raise InvalidParams(f"{k} is not characteristic")
    factors, left, _ = _coset_structure(lat)
    base = _base_characteristic(lat)
    y = tuple((ki - bi) // 2 for ki, bi in zip(k, base))
    z = mat_vec(left, y)
    index = 0
    for zi, d in zip(z, factors):
        index = index * d + zi % d
    return index


def same_class(lat: IntersectionLattice, k1: Vector, k2: Vector) -> bool:
    """True iff k1 − k2 lies in the column span of 2Q."""
    half = tuple(Fraction(a - b, 2) for a, b in zip(k1, k2))
    return all(x.denominator == 1 for x in mat_vec(lat.inverse, half))


def canonical_representative(lat: IntersectionLattice, k: Vector) -> Vector:
    """Lexicographically least vector of maximal square in the class of k.

    The class vectors k + 2Qx of maximal square are exactly those where x
    minimizes χ_k, so they are found by ellipsoid enumeration.
    """
    if lat.order == 0:
        return ()
    center = tuple(-x / 2 for x in mat_vec(lat.inverse, k))
    nearest = tuple(round_half_up(c) for c in center)
    offset = tuple(a - b for a, b in zip(nearest, center))
    bound = -Fraction(quadratic(lat.form, offset))
    candidates = enumerate_ellipsoid(lat.lower, lat.pivots, center, bound)
    values = {x: -Fraction(dot(k, x) + quadratic(lat.form, x), 2) for x in candidates}
    best = min(values.values())
    return min(lat.shift(k, x) for x, value in values.items() if value == best)


def spinc_classes(lat: IntersectionLattice) -> list[SpincClass]:
    """Enumerate the |det Q| Spin^c classes with canonical representatives.

    Classes are indexed by their Smith normal form coordinates, so the index
    of a class does not depend on which representative is used.
    """
    factors, _, left_inverse = _coset_structure(lat)
    base = _base_characteristic(lat)
    classes = []
    for index in range(abs(lat.det)):
        z = []
        rest = index
        for d in reversed(factors):
            z.append(rest % d)
            rest //= d
        z.reverse()
        y = mat_vec(left_inverse, z)
        k = tuple(bi + 2 * yi for bi, yi in zip(base, y))
        classes.append(SpincClass(canonical_representative(lat, k), index))
    return classes


def conjugate_class(lat: IntersectionLattice, spinc: SpincClass) -> SpincClass:
    """The class of −k."""
    negated = tuple(-x for x in spinc.representative)
    return SpincClass(canonical_representative(lat, negated), class_of(lat, negated))


def _continued_fraction(numerator: int, denominator: int) -> list[int]:
    """Negative continued fraction n/ω = a1 − 1/(a2 − 1/(...)), all a_i ≥ 2."""
    terms = []
    while denominator > 0:
        a = -(-numerator // denominator)
        terms.append(a)
        numerator, denominator = denominator, a * denominator - numerator
    return terms


def torus_knot_graph(p: int, q: int) -> PlumbingGraph:
    """Embedded resolution graph of the torus knot T(p, q).

    A −1 central vertex carries two legs given by the continued fractions
    of p/ω1 and q/ω2, and v0 is attached to the center.

    Raises:
        InvalidParams: If p, q < 2 or not coprime, or if the result fails the
            |det Q| = 1 check.
    """
    if p < 2 or q < 2 or math.gcd(p, q) != 1:
        raise InvalidParams(f"T({p},{q}) requires coprime p, q >= 2")

    omega1 = (-pow(q, -1, p)) % p
    omega2 = (p * q - 1 - omega1 * q) // p

    vertices: list[tuple[str, int | None]] = [("center", -1), ("v0", UNFRAMED)]
    edges = [("center", "v0")]
    for leg, (n, omega) in zip("ab", ((p, omega1), (q, omega2))):
        previous = "center"
        for depth, a in enumerate(_continued_fraction(n, omega), start=1):
            vid = f"{leg}{depth}"
            vertices.append((vid, -a))
            edges.append((previous, vid))
            previous = vid

    graph = _build_graph(vertices, edges)
    if abs(lattice(graph).det) != 1:
        raise InvalidParams(f"T({p},{q}) graph does not bound S^3")
    return graph


def lens_fibre_graph(p: int) -> PlumbingGraph:
    """A single −p vertex next to v0 (a Floer simple knot in L(p,1))."""
    if p < 1:
        raise InvalidParams("Lens space fibre needs p >= 1")
    return _build_graph([("v", -p), ("v0", UNFRAMED)], [("v", "v0")])


def connected_sum(first: PlumbingGraph, second: PlumbingGraph) -> PlumbingGraph:
    """Connected sum of two graph knots: the unframed vertices are identified."""
    vertices: list[tuple[str, int | None]] = [("v0", UNFRAMED)]
    edges: list[tuple[str, str]] = []
    for prefix, graph in (("l_", first), ("r_", second)):
        rename = lambda vid: "v0" if vid == graph.unframed_id else prefix + vid
        vertices.extend((rename(vid), w) for vid, w in graph.vertices if vid != graph.unframed_id)
        edges.extend(tuple(rename(vid) for vid in sorted(edge)) for edge in graph.edges)
    return _build_graph(vertices, edges)


class PlumbingLoader:
    """Read plumbing files and prepare their lattices."""

    def __init__(self, config: dict[str, Any]) -> None:
        """Initialize the loader.

        Args:
            config: Configuration dictionary (uses engine.max_vertices).
        """
        self.logger = logging.getLogger("PlumbCalc.Plumbing")
        self.max_vertices = config.get("engine", {}).get("max_vertices", 64)

    def load(self, path: str | Path) -> tuple[str, PlumbingGraph, IntersectionLattice]:
        """Load, parse and validate a plumbing file.

        Returns:
            Tuple of (raw text, graph, lattice).
        """
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ParseError(f"Cannot read {path}: {e}") from e

        graph = parse(text)
        if len(graph.vertices) > self.max_vertices:
            raise ValidationError(f"Graph has {len(graph.vertices)} vertices (limit {self.max_vertices})")
        lat = lattice(graph)
        bad = bad_vertices(graph)
        self.logger.info(
            f"Loaded {path}: {lat.order} framed vertices, det {lat.det}, "
            f"{len(bad)} bad vertices {sorted(bad)}"
        )
        v0_degree = len(graph.neighbors(graph.unframed_id))
        if v0_degree > 1:
            self.logger.warning(f"Unframed vertex has degree {v0_degree}; u has {v0_degree} nonzero entries")
        return text, graph, lat
