"""Mod-2 boundary reduction and barcodes, shared by the cube and [K,E] engines."""

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Bar:
    """A persistence interval; length None means infinite."""

    degree: int
    birth: Fraction
    length: Fraction | None

    @property
    def infinite(self) -> bool:
        return self.length is None

    @property
    def death(self) -> Fraction | None:
        return None if self.length is None else self.birth + self.length


def _sort_key(bar: Bar) -> tuple:
    return (bar.degree, bar.birth, bar.length is None, bar.length or 0)


@dataclass(frozen=True)
class Barcode:
    """Multiset of bars, kept sorted by (degree, birth, length)."""

    bars: tuple[Bar, ...]

    @classmethod
    def of(cls, bars: Iterable[Bar]) -> "Barcode":
        return cls(tuple(sorted(bars, key=_sort_key)))

    def in_degree(self, degree: int) -> list[Bar]:
        return [bar for bar in self.bars if bar.degree == degree]

    def infinite(self) -> list[Bar]:
        return [bar for bar in self.bars if bar.infinite]

    def reduced(self) -> "Barcode":
        """Drop the infinite degree-0 bar."""
        dropped = False
        kept = []
        for bar in self.bars:
            if not dropped and bar.infinite and bar.degree == 0:
                dropped = True
                continue
            kept.append(bar)
        return Barcode(tuple(kept))

    def max_degree(self) -> int:
        return max((bar.degree for bar in self.bars), default=-1)

    def cut(self, level: Fraction) -> Counter:
        """Bars born at or below level, deaths capped at level."""
        return Counter(
            (bar.degree, bar.birth, None if bar.infinite or bar.death > level else bar.death)
            for bar in self.bars
            if bar.birth <= level
        )

    def to_json(self) -> dict[str, list[dict[str, str]]]:
        """Per-degree lists of {birth, length} with rationals as "p/q" strings."""
        payload: dict[str, list[dict[str, str]]] = {}
        for bar in self.bars:
            payload.setdefault(str(bar.degree), []).append(
                {"birth": str(bar.birth), "length": "inf" if bar.infinite else str(bar.length)}
            )
        return payload


def reduce_boundary(
    levels: Sequence[Fraction],
    dims: Sequence[int],
    columns: Sequence[set[int]],
) -> Barcode:
    """Persistence of a filtered mod-2 chain complex.

    Cells must already be sorted by filtration order, so that every face
    index is smaller than its cell's. Columns are reduced with clearing:
    higher dimensions first, and a column that is the pivot row of a
    reduced column is skipped.

    Args:
        levels: Filtration level of each cell.
        dims: Dimension (homological degree) of each cell.
        columns: Boundary of each cell as a set of face indices.

    Returns:
        Barcode with zero-length bars removed.
    """
    pivot_of: dict[int, int] = {}
    reduced: dict[int, set[int]] = {}
    cleared: set[int] = set()
    pairs: list[tuple[int, int]] = []

    for dim in sorted(set(dims), reverse=True):
        for j in (index for index, d in enumerate(dims) if d == dim):
            if j in cleared or not columns[j]:
                continue
            col = set(columns[j])
            while col:
                low = max(col)
                other = pivot_of.get(low)
                if other is None:
                    break
                col ^= reduced[other]
            if col:
                low = max(col)
                pivot_of[low] = j
                reduced[j] = col
                pairs.append((low, j))
                cleared.add(low)

    bars = []
    paired = set()
    for birth, death in pairs:
        paired.update((birth, death))
        length = levels[death] - levels[birth]
        if length:
            bars.append(Bar(dims[birth], Fraction(levels[birth]), Fraction(length)))
    bars.extend(Bar(dims[i], Fraction(levels[i]), None) for i in range(len(levels)) if i not in paired)
    return Barcode.of(bars)


def prefix_ranks_mod2(groups: Iterable[Iterable[set]]) -> list[int]:
    """Running rank over the two-element field as groups of vectors are added.

    Each vector is a set of coordinate keys; the keys only need to be
    mutually comparable.
    """
    pivot_of: dict = {}
    rank = 0
    ranks = []
    for group in groups:
        for vector in group:
            col = set(vector)
            while col:
                low = max(col)
                other = pivot_of.get(low)
                if other is None:
                    pivot_of[low] = col
                    rank += 1
                    break
                col ^= other
        ranks.append(rank)
    return ranks


def rank_mod2(columns: Iterable[set]) -> int:
    """Rank over the two-element field of a matrix given by its column supports."""
    return prefix_ranks_mod2([columns])[0]
