"""Dose-combination grid, its dominance partial order and complete orderings.

Combinations are pairs (i, j) of 1-based drug levels: i for drug A
(columns), j for drug B (rows).  A complete ordering of the k = nA * nB
combinations is a linear extension of the componentwise dominance order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

Combo = tuple[int, int]

#: Enumeration is refused above this many combinations (4x4 has 24024
#: extensions already; larger grids explode combinatorially).
DEFAULT_ENUM_CAP = 16


class EnumerationCapError(ValueError):
    """Grid too large to enumerate all linear extensions."""


class DegenerateGridError(ValueError):
    """Raised when a construction needs at least two levels of each drug."""


@dataclass(frozen=True)
class DoseGrid:
    """An nA x nB combination lattice (nA levels of drug A, nB of drug B)."""

    n_a: int
    n_b: int

    def __post_init__(self):
        if self.n_a < 1 or self.n_b < 1:
            raise ValueError("grid needs at least one level of each drug")

    @property
    def k(self) -> int:
        return self.n_a * self.n_b

    def combos(self) -> list[Combo]:
        """All combinations in row-major order (bottom row of the grid first)."""
        return [(i, j) for j in range(1, self.n_b + 1) for i in range(1, self.n_a + 1)]

    def flat(self, combo: Combo) -> int:
        """Row-major index of a combo, 0-based."""
        i, j = combo
        if not (1 <= i <= self.n_a and 1 <= j <= self.n_b):
            raise ValueError(f"combo {combo} outside {self.n_a}x{self.n_b} grid")
        return (j - 1) * self.n_a + (i - 1)

    def contains(self, combo: Combo) -> bool:
        i, j = combo
        return 1 <= i <= self.n_a and 1 <= j <= self.n_b


def dominates(a: Combo, b: Combo) -> bool:
    """True iff a is dominated by b: a.i <= b.i and a.j <= b.j.

    Then a is no more toxic than b under any admissible scenario.
    Reflexive; combos differing oppositely in the two agents compare False
    both ways (incomparable).
    """
    return a[0] <= b[0] and a[1] <= b[1]


@dataclass(frozen=True)
class Ordering:
    """A complete ordering (linear extension) of all combos of a grid."""

    grid: DoseGrid
    seq: tuple[Combo, ...]
    _pos: dict[Combo, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not is_linear_extension(self.grid, self.seq):
            raise ValueError(f"not a linear extension: {self.seq}")
        object.__setattr__(self, "_pos", {c: s + 1 for s, c in enumerate(self.seq)})

    def position(self, combo: Combo) -> int:
        """1-based rank sigma(i, j) of the combo under this ordering."""
        return self._pos[combo]

    def __len__(self) -> int:
        return len(self.seq)

    def __getitem__(self, s: int) -> Combo:
        """Combo at 1-based position s."""
        return self.seq[s - 1]

    def to_json(self) -> list[list[int]]:
        return [[i, j] for i, j in self.seq]

    @classmethod
    def from_json(cls, grid: DoseGrid, data) -> "Ordering":
        return cls(grid, tuple((int(i), int(j)) for i, j in data))


def is_linear_extension(grid: DoseGrid, seq) -> bool:
    """True iff seq is a permutation of all combos respecting dominance."""
    seq = list(seq)
    if sorted(seq) != sorted(grid.combos()):
        return False
    pos = {c: s for s, c in enumerate(seq)}
    for a in seq:
        for b in seq:
            if a != b and dominates(a, b) and pos[a] > pos[b]:
                return False
    return True


def enumerate_orderings(grid: DoseGrid, cap: int = DEFAULT_ENUM_CAP) -> list[Ordering]:
    """All linear extensions of the grid poset, lexicographic by row-major code.

    Backtracking over the minimal available elements; visiting candidates in
    increasing row-major index makes the output order canonical and stable.
    """
    if grid.k > cap:
        raise EnumerationCapError(
            f"grid has {grid.k} combos, enumeration capped at {cap}"
        )
    combos = grid.combos()  # already sorted by row-major code
    placed: set[Combo] = set()
    prefix: list[Combo] = []
    out: list[Ordering] = []

    def preds_placed(c: Combo) -> bool:
        i, j = c
        return (i == 1 or (i - 1, j) in placed) and (j == 1 or (i, j - 1) in placed)

    def rec():
        if len(prefix) == grid.k:
            out.append(Ordering(grid, tuple(prefix)))
            return
        for c in combos:
            if c not in placed and preds_placed(c):
                placed.add(c)
                prefix.append(c)
                rec()
                prefix.pop()
                placed.remove(c)

    rec()
    return out


def count_linear_extensions(grid: DoseGrid) -> int:
    """Number of linear extensions, by dynamic programming over down-sets.

    Independent of enumerate_orderings: counts extensions of a down-set D as
    the sum over maximal elements of D of the count for D minus that element.
    """
    n_a, n_b = grid.n_a, grid.n_b
    # A down-set of the grid is a staircase: per row j, a prefix length h[j]
    # with h non-increasing in j.
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def count(heights: tuple[int, ...]) -> int:
        if all(h == 0 for h in heights):
            return 1
        total = 0
        for j, h in enumerate(heights):
            if h > 0 and (j == len(heights) - 1 or heights[j + 1] < h):
                shrunk = heights[:j] + (h - 1,) + heights[j + 1:]
                total += count(shrunk)
        return total

    return count(tuple([n_a] * n_b))


def _wages_sequences(grid: DoseGrid) -> list[tuple[Combo, ...]]:
    n_a, n_b = grid.n_a, grid.n_b
    row_major = tuple((i, j) for j in range(1, n_b + 1) for i in range(1, n_a + 1))
    col_major = tuple((i, j) for i in range(1, n_a + 1) for j in range(1, n_b + 1))

    def diagonal(direction: str) -> tuple[Combo, ...]:
        # direction per anti-diagonal s: "a" = drug-A level increasing,
        # "b" = drug-B level increasing, "alt-a"/"alt-b" alternate per diagonal.
        seq: list[Combo] = []
        for s, d in enumerate(range(2, n_a + n_b + 1)):
            cells = [(i, d - i) for i in range(1, n_a + 1) if 1 <= d - i <= n_b]
            cells.sort()  # drug-A increasing
            if direction == "b" or (direction == "alt-a" and s % 2 == 1) or (
                direction == "alt-b" and s % 2 == 0
            ):
                cells.reverse()
            seq.extend(cells)
        return tuple(seq)

    return [
        row_major,
        col_major,
        diagonal("a"),
        diagonal("b"),
        diagonal("alt-a"),
        diagonal("alt-b"),
    ]


def wages_orderings(grid: DoseGrid) -> list[Ordering]:
    """The six structurally constructed orderings of the standard recommendation.

    Row-major, column-major, and the four anti-diagonal traversals (constant
    or alternating within-diagonal direction).  Deduplicated: on small grids
    some constructions coincide (a 2x2 grid yields only its 2 extensions).
    """
    if grid.n_a < 2 or grid.n_b < 2:
        raise DegenerateGridError("need at least 2 levels of each drug")
    seen: set[tuple[Combo, ...]] = set()
    out: list[Ordering] = []
    for seq in _wages_sequences(grid):
        if seq not in seen:
            seen.add(seq)
            out.append(Ordering(grid, seq))
    return out
