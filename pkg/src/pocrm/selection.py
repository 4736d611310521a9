"""Ordering selection: order-scenario enumeration, coverage matrices,
minimal covering selections, and the dots-per-ordering efficiency metric."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .consistency import correct_group, group_for_order_scenario, relabel
from .grid import Combo, DoseGrid, Ordering
from .scenarios import ToxScenario


class UncoverableError(ValueError):
    """Some row of the coverage matrix has no covering column."""

    def __init__(self, rows):
        self.rows = list(rows)
        super().__init__(f"rows with no covering ordering: {self.rows}")


@dataclass(frozen=True)
class OrderScenario:
    """Equivalence class of single-MTC scenarios: the MTC, its toxicity rank,
    and the set of combos below it."""

    mtc: Combo
    nu: int
    below_set: frozenset[Combo]

    def __post_init__(self):
        if len(self.below_set) != self.nu - 1:
            raise ValueError("below set size must be nu - 1")
        if self.mtc in self.below_set:
            raise ValueError("the MTC cannot lie in its own below set")

    def sort_key(self):
        return (self.mtc, self.nu, tuple(sorted(self.below_set)))


def _down_sets(grid: DoseGrid):
    """All order ideals of the grid as staircase column-height tuples.

    heights[j] = number of filled cells in row j (1-based row j+1), with
    heights non-increasing as the drug-B level grows.
    """
    def rec(row: int, cap: int, acc: tuple[int, ...]):
        if row == grid.n_b:
            yield acc
            return
        for h in range(cap + 1):
            yield from rec(row + 1, h, acc + (h,))

    yield from rec(0, grid.n_a, ())


def _heights_to_set(heights) -> frozenset[Combo]:
    return frozenset((i, j + 1) for j, h in enumerate(heights)
                     for i in range(1, h + 1))


def enumerate_order_scenarios(grid: DoseGrid) -> list[OrderScenario]:
    """All (mtc, nu, below-set) triples a single-MTC scenario can realise.

    The below set must be a down-set of the grid containing every strict
    predecessor of the MTC and no successor (the MTC itself excluded); any
    such triple is realised by an explicit scenario, so this enumeration is
    exact.
    """
    out = []
    for mtc in grid.combos():
        preds = {c for c in grid.combos()
                 if c != mtc and c[0] <= mtc[0] and c[1] <= mtc[1]}
        succs = {c for c in grid.combos()
                 if c != mtc and c[0] >= mtc[0] and c[1] >= mtc[1]}
        for heights in _down_sets(grid):
            below = _heights_to_set(heights)
            if mtc in below:
                continue
            if not preds <= below:
                continue
            if below & succs:
                continue
            out.append(OrderScenario(mtc=mtc, nu=len(below) + 1,
                                     below_set=below))
    out.sort(key=OrderScenario.sort_key)
    return out


@dataclass(frozen=True)
class CoverageMatrix:
    """Boolean correct-group membership, rows by scenario, columns by ordering."""

    cells: np.ndarray            # (n_rows, n_orderings) of bool
    row_names: tuple[str, ...]

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        if cells.shape[0] != len(self.row_names):
            raise ValueError("one name per row required")

    @property
    def n_rows(self) -> int:
        return self.cells.shape[0]

    @property
    def n_cols(self) -> int:
        return self.cells.shape[1]

    def dots(self, selection) -> int:
        return int(self.cells[:, list(selection)].sum())

    def covers(self, selection) -> bool:
        return bool(self.cells[:, list(selection)].any(axis=1).all())

    def to_csv_rows(self) -> list[list]:
        header = ["row"] + [f"ordering_{m + 1}" for m in range(self.n_cols)]
        rows = [header]
        for r in range(self.n_rows):
            rows.append([self.row_names[r]]
                        + [int(v) for v in self.cells[r]])
        return rows


def coverage(grid: DoseGrid, orderings: list[Ordering], rows) -> CoverageMatrix:
    """Membership matrix over ToxScenario or OrderScenario rows."""
    cells = np.zeros((len(rows), len(orderings)), dtype=bool)
    names = []
    for r, row in enumerate(rows):
        if isinstance(row, OrderScenario):
            idx = group_for_order_scenario(row.nu, row.mtc, row.below_set,
                                           orderings)
            names.append(f"order-scenario-{r + 1}")
        elif isinstance(row, ToxScenario):
            idx = correct_group(row, orderings)
            names.append(row.name or f"scenario-{r + 1}")
        else:
            raise TypeError(f"unsupported row type {type(row).__name__}")
        cells[r, idx] = True
    return CoverageMatrix(cells=cells, row_names=tuple(names))


def n_consis(matrix: CoverageMatrix, selection) -> float:
    """Total correct-group memberships in the selection per selected ordering."""
    selection = list(selection)
    if not selection:
        raise ValueError("selection must be nonempty")
    return matrix.dots(selection) / len(selection)


def _check_coverable(matrix: CoverageMatrix):
    uncovered = [matrix.row_names[r] for r in range(matrix.n_rows)
                 if not matrix.cells[r].any()]
    if uncovered:
        raise UncoverableError(uncovered)


def _row_masks(matrix: CoverageMatrix) -> list[int]:
    """Bitmask per column of the rows it covers."""
    masks = []
    for m in range(matrix.n_cols):
        mask = 0
        for r in range(matrix.n_rows):
            if matrix.cells[r, m]:
                mask |= 1 << r
        masks.append(mask)
    return masks


def _greedy_cover(masks: list[int], full: int) -> list[int]:
    chosen: list[int] = []
    covered = 0
    while covered != full:
        best = max(range(len(masks)),
                   key=lambda m: bin(masks[m] & ~covered).count("1"))
        if not masks[best] & ~covered:
            raise UncoverableError(["<greedy stalled>"])
        chosen.append(best)
        covered |= masks[best]
    return chosen


def min_cover_size(matrix: CoverageMatrix) -> int:
    """Cardinality of a minimum set cover (exact branch and bound)."""
    _check_coverable(matrix)
    full = (1 << matrix.n_rows) - 1
    masks = _row_masks(matrix)
    best = [len(_greedy_cover(masks, full))]

    cover_of_row = [[m for m in range(len(masks)) if masks[m] >> r & 1]
                    for r in range(matrix.n_rows)]

    def rec(covered: int, size: int):
        if covered == full:
            best[0] = min(best[0], size)
            return
        if size + 1 >= best[0]:
            return   # finishing takes >= one more pick; cannot improve
        r = min((r for r in range(matrix.n_rows) if not covered >> r & 1),
                key=lambda r: len(cover_of_row[r]))
        for m in cover_of_row[r]:
            rec(covered | masks[m], size + 1)

    rec(0, 0)
    return best[0]


def _covers_of_size(matrix: CoverageMatrix, size: int):
    """All covering column subsets of exactly the given size.

    Include/exclude search over columns with two prunes: stop when the
    remaining columns cannot complete the cover, and close out with free
    combinations once the chosen columns already cover everything.
    """
    masks = _row_masks(matrix)
    n = matrix.n_cols
    full = (1 << matrix.n_rows) - 1
    suffix = [0] * (n + 1)
    for m in range(n - 1, -1, -1):
        suffix[m] = suffix[m + 1] | masks[m]
    out: list[list[int]] = []

    def rec(m: int, chosen: list[int], covered: int):
        if covered == full:
            for extra in combinations(range(m, n), size - len(chosen)):
                out.append(chosen + list(extra))
            return
        if len(chosen) == size or m == n:
            return
        if covered | suffix[m] != full or n - m < size - len(chosen):
            return
        chosen.append(m)
        rec(m + 1, chosen, covered | masks[m])
        chosen.pop()
        rec(m + 1, chosen, covered)

    rec(0, [], 0)
    return out


@dataclass(frozen=True)
class Selection:
    columns: tuple[int, ...]
    n_consis: float


def _select(matrix: CoverageMatrix, budget: int | None) -> list[Selection]:
    _check_coverable(matrix)
    size = budget if budget is not None else min_cover_size(matrix)
    found = [Selection(columns=tuple(c), n_consis=n_consis(matrix, c))
             for c in _covers_of_size(matrix, size)]
    if not found:
        raise UncoverableError([f"no cover of size {size}"])
    best = max(s.n_consis for s in found)
    out = [s for s in found if s.n_consis == best]
    out.sort(key=lambda s: s.columns)
    return out


def select_scenario_specific(matrix: CoverageMatrix,
                             budget: int | None = None) -> list[Selection]:
    """Covering selections for an explicit scenario list.

    Without a budget, returns the best-efficiency covers of minimum
    cardinality; with one, the best covers of exactly that size.
    """
    return _select(matrix, budget)


def select_scenario_agnostic(grid: DoseGrid, orderings: list[Ordering],
                             budget: int | None = None) -> list[Selection]:
    """Covering selections over all order-scenarios of the grid."""
    matrix = coverage(grid, orderings, enumerate_order_scenarios(grid))
    return _select(matrix, budget)


def scenario_for_order_scenario(os: OrderScenario, grid: DoseGrid,
                                theta0: float = 0.3) -> ToxScenario:
    """An explicit toxicity scenario realising an order-scenario.

    Below-set combos get equally spaced probabilities under theta0 in
    dominance-compatible rank order, the MTC gets theta0, and the rest get
    equally spaced values above; used by randomised equivalence tests.
    """
    r = np.empty((grid.n_b, grid.n_a))
    # order below-set combos so that dominance never reverses the ranks
    below = sorted(os.below_set, key=lambda c: (c[0] + c[1], grid.flat(c)))
    for rank, c in enumerate(below):
        r[c[1] - 1, c[0] - 1] = theta0 * (rank + 1) / (len(below) + 1)
    r[os.mtc[1] - 1, os.mtc[0] - 1] = theta0
    rest = [c for c in grid.combos()
            if c != os.mtc and c not in os.below_set]
    rest.sort(key=lambda c: (c[0] + c[1], grid.flat(c)))
    for rank, c in enumerate(rest):
        r[c[1] - 1, c[0] - 1] = (theta0
                                 + (1 - theta0) * (rank + 1) / (len(rest) + 2))
    return ToxScenario(r=r, theta0=theta0, name="order-scenario realisation")
