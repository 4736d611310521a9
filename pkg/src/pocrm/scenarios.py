"""True combination-toxicity scenarios and the built-in scenario library."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Combo, DoseGrid

DEFAULT_TTL = 0.3

#: Matching tolerance for "toxicity equals the target level" when deriving
#: the MTC set from a scenario matrix.
MTC_TOL = 1e-9


@dataclass(frozen=True)
class ToxScenario:
    """A matrix of true toxicity probabilities with its target level.

    ``r[j-1, i-1]`` is the DLT probability of combo (i, j): rows are drug-B
    levels from the bottom of the grid up, columns drug-A levels.
    """

    r: np.ndarray
    theta0: float = DEFAULT_TTL
    name: str = ""
    mtc_set: tuple[Combo, ...] = field(init=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 2:
            raise ValueError("scenario matrix must be 2-D")
        if not (np.all(r > 0) and np.all(r < 1)):
            raise ValueError("toxicity probabilities must lie in (0, 1)")
        if np.any(np.diff(r, axis=0) < 0) or np.any(np.diff(r, axis=1) < 0):
            raise ValueError("toxicities must be non-decreasing in each drug")
        if not (0 < self.theta0 < 1):
            raise ValueError("target toxicity level must lie in (0, 1)")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)
        mtcs = tuple(
            (i + 1, j + 1)
            for j in range(r.shape[0])
            for i in range(r.shape[1])
            if abs(r[j, i] - self.theta0) <= MTC_TOL
        )
        object.__setattr__(self, "mtc_set", mtcs)

    @property
    def grid(self) -> DoseGrid:
        return DoseGrid(n_a=self.r.shape[1], n_b=self.r.shape[0])

    def prob(self, combo: Combo) -> float:
        i, j = combo
        return float(self.r[j - 1, i - 1])

    def flat(self) -> np.ndarray:
        """Probabilities by row-major flat code."""
        return self.r.reshape(-1)


def _scen(name, rows_top_down):
    # library matrices are written highest drug-B row first, as usually tabled
    return ToxScenario(r=np.array(rows_top_down[::-1], dtype=float), name=name)


_LIBRARY_ROWS = {
    1: [[0.60, 0.65, 0.70], [0.45, 0.50, 0.55], [0.30, 0.35, 0.40]],
    2: [[0.40, 0.60, 0.65], [0.35, 0.45, 0.55], [0.25, 0.30, 0.50]],
    3: [[0.40, 0.45, 0.50], [0.15, 0.25, 0.35], [0.10, 0.20, 0.30]],
    4: [[0.45, 0.55, 0.60], [0.30, 0.40, 0.50], [0.20, 0.25, 0.35]],
    5: [[0.45, 0.50, 0.55], [0.25, 0.30, 0.40], [0.15, 0.20, 0.35]],
    6: [[0.20, 0.25, 0.35], [0.10, 0.15, 0.30], [0.01, 0.03, 0.05]],
    7: [[0.30, 0.35, 0.40], [0.05, 0.20, 0.25], [0.01, 0.10, 0.15]],
    8: [[0.15, 0.30, 0.45], [0.10, 0.25, 0.40], [0.05, 0.20, 0.35]],
    9: [[0.10, 0.25, 0.30], [0.05, 0.15, 0.20], [0.01, 0.03, 0.07]],
    10: [[0.40, 0.55, 0.70], [0.30, 0.45, 0.60], [0.20, 0.30, 0.50]],
    11: [[0.30, 0.50, 0.60], [0.20, 0.40, 0.55], [0.10, 0.30, 0.45]],
    12: [[0.45, 0.50, 0.60], [0.30, 0.40, 0.55], [0.10, 0.20, 0.30]],
    13: [[0.45, 0.50, 0.60], [0.10, 0.30, 0.40], [0.05, 0.20, 0.30]],
    14: [[0.30, 0.40, 0.60], [0.15, 0.20, 0.50], [0.05, 0.10, 0.30]],
    15: [[0.25, 0.30, 0.50], [0.10, 0.20, 0.40], [0.05, 0.15, 0.30]],
    16: [[0.30, 0.50, 0.60], [0.10, 0.30, 0.40], [0.05, 0.20, 0.25]],
    17: [[0.30, 0.40, 0.60], [0.15, 0.20, 0.30], [0.05, 0.10, 0.25]],
    18: [[0.15, 0.30, 0.50], [0.10, 0.20, 0.30], [0.01, 0.05, 0.25]],
    19: [[0.30, 0.40, 0.60], [0.15, 0.30, 0.50], [0.10, 0.20, 0.30]],
}


def scenario_library() -> list[ToxScenario]:
    """The 19 built-in 3x3 scenarios at target level 0.3.

    Scenarios 1-9 have a single maximum tolerated combination; 10-19 carry
    a tolerated contour of several.
    """
    return [_scen(f"scenario-{sid}", rows) for sid, rows in sorted(_LIBRARY_ROWS.items())]


def get_scenario(sid: int) -> ToxScenario:
    if sid not in _LIBRARY_ROWS:
        raise KeyError(f"no built-in scenario {sid} (valid: 1-19)")
    return _scen(f"scenario-{sid}", _LIBRARY_ROWS[sid])
