"""Monte Carlo evaluation: PCS estimation, convergence curves, and the
complete-information partial-ordering benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import impl as _k
from .scenarios import ToxScenario
from .trial import PocrmDesign


@dataclass(frozen=True)
class PcsResult:
    """Selection frequencies from repeated simulated trials."""

    pcs: float
    mc_se: float
    replicates: int
    n_patients: int
    per_combo_selection: tuple[float, ...]   # row-major flat order

    def __post_init__(self):
        total = sum(self.per_combo_selection)
        if abs(total - 1.0) > 1e-9:
            raise ValueError("selection frequencies must sum to 1")
        if not (0.0 <= self.pcs <= 1.0):
            raise ValueError("pcs must lie in [0, 1]")

    def to_json(self) -> dict:
        return {
            "pcs": self.pcs,
            "mc_se": self.mc_se,
            "replicates": self.replicates,
            "n_patients": self.n_patients,
            "per_combo_selection": list(self.per_combo_selection),
        }


def _result_from_counts(sel: np.ndarray, scenario: ToxScenario,
                        n_patients: int, replicates: int) -> PcsResult:
    freq = sel / replicates
    grid = scenario.grid
    pcs = float(sum(freq[grid.flat(c)] for c in scenario.mtc_set))
    mc_se = float(np.sqrt(max(pcs * (1.0 - pcs), 0.0) / replicates))
    return PcsResult(pcs=pcs, mc_se=mc_se, replicates=replicates,
                     n_patients=n_patients,
                     per_combo_selection=tuple(float(v) for v in freq))


def estimate_pcs(design: PocrmDesign, scenario: ToxScenario,
                 n_patients: int, replicates: int, seed: int) -> PcsResult:
    """Fraction of simulated trials whose final recommendation is an MTC.

    Per-replicate seeds are derived from (seed, replicate index), so the
    result is reproducible and independent of any scheduling order.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if scenario.grid != design.grid:
        raise ValueError("scenario grid does not match the design grid")
    sel = _k.simulate_trials(
        design.alpha_by_combo(), design.log_priors(),
        design.order_combo_codes(), scenario.flat(), design.theta0,
        design.domain.lo, design.domain.hi, design.stage1_codes(),
        design.cohort_size, n_patients, replicates, seed,
        design.tie_code(), 1 if design.eq1_literal else 0)
    return _result_from_counts(np.asarray(sel, dtype=float), scenario,
                               n_patients, replicates)


def pcs_curve(design: PocrmDesign, scenario: ToxScenario,
              n_grid: list[int], replicates: int,
              seed: int) -> list[tuple[int, PcsResult]]:
    """PCS at each sample size of an ascending grid."""
    if not n_grid:
        raise ValueError("n_grid must be nonempty")
    if any(n <= 0 for n in n_grid):
        raise ValueError("sample sizes must be positive")
    if list(n_grid) != sorted(n_grid):
        raise ValueError("n_grid must be ascending")
    return [(n, estimate_pcs(design, scenario, n, replicates, seed))
            for n in n_grid]


def po_benchmark(scenario: ToxScenario, n_patients: int, replicates: int,
                 theta0: float | None = None, seed: int = 0) -> PcsResult:
    """Complete-information upper-bound design.

    Each patient's latent uniform fixes the toxicity indicator at every
    combo at once; the empirical rates are projected onto the bimonotone
    cone and the combo with projected rate closest to the target wins, ties
    to the lower row-major index.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if n_patients < 1:
        raise ValueError("need at least one patient")
    if theta0 is None:
        theta0 = scenario.theta0
    grid = scenario.grid
    sel = _k.benchmark_trials(scenario.flat(), grid.n_b, grid.n_a, theta0,
                              n_patients, replicates, seed)
    return _result_from_counts(np.asarray(sel, dtype=float), scenario,
                               n_patients, replicates)
