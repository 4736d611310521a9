"""POCRM trial machinery: design, state, ordering selection and conduct."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .crm import (DEFAULT_DOMAIN, DoseData, HeterogeneityError,
                  ModelParamDomain, Skeleton)
from .grid import Combo, DoseGrid, Ordering, enumerate_orderings, wages_orderings
from .kernels import TIE_RULE_LOWEST, TIE_RULE_RANDOM, impl as _k
from .scenarios import ToxScenario

TIE_RULES = ("random", "lowest-index")


def reorder_skeleton(skeleton: Skeleton, ordering: Ordering) -> dict[Combo, float]:
    """Assign skeleton value alpha[l] to the combo at position l."""
    if len(skeleton) != len(ordering):
        raise ValueError("skeleton length must equal the number of combos")
    return {ordering[l]: skeleton.alpha[l - 1] for l in range(1, len(ordering) + 1)}


@dataclass(frozen=True)
class PocrmDesign:
    """Immutable description of a POCRM design."""

    grid: DoseGrid
    skeleton: Skeleton
    orderings: tuple[Ordering, ...]
    theta0: float = 0.3
    priors: tuple[float, ...] | None = None   # None = equal
    domain: ModelParamDomain = DEFAULT_DOMAIN
    cohort_size: int = 1
    stage1_sequence: tuple[Combo, ...] | None = None  # None = first ordering
    tie_rule: str = "random"
    eq1_literal: bool = False

    def __post_init__(self):
        if not self.orderings:
            raise ValueError("need at least one ordering")
        if len(self.skeleton) != self.grid.k:
            raise ValueError("skeleton length must equal the grid size")
        for o in self.orderings:
            if o.grid != self.grid:
                raise ValueError("ordering belongs to a different grid")
        if self.priors is None:
            p = np.full(len(self.orderings), 1.0 / len(self.orderings))
        else:
            p = np.asarray(self.priors, dtype=float)
            if p.shape != (len(self.orderings),):
                raise ValueError("need one prior per ordering")
            if np.any(p < 0):
                raise ValueError("priors must be nonnegative")
            if abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("priors must sum to 1")
        object.__setattr__(self, "priors", tuple(float(v) for v in p))
        if not (0 < self.theta0 < 1):
            raise ValueError("theta0 must lie in (0, 1)")
        if self.cohort_size < 1:
            raise ValueError("cohort_size must be positive")
        if self.tie_rule not in TIE_RULES:
            raise ValueError(f"tie_rule must be one of {TIE_RULES}")
        seq = self.stage1_sequence
        if seq is None:
            seq = self.orderings[0].seq
        else:
            seq = tuple(seq)
            if not seq or seq[0] != (1, 1):
                raise ValueError("stage-1 sequence must start at (1, 1)")
            if len(set(seq)) != len(seq):
                raise ValueError("stage-1 sequence must not repeat a combo")
            for c in seq:
                if not self.grid.contains(c):
                    raise ValueError(f"stage-1 combo {c} outside the grid")
        object.__setattr__(self, "stage1_sequence", seq)

    # ---- kernel-facing arrays -------------------------------------------

    def alpha_by_combo(self) -> np.ndarray:
        """(M, k) skeleton value per ordering per row-major flat combo code."""
        k = self.grid.k
        out = np.empty((len(self.orderings), k))
        for m, o in enumerate(self.orderings):
            for l in range(1, k + 1):
                out[m, self.grid.flat(o[l])] = self.skeleton.alpha[l - 1]
        return out

    def order_combo_codes(self) -> np.ndarray:
        """(M, k) flat code of the combo at each 0-based position."""
        k = self.grid.k
        out = np.empty((len(self.orderings), k), dtype=np.int64)
        for m, o in enumerate(self.orderings):
            for l in range(1, k + 1):
                out[m, l - 1] = self.grid.flat(o[l])
        return out

    def log_priors(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.priors))

    def stage1_codes(self) -> np.ndarray:
        return np.array([self.grid.flat(c) for c in self.stage1_sequence],
                        dtype=np.int64)

    def tie_code(self) -> int:
        return TIE_RULE_RANDOM if self.tie_rule == "random" else TIE_RULE_LOWEST

    # ---- (de)serialization ----------------------------------------------

    def to_json(self) -> dict:
        return {
            "rows": self.grid.n_b,
            "cols": self.grid.n_a,
            "theta0": self.theta0,
            "skeleton": list(self.skeleton.alpha),
            "orderings": [o.to_json() for o in self.orderings],
            "priors": list(self.priors),
            "a_domain": [self.domain.lo, self.domain.hi],
            "cohort_size": self.cohort_size,
            "stage1_sequence": [[i, j] for i, j in self.stage1_sequence],
            "tie_rule": self.tie_rule,
            "eq1_literal": self.eq1_literal,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PocrmDesign":
        grid = DoseGrid(n_a=int(doc["cols"]), n_b=int(doc["rows"]))
        orderings = _orderings_from_spec(grid, doc["orderings"])
        return cls(
            grid=grid,
            skeleton=Skeleton(tuple(doc["skeleton"])),
            orderings=tuple(orderings),
            theta0=float(doc.get("theta0", 0.3)),
            priors=tuple(doc["priors"]) if "priors" in doc else None,
            domain=ModelParamDomain(*doc.get("a_domain", (1e-3, 1e3))),
            cohort_size=int(doc.get("cohort_size", 1)),
            stage1_sequence=(
                tuple((int(i), int(j)) for i, j in doc["stage1_sequence"])
                if "stage1_sequence" in doc else None
            ),
            tie_rule=doc.get("tie_rule", "random"),
            eq1_literal=bool(doc.get("eq1_literal", False)),
        )


def _orderings_from_spec(grid: DoseGrid, spec) -> list[Ordering]:
    """Ordering specification: "all", "wages6", or an explicit list."""
    if spec == "all":
        return enumerate_orderings(grid)
    if spec == "wages6":
        return wages_orderings(grid)
    return [Ordering.from_json(grid, s) for s in spec]


@dataclass
class TrialState:
    """Accrued data and per-patient history of one trial."""

    design: PocrmDesign
    data: DoseData
    history: list[tuple[Combo, int]] = field(default_factory=list)
    rng_seed: int = 0

    @classmethod
    def fresh(cls, design: PocrmDesign, rng_seed: int = 0) -> "TrialState":
        k = design.grid.k
        return cls(design, DoseData(np.zeros(k), np.zeros(k)), [], rng_seed)

    @property
    def stage(self) -> int:
        return 2 if self.data.heterogeneous else 1

    def record(self, combo: Combo, outcome: int) -> None:
        c = self.design.grid.flat(combo)
        self.data.n[c] += 1
        self.data.y[c] += outcome
        self.history.append((combo, int(outcome)))


def ordering_posteriors(state: TrialState, design: PocrmDesign) -> np.ndarray:
    """Posterior ordering probabilities from maximised likelihoods and priors."""
    if state.stage != 2:
        raise HeterogeneityError("posteriors need heterogeneous (stage-2) data")
    alpha_mc = design.alpha_by_combo()
    logw = np.empty(len(design.orderings))
    for m in range(len(design.orderings)):
        a_hat = _k.mle_counts(alpha_mc[m], state.data.n, state.data.y,
                              design.domain.lo, design.domain.hi)
        ll = _k.loglik_counts(alpha_mc[m], state.data.n, state.data.y, a_hat)
        logw[m] = np.exp(ll) if design.eq1_literal else ll
    logw = logw + design.log_priors()
    finite = logw[np.isfinite(logw)]
    if finite.size == 0:
        raise ValueError("all posterior weights vanished")
    w = np.exp(logw - finite.max())
    return w / w.sum()


def next_allocation(state: TrialState, design: PocrmDesign) -> Combo:
    """Next combo: stage-1 rule before heterogeneity, model-based after."""
    if state.stage == 1:
        seq = design.stage1_sequence
        if state.data.y.sum() > 0:
            # toxicity but no non-toxicity: hold the current combo
            return state.history[-1][0] if state.history else seq[0]
        steps = len(state.history) // design.cohort_size
        return seq[min(steps, len(seq) - 1)]
    post = ordering_posteriors(state, design)
    best = post.max()
    ties = np.flatnonzero(post == best)
    if len(ties) > 1 and design.tie_rule == "random":
        rng = np.random.RandomState(
            _k.derive_seed(state.rng_seed, len(state.history)))
        m_star = int(ties[rng.randint(len(ties))])
    else:
        m_star = int(ties[0])
    ordering = design.orderings[m_star]
    alpha_mc = design.alpha_by_combo()
    a_hat = _k.mle_counts(alpha_mc[m_star], state.data.n, state.data.y,
                          design.domain.lo, design.domain.hi)
    code = _k.recommend_combo(alpha_mc[m_star], design.order_combo_codes()[m_star],
                              a_hat, design.theta0)
    return ordering[int(np.flatnonzero(design.order_combo_codes()[m_star] == code)[0]) + 1]


@dataclass(frozen=True)
class TrialResult:
    final: Combo
    final_ordering: int        # -1 if the trial never left stage 1
    state: TrialState


def run_trial(design: PocrmDesign, scenario: ToxScenario, n_patients: int,
              seed: int) -> TrialResult:
    """Simulate one full trial with a deterministic seeded outcome stream."""
    if scenario.grid != design.grid:
        raise ValueError("scenario grid does not match the design grid")
    if n_patients < design.cohort_size:
        raise ValueError("n_patients must cover at least one cohort")
    alloc, outcome, stage, chosen, final, final_m = _k.run_trial_capture(
        design.alpha_by_combo(), design.log_priors(),
        design.order_combo_codes(), scenario.flat(), design.theta0,
        design.domain.lo, design.domain.hi, design.stage1_codes(),
        design.cohort_size, n_patients, _k.derive_seed(seed, 0),
        design.tie_code(), 1 if design.eq1_literal else 0)
    state = TrialState.fresh(design, rng_seed=seed)
    combos = design.grid.combos()
    for p in range(n_patients):
        state.record(combos[int(alloc[p])], int(outcome[p]))
    state.stages = [int(s) for s in stage]
    state.chosen_orderings = [int(m) for m in chosen]
    return TrialResult(final=combos[int(final)], final_ordering=int(final_m),
                       state=state)


def history_rows(result: TrialResult) -> list[dict]:
    """Per-patient history rows for CSV export."""
    rows = []
    for p, (combo, outcome) in enumerate(result.state.history):
        rows.append({
            "patient": p + 1,
            "combo_i": combo[0],
            "combo_j": combo[1],
            "outcome": outcome,
            "selected_ordering": result.state.chosen_orderings[p],
            "stage": result.state.stages[p],
        })
    return rows
