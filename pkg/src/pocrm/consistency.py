"""Large-sample consistency machinery for the POCRM.

Relabelling of combinations by true toxicity, correct ordering groups,
watched-combination sets, converged MLE values, the simplex-sampled
likelihood-dominance check, skeleton amendment, and the cross-scenario
necessary condition on the boundary powers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .crm import (DEFAULT_DOMAIN, CrmConsistencyReport, CrmViolation,
                  ModelParamDomain, Skeleton, crm_boundaries)
from .grid import Combo, DoseGrid, Ordering
from .kernels import impl as _k
from .scenarios import MTC_TOL, ToxScenario


class NoMtcError(ValueError):
    """Scenario has no combination at the target toxicity level."""


class InGroupError(ValueError):
    """Watched sets requested for an ordering in the correct group."""


class AmendmentError(ValueError):
    """Skeleton amendment cannot satisfy the interval conditions."""


# ---------------------------------------------------------------------------
# Relabelling and correct groups
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Labelling:
    """A toxicity-sorted labelling d_1..d_k of the combos, one MTC designated.

    ``seq[l-1]`` is the combo labelled d_l; the designated MTC carries label
    nu, where nu - 1 counts the combos strictly less toxic than the target.
    """

    grid: DoseGrid
    seq: tuple[Combo, ...]
    nu: int
    mtc: Combo
    _lab: dict[Combo, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_lab",
                           {c: l + 1 for l, c in enumerate(self.seq)})

    def label(self, combo: Combo) -> int:
        return self._lab[combo]

    def combo(self, l: int) -> Combo:
        return self.seq[l - 1]

    def label_matrix(self) -> np.ndarray:
        """Label numbers arranged like the scenario matrix (bottom row first)."""
        out = np.empty((self.grid.n_b, self.grid.n_a), dtype=np.int64)
        for c, l in self._lab.items():
            out[c[1] - 1, c[0] - 1] = l
        return out

    @property
    def below_set(self) -> frozenset[Combo]:
        return frozenset(self.seq[: self.nu - 1])


def relabel(scenario: ToxScenario) -> list[Labelling]:
    """Toxicity-sorted labellings, one version per MTC.

    Non-MTC ties are broken by row-major index, which is compatible with the
    dominance order.  In each version the designated MTC takes label nu and
    the remaining MTCs follow it, so every version is non-decreasing in
    toxicity and is itself a linear extension of the grid.
    """
    if not scenario.mtc_set:
        raise NoMtcError("scenario has no combo at the target toxicity level")
    grid = scenario.grid
    key = lambda c: (scenario.prob(c), grid.flat(c))
    below = sorted((c for c in grid.combos()
                    if scenario.prob(c) < scenario.theta0 - MTC_TOL), key=key)
    above = sorted((c for c in grid.combos()
                    if scenario.prob(c) > scenario.theta0 + MTC_TOL), key=key)
    nu = len(below) + 1
    versions = []
    for p in scenario.mtc_set:
        others = [c for c in scenario.mtc_set if c != p]
        others.sort(key=lambda c: grid.flat(c))
        seq = tuple(below + [p] + others + above)
        versions.append(Labelling(grid=grid, seq=seq, nu=nu, mtc=p))
    return versions


def correct_group(scenario: ToxScenario, orderings: list[Ordering]) -> list[int]:
    """Indices of orderings in the correct group.

    An ordering qualifies when under some labelling version a designated MTC
    sits at its label position with exactly the lower-labelled combos before
    it.  Since tied MTCs may take any of the labels nu..nu+P-1, this holds
    iff some MTC is preceded by all strictly-less-toxic combos and by
    nothing above the target (other MTCs may interleave).
    """
    versions = relabel(scenario)
    below = versions[0].below_set
    mtcs = set(scenario.mtc_set)
    out = []
    for idx, o in enumerate(orderings):
        for p in mtcs:
            prefix = set(o.seq[: o.position(p) - 1])
            if below <= prefix and prefix <= below | mtcs:
                out.append(idx)
                break
    return out


def group_for_order_scenario(nu: int, mtc: Combo, below: frozenset[Combo],
                             orderings: list[Ordering]) -> list[int]:
    """Correct-group indices directly from (nu, mtc, below-set)."""
    return [idx for idx, o in enumerate(orderings)
            if o[nu] == mtc and set(o.seq[: nu - 1]) == below]


# ---------------------------------------------------------------------------
# Watched combinations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WSets:
    """Misplaced combos around the MTC and the combos watching them.

    t1: labels above nu ordered before the MTC; t2: labels below nu ordered
    after it.  w1/w2 hold the labels of the combos ordered immediately
    before (after) those misplaced combos that are not misplaced themselves.
    """

    t1: frozenset[int]
    t2: frozenset[int]
    w1: frozenset[int]
    w2: frozenset[int]
    labelling: Labelling

    @property
    def w(self) -> frozenset[int]:
        return self.w1 | self.w2

    @property
    def w_combos(self) -> list[Combo]:
        return [self.labelling.combo(l) for l in sorted(self.w)]


def w_sets(m: Ordering, scenario: ToxScenario,
           version: Labelling | None = None) -> WSets:
    """Watched-combination sets of an ordering outside the correct group."""
    if correct_group(scenario, [m]):
        raise InGroupError("watched sets are defined for incorrect orderings")
    lab = version if version is not None else relabel(scenario)[0]
    nu, k = lab.nu, len(lab.seq)
    pos_mtc = m.position(lab.mtc)
    t1 = frozenset(l for l in range(nu + 1, k + 1)
                   if m.position(lab.combo(l)) < pos_mtc)
    t2 = frozenset(l for l in range(1, nu)
                   if m.position(lab.combo(l)) > pos_mtc)
    w1 = set()
    for l in t1:
        s = m.position(lab.combo(l))
        if s > 1:
            neighbour = lab.label(m[s - 1])
            if neighbour not in t1:
                w1.add(neighbour)
    w2 = set()
    for l in t2:
        s = m.position(lab.combo(l))
        if s < k:
            neighbour = lab.label(m[s + 1])
            if neighbour not in t2:
                w2.add(neighbour)
    return WSets(t1=t1, t2=t2, w1=frozenset(w1), w2=frozenset(w2),
                 labelling=lab)


# ---------------------------------------------------------------------------
# Converged MLEs and the dominance statistic
# ---------------------------------------------------------------------------

def converged_mle_correct(skeleton: Skeleton, scenario: ToxScenario) -> float:
    """Limit of the MLE under any correct-group ordering: ln theta0 / ln alpha[nu]."""
    nu = relabel(scenario)[0].nu
    return float(np.log(scenario.theta0) / np.log(skeleton.alpha[nu - 1]))


def converged_mle_incorrect(alpha_by_combo: np.ndarray, r: np.ndarray,
                            eta: np.ndarray,
                            domain: ModelParamDomain = DEFAULT_DOMAIN,
                            ) -> tuple[float, bool]:
    """Root of the allocation-weighted score; (value, hit-boundary flag)."""
    alpha_by_combo = np.asarray(alpha_by_combo, dtype=float)
    r = np.asarray(r, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(eta < 0) or abs(eta.sum() - 1.0) > 1e-9:
        raise ValueError("eta must be nonnegative and sum to 1")
    a = float(_k.weighted_mle(alpha_by_combo, r, eta, domain.lo, domain.hi))
    return a, a in (domain.lo, domain.hi)


def f_m(alpha_at: float, r: float, a_hat: float) -> float:
    """Expected per-patient log-likelihood R ln(alpha^a) + (1-R) ln(1-alpha^a)."""
    p = float(np.clip(alpha_at ** a_hat, 1e-300, 1.0 - 1e-15))
    return r * np.log(p) + (1.0 - r) * np.log1p(-p)


# ---------------------------------------------------------------------------
# Position-interval (Lemma-type) check, shared with crm.check_crm_consistency
# ---------------------------------------------------------------------------

def interval_report(alpha: np.ndarray, r_ordered: np.ndarray, mtc_pos: int,
                    theta0: float, domain: ModelParamDomain = DEFAULT_DOMAIN,
                    ) -> CrmConsistencyReport:
    """Interval conditions on a_s = ln R_s / ln alpha[s] by position.

    Unlike the strict CRM entry point this accepts non-monotone r_ordered
    (orderings in a correct group need not sort the combos above the MTC by
    toxicity).  Positions other than mtc_pos whose toxicity ties the target
    are further tolerated combinations; no condition is imposed there.
    """
    alpha = np.asarray(alpha, dtype=float)
    r = np.asarray(r_ordered, dtype=float)
    k = alpha.size
    b = crm_boundaries(Skeleton(tuple(alpha)), theta0, domain)
    a = np.log(r) / np.log(alpha)
    violations: list[CrmViolation] = []
    for pos in range(1, k + 1):
        ai = a[pos - 1]
        if pos == mtc_pos:
            if not b[pos - 1] < ai:
                violations.append(CrmViolation(pos, ai, b[pos - 1], "lower"))
            if not ai < b[pos]:
                violations.append(CrmViolation(pos, ai, b[pos], "upper"))
        elif abs(r[pos - 1] - theta0) <= MTC_TOL:
            continue
        elif pos < mtc_pos:
            if not ai > b[pos]:
                violations.append(CrmViolation(pos, ai, b[pos], "lower"))
        else:
            if not ai < b[pos - 1]:
                violations.append(CrmViolation(pos, ai, b[pos - 1], "upper"))
    return CrmConsistencyReport(
        consistent=not violations,
        violations=tuple(violations),
        a_values=tuple(float(v) for v in a),
        boundaries=tuple(float(v) for v in b),
    )


# ---------------------------------------------------------------------------
# Full consistency check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Eq2Violation:
    """A failed likelihood-dominance comparison, with a sampled witness."""

    m: int                 # incorrect ordering index
    t: int                 # correct-group ordering index
    label: int             # label of the watched combo
    combo: Combo
    count: int             # violating draws for this (m, t, combo)
    worst_margin: float    # most negative lhs - rhs seen
    witness_draw: int      # first violating draw index for ordering m
    witness_eta: tuple[float, ...]
    witness_subset: tuple[int, ...]   # labels carrying the eta weights
    witness_a: float       # converged MLE under m at the witness draw

    def to_json(self) -> dict:
        return {
            "m": self.m, "t": self.t, "label": self.label,
            "combo": list(self.combo), "count": self.count,
            "worst_margin": self.worst_margin,
            "witness_draw": self.witness_draw,
            "witness_eta": list(self.witness_eta),
            "witness_subset": list(self.witness_subset),
            "witness_a": self.witness_a,
        }


@dataclass(frozen=True)
class ConsistencyReport:
    group: tuple[int, ...]
    crm_ok: dict[int, CrmConsistencyReport]
    eq2_violations: tuple[Eq2Violation, ...]
    verdict: bool
    n_draws: int
    seed: int

    def to_json(self) -> dict:
        return {
            "group": list(self.group),
            "crm_ok": {str(t): rep.consistent for t, rep in self.crm_ok.items()},
            "crm_violations": {
                str(t): [str(v) for v in rep.violations]
                for t, rep in self.crm_ok.items() if not rep.consistent
            },
            "eq2_violations": [v.to_json() for v in self.eq2_violations],
            "verdict": self.verdict,
            "n_draws": self.n_draws,
            "seed": self.seed,
        }


def _neighbour_combos(o: Ordering, combo: Combo) -> list[Combo]:
    s = o.position(combo)
    out = []
    if s > 1:
        out.append(o[s - 1])
    if s < len(o):
        out.append(o[s + 1])
    return out


def _eq2_for_m(alpha: np.ndarray, orderings: list[Ordering], group: list[int],
               m_idx: int, lab: Labelling, scenario: ToxScenario, t0: Ordering,
               a_t_hat: float, domain: ModelParamDomain, draws: int,
               seed: int, eq2_margin: float) -> list[Eq2Violation]:
    """Sampled dominance check of one incorrect ordering against the group.

    Allocation weights are drawn on the simplex over the combo subset
    holding the MTC, its neighbours under a reference correct ordering, the
    watched combos, and their neighbours under the incorrect ordering.  A
    comparison counts as a violation only when the incorrect ordering wins
    by more than ``eq2_margin``: weights concentrated on a watched combo let
    the incorrect model fit that combo exactly, so every skeleton loses some
    comparisons by a vanishing amount and a zero margin would reject all of
    them.
    """
    m = orderings[m_idx]
    ws = w_sets(m, scenario, lab)
    w_combos = ws.w_combos
    if not w_combos:
        return []
    subset: list[Combo] = []
    for c in ([lab.mtc] + _neighbour_combos(t0, lab.mtc) + w_combos
              + [n for w in w_combos for n in _neighbour_combos(m, w)]):
        if c not in subset:
            subset.append(c)
    subset.sort(key=lab.label)
    q = len(subset)
    alpha_sub_m = np.array([alpha[m.position(c) - 1] for c in subset])
    r_sub = np.array([scenario.prob(c) for c in subset])
    alpha_t_w = np.array([[alpha[orderings[t].position(w) - 1]
                           for w in w_combos] for t in group])
    alpha_m_w = np.array([alpha[m.position(w) - 1] for w in w_combos])
    r_w = np.array([scenario.prob(w) for w in w_combos])
    viol, worst, first_draw, first_eta, first_a = _k.eq2_sample(
        alpha_sub_m, r_sub, alpha_t_w, alpha_m_w, r_w, a_t_hat,
        domain.lo, domain.hi, draws, _k.derive_seed(seed, m_idx), eq2_margin)
    out = []
    subset_labels = tuple(lab.label(c) for c in subset)
    for ti, t in enumerate(group):
        for wi, w in enumerate(w_combos):
            if viol[ti, wi] > 0:
                out.append(Eq2Violation(
                    m=m_idx, t=t, label=lab.label(w), combo=w,
                    count=int(viol[ti, wi]),
                    worst_margin=float(worst[ti, wi]),
                    witness_draw=int(first_draw),
                    witness_eta=tuple(float(v) for v in first_eta[:q]),
                    witness_subset=subset_labels,
                    witness_a=float(first_a)))
    return out


def check_pocrm_consistency(skeleton: Skeleton, orderings: list[Ordering],
                            scenario: ToxScenario,
                            n_draws: int = 50_000, seed: int = 0,
                            domain: ModelParamDomain = DEFAULT_DOMAIN,
                            eq2_margin: float = 0.01) -> ConsistencyReport:
    """Sufficient-condition check: correct group, interval conditions, and
    the sampled likelihood-dominance condition for every incorrect ordering.

    With several MTCs the dominance condition passes if it holds under any
    labelling version; the report carries the first version's violations
    when none passes.  ``eq2_margin`` is the dominance deficit below which a
    sampled comparison is tolerated; see the sampler for why it cannot be
    zero.
    """
    versions = relabel(scenario)
    nu = versions[0].nu
    alpha = skeleton.as_array()
    group = correct_group(scenario, orderings)
    if not group:
        return ConsistencyReport(group=(), crm_ok={}, eq2_violations=(),
                                 verdict=False, n_draws=n_draws, seed=seed)
    crm_ok = {}
    for t in group:
        r_ord = np.array([scenario.prob(c) for c in orderings[t].seq])
        crm_ok[t] = interval_report(alpha, r_ord, nu, scenario.theta0, domain)
    all_crm = all(rep.consistent for rep in crm_ok.values())
    a_t_hat = float(np.log(scenario.theta0) / np.log(alpha[nu - 1]))
    non_group = [i for i in range(len(orderings)) if i not in set(group)]
    best: tuple[Eq2Violation, ...] | None = None
    for lab in versions:
        t0 = orderings[group[0]]
        for t in group:
            if orderings[t].seq == lab.seq:
                t0 = orderings[t]
                break
        violations: list[Eq2Violation] = []
        for m_idx in non_group:
            violations.extend(_eq2_for_m(
                alpha, orderings, group, m_idx, lab, scenario, t0,
                a_t_hat, domain, n_draws, seed, eq2_margin))
        if not violations:
            best = ()
            break
        if best is None:
            best = tuple(violations)
    return ConsistencyReport(group=tuple(group), crm_ok=crm_ok,
                             eq2_violations=best, verdict=all_crm and not best,
                             n_draws=n_draws, seed=seed)


# ---------------------------------------------------------------------------
# Skeleton amendment
# ---------------------------------------------------------------------------

AMEND_EPS = 1e-4


def _boundary(alpha_lo: float, alpha_hi: float, theta0: float,
              domain: ModelParamDomain) -> float:
    def g(x):
        return alpha_lo ** x + alpha_hi ** x - 2.0 * theta0

    if g(domain.lo) < 0 or g(domain.hi) > 0:
        raise AmendmentError("interval boundary not bracketed by the domain")
    return brentq(g, domain.lo, domain.hi, xtol=1e-10)


def amend_skeleton(skeleton: Skeleton, scenario: ToxScenario,
                   group: list[Ordering], theta0: float | None = None,
                   domain: ModelParamDomain = DEFAULT_DOMAIN,
                   eps: float = AMEND_EPS, max_sweeps: int = 100) -> Skeleton:
    """Minimally adjust the skeleton so every group ordering passes the
    interval conditions.

    Positions below the MTC rank get their entry raised until the worst-case
    converged slope clears the upper boundary of the cell; positions above
    get lowered symmetrically.  The binding case at each position is the
    extreme toxicity the group can place there, so one pass per sweep covers
    all group orderings; sweeps repeat because each entry moves two
    boundaries.
    """
    if not group:
        raise ValueError("need a nonempty correct group")
    if theta0 is None:
        theta0 = scenario.theta0
    nu = relabel(scenario)[0].nu
    alpha = list(skeleton.alpha)
    k = len(alpha)
    r_by_pos = np.array([[scenario.prob(c) for c in t.seq] for t in group])
    rmax = r_by_pos.max(axis=0)
    rmin = r_by_pos.min(axis=0)

    for _ in range(max_sweeps):
        changed = False
        for s in range(nu - 1, 0, -1):       # below the MTC: raise alpha[s]
            target_r = rmax[s - 1]
            if np.log(target_r) / np.log(alpha[s - 1]) <= _boundary(
                    alpha[s - 1], alpha[s], theta0, domain):
                def h(x, s=s, target_r=target_r):
                    return (np.log(target_r) / np.log(x)
                            - _boundary(x, alpha[s], theta0, domain))

                top = alpha[s] - eps
                if h(top) <= 0:
                    raise AmendmentError(
                        f"cannot raise entry {s} below entry {s + 1}")
                root = brentq(h, alpha[s - 1], top, xtol=1e-8)
                alpha[s - 1] = min(root + eps, top)
                changed = True
        for s in range(nu + 1, k + 1):        # above the MTC: lower alpha[s]
            target_r = rmin[s - 1]
            if abs(target_r - theta0) <= MTC_TOL:
                continue                      # another tolerated combination
            if np.log(target_r) / np.log(alpha[s - 1]) >= _boundary(
                    alpha[s - 2], alpha[s - 1], theta0, domain):
                def h(x, s=s, target_r=target_r):
                    return (_boundary(alpha[s - 2], x, theta0, domain)
                            - np.log(target_r) / np.log(x))

                bottom = alpha[s - 2] + eps
                if h(bottom) <= 0:
                    raise AmendmentError(
                        f"cannot lower entry {s} above entry {s - 1}")
                root = brentq(h, bottom, alpha[s - 1], xtol=1e-8)
                alpha[s - 1] = max(root - eps, bottom)
                changed = True
        if not changed:
            break
    else:
        raise AmendmentError("amendment sweeps did not converge")
    out = Skeleton(tuple(alpha))
    for t in group:
        r_ord = np.array([scenario.prob(c) for c in t.seq])
        if not interval_report(out.as_array(), r_ord, nu, theta0,
                               domain).consistent:
            raise AmendmentError("amended skeleton fails re-verification")
    return out


# ---------------------------------------------------------------------------
# Cross-scenario necessary condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiScenarioViolation:
    """A failed inequality between a boundary power and a sorted toxicity."""

    i: int          # skeleton position whose boundary power is constrained
    slot: int       # rank slot of the scenario providing the toxicity
    side: str       # "lower": need R < alpha^b; "upper": need alpha^b < R
    power: float    # the boundary power alpha[i]^{b}
    toxicity: float

    def __str__(self):
        if self.side == "lower":
            return (f"slot {self.slot}: toxicity {self.toxicity:.4f} must lie "
                    f"below alpha[{self.i}]^b = {self.power:.4f}")
        return (f"slot {self.slot}: alpha[{self.i}]^b = {self.power:.4f} "
                f"must lie below toxicity {self.toxicity:.4f}")


@dataclass(frozen=True)
class MultiScenarioReport:
    violations: tuple[MultiScenarioViolation, ...]
    uncheckable: tuple[int, ...]    # rank slots with no scenario supplied
    boundaries: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"i": v.i, "slot": v.slot, "side": v.side,
                 "power": v.power, "toxicity": v.toxicity}
                for v in self.violations
            ],
            "uncheckable": list(self.uncheckable),
            "boundaries": list(self.boundaries),
        }


def slot_assignment(scenarios: list[ToxScenario]) -> dict[int, ToxScenario]:
    """Assign each single-MTC scenario to the rank slot of its MTC label."""
    slots: dict[int, ToxScenario] = {}
    for sc in scenarios:
        if len(sc.mtc_set) != 1:
            raise ValueError(
                f"{sc.name or 'scenario'}: slot assignment needs a single MTC")
        nu = relabel(sc)[0].nu
        if nu in slots:
            raise ValueError(f"two scenarios share rank slot {nu}")
        slots[nu] = sc
    return slots


def check_multi_scenario(skeleton: Skeleton,
                         slots: dict[int, ToxScenario],
                         theta0: float,
                         domain: ModelParamDomain = DEFAULT_DOMAIN,
                         ) -> MultiScenarioReport:
    """Necessary condition for joint consistency across rank-slot scenarios.

    For each position i, alpha[i] powered by the two cell boundaries must
    separate the i-th smallest toxicities of the scenarios whose MTC sits
    below slot i from those whose MTC sits above.  Every failed pairwise
    inequality is itemised; absent slots are reported as uncheckable.
    """
    alpha = skeleton.as_array()
    k = alpha.size
    b = crm_boundaries(skeleton, theta0, domain)
    sorted_tox = {l: np.sort(sc.flat()) for l, sc in slots.items()}
    violations: list[MultiScenarioViolation] = []
    for i in range(1, k + 1):
        if i <= k - 1:
            power = float(alpha[i - 1] ** b[i])     # lower cell boundary power
            for l in range(i + 1, k + 1):
                if l in sorted_tox:
                    tox = float(sorted_tox[l][i - 1])
                    if not tox < power:
                        violations.append(MultiScenarioViolation(
                            i, l, "lower", power, tox))
            if i in sorted_tox:
                tox = float(sorted_tox[i][i - 1])
                if not power < tox:
                    violations.append(MultiScenarioViolation(
                        i, i, "upper", power, tox))
        if i >= 2:
            power = float(alpha[i - 1] ** b[i - 1])
            if i in sorted_tox:
                tox = float(sorted_tox[i][i - 1])
                if not tox < power:
                    violations.append(MultiScenarioViolation(
                        i, i, "lower", power, tox))
            for l in range(1, i):
                if l in sorted_tox:
                    tox = float(sorted_tox[l][i - 1])
                    if not power < tox:
                        violations.append(MultiScenarioViolation(
                            i, l, "upper", power, tox))
    missing = tuple(l for l in range(1, k + 1) if l not in slots)
    return MultiScenarioReport(violations=tuple(violations),
                               uncheckable=missing,
                               boundaries=tuple(float(v) for v in b))


# ---------------------------------------------------------------------------
# End-to-end calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationResult:
    skeleton: Skeleton
    certificate: bool
    iterations: int
    surviving: tuple[str, ...]   # human-readable unresolved violations


def _eq2_entry_bisect(alpha: np.ndarray, orderings, group, m_idx, lab,
                      scenario, t0, nu, entry: int, raise_entry: bool,
                      domain, draws, seed, eq2_margin) -> float | None:
    """Smallest move of one skeleton entry clearing the sampled check for m.

    Bisects on alpha[entry] between its current value and the adjacent
    entry; returns the new value or None when even the extreme fails.
    """
    lo_lim = alpha[entry - 2] + AMEND_EPS if entry > 1 else domain_eps_floor()
    hi_lim = (alpha[entry] - AMEND_EPS
              if entry < alpha.size else 1.0 - AMEND_EPS)

    def passes(x: float) -> bool:
        trial = alpha.copy()
        trial[entry - 1] = x
        a_t_hat = float(np.log(scenario.theta0) / np.log(trial[nu - 1]))
        return not _eq2_for_m(trial, orderings, group, m_idx, lab, scenario,
                              t0, a_t_hat, domain, draws, seed, eq2_margin)

    cur = alpha[entry - 1]
    far = hi_lim if raise_entry else lo_lim
    if not passes(far):
        return None
    good, bad = far, cur
    for _ in range(30):
        mid = 0.5 * (good + bad)
        if passes(mid):
            good = mid
        else:
            bad = mid
    margin = AMEND_EPS if raise_entry else -AMEND_EPS
    return min(max(good + margin, lo_lim), hi_lim)


def domain_eps_floor() -> float:
    return 1e-3


def calibrate_skeleton(initial: Skeleton, scenarios: list[ToxScenario],
                       orderings: list[Ordering], theta0: float,
                       n_draws: int = 50_000, seed: int = 0,
                       domain: ModelParamDomain = DEFAULT_DOMAIN,
                       max_iter: int = 50, eq2_margin: float = 0.01,
                       ) -> CalibrationResult:
    """Iterate interval amendment, sampled-check-driven entry moves, and the
    cross-scenario condition until every scenario's verdict passes.

    Raising an entry targets the watched combo's rank under the correct
    orderings when it lies below the MTC; lowering targets it above.  Moves
    are found by bisection against a rerun of the sampler with the same
    seed, so the procedure is deterministic for fixed inputs.
    """
    if not scenarios:
        raise ValueError("need at least one scenario")
    alpha = initial.as_array()
    surviving: list[str] = []
    it = 0
    for it in range(1, max_iter + 1):
        surviving = []
        changed = False

        # interval conditions per scenario
        for sc in scenarios:
            group = correct_group(sc, orderings)
            if not group:
                surviving.append(f"{sc.name or 'scenario'}: empty correct group")
                continue
            try:
                amended = amend_skeleton(Skeleton(tuple(alpha)), sc,
                                         [orderings[t] for t in group],
                                         theta0, domain)
            except AmendmentError as exc:
                surviving.append(f"{sc.name or 'scenario'}: {exc}")
                continue
            if tuple(amended.alpha) != tuple(alpha):
                alpha = amended.as_array()
                changed = True

        # cross-scenario necessary condition
        single = [sc for sc in scenarios if len(sc.mtc_set) == 1]
        if len(single) > 1:
            slots = slot_assignment(single)
            msr = check_multi_scenario(Skeleton(tuple(alpha)), slots, theta0,
                                       domain)
            for v in msr.violations:
                moved = _move_for_multi(alpha, v, theta0, domain)
                if moved is None:
                    surviving.append(f"rank-slot condition: {v}")
                else:
                    alpha = moved
                    changed = True

        # sampled dominance condition per scenario
        for sc in scenarios:
            group = correct_group(sc, orderings)
            if not group:
                continue
            lab = relabel(sc)[0]
            nu = lab.nu
            t0 = orderings[group[0]]
            for t in group:
                if orderings[t].seq == lab.seq:
                    t0 = orderings[t]
                    break
            a_t_hat = float(np.log(sc.theta0) / np.log(alpha[nu - 1]))
            for m_idx in (i for i in range(len(orderings))
                          if i not in set(group)):
                viols = _eq2_for_m(alpha, orderings, group, m_idx, lab, sc,
                                   t0, a_t_hat, domain, n_draws,
                                   seed + it, eq2_margin)
                if not viols:
                    continue
                label = viols[0].label
                # preferred move: push the watched entry toward the MTC
                # rank; fallback: pull the next entry on the MTC side the
                # other way, which shrinks the same skeleton gap
                if label < nu:
                    candidates = [(label, True), (label + 1, False)]
                else:
                    candidates = [(label, False), (label - 1, True)]
                for entry, raise_entry in candidates:
                    new_val = _eq2_entry_bisect(
                        alpha, orderings, group, m_idx, lab, sc, t0, nu,
                        entry, raise_entry, domain, n_draws, seed + it,
                        eq2_margin)
                    if new_val is not None:
                        alpha[entry - 1] = new_val
                        changed = True
                        break
                else:
                    surviving.append(
                        f"{sc.name or 'scenario'}: sampled condition for "
                        f"ordering {m_idx} at label {label} not satisfiable "
                        f"by moving one entry")

        if not changed and not surviving:
            break
        if not changed and surviving:
            break

    skeleton = Skeleton(tuple(alpha))
    certificate = not surviving and all(
        check_pocrm_consistency(skeleton, orderings, sc, n_draws,
                                seed + max_iter + 1, domain, eq2_margin).verdict
        for sc in scenarios)
    return CalibrationResult(skeleton=skeleton, certificate=certificate,
                             iterations=it, surviving=tuple(surviving))


def _move_for_multi(alpha: np.ndarray, v: MultiScenarioViolation,
                    theta0: float, domain: ModelParamDomain,
                    ) -> np.ndarray | None:
    """One-entry fix of a failed rank-slot inequality, or None if impossible.

    side "lower" (a toxicity must fall below alpha[i]^{b_{i+1}}) raises
    alpha[i]; side "upper" lowers it.  The boundary power is monotone in the
    entry between its neighbours, reaching theta0 at either end.
    """
    i = v.i
    k = alpha.size

    def power(x: float) -> float:
        trial = alpha.copy()
        trial[i - 1] = x
        b = crm_boundaries(Skeleton(tuple(trial)), theta0, domain)
        return trial[i - 1] ** (b[i] if v.side == "lower" else b[i - 1])

    if v.side == "lower":
        if not v.toxicity < theta0:
            return None
        hi = (alpha[i] if i < k else 1.0) - AMEND_EPS
        lo = alpha[i - 1]
        f = lambda x: power(x) - v.toxicity
        if f(hi) <= 0:
            return None
        root = brentq(f, lo, hi, xtol=1e-8) if f(lo) < 0 else lo
        new = min(root + AMEND_EPS, hi)
    else:
        if not v.toxicity > theta0:
            return None
        lo = (alpha[i - 2] if i > 1 else 0.0) + AMEND_EPS
        hi = alpha[i - 1]
        f = lambda x: v.toxicity - power(x)
        if f(lo) <= 0:
            return None
        root = brentq(f, lo, hi, xtol=1e-8) if f(hi) < 0 else hi
        new = max(root - AMEND_EPS, lo)
    out = alpha.copy()
    out[i - 1] = new
    return out
