"""Partial-ordering continual reassessment method for dual-agent
dose-combination trials, with consistency analysis and ordering selection."""

from .crm import (DEFAULT_DOMAIN, CrmConsistencyReport, CrmViolation,
                  DoseData, HeterogeneityError, ModelParamDomain, Skeleton,
                  check_crm_consistency, crm_boundaries, log_likelihood, mle,
                  recommend, tox_prob)
from .consistency import (AmendmentError, CalibrationResult,
                          ConsistencyReport, Eq2Violation, InGroupError,
                          Labelling, MultiScenarioReport,
                          MultiScenarioViolation, NoMtcError, WSets,
                          amend_skeleton, calibrate_skeleton,
                          check_multi_scenario, check_pocrm_consistency,
                          converged_mle_correct, converged_mle_incorrect,
                          correct_group, f_m, interval_report, relabel,
                          slot_assignment, w_sets)
from .grid import (DEFAULT_ENUM_CAP, Combo, DegenerateGridError, DoseGrid,
                   EnumerationCapError, Ordering, count_linear_extensions,
                   dominates, enumerate_orderings, is_linear_extension,
                   wages_orderings)
from .kernels import NUMBA_ENABLED, using_numba
from .scenarios import ToxScenario, get_scenario, scenario_library
from .selection import (CoverageMatrix, OrderScenario, Selection,
                        UncoverableError, coverage, enumerate_order_scenarios,
                        min_cover_size, n_consis, select_scenario_agnostic,
                        select_scenario_specific)
from .simulate import PcsResult, estimate_pcs, pcs_curve, po_benchmark
from .trial import (PocrmDesign, TrialResult, TrialState, history_rows,
                    next_allocation, ordering_posteriors, reorder_skeleton,
                    run_trial)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
