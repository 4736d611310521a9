"""Command-line front end: config ingestion, subcommand dispatch, and
deterministic CSV/JSON artifacts."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .consistency import calibrate_skeleton, check_pocrm_consistency
from .crm import ModelParamDomain, Skeleton, crm_boundaries
from .grid import DoseGrid, Ordering, enumerate_orderings, wages_orderings
from .scenarios import ToxScenario, get_scenario, scenario_library
from .selection import (coverage, enumerate_order_scenarios,
                        select_scenario_agnostic, select_scenario_specific)
from .simulate import estimate_pcs, pcs_curve, po_benchmark
from .trial import PocrmDesign

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    """Invalid run configuration; maps to exit code 2."""


_KNOWN_KEYS = {
    "rows", "cols", "theta0", "skeleton", "orderings", "priors",
    "cohort_size", "stage1_sequence", "a_domain", "n_patients",
    "replicates", "seed", "scenario", "scenario_csv", "out_dir",
    "tie_rule", "eq1_literal", "n_draws", "eq2_margin", "budget",
}


@dataclass
class RunConfig:
    """Validated run configuration with every default made explicit."""

    rows: int = 3
    cols: int = 3
    theta0: float = 0.3
    skeleton: list[float] | None = None
    orderings: object = "all"       # "all" | "wages6" | "select:agnostic"
                                    # | "select:specific" | explicit list
    priors: list[float] | None = None
    cohort_size: int = 1
    stage1_sequence: list[list[int]] | None = None
    a_domain: list[float] = field(default_factory=lambda: [1e-3, 1e3])
    n_patients: int = 60
    replicates: int = 2000
    seed: int = 0
    scenario: int | None = None
    scenario_csv: str | None = None
    out_dir: str = "."
    tie_rule: str = "random"
    eq1_literal: bool = False
    n_draws: int = 50_000
    eq2_margin: float = 0.01
    budget: int | None = None

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        doc = {}
        if path is not None:
            p = Path(path)
            if not p.exists():
                raise ConfigError(f"config file not found: {path}")
            try:
                doc = json.loads(p.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
            if not isinstance(doc, dict):
                raise ConfigError("config root must be a JSON object")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(doc) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**doc)
        env_seed = os.environ.get("POCRM_SEED")
        if env_seed is not None:
            try:
                cfg.seed = int(env_seed)
            except ValueError as exc:
                raise ConfigError("POCRM_SEED must be an integer") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not (isinstance(self.rows, int) and self.rows >= 1):
            raise ConfigError("field 'rows': must be a positive integer")
        if not (isinstance(self.cols, int) and self.cols >= 1):
            raise ConfigError("field 'cols': must be a positive integer")
        if not (0.0 < self.theta0 < 1.0):
            raise ConfigError("field 'theta0': must lie in (0, 1)")
        if self.skeleton is not None:
            vals = list(self.skeleton)
            for i, v in enumerate(vals):
                if not (0.0 < float(v) < 1.0):
                    raise ConfigError(
                        f"field 'skeleton'[{i}]: value {v} outside (0, 1)")
                if i > 0 and float(v) <= float(vals[i - 1]):
                    raise ConfigError(
                        f"field 'skeleton'[{i}]: not strictly increasing")
        if self.cohort_size < 1:
            raise ConfigError("field 'cohort_size': must be >= 1")
        if self.n_patients < 1:
            raise ConfigError("field 'n_patients': must be >= 1")
        if self.replicates < 1:
            raise ConfigError("field 'replicates': must be >= 1")
        if self.n_draws < 1:
            raise ConfigError("field 'n_draws': must be >= 1")
        if self.eq2_margin < 0:
            raise ConfigError("field 'eq2_margin': must be >= 0")
        if len(self.a_domain) != 2 or not (0 < self.a_domain[0]
                                           < self.a_domain[1]):
            raise ConfigError("field 'a_domain': need 0 < lo < hi")
        if self.scenario is not None and self.scenario_csv is not None:
            raise ConfigError("give either 'scenario' or 'scenario_csv'")
        if self.tie_rule not in ("random", "lowest-index"):
            raise ConfigError("field 'tie_rule': random or lowest-index")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("field 'budget': must be >= 1")

    # ---- derived objects -------------------------------------------------

    def grid(self) -> DoseGrid:
        return DoseGrid(n_a=self.cols, n_b=self.rows)

    def domain(self) -> ModelParamDomain:
        return ModelParamDomain(float(self.a_domain[0]),
                                float(self.a_domain[1]))

    def skeleton_obj(self) -> Skeleton:
        if self.skeleton is None:
            raise ConfigError("field 'skeleton': required for this command")
        if len(self.skeleton) != self.grid().k:
            raise ConfigError("field 'skeleton': length must equal rows*cols")
        return Skeleton(tuple(float(v) for v in self.skeleton))

    def ordering_list(self) -> list[Ordering]:
        grid = self.grid()
        spec = self.orderings
        if spec == "all":
            return enumerate_orderings(grid)
        if spec == "wages6":
            return wages_orderings(grid)
        if spec == "select:agnostic":
            sel = select_scenario_agnostic(grid, enumerate_orderings(grid),
                                           budget=self.budget)[0]
            return [enumerate_orderings(grid)[i] for i in sel.columns]
        if spec == "select:specific":
            full = enumerate_orderings(grid)
            matrix = coverage(grid, full, scenario_library())
            sel = select_scenario_specific(matrix, budget=self.budget)[0]
            return [full[i] for i in sel.columns]
        if isinstance(spec, list):
            return [Ordering.from_json(grid, s) for s in spec]
        raise ConfigError(f"field 'orderings': unrecognised spec {spec!r}")

    def scenario_obj(self) -> ToxScenario:
        if self.scenario is not None:
            return get_scenario(int(self.scenario))
        if self.scenario_csv is not None:
            path = Path(self.scenario_csv)
            if not path.exists():
                raise ConfigError(f"scenario CSV not found: {path}")
            with path.open(newline="") as fh:
                r = [[float(v) for v in row] for row in csv.reader(fh) if row]
            return ToxScenario(r=np.asarray(r), theta0=self.theta0,
                               name=path.stem)
        raise ConfigError("field 'scenario' or 'scenario_csv': required")

    def design(self) -> PocrmDesign:
        return PocrmDesign(
            grid=self.grid(), skeleton=self.skeleton_obj(),
            orderings=tuple(self.ordering_list()), theta0=self.theta0,
            priors=tuple(self.priors) if self.priors is not None else None,
            domain=self.domain(), cohort_size=self.cohort_size,
            stage1_sequence=(tuple((int(i), int(j))
                             for i, j in self.stage1_sequence)
                             if self.stage1_sequence is not None else None),
            tie_rule=self.tie_rule, eq1_literal=self.eq1_literal)

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in sorted(_KNOWN_KEYS)}


# ---------------------------------------------------------------------------
# Artifact helpers
# ---------------------------------------------------------------------------

def _write_csv(path: Path, rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _write_manifest(out: Path, cfg: RunConfig, command: str,
                    started: float, artifacts: list[str]) -> None:
    doc = {
        "command": command,
        "config": cfg.to_json(),
        "pocrm_version": __version__,
        "wall_time_s": round(time.time() - started, 3),
        "artifacts": artifacts,
    }
    (out / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")


def _pcs_csv_rows(entries) -> list[list]:
    """entries: (scenario_id, design_id, n, result) tuples."""
    first = entries[0][3]
    k = len(first.per_combo_selection)
    header = (["scenario_id", "design_id", "N", "replicates", "pcs", "mc_se"]
              + [f"combo_{c}" for c in range(k)])
    rows = [header]
    for sid, did, n, res in entries:
        rows.append([sid, did, n, res.replicates,
                     f"{res.pcs:.6f}", f"{res.mc_se:.6f}"]
                    + [f"{v:.6f}" for v in res.per_combo_selection])
    return rows


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_orders_enumerate(cfg: RunConfig, out: Path) -> int:
    orderings = enumerate_orderings(cfg.grid())
    rows = [["ordering", "position", "combo_i", "combo_j"]]
    for m, o in enumerate(orderings):
        for pos, (i, j) in enumerate(o.seq):
            rows.append([m + 1, pos + 1, i, j])
    _write_csv(out / "orderings.csv", rows)
    print(len(orderings))
    return EXIT_OK


def _cmd_orders_select(cfg: RunConfig, out: Path, mode: str) -> int:
    grid = cfg.grid()
    full = enumerate_orderings(grid)
    if mode == "agnostic":
        matrix = coverage(grid, full, enumerate_order_scenarios(grid))
        selections = select_scenario_agnostic(grid, full, budget=cfg.budget)
    else:
        matrix = coverage(grid, full, scenario_library())
        selections = select_scenario_specific(matrix, budget=cfg.budget)
    _write_csv(out / "coverage.csv", matrix.to_csv_rows())
    rows = [["rank", "orderings", "n_consis"]]
    for rank, s in enumerate(selections):
        rows.append([rank + 1, " ".join(str(c + 1) for c in s.columns),
                     f"{s.n_consis:.4f}"])
    _write_csv(out / "selection.csv", rows)
    best = selections[0]
    print("selected orderings:",
          " ".join(str(c + 1) for c in best.columns),
          f"n.consis={best.n_consis:.4f}")
    return EXIT_OK


def _cmd_consistency_check(cfg: RunConfig, out: Path,
                           assert_consistent: bool) -> int:
    report = check_pocrm_consistency(
        cfg.skeleton_obj(), cfg.ordering_list(), cfg.scenario_obj(),
        n_draws=cfg.n_draws, seed=cfg.seed, domain=cfg.domain(),
        eq2_margin=cfg.eq2_margin)
    (out / "consistency.json").write_text(
        json.dumps(report.to_json(), indent=2) + "\n")
    print(f"verdict: {'consistent' if report.verdict else 'inconsistent'} "
          f"(group size {len(report.group)}, "
          f"{len(report.eq2_violations)} dominance violations)")
    if assert_consistent and not report.verdict:
        return EXIT_DOMAIN
    return EXIT_OK


def _cmd_skeleton_calibrate(cfg: RunConfig, out: Path,
                            scenario_ids: list[int]) -> int:
    scenarios = [get_scenario(i) for i in scenario_ids] \
        if scenario_ids else [cfg.scenario_obj()]
    result = calibrate_skeleton(
        cfg.skeleton_obj(), scenarios, cfg.ordering_list(), cfg.theta0,
        n_draws=cfg.n_draws, seed=cfg.seed, domain=cfg.domain(),
        eq2_margin=cfg.eq2_margin)
    doc = {
        "skeleton": list(result.skeleton.alpha),
        "certificate": result.certificate,
        "iterations": result.iterations,
        "surviving": list(result.surviving),
        "boundaries": list(crm_boundaries(result.skeleton, cfg.theta0,
                                          cfg.domain())[1:-1]),
    }
    (out / "calibration.json").write_text(json.dumps(doc, indent=2) + "\n")
    print("calibrated skeleton:",
          " ".join(f"{v:.4f}" for v in result.skeleton.alpha))
    print("certificate:", result.certificate)
    return EXIT_OK if result.certificate else EXIT_DOMAIN


def _cmd_simulate_pcs(cfg: RunConfig, out: Path) -> int:
    scenario = cfg.scenario_obj()
    res = estimate_pcs(cfg.design(), scenario, cfg.n_patients,
                       cfg.replicates, cfg.seed)
    sid = scenario.name or "custom"
    _write_csv(out / "pcs.csv",
               _pcs_csv_rows([(sid, "pocrm", cfg.n_patients, res)]))
    print(f"pcs: {100 * res.pcs:.1f}% (mc se {100 * res.mc_se:.2f} pp)")
    return EXIT_OK


def _cmd_simulate_curve(cfg: RunConfig, out: Path, n_grid: list[int]) -> int:
    scenario = cfg.scenario_obj()
    table = pcs_curve(cfg.design(), scenario, n_grid, cfg.replicates,
                      cfg.seed)
    sid = scenario.name or "custom"
    _write_csv(out / "pcs_curve.csv",
               _pcs_csv_rows([(sid, "pocrm", n, res) for n, res in table]))
    for n, res in table:
        print(f"N={n}: pcs {100 * res.pcs:.1f}%")
    return EXIT_OK


def _cmd_benchmark(cfg: RunConfig, out: Path) -> int:
    scenario = cfg.scenario_obj()
    res = po_benchmark(scenario, cfg.n_patients, cfg.replicates,
                       theta0=cfg.theta0, seed=cfg.seed)
    sid = scenario.name or "custom"
    _write_csv(out / "benchmark.csv",
               _pcs_csv_rows([(sid, "po-benchmark", cfg.n_patients, res)]))
    print(f"benchmark pcs: {100 * res.pcs:.1f}%")
    return EXIT_OK


TABLE3_SKELETON = (0.10, 0.20, 0.30, 0.40, 0.45, 0.50, 0.54, 0.59, 0.64)


def consistent_six(grid: DoseGrid) -> list[Ordering]:
    """Six orderings covering every order-scenario of the grid.

    The first best-efficiency scenario-agnostic cover of size six; the
    deterministic selection order makes this reproducible.
    """
    all_orderings = enumerate_orderings(grid)
    sel = select_scenario_agnostic(grid, all_orderings, budget=6)[0]
    return [all_orderings[i] for i in sel.columns]


def _cmd_reproduce_table3(cfg: RunConfig, out: Path, full: bool) -> int:
    replicates = 10_000 if full else cfg.replicates
    grid = DoseGrid(3, 3)
    skeleton = Skeleton(TABLE3_SKELETON)
    designs = {
        "wages6": PocrmDesign(grid=grid, skeleton=skeleton,
                              orderings=tuple(wages_orderings(grid))),
        "consistent6": PocrmDesign(grid=grid, skeleton=skeleton,
                                   orderings=tuple(consistent_six(grid))),
    }
    entries = []
    for sid in range(1, 10):
        scenario = get_scenario(sid)
        entries.append((sid, "benchmark", 60,
                        po_benchmark(scenario, 60, replicates,
                                     seed=cfg.seed)))
        for name, design in designs.items():
            entries.append((sid, name, 60,
                            estimate_pcs(design, scenario, 60, replicates,
                                         cfg.seed)))
    _write_csv(out / "table3.csv", _pcs_csv_rows(entries))
    by_key = {(sid, did): res for sid, did, _, res in entries}
    for sid in range(1, 10):
        bench = by_key[(sid, "benchmark")].pcs
        line = [f"scenario {sid}: benchmark {100 * bench:.1f}"]
        for name in designs:
            pcs = by_key[(sid, name)].pcs
            ratio = pcs / bench if bench > 0 else float("nan")
            line.append(f"{name} {100 * pcs:.1f} (ratio {ratio:.2f})")
        print("  ".join(line))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pocrm",
        description="Partial-ordering CRM design, consistency and simulation "
                    "toolkit")
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--rows", type=int)
    parser.add_argument("--cols", type=int)
    parser.add_argument("--theta0", type=float)
    parser.add_argument("--skeleton",
                        help="comma-separated values, e.g. 0.1,0.2,0.3")
    parser.add_argument("--orderings",
                        help='"all", "wages6", "select:agnostic" or '
                             '"select:specific"')
    parser.add_argument("--cohort-size", type=int, dest="cohort_size")
    parser.add_argument("--n-patients", type=int, dest="n_patients")
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--scenario", type=int, help="builtin scenario id")
    parser.add_argument("--scenario-csv", dest="scenario_csv",
                        help="CSV of toxicity rows, lowest drug-B row first")
    parser.add_argument("--n-draws", type=int, dest="n_draws")
    parser.add_argument("--eq2-margin", type=float, dest="eq2_margin")
    parser.add_argument("--budget", type=int)
    parser.add_argument("--out-dir", dest="out_dir")

    sub = parser.add_subparsers(dest="command", required=True)

    orders = sub.add_parser("orders", help="ordering enumeration/selection")
    orders_sub = orders.add_subparsers(dest="action", required=True)
    orders_sub.add_parser("enumerate")
    sel = orders_sub.add_parser("select")
    sel.add_argument("--mode", choices=("agnostic", "specific"),
                     default="agnostic")

    cons = sub.add_parser("consistency", help="consistency checking")
    cons_sub = cons.add_subparsers(dest="action", required=True)
    chk = cons_sub.add_parser("check")
    chk.add_argument("--assert-consistent", action="store_true",
                     help="exit 1 when the verdict is inconsistent")

    skel = sub.add_parser("skeleton", help="skeleton calibration")
    skel_sub = skel.add_subparsers(dest="action", required=True)
    cal = skel_sub.add_parser("calibrate")
    cal.add_argument("--scenarios", type=int, nargs="+", default=[],
                     help="builtin scenario ids (default: the one configured)")

    sim = sub.add_parser("simulate", help="Monte Carlo PCS")
    sim_sub = sim.add_subparsers(dest="action", required=True)
    sim_sub.add_parser("pcs")
    curve = sim_sub.add_parser("curve")
    curve.add_argument("--n-grid", type=int, nargs="+", required=True)

    sub.add_parser("benchmark", help="complete-information benchmark PCS")

    rep = sub.add_parser("reproduce", help="reproduce published tables")
    rep.add_argument("target", choices=("table3",))
    rep.add_argument("--full", action="store_true",
                     help="paper-scale replicate count")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in _KNOWN_KEYS}
    started = time.time()
    try:
        if isinstance(overrides.get("skeleton"), str):
            try:
                overrides["skeleton"] = [
                    float(v) for v in overrides["skeleton"].split(",")]
            except ValueError as exc:
                raise ConfigError(
                    "field 'skeleton': comma-separated floats "
                    "required") from exc
        cfg = RunConfig.load(args.config, overrides)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "orders":
            code = (_cmd_orders_enumerate(cfg, out)
                    if args.action == "enumerate"
                    else _cmd_orders_select(cfg, out, args.mode))
        elif args.command == "consistency":
            code = _cmd_consistency_check(cfg, out, args.assert_consistent)
        elif args.command == "skeleton":
            code = _cmd_skeleton_calibrate(cfg, out, args.scenarios)
        elif args.command == "simulate":
            code = (_cmd_simulate_pcs(cfg, out) if args.action == "pcs"
                    else _cmd_simulate_curve(cfg, out, args.n_grid))
        elif args.command == "benchmark":
            code = _cmd_benchmark(cfg, out)
        else:
            code = _cmd_reproduce_table3(cfg, out, args.full)
        artifacts = sorted(p.name for p in out.iterdir()
                           if p.name != "manifest.json")
        _write_manifest(out, cfg, args.command, started, artifacts)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
