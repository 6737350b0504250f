"""Batch front-end: scenario configs in, reports and CSV tables out.

A scenario is a JSON object naming a process, a strategy, and a list of
checks.  Unknown keys are rejected so the files double as regression
fixtures.  Reports print every conditional probability to six decimals;
CSV output keeps full precision and a fixed column order, so repeated runs
with the same seeds are byte-identical.

Exit codes: 0 all checks passed, 1 at least one check failed, 2 the
config could not be parsed or validated.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import circuit as circuit_mod
from . import game as game_mod
from . import polytope as polytope_mod
from .choi import preparation
from .labeled import LabeledOperator
from .processes import (
    SizeError,
    classical_switch,
    cyclic_switch,
    dephase_control,
    quantum_switch,
    sparse_switch,
    validate_process,
    w3_process,
)

PROCESS_BUILDERS = {
    "classical": classical_switch,
    "quantum": quantum_switch,
    "cyclic": cyclic_switch,
    "sparse": sparse_switch,
    "w3": lambda k: w3_process(),
}

KNOWN_CHECKS = ("game", "validity", "dephase-equivalence", "polytope", "facet", "circuit")

CONFIG_KEYS = {
    "name", "process", "k", "strategy", "checks", "seed", "trials",
    "expect_p_win", "expect_verdict",
}


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending field."""


@dataclass
class ScenarioConfig:
    process: str
    k: int
    checks: tuple
    strategy: object = None
    seed: int = 0
    trials: int = 50
    name: str = ""
    expect_p_win: float | None = None
    expect_verdict: str | None = None

    def __post_init__(self):
        if not self.name:
            self.name = f"{self.process}-k{self.k}"

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown field {sorted(unknown)[0]!r}")
        if "process" not in raw:
            raise ConfigError("missing field 'process'")
        process = raw["process"]
        if process not in PROCESS_BUILDERS:
            raise ConfigError(
                f"field 'process' must be one of {sorted(PROCESS_BUILDERS)}, got {process!r}"
            )
        k = raw.get("k", 3 if process == "w3" else None)
        if k is None:
            raise ConfigError("missing field 'k'")
        if not isinstance(k, int) or isinstance(k, bool):
            raise ConfigError("field 'k' must be an integer")
        if process == "w3" and k != 3:
            raise ConfigError("field 'k' must be 3 for the w3 process")
        checks = raw.get("checks")
        if not isinstance(checks, list) or not checks:
            raise ConfigError("field 'checks' must be a non-empty list")
        for c in checks:
            if c not in KNOWN_CHECKS:
                raise ConfigError(f"field 'checks' contains unknown check {c!r}")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("field 'seed' must be an integer")
        trials = raw.get("trials", 50)
        if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
            raise ConfigError("field 'trials' must be a positive integer")
        strategy = raw.get("strategy")
        cfg = cls(
            process=process,
            k=k,
            checks=tuple(checks),
            strategy=strategy,
            seed=seed,
            trials=trials,
            name=raw.get("name", ""),
            expect_p_win=raw.get("expect_p_win"),
            expect_verdict=raw.get("expect_verdict"),
        )
        cfg.validate()
        return cfg

    def validate(self):
        try:
            PROCESS_BUILDERS[self.process](self.k)
        except SizeError as exc:
            raise ConfigError(f"field 'k': {exc}") from exc
        if "game" in self.checks:
            self._parse_strategy()
        if "circuit" in self.checks:
            if self.process != "sparse" or self.k not in (2, 3, 4):
                raise ConfigError(
                    "field 'checks': 'circuit' needs process 'sparse' with k in 2..4"
                )
        if "dephase-equivalence" in self.checks and self.process == "w3":
            raise ConfigError(
                "field 'checks': 'dephase-equivalence' needs a control subsystem"
            )
        if ("polytope" in self.checks or "facet" in self.checks) and not 2 <= self.k <= 5:
            raise ConfigError("field 'checks': polytope checks need 2 <= k <= 5")
        if self.expect_verdict not in (None, "within-bound", "violates-fixed-order"):
            raise ConfigError("field 'expect_verdict' must name a verdict")

    def _parse_strategy(self):
        spec = self.strategy
        if spec is None:
            raise ConfigError("field 'strategy' is required for the game check")
        if isinstance(spec, str):
            if spec in ("adaptive-basis",) and self.process != "w3":
                return
            if spec in ("w3-adaptive", "w3-nonadaptive") and self.process == "w3":
                return
            if spec == "grid-sweep":
                return
            raise ConfigError(
                f"field 'strategy': {spec!r} does not apply to process {self.process!r}"
            )
        if isinstance(spec, dict):
            unknown = set(spec) - {"kind", "control"}
            if unknown:
                raise ConfigError(
                    f"field 'strategy' contains unknown key {sorted(unknown)[0]!r}"
                )
            if spec.get("kind") != "nonadaptive":
                raise ConfigError("field 'strategy.kind' must be 'nonadaptive'")
            if self.process == "w3":
                raise ConfigError("field 'strategy': nonadaptive spec needs a control")
            _parse_state_spec(spec.get("control", "mixed"), dim=2)
            return
        raise ConfigError("field 'strategy' must be a string or an object")


def _parse_state_spec(spec: str, dim: int) -> np.ndarray:
    if not isinstance(spec, str):
        raise ConfigError("field 'strategy.control' must be a string")
    if spec == "mixed":
        return np.eye(dim, dtype=complex) / dim
    if spec == "plus":
        vec = np.ones(dim, dtype=complex) / np.sqrt(dim)
        return np.outer(vec, vec.conj())
    if spec.startswith("basis:"):
        try:
            value = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"field 'strategy.control': bad basis index {spec!r}") from exc
        if not 0 <= value < dim:
            raise ConfigError(
                f"field 'strategy.control': basis index {value} out of range for dim {dim}"
            )
        mat = np.zeros((dim, dim), dtype=complex)
        mat[value, value] = 1.0
        return mat
    raise ConfigError(f"field 'strategy.control': unknown state spec {spec!r}")


@dataclass
class CheckOutcome:
    scenario: str
    check: str
    passed: bool
    detail: str
    rows: list = field(default_factory=list)
    result: object = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"check {self.check}: {status} ({self.detail})"


def _build_strategy(cfg: ScenarioConfig, process):
    spec = cfg.strategy
    if spec == "adaptive-basis":
        return game_mod.adaptive_switch_strategy(process)
    if spec == "w3-adaptive":
        return game_mod.w3_strategy(adaptive=True)
    if spec == "w3-nonadaptive":
        return game_mod.w3_strategy(adaptive=False)
    if isinstance(spec, dict):
        state = _parse_state_spec(spec.get("control", "mixed"), process.control_dim())
        return game_mod.nonadaptive_switch_strategy(
            process, state, description=spec.get("control", "mixed")
        )
    return None  # grid-sweep resolves its own preparations


def _game_rows(cfg: ScenarioConfig, result) -> list:
    rows = []
    for (s, x, a) in sorted(result.probabilities):
        rows.append(
            (cfg.name, cfg.process, cfg.k, s, x, a, result.probabilities[(s, x, a)])
        )
    return rows


def _run_game_check(cfg: ScenarioConfig, process) -> CheckOutcome:
    if cfg.strategy == "grid-sweep":
        sweep = game_mod.optimize_nonadaptive_control(process, seed=cfg.seed)
        if process.control is not None:
            best = game_mod.nonadaptive_switch_strategy(
                process, sweep.state, description=sweep.description
            )
        else:
            base = game_mod.w3_strategy(adaptive=False)
            labels = tuple(process.subsystem(n) for n in process.p_labels)
            prep = preparation(LabeledOperator.from_dense(labels, sweep.state))
            best = game_mod.Strategy(
                preparation=lambda s: prep,
                sender=base.sender,
                receiver=base.receiver,
                bystander=base.bystander,
                adaptive=False,
                description=sweep.description,
            )
        result = game_mod.win_probability(process, best)
        detail = (
            f"grid of {sweep.grid_size} preparations, best {sweep.description!r}: "
            f"p_win = {result.p_win:.6f}, bound = {result.bound:.6f}, "
            f"verdict = {result.verdict}"
        )
    else:
        strategy = _build_strategy(cfg, process)
        result = game_mod.win_probability(process, strategy)
        detail = (
            f"p_win = {result.p_win:.6f}, bound = {result.bound:.6f}, "
            f"verdict = {result.verdict}"
        )
    passed = result.max_norm_dev <= game_mod.NORMALIZATION_TOL
    if cfg.expect_p_win is not None and abs(result.p_win - cfg.expect_p_win) > 1e-6:
        passed = False
        detail += f"; expected p_win {cfg.expect_p_win:.6f}"
    if cfg.expect_verdict is not None and result.verdict != cfg.expect_verdict:
        passed = False
        detail += f"; expected verdict {cfg.expect_verdict}"
    return CheckOutcome(
        cfg.name, "game", passed, detail, rows=_game_rows(cfg, result), result=result
    )


def _run_validity_check(cfg: ScenarioConfig, process) -> CheckOutcome:
    report = validate_process(process, trials=cfg.trials, seed=cfg.seed)
    return CheckOutcome(
        cfg.name,
        "validity",
        report.passed,
        f"max |total-1| = {report.max_deviation:.3e} over {report.trials} trials",
    )


def _run_dephase_check(cfg: ScenarioConfig, process) -> CheckOutcome:
    dephased = dephase_control(process)
    worst = 0.0
    for t in range(max(1, cfg.trials // 5)):
        strat, _ = game_mod.random_nonadaptive_strategy(process, cfg.seed + t)
        for s in range(process.parties):
            for x in (0, 1):
                da = game_mod.evaluate(process, strat, s, x)
                db = game_mod.evaluate(dephased, strat, s, x)
                for a in (0, 1):
                    worst = max(worst, abs(da[a] - db[a]))
    return CheckOutcome(
        cfg.name,
        "dephase-equivalence",
        worst <= 1e-10,
        f"max |p_coherent - p_dephased| = {worst:.3e}",
    )


def _run_polytope_check(cfg: ScenarioConfig) -> CheckOutcome:
    n = cfg.k
    best = polytope_mod.max_causal_win(n)
    expect = Fraction(2 * n - 1, 2 * n)
    dim = polytope_mod.full_dimensionality(n)
    passed = best == expect and dim.full_dimensional
    return CheckOutcome(
        cfg.name,
        "polytope",
        passed,
        f"max vertex p_win = {float(best):.6f} (exact {best}), "
        f"affine rank {dim.affine_rank} = 2n",
    )


def _run_facet_check(cfg: ScenarioConfig) -> CheckOutcome:
    report = polytope_mod.facet_check(cfg.k)
    detail = (
        f"saturating affine rank {report.saturating_rank} = 2n-1: "
        f"facet {'CONFIRMED' if report.facet else 'NOT CONFIRMED'}"
    )
    return CheckOutcome(cfg.name, "facet", report.facet, detail)


def _run_circuit_check(cfg: ScenarioConfig) -> CheckOutcome:
    report = circuit_mod.equivalence_check(cfg.k, trials=cfg.trials, seed=cfg.seed)
    return CheckOutcome(
        cfg.name,
        "circuit",
        report.passed,
        f"max deviation {report.max_deviation:.3e} over {report.trials} trials",
    )


def run_scenario(cfg: ScenarioConfig) -> list:
    process = PROCESS_BUILDERS[cfg.process](cfg.k)
    outcomes = []
    for check in cfg.checks:
        if check == "game":
            outcomes.append(_run_game_check(cfg, process))
        elif check == "validity":
            outcomes.append(_run_validity_check(cfg, process))
        elif check == "dephase-equivalence":
            outcomes.append(_run_dephase_check(cfg, process))
        elif check == "polytope":
            outcomes.append(_run_polytope_check(cfg))
        elif check == "facet":
            outcomes.append(_run_facet_check(cfg))
        elif check == "circuit":
            outcomes.append(_run_circuit_check(cfg))
    return outcomes


def _print_report(cfg: ScenarioConfig, outcomes, quiet: bool):
    if quiet:
        for out in outcomes:
            print(f"{cfg.name}: {out.line()}")
        return
    print(f"scenario: {cfg.name}")
    print(f"  process: {cfg.process} (k = {cfg.k})")
    if cfg.strategy is not None:
        print(f"  strategy: {cfg.strategy}")
    for out in outcomes:
        print(f"  {out.line()}")
        result = getattr(out, "result", None)
        if result is not None:
            for (s, x, a) in sorted(result.probabilities):
                print(
                    f"    p(a={a}|s={s},x={x}) = "
                    f"{result.probabilities[(s, x, a)]:.6f}"
                )
            print(
                f"    p_win = {result.p_win:.6f}, bound = {result.bound:.6f}, "
                f"verdict = {result.verdict}"
            )


def _write_csv(path: str, rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["scenario", "process", "k", "s", "x", "a", "probability"])
        for row in rows:
            scenario, process, k, s, x, a, prob = row
            writer.writerow([scenario, process, k, s, x, a, repr(float(prob))])


def run(config_path: str, csv_path=None, seed=None, trials=None, quiet=False) -> int:
    try:
        with open(config_path) as handle:
            raw = json.load(handle)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    entries = raw if isinstance(raw, list) else [raw]
    configs = []
    try:
        for entry in entries:
            if seed is not None and isinstance(entry, dict):
                entry = {**entry, "seed": seed}
            if trials is not None and isinstance(entry, dict):
                entry = {**entry, "trials": trials}
            configs.append(ScenarioConfig.from_dict(entry))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    all_rows = []
    failed = False
    for cfg in configs:
        outcomes = run_scenario(cfg)
        _print_report(cfg, outcomes, quiet)
        for out in outcomes:
            all_rows.extend(out.rows)
            failed = failed or not out.passed
    if csv_path:
        _write_csv(csv_path, all_rows)
    return 1 if failed else 0


def builtin_scenarios(trials: int = 50, seed: int = 7) -> list:
    """Fixed scenario set reproducing the headline game values."""
    defs = []
    for proc in ("classical", "quantum", "cyclic", "sparse"):
        for k in (2, 3, 4):
            defs.append(
                {
                    "name": f"{proc}-k{k}-adaptive",
                    "process": proc,
                    "k": k,
                    "strategy": "adaptive-basis",
                    "checks": ["game"],
                    "seed": seed,
                    "trials": trials,
                    "expect_p_win": 1.0,
                    "expect_verdict": "violates-fixed-order",
                }
            )
    for proc in ("classical", "quantum"):
        defs.append(
            {
                "name": f"{proc}-k2-nonadaptive-sweep",
                "process": proc,
                "k": 2,
                "strategy": "grid-sweep",
                "checks": ["game"],
                "seed": seed,
                "trials": trials,
                "expect_p_win": 0.75,
                "expect_verdict": "within-bound",
            }
        )
    defs.append(
        {
            "name": "w3-adaptive",
            "process": "w3",
            "k": 3,
            "strategy": "w3-adaptive",
            "checks": ["game"],
            "seed": seed,
            "trials": trials,
            "expect_p_win": 1.0,
            "expect_verdict": "violates-fixed-order",
        }
    )
    defs.append(
        {
            "name": "w3-nonadaptive",
            "process": "w3",
            "k": 3,
            "strategy": "w3-nonadaptive",
            "checks": ["game"],
            "seed": seed,
            "trials": trials,
            "expect_p_win": 1.0,
            "expect_verdict": "violates-fixed-order",
        }
    )
    for proc, ks in (
        ("classical", (2, 3)),
        ("quantum", (2, 3)),
        ("cyclic", (2, 3)),
        ("sparse", (2, 3)),
    ):
        for k in ks:
            defs.append(
                {
                    "name": f"{proc}-k{k}-validity",
                    "process": proc,
                    "k": k,
                    "checks": ["validity"],
                    "seed": seed,
                    "trials": trials,
                }
            )
    defs.append(
        {
            "name": "w3-validity",
            "process": "w3",
            "k": 3,
            "checks": ["validity"],
            "seed": seed,
            "trials": trials,
        }
    )
    for k in (2, 3):
        defs.append(
            {
                "name": f"quantum-k{k}-dephase",
                "process": "quantum",
                "k": k,
                "checks": ["dephase-equivalence"],
                "seed": seed,
                "trials": trials,
            }
        )
    for n in (2, 3, 4, 5):
        defs.append(
            {
                "name": f"cycle-n{n}-polytope",
                "process": "classical",
                "k": min(n, 5),
                "checks": ["polytope", "facet"],
                "seed": seed,
                "trials": trials,
            }
        )
    for k in (2, 3, 4):
        defs.append(
            {
                "name": f"sparse-k{k}-circuit",
                "process": "sparse",
                "k": k,
                "checks": ["circuit"],
                "seed": seed,
                "trials": trials,
            }
        )
    return defs


def reproduce_all(seed: int = 7, trials: int = 50, csv_path=None, quiet=False) -> int:
    """Run the fixed scenario set and summarize against expectations."""
    failed = False
    all_rows = []
    summary = []
    for raw in builtin_scenarios(trials=trials, seed=seed):
        cfg = ScenarioConfig.from_dict(raw)
        outcomes = run_scenario(cfg)
        _print_report(cfg, outcomes, quiet=True)
        for out in outcomes:
            all_rows.extend(out.rows)
            failed = failed or not out.passed
            summary.append((cfg.name, out.check, out.passed))
    if csv_path:
        _write_csv(csv_path, all_rows)
    if not quiet:
        print()
        print(f"{'scenario':38s} {'check':22s} status")
        for name, check, ok in summary:
            print(f"{name:38s} {check:22s} {'PASS' if ok else 'FAIL'}")
    n_fail = sum(1 for _, _, ok in summary if not ok)
    print(f"\n{len(summary) - n_fail}/{len(summary)} checks passed")
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cyclegames",
        description="Evaluate cyclic communication games on processes with "
        "programmable causal order.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the checks requested by a JSON scenario")
    p_run.add_argument("config", help="path to a scenario JSON file")
    p_run.add_argument("--csv", help="write per-outcome probabilities to this CSV file")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--trials", type=int, help="override the config trial count")
    p_run.add_argument("--quiet", action="store_true", help="summary lines only")

    p_rep = sub.add_parser(
        "reproduce-all", help="run the full built-in scenario set with fixed seeds"
    )
    p_rep.add_argument("--seed", type=int, default=7)
    p_rep.add_argument("--trials", type=int, default=50)
    p_rep.add_argument("--csv", help="write all game probabilities to this CSV file")
    p_rep.add_argument("--quiet", action="store_true")

    sub.add_parser("list-scenarios", help="print the built-in scenario set as JSON")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run(
            args.config,
            csv_path=args.csv,
            seed=args.seed,
            trials=args.trials,
            quiet=args.quiet,
        )
    if args.command == "reproduce-all":
        return reproduce_all(
            seed=args.seed, trials=args.trials, csv_path=args.csv, quiet=args.quiet
        )
    if args.command == "list-scenarios":
        print(json.dumps(builtin_scenarios(), indent=2))
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
