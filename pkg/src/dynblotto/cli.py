"""Config-driven command line front end.

Commands: evaluate, simulate, solve, check, demo.  Contests are described by
a JSON config file; reports are emitted as JSON (default) or CSV.  Exit
status is 0 on success, 2 when `check` refutes proportionality (so scripts
can branch on it), and 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from typing import Optional

from .core import (
    ContestError,
    ContestSpec,
    CsfParams,
    History,
    InputError,
    Objective,
    validate_spec,
)
from .equilibrium import (
    SamplingPlan,
    SolverSettings,
    check_proportionality,
    solve_backward,
    stage_equilibrium,
)
from .evaluation import expected_payoffs
from .montecarlo import simulate
from .strategies import history_from_winners, proportional_profile

COMMANDS = ("evaluate", "simulate", "solve", "check", "demo")
DEMOS = ("example1", "example2", "example3", "prop1")


@dataclass(frozen=True)
class RunSettings:
    solver: SolverSettings = SolverSettings()
    seed: int = 0
    trials: int = 10000
    history: tuple = ()  # winner schedule addressing a subgame
    profile: str = "proportional"
    output: str = "json"
    demo: Optional[str] = None


def _require(condition, message):
    if not condition:
        raise InputError(message)


def load_config(path: str):
    """Load and validate a contest config; returns (spec, run settings).

    Defaults: Tullock success function (alpha=1, beta=1), no shocks,
    grid_points=200, tolerance=1e-6, budget_step=0.25.
    """
    with open(path) as handle:
        text = handle.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise InputError(f"config parse failure at line {err.lineno}, column {err.colno}: {err.msg}")
    _require(isinstance(raw, dict), "config must be a JSON object")
    _require("players" in raw, "config needs a 'players' list")
    _require("battles" in raw, "config needs a 'battles' list")
    budgets = [float(entry["budget"]) for entry in raw["players"]]
    values = [float(entry["value"]) for entry in raw["battles"]]
    csf_raw = raw.get("csf", {})
    csf = CsfParams(float(csf_raw.get("alpha", 1.0)), float(csf_raw.get("beta", 1.0)))
    objective = Objective(raw.get("objective", "expected_value"))
    shocks = {
        (int(entry["player"]), int(entry["battle"])): float(entry["amount"])
        for entry in raw.get("shocks", [])
    }
    spec = ContestSpec(values, budgets, csf, objective, shocks)
    violations = validate_spec(spec)
    if violations:
        raise InputError("invalid contest: " + "; ".join(violations))
    solver_raw = raw.get("solver", {})
    solver = SolverSettings(
        grid_points=int(solver_raw.get("grid_points", 200)),
        tolerance=float(solver_raw.get("tolerance", 1e-6)),
        budget_step=float(solver_raw.get("budget_step", 0.25)),
        max_iterations=int(solver_raw.get("max_iterations", 500)),
    )
    settings = RunSettings(solver=solver, seed=int(raw.get("seed", 0)))
    return spec, settings


def parse_winner_schedule(text: str) -> tuple:
    """Parse a --history flag: comma-separated player letters (A,B,...) or indices."""
    if not text:
        return ()
    winners = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token.isdigit():
            winners.append(int(token))
        elif len(token) == 1 and token.isalpha():
            winners.append(ord(token.upper()) - ord("A"))
        else:
            raise InputError(f"cannot parse winner {token!r} in history")
    return tuple(winners)


def _history_payload(history: History) -> dict:
    return {
        "winners": list(history.winner_schedule()),
        "allocations": [list(record.allocations) for record in history.records],
    }


def _run_evaluate(spec, settings):
    _require(settings.profile == "proportional", f"unknown profile {settings.profile!r}")
    profile = proportional_profile(spec.n)
    history = history_from_winners(spec, settings.history, profile)
    payoffs = expected_payoffs(profile, spec, history)
    return {
        "command": "evaluate",
        "profile": settings.profile,
        "objective": spec.objective.value,
        "history": _history_payload(history),
        "payoffs": list(payoffs),
    }, 0


def _run_simulate(spec, settings):
    profile = proportional_profile(spec.n)
    result = simulate(profile, spec, settings.seed, settings.trials)
    return {
        "command": "simulate",
        "profile": "proportional",
        "seed": result.seed,
        "trials": result.trials,
        "means": list(result.means),
        "std_errors": list(result.std_errors),
    }, 0


def _run_solve(spec, settings):
    result = solve_backward(spec, settings.solver)
    return {
        "command": "solve",
        "trace": [list(spends) for spends in result.trace],
        "trace_winners": list(result.trace_winners),
        "root_allocations": list(result.root.allocations),
        "root_residual": result.root.residual,
        "profile": [s.to_payload() for s in result.profile.strategies],
    }, 0


def _verdict_payload(verdict) -> dict:
    payload = {
        "holds": verdict.holds,
        "histories_checked": verdict.histories_checked,
        "max_gain": verdict.max_gain,
    }
    if verdict.counterexample is not None:
        ce = verdict.counterexample
        payload["counterexample"] = {
            "history": _history_payload(ce.history),
            "player": ce.player,
            "delta": ce.delta,
            "gain": ce.gain,
        }
    return payload


def _run_check(spec, settings):
    plan = SamplingPlan(tolerance=settings.solver.tolerance, seed=settings.seed)
    if settings.history:
        plan = replace(plan, histories=(history_from_winners(spec, settings.history),))
    verdict = check_proportionality(spec, plan)
    report = {"command": "check"}
    report.update(_verdict_payload(verdict))
    return report, (0 if verdict.holds else 2)


def _demo_example1(settings):
    spec = ContestSpec([1, 1, 1], [100, 100], objective=Objective.WIN_PROBABILITY)
    result = solve_backward(spec, settings.solver)
    reference = 100.0 / 3.0
    computed = [list(spends) for spends in result.trace]
    error = max(abs(w - reference) for spends in result.trace for w in spends)
    return {
        "demo": "example1",
        "description": "three equal battles, equal budgets: equilibrium play is proportional",
        "computed_on_path_spends": computed,
        "reference_per_battle_spend": reference,
        "max_abs_error": error,
        "matches_reference": error <= 1e-2,
    }


def _demo_example2(settings):
    spec = ContestSpec([2, 1, 1, 1], [100, 100], objective=Objective.WIN_PROBABILITY)
    result = solve_backward(spec, settings.solver)
    reference = [50.0, 50.0 / 3.0, 50.0 / 3.0, 50.0 / 3.0]
    computed = [list(spends) for spends in result.trace]
    error = max(
        abs(w - reference[t]) for t, spends in enumerate(result.trace) for w in spends
    )
    verdict = check_proportionality(spec)
    return {
        "demo": "example2",
        "description": "double-value opening battle: equilibrium spends half the budget "
        "up front, more than the proportional 40",
        "computed_on_path_spends": computed,
        "reference_on_path_spends": reference,
        "max_abs_error": error,
        "matches_reference": error <= 1e-2,
        "proportional_play": _verdict_payload(verdict),
    }


def _demo_example3(settings):
    spec = ContestSpec([1, 1, 1, 2], [100, 100], objective=Objective.WIN_PROBABILITY)
    split = history_from_winners(spec, (0, 1))
    stage3 = stage_equilibrium(spec, split, settings=settings.solver)
    after3 = split.extend(stage3.allocations, 0)
    stage4 = stage_equilibrium(spec, after3, settings=settings.solver)
    budgets = [100.0 - split.spent(i) - stage3.allocations[i] for i in range(2)]
    verdict = check_proportionality(spec)
    return {
        "demo": "example3",
        "description": "double-value closing battle: after a split of the first two "
        "battles, everything rides on the last battle",
        "computed_battle3_spends": list(stage3.allocations),
        "reference_battle3_spends": [0.0, 0.0],
        "computed_battle4_spends": list(stage4.allocations),
        "reference_battle4_spends": budgets,
        "matches_reference": max(stage3.allocations) <= 1e-2
        and max(abs(stage4.allocations[i] - budgets[i]) for i in range(2)) <= 1e-2,
        "proportional_play": _verdict_payload(verdict),
    }


def _demo_prop1(settings):
    spec = ContestSpec([1, 1, 1, 3], [100, 100], objective=Objective.WIN_PROBABILITY)
    alternating = history_from_winners(spec, (0, 1))
    plan = SamplingPlan(histories=(alternating,))
    verdict = check_proportionality(spec, plan)
    return {
        "demo": "prop1",
        "description": "three small battles before one decisive battle: saving the "
        "budget for the last battle beats proportional play",
        "proportional_play": _verdict_payload(verdict),
        "fails_as_expected": not verdict.holds,
    }


def _run_demo(settings):
    runners = {
        "example1": _demo_example1,
        "example2": _demo_example2,
        "example3": _demo_example3,
        "prop1": _demo_prop1,
    }
    _require(settings.demo in runners, f"unknown demo {settings.demo!r}")
    return runners[settings.demo](settings), 0


def run(command: str, spec: Optional[ContestSpec], settings: RunSettings):
    """Execute one command; returns (report dict, exit status)."""
    if command == "demo":
        return _run_demo(settings)
    _require(spec is not None, f"command {command!r} needs a config")
    if command == "evaluate":
        return _run_evaluate(spec, settings)
    if command == "simulate":
        return _run_simulate(spec, settings)
    if command == "solve":
        return _run_solve(spec, settings)
    if command == "check":
        return _run_check(spec, settings)
    raise InputError(f"unknown command {command!r}")


def _flatten(prefix, value, rows):
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else str(key), value[key], rows)
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _flatten(f"{prefix}[{i}]", item, rows)
    else:
        rows.append((prefix, value))


def format_report(report: dict, output: str) -> str:
    if output == "json":
        return json.dumps(report, indent=2, sort_keys=True)
    if output == "csv":
        rows = []
        _flatten("", report, rows)
        lines = ["key,value"]
        for key, value in rows:
            if isinstance(value, float):
                value = repr(value)
            lines.append(f"{key},{value}")
        return "\n".join(lines)
    raise InputError(f"unknown output format {output!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynblotto", description="Dynamic multi-battle Blotto contests."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        if command == "demo":
            p.add_argument("name", choices=DEMOS)
        else:
            p.add_argument("--config", required=True, help="path to a contest config (JSON)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=10000)
        p.add_argument("--output", choices=("json", "csv"), default="json")
        p.add_argument(
            "--history",
            default="",
            help="winner schedule addressing a subgame, e.g. 'A,B,A' (proportional "
            "on-path spends assumed)",
        )
        p.add_argument("--profile", default="proportional")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = None
        settings = RunSettings()
        if args.command != "demo":
            spec, settings = load_config(args.config)
        settings = replace(
            settings,
            seed=args.seed if args.seed is not None else settings.seed,
            trials=args.trials,
            history=parse_winner_schedule(args.history),
            profile=args.profile,
            output=args.output,
            demo=getattr(args, "name", None),
        )
        report, status = run(args.command, spec, settings)
    except (ContestError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(format_report(report, settings.output))
    return status


if __name__ == "__main__":
    sys.exit(main())
