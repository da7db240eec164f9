#!/usr/bin/env python3
"""
DESCENTLAB - COMMAND LINE
Single entry point binding space specs and operator expressions to the
audit, criticality, Markov, classification and dispersion oracles.
Reports are written as deterministic JSON or CSV; the exit status is
nonzero iff a theorem violation or invariant failure was recorded.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from . import exact
from .axioms import audit
from .classification import CriticalMapOracle, check_Z_axioms, classify, extract_system
from .criticality import check_determination, check_probabilistic_determination, descent_order, minima_set
from .dispersion import dispersion_limit, mc_ball_identity
from .errors import DescentLabError, OperatorSpecError, SpecParseError
from .finite_core import FunctionGrid, Generator, ScalarField
from .guard import Finding, InvariantGuard, Severity
from .log_setup import configure_logging
from .markov import (
    check_limit_comparison,
    check_support,
    empirical_occupation,
    limit_distribution,
    sample_comp_lemma,
    simulate_trajectory,
    total_variation,
)
from .moduli_config import CONFIG, load_config
from .operators import TL, OperatorHandle, compose_operators
from .spec_io import SpaceSpec, load_document, load_domain_spec, load_space_spec

logger = logging.getLogger(__name__)

COMMANDS = (
    "audit", "critical", "minima", "determine", "simulate",
    "pif", "classify", "zaxioms", "dispersion", "ball-identity",
)
EXIT_ERROR = 2


# ============================================================================
# RUN CONFIGURATION
# ============================================================================

@dataclass
class RunConfig:
    """Everything one invocation needs; the seed is echoed in every artifact."""

    command: str
    spec: Optional[str] = None
    op: Optional[str] = None
    grid: Optional[int] = None
    cap: Optional[int] = None
    seed: int = 0
    out: Optional[str] = None
    format: Optional[str] = None
    generator: Optional[str] = None
    functions: List[str] = field(default_factory=list)
    g: Optional[str] = None
    x: Optional[str] = None
    horizon: Optional[float] = None
    runs: int = 0
    draws: int = 0
    probabilistic: bool = False
    p: float = 2.0
    points: List[List[float]] = field(default_factory=list)
    vector: List[float] = field(default_factory=list)
    k: Optional[int] = None
    samples: Optional[int] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        known = cls.__dataclass_fields__
        values = {k: v for k, v in vars(args).items() if k in known and v is not None}
        return cls(**values)

    @property
    def output_dir(self) -> Path:
        return Path(self.out or CONFIG.output.OUTPUT_DIR)

    @property
    def output_format(self) -> str:
        return self.format or CONFIG.output.FORMAT


@dataclass
class CommandResult:
    report: Dict[str, Any]
    header: List[str] = field(default_factory=list)
    rows: List[List[Any]] = field(default_factory=list)
    lines: List[str] = field(default_factory=list)


def _str_keys(mapping: Dict[Any, Any]) -> Dict[str, Any]:
    return {str(k): v for k, v in mapping.items()}


class RunContext:
    """Resolves spec names for one run and owns its guard."""

    def __init__(self, config: RunConfig, guard: InvariantGuard):
        self.config = config
        self.guard = guard
        self._spec: Optional[SpaceSpec] = None
        self._operator: Optional[OperatorHandle] = None

    @property
    def spec(self) -> SpaceSpec:
        if self._spec is None:
            if not self.config.spec:
                raise SpecParseError(f"{self.config.command} needs --spec")
            self._spec = load_space_spec(self.config.spec)
        return self._spec

    def operator(self) -> OperatorHandle:
        if self._operator is None:
            self._operator = resolve_operator(self.config.op, self.spec)
        return self._operator

    def grid(self) -> FunctionGrid:
        return self.spec.grid(self.config.grid)

    def generator(self) -> Generator:
        return self.spec.generator(self.config.generator)

    def field(self, name: str) -> ScalarField:
        if name in self.spec.functions:
            return self.spec.functions[name]
        if "," in name:
            values = [v.strip() for v in name.split(",")]
            try:
                return ScalarField.of(self.spec.space, values)
            except (ValueError, ZeroDivisionError, DescentLabError) as exc:
                raise SpecParseError(str(exc), "--f") from None
        return self.spec.function(name)

    def fields(self) -> List[Tuple[str, ScalarField]]:
        names = self.config.functions or sorted(self.spec.functions)
        if not names:
            raise SpecParseError("the space spec defines no functions; pass --f")
        return [(name, self.field(name)) for name in names]

    def vertex(self) -> int:
        raw = self.config.x
        if raw is None:
            raise SpecParseError(f"{self.config.command} needs --x")
        for i, label in enumerate(self.spec.space.labels):
            if str(label) == raw:
                return i
        raise SpecParseError(f"unknown vertex {raw!r}", "--x")

    def record_failure(self, theorem: bool, source: str, message: str, **witness) -> None:
        self.guard.record(Severity.VIOLATION if theorem else Severity.INFO, source, message, **witness)


def resolve_operator(raw: Optional[str], spec: SpaceSpec) -> OperatorHandle:
    """``--op`` as a spec operator name, an inline JSON expression or a JSON file."""
    if raw is None:
        if "default" in spec.operators:
            raw = "default"
        elif len(spec.operators) == 1:
            raw = next(iter(spec.operators))
        else:
            raise OperatorSpecError(f"choose an operator with --op; the space spec names {sorted(spec.operators)}")
    if raw in spec.operators:
        expr: Any = raw
    elif raw.lstrip().startswith("{"):
        try:
            expr = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SpecParseError(exc.msg, f"--op:{exc.lineno}:{exc.colno}") from None
    elif Path(raw).exists():
        expr = load_document(raw)
    else:
        raise OperatorSpecError(f"--op {raw!r} is neither an operator name, inline JSON nor a file")
    return compose_operators(expr, spec)


# ============================================================================
# SUBCOMMANDS
# ============================================================================

def cmd_audit(ctx: RunContext) -> CommandResult:
    T = ctx.operator()
    summary = audit(T, ctx.grid(), cap=ctx.config.cap)
    for report in summary.reports:
        if not report.holds:
            ctx.record_failure(T.is_descent_modulus, f"audit.{report.axiom}",
                               f"{report.axiom} fails for {T.describe()}", **(report.witness or {}))
    return CommandResult(
        summary.to_dict(),
        ["axiom", "verdict", "checked", "witness"],
        [[r.axiom, r.verdict.value, r.checked, json.dumps(r.witness, sort_keys=True) if r.witness else ""]
         for r in summary.reports],
        [f"{'✅' if r.holds else '❌'} {r.axiom}: {r.verdict.value} ({r.checked} checks)" for r in summary.reports],
    )


def cmd_critical(ctx: RunContext) -> CommandResult:
    T = ctx.operator()
    space = ctx.spec.space
    report, rows, lines = {}, [], []
    for name, f in ctx.fields():
        values = T.evaluate(f)
        zeros = values.zero_set()
        if T.is_descent_modulus:
            ctx.guard.check((f.argmin() <= zeros, f"argmin of {name} is not critical"), "critical.D1")
        report[name] = {"critical_set": [str(v) for v in space.label_set(zeros)],
                        "values": _str_keys(values.to_labels())}
        rows.extend([name, str(label), exact.format_value(v), x in zeros]
                    for x, (label, v) in enumerate(zip(space.labels, values.values)))
        lines.append(f"📍 Z[{name}] = {{{', '.join(map(str, space.label_set(zeros)))}}}")
    return CommandResult({"operator": T.describe(), "fields": report},
                         ["field", "vertex", "value", "critical"], rows, lines)


def cmd_minima(ctx: RunContext) -> CommandResult:
    L = ctx.generator()
    T = TL(L)
    space = ctx.spec.space
    report, rows, lines = {}, [], []
    for name, f in ctx.fields():
        order = descent_order(L, f)
        minima = minima_set(L, f)
        zeros = T.evaluate(f).zero_set()
        ctx.guard.check((minima <= zeros, f"M({name}) is not inside Z_TL({name})"), "minima.inclusion")
        ctx.guard.check(order.is_monotone(), "minima.order")
        components = sorted((sorted(c) for c in order.components()), key=lambda c: c[0])
        report[name] = {
            "minima": [str(v) for v in space.label_set(minima)],
            "critical_set": [str(v) for v in space.label_set(zeros)],
            "components": [[str(space.labels[v]) for v in c] for c in components],
            "edges": [[str(space.labels[a]), str(space.labels[b])] for a, b in order.edges],
        }
        rows.extend([name, str(label), x in minima, x in zeros] for x, label in enumerate(space.labels))
        lines.append(f"🏁 M({name}) = {{{', '.join(report[name]['minima'])}}}")
    return CommandResult({"fields": report}, ["field", "vertex", "in_minima", "critical"], rows, lines)


def cmd_determine(ctx: RunContext) -> CommandResult:
    T = ctx.operator()
    grid = ctx.grid()
    reports = [check_determination(T, grid, ctx.config.cap)]
    theorem = [T.is_descent_modulus]
    if ctx.config.probabilistic:
        reports.append(check_probabilistic_determination(ctx.generator(), grid, ctx.config.cap))
        theorem.append(True)
    lines, rows = [], []
    for report, is_theorem in zip(reports, theorem):
        if report.violations:
            first = report.violations[0].to_dict()
            ctx.record_failure(is_theorem, "determine", f"{len(report.violations)} determination violations "
                               f"for {report.operator}", first=first)
        lines.append(f"{'✅' if report.ok else '❌'} {report.operator}: {len(report.violations)} violations "
                     f"over {report.pairs} pairs ({report.compared} compared)")
        rows.append([report.operator, report.pairs, report.compared, report.skipped_infinite,
                     len(report.violations)])
    return CommandResult(
        {"reports": [r.to_dict() for r in reports], "grid_fields": grid.count},
        ["operator", "pairs", "compared", "skipped_infinite", "violations"], rows, lines,
    )


def _first_field(ctx: RunContext) -> Tuple[str, ScalarField]:
    return ctx.fields()[0]


def cmd_simulate(ctx: RunContext) -> CommandResult:
    L = ctx.generator()
    name, f = _first_field(ctx)
    x = ctx.vertex()
    horizon = ctx.config.horizon or CONFIG.markov.HORIZON
    trajectory = simulate_trajectory(L, f, x, horizon, ctx.config.seed)
    ctx.guard.check(trajectory.is_monotone(f), "simulate.monotone")
    path = trajectory.rows(ctx.spec.space)
    return CommandResult(
        {"field": name, "start": str(ctx.spec.space.labels[x]), "horizon": horizon,
         "path": [[t, str(v)] for t, v in path], "final": str(path[-1][1])},
        ["time", "vertex"],
        [[t, str(v)] for t, v in path],
        [f"🎲 {len(path) - 1} jumps, X({horizon:g}) = {path[-1][1]}"],
    )


def cmd_pif(ctx: RunContext) -> CommandResult:
    L = ctx.generator()
    name, f = _first_field(ctx)
    x = ctx.vertex()
    space = ctx.spec.space
    law = limit_distribution(L, f, x)
    minima = minima_set(L, f)
    ctx.guard.check(check_support(L, f, x), "pif.support")
    report: Dict[str, Any] = {
        "field": name,
        "start": str(space.labels[x]),
        "law": _str_keys(law.to_labels()),
        "support": [str(v) for v in space.label_set(law.support())],
        "minima": [str(v) for v in space.label_set(minima)],
    }
    lines = [f"📊 pi^{name} from {space.labels[x]}: " +
             ", ".join(f"{k}={v}" for k, v in report["law"].items() if v != "0/1")]

    if ctx.config.g:
        g = ctx.field(ctx.config.g)
        applicable, holds = check_limit_comparison(L, f, g, x)
        report["limit_comparison"] = {"g": ctx.config.g, "applicable": applicable, "holds": holds}
        if applicable:
            ctx.guard.check((holds, f"pi^f[f] < pi^f[g] with f >= g on M(f)"), "pif.limit_comparison")

    empirical = None
    if ctx.config.runs:
        empirical = empirical_occupation(L, f, x, ctx.config.horizon, ctx.config.runs, ctx.config.seed)
        tv = total_variation(law, empirical)
        report["empirical"] = {"runs": ctx.config.runs, "frequencies": [float(p) for p in empirical],
                               "total_variation": tv}
        if tv > CONFIG.markov.TV_TOLERANCE:
            ctx.guard.record(Severity.WARNING, "pif.empirical", f"total variation {tv:.4f} above tolerance")
        lines.append(f"🎲 {ctx.config.runs} runs, total variation {tv:.4f}")

    if ctx.config.draws:
        sample = sample_comp_lemma(L, ctx.grid(), ctx.config.draws, ctx.config.seed)
        report["comp_lemma"] = sample
        if sample["violations"]:
            ctx.guard.record(Severity.VIOLATION, "pif.comp_lemma",
                             f"{len(sample['violations'])} comparison-lemma violations",
                             first=sample["violations"][0])
        lines.append(f"🔍 comparison lemma: {len(sample['violations'])} violations in {sample['draws']} draws")

    rows = [[str(label), str(p), float(p), "" if empirical is None else float(empirical[i])]
            for i, (label, p) in enumerate(zip(space.labels, law.probs))]
    return CommandResult(report, ["vertex", "probability", "float", "empirical"], rows, lines)


def cmd_classify(ctx: RunContext) -> CommandResult:
    T = ctx.operator()
    verdict = classify(T, ctx.grid(), ctx.config.cap)
    extracted = verdict.extracted
    if verdict.classifiable and not verdict.certified:
        ctx.record_failure(T.is_descent_modulus, "classify", "Z_T differs from Z_TD",
                           **(verdict.counterexample or {}))
    if not verdict.classifiable:
        ctx.guard.record(Severity.INFO, "classify", f"(H) fails at {extracted.failing_H()}")
        if verdict.enlargement and not verdict.enlargement[0]:
            ctx.guard.record(Severity.WARNING, "classify.enlarges", verdict.enlargement[1])
    space = T.space
    rows = [[str(label), " ".join(str(v) for v in space.label_set(extracted.sets[x])), extracted.hypothesis[x]]
            for x, label in enumerate(space.labels)]
    status = "certified" if verdict.certified else ("not certified" if verdict.classifiable else "not classifiable")
    lines = [f"{'✅' if verdict.certified else '⚠️ '} {T.describe()}: {status}"]
    lines += [f"   D[{row[0]}] = {{{row[1]}}}{'' if row[2] else '  (H fails)'}" for row in rows]
    return CommandResult(verdict.to_dict(), ["vertex", "D_x", "hypothesis_H"], rows, lines)


def cmd_zaxioms(ctx: RunContext) -> CommandResult:
    T = ctx.operator()
    Z = CriticalMapOracle.from_operator(T)
    result = check_Z_axioms(Z, ctx.grid(), cap=ctx.config.cap)
    extracted = extract_system(Z, ctx.config.cap)
    theorem = T.is_descent_modulus and T.homogeneity_degree == 1 and extracted.holds_H
    for report in result.reports:
        if not report.holds:
            ctx.record_failure(theorem, f"zaxioms.{report.axiom}", f"{report.axiom} fails for {Z.name}",
                               **(report.witness or {}))
    out = result.to_dict()
    out.update(extracted.to_dict())
    return CommandResult(
        out,
        ["axiom", "verdict", "checked", "witness"],
        [[r.axiom, r.verdict.value, r.checked, json.dumps(r.witness, sort_keys=True) if r.witness else ""]
         for r in result.reports],
        [f"{'✅' if r.holds else '❌'} {r.axiom}: {r.verdict.value}" for r in result.reports],
    )


def cmd_dispersion(ctx: RunContext) -> CommandResult:
    if not ctx.config.spec:
        raise SpecParseError("dispersion needs --spec")
    doc = load_domain_spec(ctx.config.spec)
    names = ctx.config.functions or sorted(doc.fields)
    points = ctx.config.points or doc.points
    if not points:
        raise SpecParseError("no query points; pass --point")
    estimates, rows, lines = [], [], []
    for name in names:
        f = doc.field_named(name)
        for point in points:
            for oriented in (False, True):
                est = dispersion_limit(f, doc.domain, point, ctx.config.p, oriented)
                if not est.converged:
                    ctx.guard.record(Severity.WARNING, "dispersion.convergence",
                                     f"{name} at {point} ({'oriented' if oriented else 'non-oriented'}) "
                                     f"did not converge", diffs=list(est.diffs))
                entry = {"field": name, "point": list(point), "oriented": oriented}
                entry.update(est.to_dict())
                estimates.append(entry)
                rows.extend([name, " ".join(f"{c:g}" for c in point), oriented, eps, value, half]
                            for eps, value, half in est.rows())
                lines.append(f"📈 {name} at {point} {'oriented' if oriented else 'non-oriented'}: {est.value:.6f}")
    return CommandResult({"p": ctx.config.p, "estimates": estimates},
                         ["field", "point", "oriented", "eps", "value", "half_width"], rows, lines)


def cmd_ball_identity(ctx: RunContext) -> CommandResult:
    V = ctx.config.vector or [3.0, 4.0]
    est = mc_ball_identity(V, ctx.config.k, ctx.config.samples, ctx.config.seed)
    target = math.fsum(v * v for v in V)
    if target and abs(est.value - target) > 0.01 * target:
        ctx.guard.record(Severity.WARNING, "ball-identity", f"estimate {est.value:.6f} is 1% away from {target}")
    report = est.to_dict()
    report.update({"vector": list(V), "target": target})
    return CommandResult(report, ["value", "half_width", "target", "samples", "seed"],
                         [[est.value, est.half_width, target, est.samples, est.seed]],
                         [f"⚪ estimate {est.value:.6f} ± {est.half_width:.6f} (|V|^2 = {target:g})"])


HANDLERS: Dict[str, Callable[[RunContext], CommandResult]] = {
    "audit": cmd_audit,
    "critical": cmd_critical,
    "minima": cmd_minima,
    "determine": cmd_determine,
    "simulate": cmd_simulate,
    "pif": cmd_pif,
    "classify": cmd_classify,
    "zaxioms": cmd_zaxioms,
    "dispersion": cmd_dispersion,
    "ball-identity": cmd_ball_identity,
}


# ============================================================================
# ARTIFACTS
# ============================================================================

def write_artifact(config: RunConfig, document: Dict[str, Any], result: CommandResult) -> Path:
    """JSON with sorted keys or CSV with a header row; no timestamps."""
    directory = config.output_dir
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{config.command}.{config.output_format}"
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if config.output_format == "csv":
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(result.header)
            writer.writerows(result.rows)
        else:
            json.dump(document, handle, sort_keys=True, indent=2, default=str)
            handle.write("\n")
    return path


def run(config: RunConfig) -> int:
    """
    Execute one subcommand

    Returns:
        0 when clean, 1 on a recorded violation, 2 on input errors or exceeded caps
    """
    guard = InvariantGuard()
    ctx = RunContext(config, guard)
    # the guard's history is bounded; violations are kept in full for the report
    violations: List[Finding] = []

    def keep_violation(finding: Finding) -> None:
        if finding.severity is Severity.VIOLATION:
            violations.append(finding)

    guard.on_finding(keep_violation)

    print("\n" + "=" * 60)
    print(f"📐 DESCENTLAB - {config.command.upper()}")
    print("=" * 60 + "\n")

    try:
        result = HANDLERS[config.command](ctx)
    except AssertionError as exc:
        guard.record(Severity.VIOLATION, config.command, f"invariant failure: {exc}")
        result = CommandResult({"error": str(exc)})
    except DescentLabError as exc:
        logger.error("%s", exc)
        print(f"❌ {exc}\n")
        return EXIT_ERROR

    document = {
        "command": config.command,
        "spec": config.spec,
        "seed": config.seed,
        "report": result.report,
        "findings": guard.summary(),
    }
    path = write_artifact(config, document, result)

    for line in result.lines:
        print(line)
    for finding in violations:
        print(f"❌ THEOREM-VIOLATION {finding.source}: {finding.message}")
    print(f"\n💾 {path}")
    print("=" * 60 + "\n")
    return guard.exit_code()


# ============================================================================
# ARGUMENTS
# ============================================================================

def _point(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated point: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="space spec path or packaged name (z9, zn-bar, exafin, ...)")
    common.add_argument("--op", help="operator name from the space spec, inline JSON or a JSON file")
    common.add_argument("--grid", type=int, help="grid size G (values 0..G-1)")
    common.add_argument("--cap", type=int, help="enumeration cap")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output directory (default from config / DESCENTLAB_OUTPUT_DIR)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--config", help="config.json to overlay on the defaults")
    common.add_argument("--log-level", dest="log_level")
    common.add_argument("--log-file", dest="log_file")

    parser = argparse.ArgumentParser(prog="descentlab", description="Descent moduli on finite spaces")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("audit", "classify", "zaxioms"):
        sub.add_parser(name, parents=[common])

    for name in ("critical", "minima"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--f", dest="functions", action="append", help="function name or comma-separated values")
        p.add_argument("--L", dest="generator", help="generator name")

    p = sub.add_parser("determine", parents=[common])
    p.add_argument("--probabilistic", action="store_true", help="also check agreement on M(f) for T_L")
    p.add_argument("--L", dest="generator")

    for name in ("simulate", "pif"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--f", dest="functions", action="append")
        p.add_argument("--L", dest="generator")
        p.add_argument("--x", required=True, help="start vertex label")
        p.add_argument("--horizon", type=float)
        if name == "pif":
            p.add_argument("--g", help="second function for the limit comparison")
            p.add_argument("--runs", type=int, help="simulated runs for the empirical law")
            p.add_argument("--draws", type=int, help="hypothesis-satisfying draws for the comparison lemma")

    p = sub.add_parser("dispersion", parents=[common])
    p.add_argument("--f", dest="functions", action="append")
    p.add_argument("--point", dest="points", action="append", type=_point)
    p.add_argument("--p", type=float)

    p = sub.add_parser("ball-identity", parents=[common])
    p.add_argument("--vector", type=_point, help="comma-separated V")
    p.add_argument("--k", type=int)
    p.add_argument("--samples", type=int)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.config:
        load_config(Path(args.config), CONFIG)
    ok, problems = CONFIG.validate()
    if not ok:
        for problem in problems:
            print(f"❌ {problem}")
        return EXIT_ERROR
    configure_logging(args.log_level, args.log_file)
    return run(RunConfig.from_args(args))
