"""``qpigeon`` command line: verification suites, sweeps and samplers.

Exit codes: 0 all checks pass, 1 some check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from . import mcsample, scenario, tsvf, weakmeas
from .qcore import Operator
from .report import CheckResult, Report, distribution_deviation, scalar_check

SCHEMA_VERSION = 1
VERBS = ("verify", "weak-value", "abl", "sweep", "sample", "demo-sequential")
FORMATS = ("text", "json", "csv")
SWEEP_COLUMNS = ["epsilon", "pointer_id", "mean_position", "mean_momentum"]
ALL_OBSERVABLES = ["pair:0,1", "pair:1,2", "pair:0,2", "total"]

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class RenderError(ValueError):
    pass


@dataclass
class Command:
    verb: str
    options: dict[str, Any] = field(default_factory=dict)
    argv: list[str] = field(default_factory=list)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")
    if not values or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")
    return values


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be a positive number: {text!r}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value >= 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be a non-negative number: {text!r}")
    return value


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"pair must look like 0,1: {text!r}")
    if a == b or not (0 <= a <= 2 and 0 <= b <= 2):
        raise argparse.ArgumentTypeError(f"pair needs two distinct particles in 0..2: {text!r}")
    return a, b


def _observable(text: str) -> str:
    if text == "total":
        return text
    if text.startswith("pair:"):
        a, b = _pair(text[5:])
        return f"pair:{a},{b}"
    raise argparse.ArgumentTypeError(f"observable must be 'pair:a,b' or 'total': {text!r}")


def _measurement(text: str) -> str:
    return "none" if text == "none" else _observable(text)


def _order(text: str) -> list[tuple[int, int]]:
    pairs = [_pair(t) for t in text.split(";") if t.strip()]
    if not 1 <= len(pairs) <= 3:
        raise argparse.ArgumentTypeError("order must list 1 to 3 pairs, e.g. '0,1;1,2'")
    if len({tuple(sorted(p)) for p in pairs}) != len(pairs):
        raise argparse.ArgumentTypeError(f"repeated pair in order {text!r}")
    return pairs


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpigeon", description=(
        "Pre/postselected three-particle pigeonhole checks. "
        "The default verb is 'verify'."))
    parser.add_argument("--version", action="version", version=f"qpigeon {__version__}")
    sub = parser.add_subparsers(dest="verb", parser_class=_Parser)

    def common(p):
        fmt = p.add_mutually_exclusive_group()
        fmt.add_argument("--format", choices=FORMATS, default=None)
        fmt.add_argument("--json", dest="format", action="store_const", const="json")
        fmt.add_argument("--csv", dest="format", action="store_const", const="csv")
        p.add_argument("--output", "-o", default=None, help="write to this path instead of stdout")

    p = sub.add_parser("verify", help="run every pigeonhole check")
    p.add_argument("--tolerance", type=_nonneg_float, default=1e-10)
    common(p)

    p = sub.add_parser("weak-value", help="weak values of pair projectors / their sum")
    p.add_argument("--observable", type=_observable, action="append",
                   help="pair:a,b or total (repeatable; default all four)")
    p.add_argument("--tolerance", type=_nonneg_float, default=1e-10)
    common(p)

    p = sub.add_parser("abl", help="ABL outcome probabilities for a strong measurement")
    p.add_argument("--observable", type=_observable, action="append",
                   help="pair:a,b or total (repeatable; default all four)")
    p.add_argument("--tolerance", type=_nonneg_float, default=1e-10)
    common(p)

    p = sub.add_parser("sweep", help="weak pointer couplings over an epsilon list")
    p.add_argument("--epsilons", type=_float_list, default=list(weakmeas.DEFAULT_EPSILONS))
    p.add_argument("--sigma", type=_positive_float, default=weakmeas.DEFAULT_SIGMA)
    p.add_argument("--half-width", type=_positive_float, default=weakmeas.DEFAULT_HALF_WIDTH)
    p.add_argument("--n-points", type=_positive_int, default=weakmeas.DEFAULT_POINTS)
    p.add_argument("--no-postselect", action="store_true",
                   help="trace out the system instead of postselecting (control run)")
    p.add_argument("--workers", type=_positive_int, default=1)
    common(p)

    p = sub.add_parser("sample", help="Monte Carlo strong measurement + postselection")
    p.add_argument("--shots", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--measure", type=_measurement, default="none",
                   help="pair:a,b, total or none")
    common(p)

    p = sub.add_parser("demo-sequential", help="measure pairs one after another")
    p.add_argument("--order", type=_order, default=[(0, 1), (1, 2)],
                   help="semicolon-separated pairs, e.g. '0,1;1,2'")
    common(p)
    return parser


def parse_command(argv: list[str]) -> Command:
    argv = list(argv)
    if not argv or (argv[0].startswith("-") and argv[0] not in ("-h", "--help", "--version")):
        argv = ["verify"] + argv
    ns = build_parser().parse_args(argv)
    options = vars(ns)
    verb = options.pop("verb")
    if options.get("format") is None:
        options["format"] = "text"
    return Command(verb, options, argv)


def _resolve(selector: str) -> Operator:
    if selector == "total":
        return scenario.total_projector()
    a, b = _pair(selector[5:])
    return scenario.pair_projector(a, b)


def _expected_abl(selector: str) -> dict[float, float]:
    return {1.0: 0.9, 3.0: 0.1} if selector == "total" else {0.0: 1.0, 1.0: 0.0}


def _run_verify(opts) -> Report:
    return scenario.verify_conundrum(opts["tolerance"])


def _run_weak_value(opts) -> Report:
    tsv = scenario.pigeonhole_tsv()
    report = Report(columns=["observable", "re", "im"])
    for sel in opts["observable"] or ALL_OBSERVABLES:
        wv = tsvf.weak_value(tsv, _resolve(sel))
        report.add(scalar_check(f"weak_value[{sel}]", 0.0, wv, opts["tolerance"]))
        report.data_rows.append([sel, wv.real, wv.imag])
    return report


def _run_abl(opts) -> Report:
    tsv = scenario.pigeonhole_tsv()
    report = Report(columns=["observable", "eigenvalue", "probability"])
    for sel in opts["observable"] or ALL_OBSERVABLES:
        dist = tsvf.abl_distribution(tsv, _resolve(sel)).entries
        expected = _expected_abl(sel)
        report.add(CheckResult(f"abl[{sel}]", expected, dist, opts["tolerance"],
                               distribution_deviation(expected, dist), "distribution"))
        for value, prob in sorted(dist.items()):
            report.data_rows.append([sel, value, prob])
    return report


C1_TOL = 1e-6
CONTROL_C1 = 0.5
CONTROL_TOL = 1e-3


def sweep_checks(result: weakmeas.SweepResult, postselected: bool) -> list[CheckResult]:
    checks = []
    eps_max = max(abs(e) for e in result.epsilons)
    for fit in result.fits:
        if postselected:
            checks.append(scalar_check(f"first_order[{fit.pointer_id}]", 0.0, fit.slope, C1_TOL))
            quad = abs(fit.curvature * eps_max)
            ratio = math.inf if quad == 0 else 10 * abs(fit.slope) / quad
            # |c2 * eps_max| > 10 |c1|  <=>  ratio < 1
            checks.append(CheckResult(f"quadratic_dominance[{fit.pointer_id}]", "< 1", ratio,
                                      1.0, ratio if ratio < 1 else math.inf, "ratio"))
        else:
            checks.append(scalar_check(f"control_first_order[{fit.pointer_id}]", CONTROL_C1,
                                       fit.slope, CONTROL_TOL))
    return checks


def pigeonhole_sweep_config(postselect: bool = True, sigma=weakmeas.DEFAULT_SIGMA,
                            half_width=weakmeas.DEFAULT_HALF_WIDTH,
                            n_points=weakmeas.DEFAULT_POINTS) -> weakmeas.SweepConfig:
    return weakmeas.SweepConfig(
        pre=scenario.preselected_state(),
        observables=[scenario.pair_projector(*p) for p in scenario.PAIRS],
        post=scenario.postselected_state() if postselect else None,
        sigma=sigma, half_width=half_width, n_points=n_points,
        pointer_ids=[f"{a}{b}" for a, b in scenario.PAIRS],
    )


def _run_sweep(opts) -> Report:
    postselect = not opts["no_postselect"]
    config = pigeonhole_sweep_config(postselect, opts["sigma"], opts["half_width"], opts["n_points"])
    result = weakmeas.sweep(config, opts["epsilons"], workers=opts["workers"])
    report = Report(columns=list(SWEEP_COLUMNS), data_rows=result.rows())
    for check in sweep_checks(result, postselect):
        report.add(check)
    return report


def _run_sample(opts) -> Report:
    pre, post = scenario.preselected_state(), scenario.postselected_state()
    sel = opts["measure"]
    observable = None if sel == "none" else _resolve(sel)
    counts = mcsample.sample_strong(pre, post, observable, opts["shots"], opts["seed"])
    report = Report(columns=["outcome", "postselected", "count"], data_rows=counts.rows())
    if observable is None:
        n = counts.postselected
        p = 1 / 8
        sd = math.sqrt(p * (1 - p) / counts.shots)
        rate = n / counts.shots
        report.add(CheckResult("postselection_rate", p, rate, 3.0, abs(rate - p) / sd, "z-score"))
        return report
    if sel.startswith("pair:"):
        hits = counts.count(1.0, True)
        report.add(CheckResult("null_result[outcome=1,postselected]", 0, hits, 0.0,
                               float(hits), "exact"))
    predicted = tsvf.abl_distribution(scenario.pigeonhole_tsv(), observable)
    try:
        report.extend(mcsample.empirical_vs_abl(counts, predicted))
    except mcsample.TooFewPostselected as exc:
        report.add(CheckResult("frequencies", "enough postselected runs", str(exc),
                               0.0, math.inf, "error"))
    return report


def _run_demo(opts) -> Report:
    return scenario.sequential_pair_demo(opts["order"])


_HANDLERS = {
    "verify": _run_verify,
    "weak-value": _run_weak_value,
    "abl": _run_abl,
    "sweep": _run_sweep,
    "sample": _run_sample,
    "demo-sequential": _run_demo,
}


def execute(cmd: Command) -> Report:
    """Run a parsed command. Module errors become failed checks, not exceptions."""
    try:
        report = _HANDLERS[cmd.verb](cmd.options)
    except (ValueError, RuntimeError) as exc:
        report = Report()
        report.add(CheckResult(f"{cmd.verb}", "no error", f"{type(exc).__name__}: {exc}",
                               0.0, math.inf, "error"))
    report.command = ["qpigeon"] + list(cmd.argv)
    return report


def format_value(value: Any, digits: int) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        return format(value, f".{digits}g")
    if isinstance(value, complex):
        re = format(value.real, f".{digits}g")
        im = format(abs(value.imag), f".{digits}g")
        sign = "-" if math.copysign(1.0, value.imag) < 0 else "+"
        return f"{re}{sign}{im}j"
    if isinstance(value, dict):
        inner = ", ".join(f"{format_value(float(k), digits)}: {format_value(v, digits)}"
                          for k, v in sorted(value.items()))
        return "{" + inner + "}"
    return str(value)


def _json_number(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def _json_payload(report: Report) -> dict:
    checks = [{
        "name": c.name,
        "expected": format_value(c.expected, 17),
        "actual": format_value(c.actual, 17),
        "tolerance": _json_number(float(c.tolerance)),
        "pass": c.passed,
    } for c in report.checks]
    rows = [{col: _json_number(v) for col, v in zip(report.columns, row)}
            for row in report.data_rows]
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": report.tool_version,
        "command": " ".join(report.command),
        "pass": report.passed,
        "checks": checks,
        "data_rows": rows,
    }


def _text(report: Report) -> str:
    rows = [("CHECK", "EXPECTED", "ACTUAL", "TOLERANCE", "RESULT")]
    for c in report.checks:
        rows.append((c.name, format_value(c.expected, 6), format_value(c.actual, 6),
                     format(c.tolerance, ".6g"), "PASS" if c.passed else "FAIL"))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    if report.data_rows:
        lines.append("")
        table = [tuple(report.columns)] + [tuple(format_value(v, 6) for v in row)
                                           for row in report.data_rows]
        dw = [max(len(r[i]) for r in table) for i in range(len(report.columns))]
        lines += ["  ".join(cell.ljust(w) for cell, w in zip(r, dw)).rstrip() for r in table]
    passed = sum(c.passed for c in report.checks)
    lines.append("")
    lines.append(f"{'PASS' if report.passed else 'FAIL'}: {passed}/{len(report.checks)} checks passed")
    return "\n".join(lines) + "\n"


def render(report: Report, fmt: str = "text") -> bytes:
    if fmt == "json":
        return (json.dumps(_json_payload(report), indent=2, sort_keys=True) + "\n").encode()
    if fmt == "csv":
        if not report.data_rows:
            raise RenderError("csv output needs a report with data rows")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.data_rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue().encode()
    if fmt == "text":
        return _text(report).encode()
    raise RenderError(f"unknown format {fmt!r}")


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cmd = parse_command(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    report = execute(cmd)
    try:
        payload = render(report, cmd.options["format"])
    except RenderError as exc:
        print(f"qpigeon: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cmd.options.get("output"):
        with open(cmd.options["output"], "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
