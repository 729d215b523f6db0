"""Command-line entry point.

Every subcommand loads and validates all referenced files before computing
anything. Exit status: 0 success, 1 invalid input, 2 computation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from . import diagnostics as diag
from . import pipeline
from . import sensitivity as sens
from .aggregate import MissingPolicy, aggregate, composite_csv, domain_weighted_scheme, equal_weights, load_scheme
from .classify import band_counts, classification_csv, classify
from .dataset import (
    UnknownCountryWarning,
    apply_exclusions,
    coverage_filter,
    format_coverage_table,
    load_dataset,
    load_exclusions,
    load_specs,
    reference_specs,
)
from .errors import ComputationError, InputError
from .normalize import Method, dump_converted, load_bounds, load_converted

logger = logging.getLogger("stcindex")

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 1, 2


@dataclass
class RunConfig:
    data: Path | None = None
    specs: Path | None = None
    exclusions: Path | None = None
    weights: Path | None = None
    bounds: Path | None = None
    method: Method = Method.Z_SCORE
    min_indicators: int | None = None
    missing_policy: MissingPolicy = MissingPolicy.RENORMALIZE
    output_format: str = "text"
    out: Path | None = None


def _read(path, what):
    p = Path(path)
    try:
        return p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"{what} file not found: {p}") from None
    except OSError as exc:
        raise InputError(f"cannot read {what} file {p}: {exc}") from None


def _digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class Context:
    """Parsed inputs for one invocation."""

    def __init__(self, args):
        self.args = args
        self.cfg = RunConfig(
            data=args.data,
            specs=args.specs,
            exclusions=args.exclusions,
            weights=args.weights,
            bounds=args.bounds,
            method=Method.MIN_MAX if args.method == "minmax" else Method.Z_SCORE,
            min_indicators=args.min_indicators,
            missing_policy=MissingPolicy.parse(args.missing),
            output_format=args.format,
            out=args.out,
        )
        self.inputs = []
        self.specs = reference_specs()
        if args.specs:
            text = _read(args.specs, "indicator specs")
            self.specs = load_specs(text)
            self.inputs.append(f"specs: {Path(args.specs).name} sha256={_digest(text)}")
        self.raw = None
        self.exclusion_list = []
        if args.data:
            text = _read(args.data, "data")
            self.raw = load_dataset(text, self.specs, source=str(args.data))
            self.inputs.append(f"data: {Path(args.data).name} sha256={_digest(text)}")
        if args.exclusions:
            text = _read(args.exclusions, "exclusions")
            self.exclusion_list = load_exclusions(text)
            self.inputs.append(f"exclusions: {Path(args.exclusions).name} sha256={_digest(text)}")
        self.scheme = None
        if args.weights:
            text = _read(args.weights, "weights")
            self.scheme = load_scheme(text, self.specs)
            if args.missing_explicit:
                self.scheme = self.scheme.with_policy(self.cfg.missing_policy)
            self.inputs.append(f"weights: {Path(args.weights).name} sha256={_digest(text)}")
        self.bounds = None
        if args.bounds:
            text = _read(args.bounds, "bounds")
            self.bounds = load_bounds(text, self.specs)
            self.inputs.append(f"bounds: {Path(args.bounds).name} sha256={_digest(text)}")
        if self.cfg.method is Method.MIN_MAX and self.bounds is None:
            raise InputError("--method minmax requires --bounds")
        self.pipeline = pipeline.PipelineConfig(
            method=self.cfg.method,
            scheme=self.scheme,
            missing_policy=self.cfg.missing_policy,
            bounds=self.bounds,
            min_indicators=self.cfg.min_indicators,
        )
        self._filtered = None

    def require_data(self):
        if self.raw is None:
            raise InputError(f"{self.args.command}: --data is required")

    def filtered(self):
        """(post-exclusion panel, retained panel, coverage report)."""
        if self._filtered is None:
            self.require_data()
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", UnknownCountryWarning)
                panel = apply_exclusions(self.raw, self.exclusion_list)
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            retained, report = coverage_filter(panel, self.cfg.min_indicators)
            self._filtered = panel, retained, report
        return self._filtered

    def header(self, indicator_ids=None):
        return [f"stcindex {__version__}"] + self.pipeline.header(indicator_ids) + self.inputs


def _emit(ctx, stem, text):
    out = ctx.cfg.out
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    out.mkdir(parents=True, exist_ok=True)
    ext = {"text": "txt", "csv": "csv", "json": "json"}[ctx.cfg.output_format] if "." not in stem else ""
    path = out / (f"{stem}.{ext}" if ext else stem)
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    logger.info("wrote %s", path)


def _text_header(lines):
    return "".join(f"# {ln}\n" for ln in lines)


def _json(header, body):
    return json.dumps({"config": header, **body}, indent=2, sort_keys=True, allow_nan=False)


# -- subcommands ---------------------------------------------------------------


def cmd_ingest(ctx):
    panel, _, report = ctx.filtered()
    hdr = ctx.header()
    fmt = ctx.cfg.output_format
    excluded = [{"code": c.code, "reason": c.exclusion_reason} for c in panel.excluded]
    if fmt == "json":
        _emit(ctx, "coverage", _json(hdr, {"coverage": report.to_dict(), "excluded": excluded}))
    elif fmt == "csv":
        rows = ["indicator_count,country_count,avg_gdp_per_capita,world_population_share_pct,world_gdp_share_pct"]
        for g in report.groups:
            avg = "" if g.avg_gdp_per_capita is None else repr(g.avg_gdp_per_capita)
            rows.append(
                f"{g.indicator_count},{g.country_count},{avg},"
                f"{g.world_population_share_pct!r},{g.world_gdp_share_pct!r}"
            )
        _emit(ctx, "coverage", _text_header(hdr) + "\n".join(rows))
    else:
        text = format_coverage_table(report)
        if excluded:
            text += f"\nexcluded {len(excluded)} countries: " + ", ".join(e["code"] for e in excluded)
        _emit(ctx, "coverage", _text_header(hdr) + text)
    return EXIT_OK


def _published_diagnostics(ctx):
    tables = diag.load_published_tables()
    implied = diag.implied_extremes_check(
        {i: (s.mean, s.std_dev) for i, s in tables.stats.items()}, tables.ranges
    )
    ids = list(tables.stats)
    report = diag.consistency_check(
        summary=[tables.stats[i] for i in ids],
        ranges=[tables.ranges[i] for i in ids],
        indicator_ids=ids,
        corr_threshold=ctx.args.corr_threshold,
        skew_threshold=ctx.args.skew_threshold,
    )
    return tables, implied, report


def _data_diagnostics(ctx):
    _, retained, _ = ctx.filtered()
    converted = pipeline.convert(retained, ctx.pipeline)
    report = diag.consistency_check(
        converted, corr_threshold=ctx.args.corr_threshold, skew_threshold=ctx.args.skew_threshold
    )
    implied = None
    if converted.method is Method.Z_SCORE:
        ids = converted.indicator_ids
        implied = diag.implied_extremes_check(
            {i: s for i, s in zip(ids, converted.per_indicator_stats)},
            dict(zip(ids, report.ranges)),
        )
    return converted, report, implied


def cmd_diagnose(ctx):
    fmt = ctx.cfg.output_format
    hdr = ctx.header()
    if not ctx.args.paper_tables:
        ctx.require_data()
    status = EXIT_OK
    sections, body = [], {}
    if ctx.args.paper_tables:
        tables, implied, report = _published_diagnostics(ctx)
        body["published_tables"] = {"implied_extremes": implied.to_dict(), "diagnostics": report.to_dict()}
        sections.append("published summary tables")
        sections.append(diag.format_implied_text(implied))
        sections.append(diag.format_report_text(report, tables.names))
        if not implied.passed:
            status = EXIT_COMPUTE
    if ctx.raw is not None:
        converted, report, implied = _data_diagnostics(ctx)
        names = {s.id: s.name for s in converted.indicators}
        body["data"] = {"diagnostics": report.to_dict(), "implied_extremes": implied and implied.to_dict()}
        sections.append(f"data: {len(converted.countries)} countries")
        sections.append(diag.format_report_text(report, names))
        if implied is not None:
            sections.append(diag.format_implied_text(implied))
    if fmt == "json":
        _emit(ctx, "diagnostics", _json(hdr, body))
    elif fmt == "csv":
        rows = ["source,kind,subject,value,detail"]
        for src, part in body.items():
            for f in part["diagnostics"]["flags"]:
                v = "" if f["value"] is None else repr(f["value"])
                rows.append(f"{src},{f['kind']},{f['subject']},{v},\"{f['detail']}\"")
        _emit(ctx, "diagnostics", _text_header(hdr) + "\n".join(rows))
    else:
        _emit(ctx, "diagnostics", _text_header(hdr) + "\n\n".join(sections))
    return status


def cmd_convert(ctx):
    _, retained, _ = ctx.filtered()
    converted = pipeline.convert(retained, ctx.pipeline)
    hdr = ctx.header(converted.indicator_ids)
    if ctx.cfg.output_format == "json":
        body = {
            "indicators": converted.indicator_ids,
            "countries": converted.codes,
            "values": [[None if v != v else v for v in row] for row in converted.values.tolist()],
            "stats": [None if s is None else s.to_dict() for s in converted.per_indicator_stats],
            "clamp_counts": converted.clamp_counts and list(converted.clamp_counts),
        }
        _emit(ctx, "converted", _json(hdr, body))
    elif ctx.cfg.output_format == "text":
        rows = [f"{'code':<5}" + "".join(f"{i[:10]:>11}" for i in converted.indicator_ids)]
        for c, row in zip(converted.codes, converted.values):
            rows.append(f"{c:<5}" + "".join(f"{'':>11}" if v != v else f"{v:>11.3f}" for v in row))
        if converted.total_clamped:
            rows.append(f"clamped values: {converted.total_clamped}")
        _emit(ctx, "converted", _text_header(hdr) + "\n".join(rows))
    else:
        _emit(ctx, "converted", dump_converted(converted, hdr))
    return EXIT_OK


def _composite(ctx):
    if ctx.args.command == "index" and getattr(ctx.args, "converted", None):
        text = _read(ctx.args.converted, "converted matrix")
        converted = load_converted(text, ctx.specs, source=str(ctx.args.converted))
        ctx.inputs.append(f"converted: {Path(ctx.args.converted).name} sha256={_digest(text)}")
    else:
        _, retained, _ = ctx.filtered()
        converted = pipeline.convert(retained, ctx.pipeline)
    return converted, aggregate(converted, ctx.pipeline.scheme_for(converted.indicator_ids))


def _emit_composite(ctx, converted, results):
    hdr = ctx.header(converted.indicator_ids)
    fmt = ctx.cfg.output_format
    if fmt == "json":
        body = {"results": [{"code": r.code, "score": r.score, "coverage": r.coverage, **r.domain_scores} for r in results]}
        _emit(ctx, "composite", _json(hdr, body))
    elif fmt == "csv":
        _emit(ctx, "composite", composite_csv(results, hdr))
    else:
        rows = [f"{'code':<5}{'score':>9}{'cov':>5}{'precond':>9}{'resource':>9}{'output':>9}"]

        def f(v):
            return f"{'':>9}" if v is None else f"{v:>9.3f}"

        for r in results:
            d = r.domain_scores
            rows.append(f"{r.code:<5}{f(r.score)}{r.coverage:>5}{f(d['precondition'])}{f(d['resource'])}{f(d['output'])}")
        _emit(ctx, "composite", _text_header(hdr) + "\n".join(rows))


def cmd_index(ctx):
    converted, results = _composite(ctx)
    _emit_composite(ctx, converted, results)
    return EXIT_OK


def _emit_ranking(ctx, converted, classes):
    hdr = ctx.header(converted.indicator_ids)
    names = {c.code: c.name for c in converted.countries}
    fmt = ctx.cfg.output_format
    if fmt == "json":
        body = {
            "ranking": [
                {"rank": c.rank, "code": c.code, "name": names.get(c.code, ""), "score": c.score, "band": c.band.value}
                for c in classes
            ]
        }
        _emit(ctx, "ranking", _json(hdr, body))
    elif fmt == "csv":
        _emit(ctx, "ranking", classification_csv(classes, names, hdr))
    else:
        rows = [f"{'rank':>4}  {'code':<5}{'name':<28}{'score':>9}  band"]
        for c in classes:
            rows.append(f"{c.rank:>4}  {c.code:<5}{names.get(c.code, '')[:27]:<28}{c.score:>9.3f}  {c.band.value}")
        counts = band_counts(classes)
        rows.append("bands: " + ", ".join(f"{b.value} {n}" for b, n in counts.items()))
        _emit(ctx, "ranking", _text_header(hdr) + "\n".join(rows))


def cmd_rank(ctx):
    converted, results = _composite(ctx)
    _emit_ranking(ctx, converted, classify(results))
    return EXIT_OK


def _sensitivity_reports(ctx):
    _, retained, _ = ctx.filtered()
    analysis, subject = ctx.args.analysis, ctx.args.subject
    cfg = ctx.pipeline
    reports = []
    if analysis in ("countries", "all"):
        codes = [subject] if subject and analysis == "countries" else retained.codes
        reports += [sens.leave_one_country_out(retained, c, cfg) for c in codes]
    if analysis in ("indicators", "all"):
        ids = [subject] if subject and analysis == "indicators" else retained.indicator_ids
        reports += [sens.leave_one_indicator_out(retained, i, cfg) for i in ids]
    if analysis in ("weights", "all"):
        converted = pipeline.convert(retained, cfg)
        scheme_a = cfg.scheme_for(converted.indicator_ids)
        if ctx.args.weights_b:
            scheme_b = load_scheme(_read(ctx.args.weights_b, "weights"), ctx.specs)
        elif scheme_a.name == "equal":
            scheme_b = domain_weighted_scheme(
                {"precondition": 1, "resource": 1, "output": 1}, converted.indicators, missing_policy=cfg.policy
            )
        else:
            scheme_b = equal_weights(converted.indicator_ids, cfg.policy)
        reports.append(sens.compare_weights(converted, scheme_a, scheme_b))
    return reports


def _emit_sensitivity(ctx, reports):
    hdr = ctx.header()
    fmt = ctx.cfg.output_format
    if fmt == "json":
        _emit(ctx, "sensitivity", _json(hdr, {"reports": [r.to_dict() for r in reports]}))
    elif fmt == "csv":
        rows = ["kind,subject,spearman,max_rank_shift,n_shifted,dropped"]
        for r in reports:
            rho = "" if r.spearman != r.spearman else repr(r.spearman)
            rows.append(f"{r.kind.value},{r.subject},{rho},{r.max_rank_shift},{len(r.shifted)},{' '.join(r.dropped)}")
        _emit(ctx, "sensitivity", _text_header(hdr) + "\n".join(rows))
    else:
        _emit(ctx, "sensitivity", _text_header(hdr) + "\n\n".join(sens.format_report_text(r) for r in reports))


def cmd_sensitivity(ctx):
    _emit_sensitivity(ctx, _sensitivity_reports(ctx))
    return EXIT_OK


def cmd_report(ctx):
    panel, _, _ = ctx.filtered()
    converted, results = _composite(ctx)
    classes = classify(results)
    cmd_ingest(ctx)
    cmd_diagnose(ctx)
    cmd_convert(ctx)
    _emit_composite(ctx, converted, results)
    _emit_ranking(ctx, converted, classes)
    _emit_sensitivity(ctx, _sensitivity_reports(ctx))

    # plot data: income distribution per coverage group, converted ranges, composite
    bins = ctx.args.bins
    hdr = ctx.header(converted.indicator_ids)
    cov_counts = panel.coverage()
    for k in sorted(set(cov_counts.tolist()), reverse=True):
        gdp = [c.gdp_per_capita for c, n in zip(panel.countries, cov_counts) if n == k and c.gdp_per_capita is not None]
        if gdp:
            _emit(ctx, f"hist_income_coverage{k}.csv", diag.histogram_csv(diag.histogram(gdp, bins), hdr + [f"per capita GDP, countries with {k} indicators"]))
    for j, i in enumerate(converted.indicator_ids):
        col = [v for v in converted.values[:, j].tolist() if v == v]
        if col:
            _emit(ctx, f"hist_converted_{i}.csv", diag.histogram_csv(diag.histogram(col, bins), hdr + [f"converted {i}"]))
    scored = [r.score for r in results if r.score is not None]
    _emit(ctx, "hist_composite.csv", diag.histogram_csv(diag.histogram(scored, bins), hdr + ["composite score"]))
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "diagnose": cmd_diagnose,
    "convert": cmd_convert,
    "index": cmd_index,
    "rank": cmd_rank,
    "sensitivity": cmd_sensitivity,
    "report": cmd_report,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", type=Path, help="country panel CSV")
    common.add_argument("--specs", type=Path, help="indicator specs JSON (default: reference indicators)")
    common.add_argument("--exclusions", type=Path, help="CODE,reason lines of countries to exclude")
    common.add_argument("--weights", type=Path, help="weight scheme JSON (default: equal weights)")
    common.add_argument("--bounds", type=Path, help="min-max bounds JSON")
    common.add_argument("--method", choices=("zscore", "minmax"), default="zscore")
    common.add_argument("--min-indicators", type=int, default=None, metavar="N",
                        help="keep countries with at least N indicators (default: all)")
    common.add_argument("--missing", choices=("renormalize", "zerofill"), default=None)
    common.add_argument("--format", choices=("text", "csv", "json"), default="text")
    common.add_argument("--out", type=Path, help="output directory (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="stcindex", description="Build and check composite capacity indices.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[common], help="validate input and show the coverage table")
    p = sub.add_parser("diagnose", parents=[common], help="internal-consistency diagnostics")
    p.add_argument("--paper-tables", action="store_true", help="check the bundled published summary tables")
    p.add_argument("--corr-threshold", type=float, default=diag.DEFAULT_CORR_THRESHOLD)
    p.add_argument("--skew-threshold", type=float, default=diag.DEFAULT_SKEW_THRESHOLD)
    sub.add_parser("convert", parents=[common], help="write the converted matrix")
    p = sub.add_parser("index", parents=[common], help="write composite scores")
    p.add_argument("--converted", type=Path, help="aggregate a matrix written by 'convert' instead of --data")
    sub.add_parser("rank", parents=[common], help="write ranks and bands")
    p = sub.add_parser("sensitivity", parents=[common], help="leave-one-out and weighting robustness")
    p.add_argument("--analysis", choices=("countries", "indicators", "weights", "all"), default="all")
    p.add_argument("--subject", help="single country code or indicator id to leave out")
    p.add_argument("--weights-b", type=Path, help="second weight scheme for --analysis weights")
    p = sub.add_parser("report", parents=[common], help="everything, plus histogram plot data")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--paper-tables", action="store_true")
    p.add_argument("--corr-threshold", type=float, default=diag.DEFAULT_CORR_THRESHOLD)
    p.add_argument("--skew-threshold", type=float, default=diag.DEFAULT_SKEW_THRESHOLD)
    p.add_argument("--analysis", choices=("countries", "indicators", "weights", "all"), default="all")
    p.add_argument("--subject", default=None)
    p.add_argument("--weights-b", type=Path, default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    args.missing_explicit = args.missing is not None
    args.missing = args.missing or "renormalize"
    try:
        ctx = Context(args)
        if args.command == "index" and args.converted is None:
            ctx.require_data()
        elif args.command not in ("diagnose", "index"):
            ctx.require_data()
        return COMMANDS[args.command](ctx)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ComputationError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
