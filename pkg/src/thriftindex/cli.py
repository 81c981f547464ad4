"""
Command-line front end.

    thriftindex fetch    --out CACHE [--countries US,FR] [--refresh] [--offline]
    thriftindex ingest   --input FILE... --out DIR
    thriftindex derive   --input FILE... --out DIR [--screen 0.01]
    thriftindex theta    --input FILE... --out DIR
    thriftindex regress  --input FILE... --out DIR [--weights gdp|none]
    thriftindex simulate (--params FILE... | --kind thrift --n-countries 10) --out DIR
    thriftindex report   --input FILE... --out DIR

Inputs may be canonical panel files (``country,year,K,C,GDP``), WID export
files, WID bulk zips, or directories holding any of these.

Exit codes: 0 success, 2 input/parse error, 3 estimation error, 4 network error.
"""

from __future__ import annotations

import argparse
import io
import logging
import sys
import zipfile
from pathlib import Path

from .dgp import ScenarioError, parse_scenario_text, random_scenarios, simulate
from .estimators import EstimationError, pooled_weighted_theta
from .panel import (
    CANONICAL_HEADER,
    PanelError,
    ScreenConfig,
    ScreenedVariable,
    derive_all,
    read_panels_csv,
    write_derived_csv,
    write_panels_csv,
)
from .report import (
    RunConfig,
    _write,
    regression_outputs,
    run_report,
    theta_outputs,
    write_manifest,
)
from .wid import (
    VariableMap,
    WidAmbiguityError,
    WidFetchError,
    WidParseError,
    assemble_dataset,
    fetch_wid_bulk,
    read_wid_path,
)

log = logging.getLogger("thriftindex")

EXIT_INPUT, EXIT_ESTIMATION, EXIT_NETWORK = 2, 3, 4


class InputError(Exception):
    pass


def _expand(paths):
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += sorted(q for q in p.rglob("*") if q.suffix in (".csv", ".zip") and q.is_file())
        elif p.exists():
            out.append(p)
        else:
            raise InputError(f"no such input: {p}")
    return out


def _is_canonical(path: Path) -> bool:
    with open(path, encoding="utf-8-sig") as fh:
        header = fh.readline().strip()
    return [h.strip() for h in header.split(",")] == list(CANONICAL_HEADER)


def load_panels(paths, vmap=VariableMap()):
    files = _expand(paths)
    if not files:
        raise InputError("no input files")
    panels, raw = [], []
    for f in files:
        if not zipfile.is_zipfile(f) and _is_canonical(f):
            with open(f, encoding="utf-8-sig", newline="") as fh:
                panels += read_panels_csv(fh)
        else:
            raw += read_wid_path(f)
    if raw:
        panels += assemble_dataset(raw, vmap)
    codes = [p.country_code for p in panels]
    dup = sorted({c for c in codes if codes.count(c) > 1})
    if dup:
        raise InputError(f"country supplied by more than one input: {', '.join(dup)}")
    if not panels:
        raise InputError("inputs contain no usable country panels")
    return sorted(panels, key=lambda p: p.country_code), files


def _years(text):
    a, sep, b = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("expected a..b")
    return (int(a) if a else None, int(b) if b else None)


def _list(text):
    return [s.strip() for s in text.split(",") if s.strip()]


def _config(args) -> RunConfig:
    return RunConfig(inputs=[str(p) for p in args.input or []], screen=args.screen,
                     weighting=args.weights, out_dir=args.out, countries=args.countries,
                     exclude=args.exclude, years=args.years,
                     keep_aggregates=args.keep_aggregates)


def _prepare(args):
    config = _config(args)
    panels, files = load_panels(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return config, config.select(panels), files, out


def cmd_fetch(args):
    countries = "all" if args.countries in (None, ["all"]) else args.countries
    paths = fetch_wid_bulk(args.out, countries, base_url=args.base_url,
                           refresh=args.refresh, offline=args.offline)
    for p in paths:
        print(p)


def cmd_ingest(args):
    config, panels, files, out = _prepare(args)
    buf = io.StringIO()
    write_panels_csv(panels, buf)
    outputs = {"panels.csv": _write(out / "panels.csv", buf.getvalue())}
    write_manifest(out, config, files, outputs, "ingest")
    print(f"{len(panels)} countries, {sum(len(p) for p in panels)} country-years -> {out / 'panels.csv'}")


def cmd_derive(args):
    config, panels, files, out = _prepare(args)
    var = ScreenedVariable.GROWTH_RATE if args.screen_variable == "g" else ScreenedVariable.DELTA_GROWTH_RATE
    points = derive_all(panels, ScreenConfig(var, config.screen))
    buf = io.StringIO()
    write_derived_csv(points, buf)
    outputs = {"derived.csv": _write(out / "derived.csv", buf.getvalue())}
    write_manifest(out, config, files, outputs, "derive")
    print(f"{len(points)} points, {sum(p.passes_screen for p in points)} pass the screen")


def _points(config, panels):
    return derive_all(panels, ScreenConfig(ScreenedVariable.DELTA_GROWTH_RATE, config.screen))


def cmd_theta(args):
    config, panels, files, out = _prepare(args)
    points = _points(config, panels)
    outputs = theta_outputs(points, out, config)
    write_manifest(out, config, files, outputs, "theta")
    print(f"pooled GDP-weighted theta_c = {pooled_weighted_theta(points):.3f}")


def cmd_regress(args):
    config, panels, files, out = _prepare(args)
    outputs = regression_outputs(_points(config, panels), out, config)
    write_manifest(out, config, files, outputs, "regress")
    sys.stdout.write(outputs["table1.txt"].read_text(encoding="utf-8"))


def cmd_simulate(args):
    if args.params:
        scenarios = []
        for p in args.params:
            scenarios.append(parse_scenario_text(Path(p).read_text(encoding="utf-8")))
    elif args.kind:
        scenarios = random_scenarios(args.kind, args.n_countries, args.n_years,
                                     seed=args.seed, noise_sd=args.noise_sd)
    else:
        raise InputError("simulate needs --params or --kind")
    panels = [simulate(s) for s in scenarios]
    codes = [p.country_code for p in panels]
    if len(set(codes)) != len(codes):
        raise InputError("scenario country codes must be distinct")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    write_panels_csv(panels, buf)
    _write(out / "panels.csv", buf.getvalue())
    print(f"{len(panels)} synthetic countries -> {out / 'panels.csv'}")


def cmd_report(args):
    config = _config(args)
    panels, files = load_panels(args.input)
    outputs = run_report(panels, config, files)
    sys.stdout.write(outputs["table1.txt"].read_text(encoding="utf-8"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thriftindex", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def analysis(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--input", nargs="+", required=True, metavar="PATH")
        p.add_argument("--out", default="out", metavar="DIR")
        p.add_argument("--screen", type=float, default=0.01)
        p.add_argument("--weights", choices=["gdp", "none"], default="gdp")
        p.add_argument("--countries", type=_list)
        p.add_argument("--exclude", type=_list)
        p.add_argument("--years", type=_years, metavar="A..B")
        p.add_argument("--keep-aggregates", action="store_true",
                       help="keep WID regional and subnational codes (dropped by default)")
        p.add_argument("--offline", action="store_true", help="accepted for symmetry; analysis never uses the network")
        p.set_defaults(func=func)
        return p

    p = sub.add_parser("fetch", help="download WID bulk files into a local cache")
    p.add_argument("--out", default="wid-cache", metavar="DIR")
    p.add_argument("--countries", type=_list, help="ISO codes, or 'all' (default)")
    p.add_argument("--base-url", default="https://wid.world/bulk_download")
    p.add_argument("--refresh", action="store_true")
    p.add_argument("--offline", action="store_true")
    p.set_defaults(func=cmd_fetch)

    analysis("ingest", cmd_ingest, "WID export(s) -> canonical panels")
    d = analysis("derive", cmd_derive, "panels -> derived points")
    d.add_argument("--screen-variable", choices=["g", "dg"], default="dg")
    analysis("theta", cmd_theta, "per-country, yearly and pooled theta")
    analysis("regress", cmd_regress, "fixed-effects regressions, both forms side by side")
    analysis("report", cmd_report, "every table, series and result file")

    p = sub.add_parser("simulate", help="synthetic panels with known theta")
    p.add_argument("--params", nargs="+", metavar="FILE", help="key=value scenario files")
    p.add_argument("--kind", choices=["thrift", "free_growth", "balanced"])
    p.add_argument("--n-countries", type=int, default=10)
    p.add_argument("--n-years", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--out", default="out", metavar="DIR")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except WidFetchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (InputError, PanelError, WidParseError, WidAmbiguityError, ScenarioError,
            ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
