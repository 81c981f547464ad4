"""
Plain-text tables, the yearly theta series and the run manifest.

Result files carry no timestamps and use fixed formatting and ordering, so
identical inputs give byte-identical files. The manifest is the only place a
run's wall-clock time is recorded.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .countries import display_name, is_aggregate
from .estimators import (
    CountrySummary,
    RegressionResult,
    RegressionSpec,
    Weighting,
    YearlyTheta,
    country_summaries,
    fit_panel_regression,
    pooled_weighted_theta,
    yearly_weighted_theta,
)
from .panel import (
    CountryPanel,
    ScreenConfig,
    ScreenedVariable,
    derive_all,
    write_derived_csv,
    write_panels_csv,
)


@dataclass
class RunConfig:
    inputs: list = field(default_factory=list)
    screen: float = 0.01
    weighting: str = "gdp"
    out_dir: str = "out"
    countries: Optional[list] = None
    exclude: Optional[list] = None
    years: Optional[tuple] = None
    keep_aggregates: bool = False

    def __post_init__(self):
        if not math.isfinite(self.screen) or self.screen < 0:
            raise ValueError(f"screen threshold must be >= 0, got {self.screen}")
        Weighting(self.weighting)

    def select(self, panels: Sequence[CountryPanel]) -> list[CountryPanel]:
        out = []
        for p in panels:
            if not self.keep_aggregates and is_aggregate(p.country_code):
                continue
            if self.countries and p.country_code not in self.countries:
                continue
            if self.exclude and p.country_code in self.exclude:
                continue
            if self.years:
                p = p.restrict_years(*self.years)
            if len(p):
                out.append(p)
        return out

    def specs(self) -> tuple[RegressionSpec, RegressionSpec]:
        w = Weighting(self.weighting)
        return (RegressionSpec.levels(self.screen, weights=w),
                RegressionSpec.differences(self.screen, weights=w))


def _num(x: float, places: int) -> str:
    if x is None or not math.isfinite(x):
        return "n/a"
    # str.format rounds the exact binary value, ties to even
    return f"{x:.{places}f}"


def _screen_label(spec: RegressionSpec) -> str:
    var = "g(K)" if spec.screen.screened_variable is ScreenedVariable.GROWTH_RATE else "Δg(K)"
    return f"|{var}| ≥ {spec.screen.threshold:g}"


def render_table1(levels: RegressionResult, diffs: RegressionResult) -> str:
    weighted = levels.spec.weights is Weighting.GDP
    title = "Regressions, all countries and years, " + ("GDP-weighted" if weighted else "unweighted")
    yes = lambda b: "Yes" if b else "No"
    rows = [
        ("", "-c* on g(K)", "-Δc* on Δg(K)"),
        ("Regression", _num(levels.coefficient, 3), _num(diffs.coefficient, 3)),
        ("Std. error", _num(levels.std_error, 3), _num(diffs.std_error, 3)),
        ("Observations", str(levels.n_obs), str(diffs.n_obs)),
        ("R²", _num(levels.r2, 3), _num(diffs.r2, 3)),
        ("Within R²", _num(levels.r2_within, 3), _num(diffs.r2_within, 3)),
        ("Screen", _screen_label(levels.spec), _screen_label(diffs.spec)),
        ("Year fixed effects", yes(levels.spec.year_fe), yes(diffs.spec.year_fe)),
        ("Country fixed effects", yes(levels.spec.country_fe), yes(diffs.spec.country_fe)),
    ]
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    w2 = max(len(r[2]) for r in rows)
    lines = [title, ""]
    lines += [f"{a:<{w0}}  {b:>{w1}}  {c:>{w2}}".rstrip() for a, b, c in rows]
    return "\n".join(lines) + "\n"


def render_table2(summaries: Sequence[CountrySummary], threshold: float = 0.01) -> str:
    rows = sorted(((display_name(s.country_code), _num(s.theta_mean, 2), s.period_string)
                   for s in summaries))
    head = ("Country", "θc", "Periods")
    w0 = max([len(head[0])] + [len(r[0]) for r in rows])
    w1 = max([len(head[1])] + [len(r[1]) for r in rows])
    lines = [f"θc by country, screen |Δg(K)| ≥ {threshold:g}; number of periods in ()", ""]
    lines.append(f"{head[0]:<{w0}}  {head[1]:>{w1}}  {head[2]}")
    lines += [f"{a:<{w0}}  {b:>{w1}}  {c}" for a, b, c in rows]
    return "\n".join(lines) + "\n"


def render_figure1_csv(series: Sequence[YearlyTheta]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["year", "weighted_theta", "n_countries"])
    for s in series:
        w.writerow([s.year, repr(s.weighted_theta), s.n_countries])
    return buf.getvalue()


def render_figure1_svg(series: Sequence[YearlyTheta], width=640, height=360) -> str:
    """Bare line plot of the yearly GDP-weighted theta with a zero and a unit reference line."""
    pad = 48
    if not series:
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
                "<text x=\"10\" y=\"20\">no data</text></svg>\n")
    xs = [s.year for s in series]
    ys = [s.weighted_theta for s in series]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys + [0.0, 1.0]), max(ys + [0.0, 1.0])
    if x1 == x0:
        x1 = x0 + 1
    sx = lambda x: pad + (x - x0) / (x1 - x0) * (width - 2 * pad)
    sy = lambda y: height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{sy(0):.2f}" x2="{width - pad}" y2="{sy(0):.2f}" stroke="#999"/>',
        f'<line x1="{pad}" y1="{sy(1):.2f}" x2="{width - pad}" y2="{sy(1):.2f}" '
        'stroke="#c33" stroke-dasharray="4 3"/>',
        f'<polyline fill="none" stroke="#036" stroke-width="1.5" points="{pts}"/>',
        f'<text x="{pad}" y="{height - 12}" font-size="12">{x0}</text>',
        f'<text x="{width - pad}" y="{height - 12}" font-size="12" text-anchor="end">{x1}</text>',
        f'<text x="8" y="{sy(1):.2f}" font-size="12">1</text>',
        f'<text x="8" y="{sy(0):.2f}" font-size="12">0</text>',
        f'<text x="{width / 2:.0f}" y="20" font-size="13" text-anchor="middle">'
        "GDP-weighted θc, all countries</text>",
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def render_country_csv(summaries: Sequence[CountrySummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["country", "name", "theta_mean", "n_periods", "first_year", "last_year", "periods"])
    for s in summaries:
        w.writerow([s.country_code, display_name(s.country_code), repr(s.theta_mean),
                    s.n_periods, s.first_year, s.last_year, s.period_string])
    return buf.getvalue()


def sha256_path(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def theta_outputs(points, out: Path, config: RunConfig) -> dict:
    summaries = country_summaries(points)
    series = yearly_weighted_theta(points)
    pooled = pooled_weighted_theta(points)
    return {
        "theta.txt": _write(out / "theta.txt",
                            f"pooled_weighted_theta={pooled!r}\n"
                            f"n_obs={sum(s.n_periods for s in summaries)}\n"
                            f"n_countries={len(summaries)}\n"),
        "theta_by_country.csv": _write(out / "theta_by_country.csv", render_country_csv(summaries)),
        "table2.txt": _write(out / "table2.txt", render_table2(summaries, config.screen)),
        "figure1.csv": _write(out / "figure1.csv", render_figure1_csv(series)),
        "figure1.svg": _write(out / "figure1.svg", render_figure1_svg(series)),
    }


def regression_outputs(points, out: Path, config: RunConfig) -> dict:
    spec_l, spec_d = config.specs()
    res_l = fit_panel_regression(spec_l, points)
    res_d = fit_panel_regression(spec_d, points)
    return {
        "regression_levels.txt": _write(out / "regression_levels.txt", res_l.to_text()),
        "regression_differences.txt": _write(out / "regression_differences.txt", res_d.to_text()),
        "table1.txt": _write(out / "table1.txt", render_table1(res_l, res_d)),
    }


def write_manifest(out: Path, config: RunConfig, input_paths, outputs: dict, command: str) -> Path:
    manifest = {
        "command": command,
        "software": {"name": "thriftindex", "version": __version__},
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items()},
        "inputs": [{"path": str(p), "sha256": sha256_path(p)} for p in input_paths],
        "outputs": {name: sha256_path(p) for name, p in sorted(outputs.items())},
    }
    path = out / "run-manifest.json"
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def run_report(panels: Sequence[CountryPanel], config: RunConfig, input_paths=()) -> dict:
    """Derive, estimate and write every report artifact into ``config.out_dir``."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    panels = config.select(panels)
    screen = ScreenConfig(ScreenedVariable.DELTA_GROWTH_RATE, config.screen)
    points = derive_all(panels, screen)

    outputs = {}
    buf = io.StringIO()
    write_panels_csv(panels, buf)
    outputs["panels.csv"] = _write(out / "panels.csv", buf.getvalue())
    buf = io.StringIO()
    write_derived_csv(points, buf)
    outputs["derived.csv"] = _write(out / "derived.csv", buf.getvalue())
    outputs.update(theta_outputs(points, out, config))
    outputs.update(regression_outputs(points, out, config))
    outputs["run-manifest.json"] = write_manifest(out, config, input_paths, outputs, "report")
    return outputs
