"""
Country panels and the derivations that turn (K, C, GDP) series into
thrift-index observations.

All quantities derived here are ratios of levels, so they are invariant to
the currency unit of the panel.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, TextIO

CANONICAL_HEADER = ("country", "year", "K", "C", "GDP")
DERIVED_HEADER = (
    "country",
    "year",
    "g",
    "c_star",
    "delta_g",
    "delta_c_star",
    "theta_c",
    "passes_screen",
)

# Growth rates computed from stored levels carry absolute round-off of a few
# ulps of (1 + g); a delta_g that small is not a change in growth.
_DELTA_G_ULPS = 16.0


class PanelError(ValueError):
    """Raised when panel rows violate the panel invariants."""


class ScreenedVariable(enum.Enum):
    GROWTH_RATE = "g"
    DELTA_GROWTH_RATE = "delta_g"


@dataclass(frozen=True)
class ScreenConfig:
    screened_variable: ScreenedVariable = ScreenedVariable.DELTA_GROWTH_RATE
    threshold: float = 0.01

    def __post_init__(self):
        if not math.isfinite(self.threshold) or self.threshold < 0:
            raise ValueError(f"screen threshold must be finite and >= 0, got {self.threshold!r}")


@dataclass(frozen=True)
class Observation:
    year: int
    K: float
    C: float
    GDP: float


@dataclass(frozen=True)
class CountryPanel:
    country_code: str
    observations: tuple[Observation, ...]

    @property
    def years(self) -> list[int]:
        return [o.year for o in self.observations]

    def __len__(self):
        return len(self.observations)

    def scaled(self, factor: float) -> "CountryPanel":
        """Same panel expressed in a different currency unit."""
        obs = tuple(Observation(o.year, o.K * factor, o.C * factor, o.GDP * factor)
                    for o in self.observations)
        return CountryPanel(self.country_code, obs)

    def restrict_years(self, first: Optional[int] = None, last: Optional[int] = None) -> "CountryPanel":
        obs = tuple(o for o in self.observations
                    if (first is None or o.year >= first) and (last is None or o.year <= last))
        return CountryPanel(self.country_code, obs)


@dataclass(frozen=True)
class DerivedPoint:
    country_code: str
    year: int
    gdp: float
    c_star: float
    g: Optional[float] = None
    delta_g: Optional[float] = None
    delta_c_star: Optional[float] = None
    theta_c: Optional[float] = None
    passes_screen: bool = False


def _finite(x) -> bool:
    try:
        return x is not None and math.isfinite(float(x))
    except (TypeError, ValueError):
        return False


def build_country_panel(country_code: str, rows: Iterable[Sequence]) -> CountryPanel:
    """
    Validate and sort ``(year, K, C, GDP)`` rows into a :class:`CountryPanel`.

    Rows with a missing or non-finite K, C or GDP are dropped. A repeated
    year is tolerated only when the repeated rows agree exactly.
    """
    rows = list(rows)
    if not rows:
        raise PanelError(f"{country_code}: no rows")

    by_year: dict[int, Observation] = {}
    for row in rows:
        year, K, C, GDP = row
        if not all(_finite(v) for v in (K, C, GDP)):
            continue
        year = int(year)
        K, C, GDP = float(K), float(C), float(GDP)
        if K <= 0:
            raise PanelError(f"{country_code} {year}: nonpositive capital K={K!r}")
        if C < 0 or GDP < 0:
            raise PanelError(f"{country_code} {year}: negative C or GDP (C={C!r}, GDP={GDP!r})")
        obs = Observation(year, K, C, GDP)
        prev = by_year.get(year)
        if prev is not None and prev != obs:
            raise PanelError(f"{country_code} {year}: duplicate year with conflicting values")
        by_year[year] = obs

    return CountryPanel(country_code, tuple(by_year[y] for y in sorted(by_year)))


def growth_rate_series(panel: CountryPanel) -> list[tuple[int, float]]:
    """Backward capital growth rate (K_t - K_{t-1}) / K_{t-1}, consecutive years only."""
    out = []
    obs = panel.observations
    for prev, cur in zip(obs, obs[1:]):
        if cur.year == prev.year + 1:
            out.append((cur.year, (cur.K - prev.K) / prev.K))
    return out


def consumption_ratio_series(panel: CountryPanel) -> list[tuple[int, float]]:
    return [(o.year, o.C / o.K) for o in panel.observations]


def first_difference(series: Sequence[tuple[int, float]]) -> list[tuple[int, float]]:
    out = []
    for (y0, v0), (y1, v1) in zip(series, series[1:]):
        if y1 == y0 + 1:
            out.append((y1, v1 - v0))
    return out


def _is_roundoff_zero(delta_g: float, g_now: float, g_prev: float) -> bool:
    scale = 1.0 + max(abs(g_now), abs(g_prev))
    return abs(delta_g) <= _DELTA_G_ULPS * 2.220446049250313e-16 * scale


def screen_passes(point: DerivedPoint, screen: ScreenConfig) -> bool:
    """Whether ``point`` survives ``screen`` with everything its consumer needs present."""
    if screen.screened_variable is ScreenedVariable.GROWTH_RATE:
        return point.g is not None and abs(point.g) >= screen.threshold
    return (point.theta_c is not None and point.delta_g is not None
            and abs(point.delta_g) >= screen.threshold)


def derive_points(panel: CountryPanel, screen: ScreenConfig = ScreenConfig()) -> list[DerivedPoint]:
    g = dict(growth_rate_series(panel))
    c_star = consumption_ratio_series(panel)
    dg = dict(first_difference(sorted(g.items())))
    dc = dict(first_difference(c_star))
    c_star = dict(c_star)

    points = []
    for o in panel.observations:
        t = o.year
        theta = None
        d_g, d_c = dg.get(t), dc.get(t)
        if d_g is not None and d_c is not None and d_g != 0.0:
            if not _is_roundoff_zero(d_g, g[t], g[t - 1]):
                theta = -d_c / d_g + 0.0  # no negative zero
        pt = DerivedPoint(
            country_code=panel.country_code,
            year=t,
            gdp=o.GDP,
            c_star=c_star[t],
            g=g.get(t),
            delta_g=d_g,
            delta_c_star=d_c,
            theta_c=theta,
        )
        points.append(_with_screen(pt, screen))
    return points


def _with_screen(pt: DerivedPoint, screen: ScreenConfig) -> DerivedPoint:
    return replace(pt, passes_screen=screen_passes(pt, screen))


def rescreen(points: Iterable[DerivedPoint], screen: ScreenConfig) -> list[DerivedPoint]:
    return [_with_screen(p, screen) for p in points]


def derive_all(panels: Iterable[CountryPanel], screen: ScreenConfig = ScreenConfig()) -> list[DerivedPoint]:
    """Derived points for many panels, ordered by (country, year)."""
    points = [p for panel in panels for p in derive_points(panel, screen)]
    points.sort(key=lambda p: (p.country_code, p.year))
    return points


# ---------------------------------------------------------------------------
# canonical text formats
# ---------------------------------------------------------------------------

def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def write_panels_csv(panels: Iterable[CountryPanel], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CANONICAL_HEADER)
    for panel in sorted(panels, key=lambda p: p.country_code):
        for o in panel.observations:
            w.writerow([panel.country_code, o.year, _fmt(o.K), _fmt(o.C), _fmt(o.GDP)])


def panels_to_csv(panels: Iterable[CountryPanel]) -> str:
    buf = io.StringIO()
    write_panels_csv(panels, buf)
    return buf.getvalue()


def read_panels_csv(stream: TextIO) -> list[CountryPanel]:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise PanelError("empty panel file")
    header = [h.strip() for h in header]
    missing = [c for c in CANONICAL_HEADER if c not in header]
    if missing:
        raise PanelError(f"panel file missing column(s): {', '.join(missing)}")
    idx = [header.index(c) for c in CANONICAL_HEADER]

    rows: dict[str, list] = {}
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        try:
            country, year, K, C, GDP = (rec[i].strip() for i in idx)
            year = int(year)
        except (IndexError, ValueError) as exc:
            raise PanelError(f"line {lineno}: malformed row {rec!r}") from exc
        vals = [float(v) if v else math.nan for v in (K, C, GDP)]
        rows.setdefault(country, []).append((year, *vals))
    return [build_country_panel(c, r) for c, r in sorted(rows.items())]


def write_derived_csv(points: Iterable[DerivedPoint], stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(DERIVED_HEADER)
    for p in sorted(points, key=lambda p: (p.country_code, p.year)):
        w.writerow([
            p.country_code, p.year, _fmt(p.g), _fmt(p.c_star), _fmt(p.delta_g),
            _fmt(p.delta_c_star), _fmt(p.theta_c), "true" if p.passes_screen else "false",
        ])
