"""
Aggregation of thrift-index observations and GDP-weighted fixed-effects
regressions.

The least-squares core works on the sqrt-weight scaled design and solves it
through a Householder QR factorisation; normal equations are never formed.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .panel import DerivedPoint, ScreenConfig, ScreenedVariable, screen_passes


class EstimationError(RuntimeError):
    pass


class NoDataError(EstimationError):
    """No observation survives the screen."""


class RankDeficiencyError(EstimationError):
    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        super().__init__("design is rank deficient beyond dummy collinearity; "
                         f"offending column(s): {', '.join(self.columns)}")


class DemeanError(EstimationError):
    pass


# ---------------------------------------------------------------------------
# theta aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountrySummary:
    country_code: str
    theta_mean: float
    n_periods: int
    first_year: int
    last_year: int

    @property
    def period_string(self) -> str:
        return f"{self.first_year % 100:02d}-{self.last_year % 100:02d}({self.n_periods})"


@dataclass(frozen=True)
class YearlyTheta:
    year: int
    weighted_theta: float
    n_countries: int


def _usable(points: Iterable[DerivedPoint]) -> list[DerivedPoint]:
    return [p for p in points if p.passes_screen and p.theta_c is not None]


def country_theta_summary(points: Iterable[DerivedPoint]) -> CountrySummary:
    """Unweighted mean of one country's screened theta observations."""
    used = sorted(_usable(points), key=lambda p: p.year)
    if not used:
        raise NoDataError("no usable periods")
    countries = {p.country_code for p in used}
    if len(countries) != 1:
        raise ValueError(f"points span several countries: {sorted(countries)}")
    theta = math.fsum(p.theta_c for p in used) / len(used)
    return CountrySummary(used[0].country_code, theta, len(used), used[0].year, used[-1].year)


def country_summaries(points: Iterable[DerivedPoint]) -> list[CountrySummary]:
    """One summary per country with usable periods; others are omitted."""
    by_country = defaultdict(list)
    for p in points:
        by_country[p.country_code].append(p)
    out = []
    for code in sorted(by_country):
        try:
            out.append(country_theta_summary(by_country[code]))
        except NoDataError:
            continue
    return out


def pooled_weighted_theta(points: Iterable[DerivedPoint]) -> float:
    used = [p for p in _usable(points) if p.gdp > 0]
    if not used:
        raise NoDataError("no screened observation with positive GDP weight")
    w = math.fsum(p.gdp for p in used)
    return math.fsum(p.gdp * p.theta_c for p in used) / w


def yearly_weighted_theta(points: Iterable[DerivedPoint]) -> list[YearlyTheta]:
    by_year = defaultdict(list)
    for p in _usable(points):
        if p.gdp > 0:
            by_year[p.year].append(p)
    out = []
    for year in sorted(by_year):
        ps = by_year[year]
        w = math.fsum(p.gdp for p in ps)
        out.append(YearlyTheta(year, math.fsum(p.gdp * p.theta_c for p in ps) / w,
                               len({p.country_code for p in ps})))
    return out


# ---------------------------------------------------------------------------
# weighted least squares
# ---------------------------------------------------------------------------

@dataclass
class _WLSFit:
    coef: np.ndarray          # full length, nan where a column was dropped
    kept: np.ndarray          # indices of retained columns
    R: np.ndarray             # triangular factor of the retained, sqrt-weighted design
    fitted: np.ndarray
    resid: np.ndarray


def _greedy(Xw, order, rtol):
    """Split ``order`` into columns independent of those before them, and the rest."""
    n = Xw.shape[0]
    Q = np.empty((n, len(order)))
    k = 0
    kept, dependent = [], []
    for j in order:
        v = Xw[:, j].astype(float, copy=True)
        norm0 = np.linalg.norm(v)
        if k:
            Qk = Q[:, :k]
            for _ in range(2):
                v -= Qk @ (Qk.T @ v)
        nv = np.linalg.norm(v)
        if norm0 == 0.0 or nv <= rtol * norm0:
            dependent.append(j)
            continue
        Q[:, k] = v / nv
        k += 1
        kept.append(j)
    return kept, dependent


def _select_columns(X, Xw, names, droppable, rtol):
    p = Xw.shape[1]
    fixed = [j for j in range(p) if not droppable[j]]
    dummies = [j for j in range(p) if droppable[j]]
    kept, dependent = _greedy(Xw, fixed + dummies, rtol)
    bad = [j for j in dependent if not droppable[j]]
    if bad:
        raise RankDeficiencyError([names[j] for j in bad])
    # A non-constant structural column must not lie in the span of the
    # constant columns and dummies: it would only be identified by dropping
    # a dummy, which silently changes the model.
    const = [j for j in fixed if np.ptp(X[:, j]) == 0]
    for j in fixed:
        if j in const or not dummies:
            continue
        _, dep = _greedy(Xw, const + dummies + [j], rtol)
        if j in dep:
            raise RankDeficiencyError([names[j]])
    return np.array(sorted(kept), dtype=int)


def _wls(design, response, weights, names=None, droppable=None, rtol=1e-10) -> _WLSFit:
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(response, dtype=float)
    w = np.asarray(weights, dtype=float)
    n, p = X.shape
    if y.shape != (n,) or w.shape != (n,):
        raise ValueError("design, response and weights must have matching rows")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    if names is None:
        names = [f"x{j}" for j in range(p)]
    if droppable is None:
        droppable = [False] * p

    active = w > 0
    if active.sum() < p - sum(droppable):
        raise EstimationError(f"{int(active.sum())} weighted rows for {p} columns")
    sw = np.sqrt(w[active])
    Xw = X[active] * sw[:, None]
    yw = y[active] * sw

    kept = _select_columns(X[active], Xw, names, droppable, rtol)
    if active.sum() < len(kept):
        raise EstimationError(f"{int(active.sum())} weighted rows for {len(kept)} columns")
    Q, R = np.linalg.qr(Xw[:, kept])
    beta = solve_triangular(R, Q.T @ yw)

    coef = np.full(p, np.nan)
    coef[kept] = beta
    fitted = X[:, kept] @ beta
    return _WLSFit(coef, kept, R, fitted, y - fitted)


def solve_weighted_least_squares(design, response, weights, names=None, droppable=None):
    """
    Minimise ``sum_i w_i (y_i - x_i . beta)**2``.

    Parameters
    ----------
    design : array, shape (n, p)
    response : array, shape (n,)
    weights : array, shape (n,)
        Nonnegative; zero-weight rows are ignored.
    names : list of str, optional
        Column labels used in error messages.
    droppable : list of bool, optional
        Columns that may be dropped when they are linearly dependent on the
        others (fixed-effect dummies). Dropped columns get a ``nan``
        coefficient. A dependent column not marked droppable raises
        :class:`RankDeficiencyError`.

    Returns
    -------
    beta : ndarray, shape (p,)
    """
    return _wls(design, response, weights, names, droppable).coef


# ---------------------------------------------------------------------------
# within transformation
# ---------------------------------------------------------------------------

def _codes(ids):
    if ids is None:
        return None
    _, inv = np.unique(np.asarray(ids), return_inverse=True)
    return inv.ravel()


def demean_two_way(values, country_ids, year_ids, weights, tol=1e-10, max_sweeps=200):
    """
    Weighted within transformation by alternating projections.

    Either id array may be ``None`` for a one-way transformation. ``values``
    may be 1-D or a 2-D array of columns demeaned together.
    """
    v = np.array(values, dtype=float, copy=True)
    squeeze = v.ndim == 1
    if squeeze:
        v = v[:, None]
    w = np.asarray(weights, dtype=float)
    groups = [c for c in (_codes(country_ids), _codes(year_ids)) if c is not None]
    if not groups:
        return v[:, 0] if squeeze else v

    wsum = [np.bincount(c, weights=w) for c in groups]
    change = np.inf
    for _ in range(max_sweeps):
        change = 0.0
        for codes, ws in zip(groups, wsum):
            safe = np.where(ws > 0, ws, 1.0)
            means = np.column_stack([np.bincount(codes, weights=w * v[:, j]) / safe
                                     for j in range(v.shape[1])])
            means[ws == 0] = 0.0
            step = means[codes]
            v -= step
            change = max(change, float(np.max(np.abs(step))) if step.size else 0.0)
        if change < tol:
            return v[:, 0] if squeeze else v
    raise DemeanError(f"demeaning did not converge in {max_sweeps} sweeps "
                      f"(last max change {change:.3e}, residual norm {np.linalg.norm(v):.3e})")


# ---------------------------------------------------------------------------
# panel regression
# ---------------------------------------------------------------------------

class Response(enum.Enum):
    NEG_C_STAR = "-c_star"
    NEG_DELTA_C_STAR = "-delta_c_star"


class Regressor(enum.Enum):
    GROWTH_RATE = "g"
    DELTA_GROWTH_RATE = "delta_g"


class Weighting(enum.Enum):
    NONE = "none"
    GDP = "gdp"


_PAIRS = {
    Response.NEG_C_STAR: Regressor.GROWTH_RATE,
    Response.NEG_DELTA_C_STAR: Regressor.DELTA_GROWTH_RATE,
}


@dataclass(frozen=True)
class RegressionSpec:
    response: Response
    regressor: Regressor
    screen: ScreenConfig
    weights: Weighting = Weighting.GDP
    country_fe: bool = True
    year_fe: bool = True

    def __post_init__(self):
        if _PAIRS[self.response] is not self.regressor:
            raise ValueError(f"cannot regress {self.response.value} on {self.regressor.value}")

    @classmethod
    def levels(cls, threshold=0.01, **kw) -> "RegressionSpec":
        """-c* on g(K), screened on |g(K)|."""
        return cls(Response.NEG_C_STAR, Regressor.GROWTH_RATE,
                   ScreenConfig(ScreenedVariable.GROWTH_RATE, threshold), **kw)

    @classmethod
    def differences(cls, threshold=0.01, **kw) -> "RegressionSpec":
        """-delta c* on delta g(K), screened on |delta g(K)|."""
        return cls(Response.NEG_DELTA_C_STAR, Regressor.DELTA_GROWTH_RATE,
                   ScreenConfig(ScreenedVariable.DELTA_GROWTH_RATE, threshold), **kw)

    @property
    def label(self) -> str:
        return f"{self.response.value} on {self.regressor.value}"


@dataclass(frozen=True)
class RegressionResult:
    coefficient: float
    se_classical: float
    se_cluster_country: float
    n_obs: int
    r2: float
    r2_within: float
    n_countries: int
    n_years: int
    spec: RegressionSpec = field(repr=False)

    @property
    def std_error(self) -> float:
        """Reported standard error (country-clustered)."""
        return self.se_cluster_country

    def to_text(self) -> str:
        s = self.spec
        items = [
            ("response", s.response.value),
            ("regressor", s.regressor.value),
            ("screen_variable", s.screen.screened_variable.value),
            ("screen_threshold", repr(s.screen.threshold)),
            ("weights", s.weights.value),
            ("country_fe", str(s.country_fe).lower()),
            ("year_fe", str(s.year_fe).lower()),
            ("coefficient", repr(self.coefficient)),
            ("se_classical", repr(self.se_classical)),
            ("se_cluster_country", repr(self.se_cluster_country)),
            ("n_obs", str(self.n_obs)),
            ("n_countries", str(self.n_countries)),
            ("n_years", str(self.n_years)),
            ("r2", repr(self.r2)),
            ("r2_within", repr(self.r2_within)),
        ]
        return "".join(f"{k}={v}\n" for k, v in items)


def parse_result_text(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


@dataclass
class _Sample:
    y: np.ndarray
    x: np.ndarray
    w: np.ndarray
    country: np.ndarray
    year: np.ndarray


def regression_sample(spec: RegressionSpec, points: Iterable[DerivedPoint]) -> _Sample:
    pts = sorted(points, key=lambda p: (p.country_code, p.year))
    rows = []
    for p in pts:
        if not screen_passes(p, spec.screen):
            continue
        if spec.response is Response.NEG_C_STAR:
            yv, xv = p.c_star, p.g
        else:
            yv, xv = p.delta_c_star, p.delta_g
        if yv is None or xv is None:
            continue
        wv = p.gdp if spec.weights is Weighting.GDP else 1.0
        if not wv > 0:
            continue
        rows.append((-yv, xv, wv, p.country_code, p.year))
    if not rows:
        raise NoDataError(f"{spec.label}: empty screened sample")
    y, x, w, c, t = zip(*rows)
    return _Sample(np.array(y), np.array(x), np.array(w), np.array(c), np.array(t))


def _dummies(labels, prefix):
    levels = sorted(set(labels.tolist()))
    cols = [(labels == lv).astype(float) for lv in levels[1:]]
    names = [f"{prefix}[{lv}]" for lv in levels[1:]]
    return cols, names, levels


def _weighted_r2(resid, centred, w):
    ssr = float(np.sum(w * resid ** 2))
    sst = float(np.sum(w * centred ** 2))
    if sst == 0.0:
        return 1.0
    return min(max(1.0 - ssr / sst, 0.0), 1.0)


def _check_fe(spec, smp):
    if spec.country_fe and len(set(smp.country.tolist())) < 2:
        raise EstimationError(f"{spec.label}: country fixed effects need >= 2 countries")
    if spec.year_fe and len(set(smp.year.tolist())) < 2:
        raise EstimationError(f"{spec.label}: year fixed effects need >= 2 years")


def fit_panel_regression(spec: RegressionSpec, points: Iterable[DerivedPoint]) -> RegressionResult:
    """
    Least-squares dummy-variable fit of the response on the regressor with
    optional country and year effects.
    """
    smp = regression_sample(spec, points)
    _check_fe(spec, smp)
    n = len(smp.y)

    cols = [np.ones(n), smp.x]
    names = ["intercept", spec.regressor.value]
    droppable = [False, False]
    for flag, labels, prefix in ((spec.country_fe, smp.country, "country"),
                                 (spec.year_fe, smp.year, "year")):
        if flag:
            dcols, dnames, _ = _dummies(labels, prefix)
            cols += dcols
            names += dnames
            droppable += [True] * len(dcols)
    X = np.column_stack(cols)

    fit = _wls(X, smp.y, smp.w, names, droppable)
    k = len(fit.kept)
    beta = float(fit.coef[1])
    pos = int(np.searchsorted(fit.kept, 1))

    w = smp.w
    e = fit.resid
    Rinv = solve_triangular(fit.R, np.eye(k))
    bread = Rinv @ Rinv.T

    dof = n - k
    if dof > 0:
        s2 = float(np.sum(w * e ** 2)) / dof
        se_classical = math.sqrt(s2 * bread[pos, pos])
    else:
        se_classical = math.nan

    clusters = _codes(smp.country)
    n_clusters = int(clusters.max()) + 1
    if n_clusters > 1 and dof > 0:
        scores = X[:, fit.kept] * (w * e)[:, None]
        S = np.zeros((n_clusters, k))
        np.add.at(S, clusters, scores)
        V = bread @ (S.T @ S) @ bread
        V *= n_clusters / (n_clusters - 1) * (n - 1) / dof
        se_cluster = math.sqrt(max(V[pos, pos], 0.0))
    else:
        se_cluster = math.nan

    ybar = np.sum(w * smp.y) / np.sum(w)
    r2 = _weighted_r2(e, smp.y - ybar, w)

    yx = _within(spec, smp)
    resid_within = yx[:, 0] - _within_slope(yx, w) * yx[:, 1]
    r2_within = _weighted_r2(resid_within, yx[:, 0], w)

    return RegressionResult(
        coefficient=beta,
        se_classical=se_classical,
        se_cluster_country=se_cluster,
        n_obs=n,
        r2=r2,
        r2_within=r2_within,
        n_countries=n_clusters,
        n_years=len(set(smp.year.tolist())),
        spec=spec,
    )


def _within(spec, smp):
    yx = np.column_stack([smp.y, smp.x])
    if not (spec.country_fe or spec.year_fe):
        return yx - np.sum(smp.w[:, None] * yx, axis=0) / np.sum(smp.w)
    return demean_two_way(yx,
                          smp.country if spec.country_fe else None,
                          smp.year if spec.year_fe else None,
                          smp.w)


def _within_slope(yx, w):
    return float(_wls(yx[:, 1], yx[:, 0], w, names=["regressor"]).coef[0])


def within_coefficient(spec: RegressionSpec, points: Iterable[DerivedPoint]) -> float:
    """Regressor coefficient from WLS on the demeaned sample (no dummies)."""
    smp = regression_sample(spec, points)
    _check_fe(spec, smp)
    return _within_slope(_within(spec, smp), smp.w)
