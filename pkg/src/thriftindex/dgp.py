"""
Synthetic country panels with a known thrift index.

Three processes are provided:

* thrift -- capital grows by exactly the net saving of the year, and
  consumption gives way one-for-one to saving out of a net output that is a
  fixed multiple ``v`` of capital. Every theta observation equals 1.
* free growth -- capital grows at an exogenous rate while consumption is a
  fixed share of capital. Every theta observation equals 0.
* balanced -- capital and consumption grow at one constant rate, so the
  change in the growth rate is identically zero and no theta exists.

Observation noise, when requested, is multiplicative lognormal on the
reported K and C; the underlying process is left undisturbed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields

import numpy as np

from .panel import CountryPanel, Observation


class ScenarioKind(enum.Enum):
    THRIFT = "thrift"
    FREE_GROWTH = "free_growth"
    BALANCED = "balanced"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioParams:
    kind: ScenarioKind
    n_years: int
    k0: float = 100.0
    v: float = 0.9
    saving_path: tuple = ()
    growth_path: tuple = ()
    c_star_const: float = 0.6
    balanced_rate: float = 0.0
    gdp_ratio: float = 0.3
    seed: int = 0
    noise_sd: float = 0.0
    country_code: str = "SIM"
    start_year: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        object.__setattr__(self, "saving_path", tuple(float(s) for s in self.saving_path))
        object.__setattr__(self, "growth_path", tuple(float(s) for s in self.growth_path))
        if self.n_years < 3:
            raise ScenarioError(f"n_years must be >= 3, got {self.n_years}")
        if not self.k0 > 0:
            raise ScenarioError(f"k0 must be positive, got {self.k0}")
        if not self.gdp_ratio > 0:
            raise ScenarioError(f"gdp_ratio must be positive, got {self.gdp_ratio}")
        if self.noise_sd < 0:
            raise ScenarioError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.kind is ScenarioKind.THRIFT:
            if not self.v > 0:
                raise ScenarioError(f"v must be positive, got {self.v}")
            self._check_len("saving_path", self.saving_path)
        elif self.kind is ScenarioKind.FREE_GROWTH:
            self._check_len("growth_path", self.growth_path)
        if self.c_star_const < 0:
            raise ScenarioError(f"c_star_const must be >= 0, got {self.c_star_const}")

    def _check_len(self, name, path):
        if len(path) != self.n_years - 1:
            raise ScenarioError(f"{name} needs {self.n_years - 1} entries, got {len(path)}")

    @property
    def years(self) -> list[int]:
        return list(range(self.start_year, self.start_year + self.n_years))


@dataclass(frozen=True)
class ThriftAccounts:
    """Noise-free national accounts of a thrift economy, one entry per year."""
    years: list
    K: np.ndarray
    S_net: np.ndarray        # saving that produced this year's capital increase
    s_star: np.ndarray       # S_net / K of the previous year
    Y_net: np.ndarray
    C: np.ndarray


def thrift_accounts(params: ScenarioParams) -> ThriftAccounts:
    if params.kind is not ScenarioKind.THRIFT:
        raise ScenarioError(f"expected a thrift scenario, got {params.kind.value}")
    S = np.asarray(params.saving_path, dtype=float)
    K = np.empty(params.n_years)
    K[0] = params.k0
    for t, s in enumerate(S):
        K[t + 1] = K[t] + s
    if np.any(K <= 0):
        raise ScenarioError("saving path drives capital nonpositive")

    # Saving attributed to year t is the capital increase ending in t. The
    # first year has no predecessor; its saving ratio is taken to be that of
    # the first transition so the year-0 books still close.
    S_net = np.empty(params.n_years)
    S_net[1:] = K[1:] - K[:-1]
    S_net[0] = S[0]
    s_star = S_net / np.concatenate([[K[0]], K[:-1]])
    Y = params.v * K
    C = K * (params.v - s_star)
    if np.any(C <= 0):
        bad = params.years[int(np.argmax(C <= 0))]
        raise ScenarioError(f"consumption would be nonpositive in {bad}: saving exceeds v*K")
    return ThriftAccounts(params.years, K, S_net, s_star, Y, C)


def _noisy(params: ScenarioParams, K, C):
    if params.noise_sd == 0:
        return K, C
    rng = np.random.Generator(np.random.Philox(params.seed))
    z = rng.standard_normal((2, len(K)))
    return K * np.exp(params.noise_sd * z[0]), C * np.exp(params.noise_sd * z[1])


def _panel(params: ScenarioParams, K, C) -> CountryPanel:
    gdp = params.gdp_ratio * K
    K, C = _noisy(params, K, C)
    obs = tuple(Observation(y, float(k), float(c), float(g))
                for y, k, c, g in zip(params.years, K, C, gdp))
    return CountryPanel(params.country_code, obs)


def simulate_thrift(params: ScenarioParams) -> CountryPanel:
    acc = thrift_accounts(params)
    return _panel(params, acc.K, acc.C)


def simulate_free_growth(params: ScenarioParams) -> CountryPanel:
    if params.kind is not ScenarioKind.FREE_GROWTH:
        raise ScenarioError(f"expected a free-growth scenario, got {params.kind.value}")
    K = np.empty(params.n_years)
    K[0] = params.k0
    for t, g in enumerate(params.growth_path):
        if 1 + g <= 0:
            raise ScenarioError(f"growth rate {g} at step {t} leaves no capital")
        K[t + 1] = K[t] * (1 + g)
    return _panel(params, K, params.c_star_const * K)


def simulate_balanced(params: ScenarioParams) -> CountryPanel:
    if params.kind is not ScenarioKind.BALANCED:
        raise ScenarioError(f"expected a balanced scenario, got {params.kind.value}")
    if 1 + params.balanced_rate <= 0:
        raise ScenarioError(f"balanced_rate {params.balanced_rate} leaves no capital")
    K = np.empty(params.n_years)
    K[0] = params.k0
    for t in range(1, params.n_years):
        K[t] = K[t - 1] * (1 + params.balanced_rate)
    return _panel(params, K, params.c_star_const * K)


_SIMULATORS = {
    ScenarioKind.THRIFT: simulate_thrift,
    ScenarioKind.FREE_GROWTH: simulate_free_growth,
    ScenarioKind.BALANCED: simulate_balanced,
}


def simulate(params: ScenarioParams) -> CountryPanel:
    return _SIMULATORS[params.kind](params)


def random_scenarios(kind, n_countries, n_years=30, seed=0, noise_sd=0.0, prefix="S"):
    """
    A batch of scenarios of one kind with randomly drawn paths.

    Thrift saving ratios are drawn in [0.02, 0.15] of capital with v in
    [0.8, 1.2]; free-growth rates in [-0.02, 0.12]; balanced rates in
    [0, 0.08]. Country codes are ``prefix`` plus a zero-padded index.
    """
    kind = ScenarioKind(kind)
    rng = np.random.default_rng(seed)
    width = max(2, len(str(n_countries - 1)))
    out = []
    for i in range(n_countries):
        common = dict(kind=kind, n_years=n_years, k0=float(rng.uniform(50, 5000)),
                      gdp_ratio=float(rng.uniform(0.15, 0.5)), seed=seed * 100003 + i,
                      noise_sd=noise_sd, country_code=f"{prefix}{i:0{width}d}",
                      start_year=int(rng.integers(1970, 1990)))
        if kind is ScenarioKind.THRIFT:
            ratios = rng.uniform(0.02, 0.15, n_years - 1)
            K, saving = common["k0"], []
            for r in ratios:
                saving.append(r * K)
                K += r * K
            out.append(ScenarioParams(v=float(rng.uniform(0.8, 1.2)),
                                      saving_path=saving, **common))
        elif kind is ScenarioKind.FREE_GROWTH:
            out.append(ScenarioParams(growth_path=rng.uniform(-0.02, 0.12, n_years - 1),
                                      c_star_const=float(rng.uniform(0.3, 0.9)), **common))
        else:
            out.append(ScenarioParams(balanced_rate=float(rng.uniform(0.0, 0.08)),
                                      c_star_const=float(rng.uniform(0.3, 0.9)), **common))
    return out


# ---------------------------------------------------------------------------
# key=value parameter files
# ---------------------------------------------------------------------------

_PATH_FIELDS = {"saving_path", "growth_path"}
_INT_FIELDS = {"n_years", "seed", "start_year"}
_STR_FIELDS = {"kind", "country_code"}


def parse_scenario_text(text: str) -> ScenarioParams:
    """
    Parse ``key = value`` lines. ``#`` starts a comment. Paths are given as
    comma-separated numbers; ``country`` is accepted for ``country_code``.
    """
    known = {f.name for f in fields(ScenarioParams)}
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "country":
            key = "country_code"
        if not sep or key not in known:
            raise ScenarioError(f"line {lineno}: unknown or malformed entry {raw!r}")
        try:
            if key in _PATH_FIELDS:
                kw[key] = tuple(float(x) for x in value.split(",") if x.strip())
            elif key in _INT_FIELDS:
                kw[key] = int(value)
            elif key in _STR_FIELDS:
                kw[key] = value
            else:
                kw[key] = float(value)
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    if "kind" not in kw or "n_years" not in kw:
        raise ScenarioError("scenario needs at least 'kind' and 'n_years'")
    return ScenarioParams(**kw)
