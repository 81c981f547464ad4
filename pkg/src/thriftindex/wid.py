"""
World Inequality Database bulk exports: parsing, variable selection and a
small content-addressed download cache.

A bulk export is delimiter-separated text with at least the columns
``country, variable, percentile, year, value`` (WID itself ships
semicolon-separated files that also carry ``age`` and ``pop``).
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
import tempfile
import threading
import urllib.error
import urllib.request
import zipfile
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional, TextIO, Union

from .panel import CountryPanel, build_country_panel

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("country", "variable", "percentile", "year", "value")
WID_BULK_URL = "https://wid.world/bulk_download"
MANIFEST_NAME = "manifest.tsv"


class WidParseError(ValueError):
    pass


class WidAmbiguityError(ValueError):
    pass


class WidFetchError(OSError):
    def __init__(self, message, fallback: Optional[Path] = None):
        if fallback is not None:
            message = f"{message}; cached copy available at {fallback}"
        super().__init__(message)
        self.fallback = fallback


@dataclass(frozen=True)
class RawObservation:
    country_code: str
    variable_code: str
    percentile: str
    year: int
    value: float


@dataclass(frozen=True)
class VariableMap:
    capital_code: str = "mnweal"
    gov_consumption_code: str = "mcongo"
    household_consumption_code: str = "mconhn"
    gdp_code: str = "mgdpro"
    percentile_filter: str = "p0p100"

    def __post_init__(self):
        codes = self.codes()
        if len(set(codes)) != len(codes):
            raise ValueError(f"variable codes must be distinct: {codes}")

    def codes(self) -> tuple[str, str, str, str]:
        return (self.capital_code, self.gov_consumption_code,
                self.household_consumption_code, self.gdp_code)


class ObservationList(list):
    """Parsed rows; ``skipped`` counts rows dropped as malformed."""

    def __init__(self, items=(), skipped=0):
        super().__init__(items)
        self.skipped = skipped


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _detect_delimiter(header_line: str) -> str:
    return ";" if header_line.count(";") >= header_line.count(",") and ";" in header_line else ","


def parse_wid_csv(stream: Union[TextIO, str]) -> ObservationList:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = (ln for ln in stream)
    header_line = ""
    for ln in lines:
        if ln.strip():
            header_line = ln.lstrip("\ufeff")
            break
    if not header_line:
        raise WidParseError("empty input")

    delim = _detect_delimiter(header_line)
    header = [h.strip().strip('"').lower() for h in next(csv.reader([header_line], delimiter=delim))]
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise WidParseError(f"missing required column {col!r} (found {header})")
    ix = {c: header.index(c) for c in REQUIRED_COLUMNS}

    out = ObservationList()
    for rec in csv.reader(lines, delimiter=delim):
        if not rec or all(not f.strip() for f in rec):
            continue
        try:
            year = int(rec[ix["year"]].strip())
            value = float(rec[ix["value"]].strip())
            country = rec[ix["country"]].strip()
            variable = rec[ix["variable"]].strip()
            pct = rec[ix["percentile"]].strip()
        except (IndexError, ValueError):
            out.skipped += 1
            continue
        if not (1800 <= year <= 2100) or not math.isfinite(value):
            out.skipped += 1
            continue
        out.append(RawObservation(country, variable, pct, year, value))
    if out.skipped:
        log.info("skipped %d malformed WID rows", out.skipped)
    return out


def read_wid_path(path: Union[str, Path]) -> ObservationList:
    """Parse a WID export file, or every ``WID_data_*.csv`` member of a bulk zip."""
    path = Path(path)
    if zipfile.is_zipfile(path):
        out = ObservationList()
        with zipfile.ZipFile(path) as zf:
            for name in sorted(zf.namelist()):
                if not Path(name).name.startswith("WID_data_") or not name.endswith(".csv"):
                    continue
                with zf.open(name) as fh:
                    part = parse_wid_csv(io.TextIOWrapper(fh, encoding="utf-8-sig"))
                out.extend(part)
                out.skipped += part.skipped
        return out
    with open(path, encoding="utf-8-sig", newline="") as fh:
        return parse_wid_csv(fh)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble_dataset(observations: Iterable[RawObservation],
                     vmap: VariableMap = VariableMap()) -> list[CountryPanel]:
    """
    Build one panel per country from the capital, the two consumption
    components and GDP. A country-year is kept only when all four are present.
    """
    roles = ("K", "Cg", "Ch", "GDP")
    prefixes = vmap.codes()
    # (country, year, role) -> {value: set of codes}
    found: dict = defaultdict(lambda: defaultdict(set))
    for ob in observations:
        if ob.percentile != vmap.percentile_filter:
            continue
        for role, prefix in zip(roles, prefixes):
            if ob.variable_code.startswith(prefix):
                found[(ob.country_code, ob.year, role)][ob.value].add(ob.variable_code)

    cells: dict = defaultdict(dict)
    for (country, year, role), by_value in found.items():
        if len(by_value) > 1:
            codes = sorted({c for cs in by_value.values() for c in cs})
            raise WidAmbiguityError(
                f"{country} {year}: conflicting values for {role} from codes {', '.join(codes)}")
        (value,) = by_value
        cells[(country, year)][role] = value

    rows = defaultdict(list)
    for (country, year), vals in cells.items():
        if all(r in vals for r in roles):
            rows[country].append((year, vals["K"], vals["Cg"] + vals["Ch"], vals["GDP"]))
    return [build_country_panel(c, r) for c, r in sorted(rows.items())]


def render_wid_csv(panels: Iterable[CountryPanel], vmap: VariableMap = VariableMap(),
                   delimiter: str = ";", suffix: str = "999i") -> str:
    """
    Write panels as a WID-style long extract. Consumption is split evenly
    between government and households so the two parts sum back exactly.
    """
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["country", "variable", "percentile", "year", "value", "age", "pop"])
    for panel in panels:
        for o in panel.observations:
            half = o.C / 2
            for code, val in zip(vmap.codes(), (o.K, half, o.C - half, o.GDP)):
                w.writerow([panel.country_code, code + suffix, vmap.percentile_filter,
                            o.year, repr(float(val)), suffix[:3], suffix[3:]])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# download cache
# ---------------------------------------------------------------------------

_manifest_lock = threading.Lock()


@dataclass(frozen=True)
class ManifestEntry:
    url: str
    sha256: str
    timestamp: str
    path: str


def read_manifest(cache_dir: Union[str, Path]) -> dict[str, ManifestEntry]:
    """Latest manifest entry per URL."""
    mpath = Path(cache_dir) / MANIFEST_NAME
    entries = {}
    if mpath.exists():
        for line in mpath.read_text(encoding="utf-8").splitlines():
            parts = line.split("\t")
            if len(parts) == 4 and not line.startswith("#"):
                entries[parts[0]] = ManifestEntry(*parts)
    return entries


def _write_manifest(cache_dir: Path, entries: dict[str, ManifestEntry]) -> None:
    text = "#url\tsha256\ttimestamp\tpath\n" + "".join(
        f"{e.url}\t{e.sha256}\t{e.timestamp}\t{e.path}\n" for _, e in sorted(entries.items()))
    fd, tmp = tempfile.mkstemp(dir=cache_dir, prefix=".manifest-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, cache_dir / MANIFEST_NAME)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _urlopen(url: str) -> bytes:
    with urllib.request.urlopen(url, timeout=120) as resp:
        return resp.read()


def wid_urls(countries="all", base_url: str = WID_BULK_URL) -> list[str]:
    base = base_url.rstrip("/")
    if countries == "all":
        return [f"{base}/wid_all_data.zip"]
    return [f"{base}/WID_data_{c}.csv" for c in countries]


def fetch_wid_bulk(cache_dir: Union[str, Path], countries="all", *,
                   base_url: str = WID_BULK_URL, refresh: bool = False, offline: bool = False,
                   opener: Optional[Callable[[str], bytes]] = None) -> list[Path]:
    """
    Download WID bulk files into ``cache_dir`` and return their local paths.

    Files are stored under ``objects/`` by SHA-256 and indexed in
    ``manifest.tsv``. A cached file whose hash still matches the manifest is
    reused without touching the network unless ``refresh`` is set.
    ``opener`` maps a URL to its bytes and defaults to urllib.
    """
    cache_dir = Path(cache_dir)
    (cache_dir / "objects").mkdir(parents=True, exist_ok=True)
    opener = opener or _urlopen
    out = []
    for url in wid_urls(countries, base_url):
        entries = read_manifest(cache_dir)
        entry = entries.get(url)
        cached = None
        if entry is not None:
            p = cache_dir / entry.path
            if p.exists() and _sha256_file(p) == entry.sha256:
                cached = p
            else:
                log.warning("cached copy of %s is missing or corrupt; re-fetching", url)
        if cached is not None and not refresh:
            out.append(cached)
            continue
        if offline:
            raise WidFetchError(f"{url} not in cache and offline mode is on", cached)
        try:
            payload = opener(url)
        except (urllib.error.URLError, OSError) as exc:
            raise WidFetchError(f"download of {url} failed: {exc}", cached) from exc

        digest = hashlib.sha256(payload).hexdigest()
        ext = ".zip" if url.endswith(".zip") else ".csv"
        rel = f"objects/{digest}{ext}"
        dest = cache_dir / rel
        fd, tmp = tempfile.mkstemp(dir=cache_dir / "objects", prefix=".part-")
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, dest)
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        with _manifest_lock:
            entries = read_manifest(cache_dir)
            entries[url] = ManifestEntry(url, digest, stamp, rel)
            _write_manifest(cache_dir, entries)
        out.append(dest)
    return out
