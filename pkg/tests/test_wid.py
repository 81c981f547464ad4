import random
import urllib.error
import zipfile

import pytest

from thriftindex.dgp import random_scenarios, simulate
from thriftindex.panel import PanelError
from thriftindex.wid import (
    RawObservation,
    VariableMap,
    WidAmbiguityError,
    WidFetchError,
    WidParseError,
    assemble_dataset,
    fetch_wid_bulk,
    parse_wid_csv,
    read_manifest,
    read_wid_path,
    render_wid_csv,
)

HEADER = "country;variable;percentile;year;value;age;pop\n"


def test_parse_single_row():
    obs = parse_wid_csv(HEADER + "US;mnweal999i;p0p100;2015;8.6e13;999;i\n")
    assert obs == [RawObservation("US", "mnweal999i", "p0p100", 2015, 8.6e13)]
    assert obs.skipped == 0


def test_parse_comma_variant_identical():
    a = parse_wid_csv("country;variable;percentile;year;value\nUS;mnweal999i;p0p100;2015;8.6e13\n")
    b = parse_wid_csv("country,variable,percentile,year,value\nUS,mnweal999i,p0p100,2015,8.6e13\n")
    assert a == b


def test_parse_skips_malformed_rows():
    obs = parse_wid_csv(HEADER + "US;mnweal999i;p0p100;n/a;1;999;i\n"
                                 "US;mnweal999i;p0p100;2015;;999;i\n"
                                 "US;mnweal999i;p0p100;1700;1;999;i\n"
                                 "US;mnweal999i;p0p100;2016;2.5;999;i\n")
    assert len(obs) == 1 and obs.skipped == 3


def test_parse_missing_column_is_fatal():
    with pytest.raises(WidParseError, match="'percentile'"):
        parse_wid_csv("country;variable;year;value\nUS;mnweal999i;2015;1\n")


def test_parse_empty_is_fatal():
    with pytest.raises(WidParseError):
        parse_wid_csv("")
    with pytest.raises(WidParseError):
        parse_wid_csv("\n\n")


def test_parse_tolerates_bom_and_column_order():
    obs = parse_wid_csv("\ufeffyear,value,country,percentile,variable\n2001,5,FR,p0p100,mgdpro999i\n")
    assert obs == [RawObservation("FR", "mgdpro999i", "p0p100", 2001, 5.0)]


def raw(country, code, year, value, pct="p0p100"):
    return RawObservation(country, code, pct, year, value)


def test_assemble_sums_consumption():
    obs = [raw("FR", "mcongo999i", 2000, 20), raw("FR", "mconhn999i", 2000, 60),
           raw("FR", "mnweal999i", 2000, 100), raw("FR", "mgdpro999i", 2000, 50)]
    (panel,) = assemble_dataset(obs)
    (o,) = panel.observations
    assert (panel.country_code, o.year, o.K, o.C, o.GDP) == ("FR", 2000, 100, 80, 50)


def test_assemble_needs_both_consumption_parts():
    obs = [raw("FR", "mcongo999i", 2000, 20), raw("FR", "mnweal999i", 2000, 100),
           raw("FR", "mgdpro999i", 2000, 50)]
    assert assemble_dataset(obs) == []
    obs += [raw("FR", c, 2001, v) for c, v in
            [("mcongo999i", 1), ("mconhn999i", 2), ("mnweal999i", 9), ("mgdpro999i", 4)]]
    (panel,) = assemble_dataset(obs)
    assert panel.years == [2001]


def test_assemble_filters_percentile():
    obs = [raw("FR", c, 2000, v, pct="p90p100") for c, v in
           [("mcongo999i", 1), ("mconhn999i", 2), ("mnweal999i", 9), ("mgdpro999i", 4)]]
    assert assemble_dataset(obs) == []
    assert len(assemble_dataset(obs, VariableMap(percentile_filter="p90p100"))) == 1


def test_assemble_ambiguity_lists_codes():
    obs = [raw("FR", "mnweal999i", 2000, 100), raw("FR", "mnweal992i", 2000, 90)]
    with pytest.raises(WidAmbiguityError, match="mnweal992i, mnweal999i"):
        assemble_dataset(obs)
    # the same value twice is not ambiguous
    obs = [raw("FR", "mnweal999i", 2000, 100), raw("FR", "mnweal992i", 2000, 100)]
    assert assemble_dataset(obs) == []


def test_assemble_rejects_nonpositive_capital():
    obs = [raw("FR", c, 2000, v) for c, v in
           [("mcongo999i", 1), ("mconhn999i", 2), ("mnweal999i", -9), ("mgdpro999i", 4)]]
    with pytest.raises(PanelError):
        assemble_dataset(obs)


def test_variable_map_codes_distinct():
    with pytest.raises(ValueError):
        VariableMap(capital_code="mgdpro")


def synthetic_panels(seed=0):
    kinds = ["thrift", "free_growth", "balanced"]
    return [simulate(s) for i, k in enumerate(kinds)
            for s in random_scenarios(k, 3, 12, seed=seed + i, noise_sd=0.01, prefix=k[0].upper())]


@pytest.mark.parametrize("delimiter", [";", ","])
def test_roundtrip_any_delimiter_and_order(delimiter):
    panels = synthetic_panels()
    text = render_wid_csv(panels, delimiter=delimiter)
    assert assemble_dataset(parse_wid_csv(text)) == sorted(panels, key=lambda p: p.country_code)
    lines = text.splitlines(keepends=True)
    body = lines[1:]
    for seed in range(3):
        random.Random(seed).shuffle(body)
        assert assemble_dataset(parse_wid_csv("".join([lines[0]] + body))) == \
            sorted(panels, key=lambda p: p.country_code)


def test_no_fabricated_years():
    panels = synthetic_panels(5)
    obs = parse_wid_csv(render_wid_csv(panels))
    rng = random.Random(1)
    kept = [o for o in obs if rng.random() > 0.1]
    support = {}
    for o in kept:
        support.setdefault((o.country_code, o.year), set()).add(o.variable_code[:6])
    for panel in assemble_dataset(kept):
        for year in panel.years:
            assert support[(panel.country_code, year)] == {"mnweal", "mcongo", "mconhn", "mgdpro"}


def test_read_zip_members(tmp_path):
    panels = synthetic_panels()
    path = tmp_path / "wid_all_data.zip"
    with zipfile.ZipFile(path, "w") as zf:
        for p in panels:
            zf.writestr(f"WID_data_{p.country_code}.csv", render_wid_csv([p]))
        zf.writestr("WID_metadata_XX.csv", "not;data\n")
    assert assemble_dataset(read_wid_path(path)) == sorted(panels, key=lambda p: p.country_code)


# -- fetch cache -------------------------------------------------------------------

class FakeNet:
    def __init__(self, payloads):
        self.payloads = payloads
        self.calls = []
        self.down = False

    def __call__(self, url):
        self.calls.append(url)
        if self.down:
            raise urllib.error.URLError("network unreachable")
        return self.payloads[url]


BASE = "https://example.test/bulk"


def test_fetch_cold_then_warm(tmp_path):
    url = f"{BASE}/WID_data_FR.csv"
    net = FakeNet({url: b"payload-fr"})
    (path,) = fetch_wid_bulk(tmp_path, ["FR"], base_url=BASE, opener=net)
    assert path.read_bytes() == b"payload-fr"
    manifest = read_manifest(tmp_path)
    assert list(manifest) == [url]
    assert manifest[url].path == f"objects/{manifest[url].sha256}.csv"
    assert net.calls == [url]

    (again,) = fetch_wid_bulk(tmp_path, ["FR"], base_url=BASE, opener=net)
    assert again == path and net.calls == [url]


def test_fetch_refetches_corrupted_file(tmp_path):
    url = f"{BASE}/WID_data_FR.csv"
    net = FakeNet({url: b"payload-fr"})
    (path,) = fetch_wid_bulk(tmp_path, ["FR"], base_url=BASE, opener=net)
    first_stamp = read_manifest(tmp_path)[url].timestamp
    path.write_bytes(b"garbage")
    (again,) = fetch_wid_bulk(tmp_path, ["FR"], base_url=BASE, opener=net)
    assert again.read_bytes() == b"payload-fr"
    assert len(net.calls) == 2
    assert read_manifest(tmp_path)[url].timestamp >= first_stamp


def test_fetch_network_failure_names_fallback(tmp_path):
    url = f"{BASE}/WID_data_FR.csv"
    net = FakeNet({url: b"payload-fr"})
    (path,) = fetch_wid_bulk(tmp_path, ["FR"], base_url=BASE, opener=net)
    net.down = True
    with pytest.raises(WidFetchError) as info:
        fetch_wid_bulk(tmp_path, ["FR"], base_url=BASE, opener=net, refresh=True)
    assert info.value.fallback == path
    assert str(path) in str(info.value)

    with pytest.raises(WidFetchError) as info:
        fetch_wid_bulk(tmp_path / "empty", ["FR"], base_url=BASE, opener=net)
    assert info.value.fallback is None


def test_fetch_offline_uses_cache_only(tmp_path):
    url = f"{BASE}/wid_all_data.zip"
    net = FakeNet({url: b"zipbytes"})
    with pytest.raises(WidFetchError):
        fetch_wid_bulk(tmp_path, base_url=BASE, opener=net, offline=True)
    assert net.calls == []
    fetch_wid_bulk(tmp_path, base_url=BASE, opener=net)
    (path,) = fetch_wid_bulk(tmp_path, base_url=BASE, opener=net, offline=True)
    assert path.suffix == ".zip" and len(net.calls) == 1
