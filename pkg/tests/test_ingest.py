import io

import numpy as np
import pytest

from capspace.ingest import (
    IndicatorRecord,
    SpecializationMatrix,
    TradeParseError,
    binarize,
    compute_rca,
    parse_indicators_csv,
    parse_trade_csv,
    read_matrix_cache,
    read_matrix_csv,
    write_matrix_cache,
    write_matrix_csv,
)

TRADE_CSV = """year,exporter,importer,product,value
2005,A,B,x,10
2005,B,A,y,10
2004,A,B,y,99
"""


def test_parse_aggregates_over_importers():
    csv = "year,exporter,importer,product,value\n2005,A,B,x,4\n2005,A,C,x,6\n"
    table = parse_trade_csv(io.StringIO(csv), 2005)
    assert table.countries == ("A",)
    assert table.values[0, 0] == 10.0


def test_parse_filters_year():
    table = parse_trade_csv(io.StringIO(TRADE_CSV), 2005)
    assert table.products == ("x", "y")
    np.testing.assert_allclose(table.values, [[10, 0], [0, 10]])


def test_parse_malformed_row_names_line():
    csv = "year,exporter,importer,product,value\n2005,A,B,x,notanumber\n"
    with pytest.raises(TradeParseError, match="line 2"):
        parse_trade_csv(io.StringIO(csv), 2005)


def test_parse_negative_value_rejected():
    csv = "year,exporter,importer,product,value\n2005,A,B,x,-1\n"
    with pytest.raises(TradeParseError, match="negative"):
        parse_trade_csv(io.StringIO(csv), 2005)


def test_rca_diagonal_specialization():
    # each country exports only its own product; RCA = 1 / world share = 2
    table = parse_trade_csv(io.StringIO(TRADE_CSV), 2005)
    rca = compute_rca(table)
    np.testing.assert_allclose(rca.values, [[2, 0], [0, 2]])


def test_rca_no_trade_errors():
    table = parse_trade_csv(io.StringIO("year,exporter,importer,product,value\n"), 2005)
    with pytest.raises(TradeParseError):
        compute_rca(table)


def test_rca_zero_world_product_dropped():
    csv = (
        "year,exporter,importer,product,value\n"
        "2005,A,B,x,5\n2005,B,A,x,5\n2005,A,B,y,0\n"
    )
    table = parse_trade_csv(io.StringIO(csv), 2005)
    with pytest.warns(UserWarning, match="zero world exports"):
        rca = compute_rca(table)
    assert rca.products == ("x",)


def test_binarize_strict_threshold():
    table = parse_trade_csv(io.StringIO(TRADE_CSV), 2005)
    rca = compute_rca(table)
    s = binarize(rca)
    np.testing.assert_array_equal(s.m, [[1, 0], [0, 1]])
    # RCA exactly 1 everywhere -> no specialization under the strict rule
    uniform = rca.values * 0 + 1.0
    from capspace.ingest import RcaMatrix

    s2 = binarize(RcaMatrix(rca.countries, rca.products, uniform))
    assert s2.m.sum() == 0


def test_diversity_ubiquity_marginals(fx_m):
    np.testing.assert_array_equal(fx_m.diversity, [2, 1])
    np.testing.assert_array_equal(fx_m.ubiquity, [1, 2])


def test_pruned_drops_empty_margins():
    s = SpecializationMatrix(
        countries=("a", "b"), products=("x", "y"), m=np.array([[1, 0], [0, 0]])
    )
    p = s.pruned()
    assert p.countries == ("a",)
    assert p.products == ("x",)


def test_growth_average_excludes_base_year():
    rec = IndicatorRecord(country="A", growth={2005: 100.0, 2006: 2.0, 2007: 4.0})
    assert rec.growth_average(2005, 2) == pytest.approx(3.0)
    assert rec.growth_average(2005, 3) is None
    assert rec.incomplete


def test_indicator_parse_skips_unknown():
    csv = (
        "country,indicator,year,value\n"
        "A,log_gdp_per_capita,2005,9.1\n"
        "A,shoe_size,2005,44\n"
        "A,gdp_per_capita_growth,2006,3.0\n"
    )
    with pytest.warns(UserWarning, match="unknown indicator"):
        table = parse_indicators_csv(io.StringIO(csv))
    assert table.skipped == 1
    assert table.records["A"].log_gdp_per_capita == 9.1
    assert table.records["A"].growth[2006] == 3.0


def test_matrix_csv_roundtrip(tmp_path):
    values = np.array([[1.25, -0.5], [0.0, 3.75]])
    path = tmp_path / "m.csv"
    write_matrix_csv(path, ["r1", "r2"], ["c1", "c2"], values)
    rows, cols, back = read_matrix_csv(path)
    assert rows == ["r1", "r2"] and cols == ["c1", "c2"]
    np.testing.assert_array_equal(back, values)


def test_matrix_cache_roundtrip(tmp_path):
    values = np.random.default_rng(0).random((7, 3))
    path = tmp_path / "m.bin"
    write_matrix_cache(path, values)
    np.testing.assert_array_equal(read_matrix_cache(path), values)


def test_matrix_cache_bad_magic(tmp_path):
    path = tmp_path / "m.bin"
    path.write_bytes(b"NOPE!" + b"\x00" * 16)
    with pytest.raises(TradeParseError, match="magic"):
        read_matrix_cache(path)
