"""Trade data ingestion: export tables, RCA, and the binary specialization matrix."""

from __future__ import annotations

import csv
import io
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

CACHE_MAGIC = b"CSPC1"


class TradeParseError(ValueError):
    """Raised on malformed or invalid trade/indicator input."""


@dataclass(frozen=True)
class ExportTable:
    """Country x product export values for one year.

    Countries and products are lexicographically ordered; ``values[i, j]`` is
    the total export value of ``countries[i]`` in ``products[j]`` summed over
    all import partners.
    """

    year: int
    countries: tuple[str, ...]
    products: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.countries), len(self.products)):
            raise TradeParseError(
                f"value matrix shape {v.shape} does not match "
                f"{len(self.countries)} countries x {len(self.products)} products"
            )
        if np.any(v < 0):
            raise TradeParseError("export values must be non-negative")
        if len(set(self.countries)) != len(self.countries):
            raise TradeParseError("duplicate country codes")
        if len(set(self.products)) != len(self.products):
            raise TradeParseError("duplicate product codes")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    @property
    def country_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.countries)}

    @property
    def product_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.products)}


@dataclass(frozen=True)
class RcaMatrix:
    countries: tuple[str, ...]
    products: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)


@dataclass(frozen=True)
class SpecializationMatrix:
    """Binary specialization matrix with diversity and ubiquity marginals."""

    countries: tuple[str, ...]
    products: tuple[str, ...]
    m: np.ndarray
    diversity: np.ndarray = field(init=False)
    ubiquity: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.m)
        if not np.isin(m, (0, 1)).all():
            raise ValueError("M must be binary")
        m = m.astype(np.int8)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "diversity", m.sum(axis=1).astype(np.int64))
        object.__setattr__(self, "ubiquity", m.sum(axis=0).astype(np.int64))
        for a in (self.m, self.diversity, self.ubiquity):
            a.setflags(write=False)

    def pruned(self) -> "SpecializationMatrix":
        """Drop countries with zero diversity and products with zero ubiquity."""
        keep_c = self.diversity > 0
        keep_p = self.ubiquity > 0
        return SpecializationMatrix(
            countries=tuple(np.asarray(self.countries)[keep_c]),
            products=tuple(np.asarray(self.products)[keep_p]),
            m=self.m[np.ix_(keep_c, keep_p)],
        )


def parse_trade_csv(stream, year: int) -> ExportTable:
    """Parse long-format bilateral trade CSV and aggregate over importers.

    Expected columns: year, exporter, importer, product, value. Rows whose
    year differs from ``year`` are ignored. Zero rows/columns are retained.
    """
    if isinstance(stream, bytes):
        stream = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, io.RawIOBase) or hasattr(stream, "read1"):
        stream = io.TextIOWrapper(stream, encoding="utf-8")

    reader = csv.DictReader(stream)
    flows: dict[tuple[str, str], float] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            row_year = int(row["year"])
            exporter = row["exporter"].strip()
            product = row["product"].strip()
            value = float(row["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TradeParseError(f"malformed trade row at line {lineno}: {exc}") from exc
        if value < 0:
            raise TradeParseError(f"negative export value at line {lineno}")
        if row_year != year:
            continue
        key = (exporter, product)
        flows[key] = flows.get(key, 0.0) + value

    countries = tuple(sorted({c for c, _ in flows}))
    products = tuple(sorted({p for _, p in flows}))
    values = np.zeros((len(countries), len(products)))
    cidx = {c: i for i, c in enumerate(countries)}
    pidx = {p: i for i, p in enumerate(products)}
    for (c, p), v in flows.items():
        values[cidx[c], pidx[p]] = v
    return ExportTable(year=year, countries=countries, products=products, values=values)


def compute_rca(table: ExportTable) -> RcaMatrix:
    """Revealed comparative advantage: country product shares over world shares.

    Countries with zero total exports get all-zero rows; products with zero
    world exports are dropped with a warning (undefined denominator).
    """
    x = table.values
    world_total = x.sum()
    if world_total == 0:
        raise TradeParseError("no trade")

    product_totals = x.sum(axis=0)
    keep = product_totals > 0
    if not keep.all():
        warnings.warn(
            f"dropping {int((~keep).sum())} products with zero world exports",
            stacklevel=2,
        )
        x = x[:, keep]
        product_totals = product_totals[keep]
        world_total = x.sum()

    country_totals = x.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        country_share = np.where(country_totals > 0, x / country_totals, 0.0)
    world_share = product_totals / world_total
    rca = country_share / world_share
    return RcaMatrix(
        countries=table.countries,
        products=tuple(np.asarray(table.products)[keep]),
        values=rca,
    )


def binarize(rca: RcaMatrix, threshold: float = 1.0) -> SpecializationMatrix:
    """Binary specialization: M = 1 where RCA strictly exceeds the threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return SpecializationMatrix(
        countries=rca.countries,
        products=rca.products,
        m=(rca.values > threshold).astype(np.int8),
    )


@dataclass
class IndicatorRecord:
    country: str
    log_gdp_per_capita: float | None = None
    population: float | None = None
    investment_gdp_ratio: float | None = None
    export_gdp_ratio: float | None = None
    growth: dict[int, float] = field(default_factory=dict)
    joinable: bool = True
    incomplete: bool = False

    def growth_average(self, start_year: int, window: int) -> float | None:
        """Mean growth over (start_year, start_year + window], base year excluded.

        Returns None and marks the record incomplete if any year is missing.
        """
        years = range(start_year + 1, start_year + window + 1)
        vals = [self.growth.get(y) for y in years]
        if any(v is None for v in vals):
            self.incomplete = True
            return None
        return float(np.mean(vals))


_INDICATORS = {
    "log_gdp_per_capita",
    "population",
    "investment_gdp_ratio",
    "export_gdp_ratio",
    "gdp_per_capita_growth",
}


@dataclass
class IndicatorTable:
    records: dict[str, IndicatorRecord]
    skipped: int = 0

    def join_flags(self, trade_countries) -> None:
        known = set(trade_countries)
        for rec in self.records.values():
            rec.joinable = rec.country in known


def parse_indicators_csv(stream) -> IndicatorTable:
    """Parse long-format indicator CSV (country, indicator, year, value).

    Unknown indicator names are skipped and counted; growth observations are
    kept per-year so averaging windows can be chosen downstream.
    """
    if isinstance(stream, bytes):
        stream = io.StringIO(stream.decode("utf-8"))
    reader = csv.DictReader(stream)
    records: dict[str, IndicatorRecord] = {}
    skipped = 0
    for lineno, row in enumerate(reader, start=2):
        try:
            country = row["country"].strip()
            name = row["indicator"].strip()
            year = int(row["year"])
            value = float(row["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TradeParseError(f"malformed indicator row at line {lineno}: {exc}") from exc
        if name not in _INDICATORS:
            skipped += 1
            continue
        rec = records.setdefault(country, IndicatorRecord(country=country))
        if name == "gdp_per_capita_growth":
            rec.growth[year] = value
        else:
            setattr(rec, name, value)
    if skipped:
        warnings.warn(f"skipped {skipped} rows with unknown indicator names", stacklevel=2)
    return IndicatorTable(records=records, skipped=skipped)


def write_matrix_csv(path, row_codes, col_codes, values) -> None:
    """Serialize a matrix as CSV with a header row/column of codes."""
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["", *col_codes])
        for code, row in zip(row_codes, values):
            writer.writerow([code, *(repr(v) for v in row)])


def read_matrix_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        col_codes = header[1:]
        row_codes, rows = [], []
        for row in reader:
            row_codes.append(row[0])
            rows.append([float(v) for v in row[1:]])
    return row_codes, col_codes, np.asarray(rows)


def write_matrix_cache(path, values) -> None:
    """Binary cache: magic "CSPC1", little-endian uint64 dims, row-major float64."""
    values = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<QQ", *values.shape))
        fh.write(values.tobytes())


def read_matrix_cache(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != CACHE_MAGIC:
            raise TradeParseError(f"bad cache magic {magic!r}")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
    return data.reshape(rows, cols).copy()
