"""File formats: loss records, draws files, key=value configs and output tables."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError, IngestError
from .model import Dataset, PosteriorDraws
from .spatial import LocationSet, duplicate_rows

log = logging.getLogger(__name__)

LOSS_COLUMNS = ("id", "lon", "lat", "magnitude", "urban", "in_region", "loss")
COVARIATES = ("magnitude", "urban", "in_region")


@dataclass
class IngestReport:
    n_rows: int
    rejected: list = field(default_factory=list)  # (line number, reason)


def _parse_float(text, name, line):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise IngestError(f"column {name!r}: cannot parse {text!r} as a number", line) from None
    if not math.isfinite(v):
        raise IngestError(f"column {name!r}: value {text!r} is not finite", line)
    return v


def ingest(path, *, intercept=False, coord_mode="lonlat"):
    """Read a loss-record CSV into a :class:`Dataset`.

    The header must be ``id,lon,lat,magnitude,urban,in_region,loss``. Rows
    with ``loss <= 0`` are rejected and listed in the report; any other bad
    value is an :class:`IngestError` naming the line. The covariate matrix is
    ``[magnitude, urban, in_region]``, preceded by a column of ones when
    ``intercept`` is true.

    Returns
    -------
    (Dataset, IngestReport)
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError:
        raise
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("file is empty", 1) from None
        header = [h.strip() for h in header]
        if tuple(header) != LOSS_COLUMNS:
            raise IngestError(f"header must be {','.join(LOSS_COLUMNS)}, got {','.join(header)}", 1)
        ids, coords, covs, losses, rejected = [], [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(LOSS_COLUMNS):
                raise IngestError(f"expected {len(LOSS_COLUMNS)} fields, got {len(row)}", line_no)
            rec = dict(zip(LOSS_COLUMNS, (c.strip() for c in row)))
            vals = {c: _parse_float(rec[c], c, line_no) for c in LOSS_COLUMNS[1:]}
            if not -180.0 <= vals["lon"] <= 180.0:
                raise IngestError(f"lon {vals['lon']} outside [-180, 180]", line_no)
            if not -90.0 <= vals["lat"] <= 90.0:
                raise IngestError(f"lat {vals['lat']} outside [-90, 90]", line_no)
            for c in ("urban", "in_region"):
                if vals[c] not in (0.0, 1.0):
                    raise IngestError(f"column {c!r} must be 0 or 1, got {rec[c]!r}", line_no)
            if vals["loss"] <= 0:
                rejected.append((line_no, f"loss {rec['loss']} is not positive"))
                log.warning("line %d rejected: loss %s is not positive", line_no, rec["loss"])
                continue
            ids.append(rec["id"])
            coords.append((vals["lon"], vals["lat"]))
            covs.append([vals[c] for c in COVARIATES])
            losses.append(vals["loss"])
    if not losses:
        raise IngestError("no valid rows")
    coords = np.array(coords)
    dup = duplicate_rows(coords)
    if dup is not None:
        raise IngestError(f"records {ids[dup[0]]!r} and {ids[dup[1]]!r} share coordinates; "
                          "jitter duplicate locations before fitting")
    X = np.array(covs)
    names = list(COVARIATES)
    if intercept:
        X = np.column_stack([np.ones(len(X)), X])
        names = ["intercept"] + names
    data = Dataset(LocationSet(coords, coord_mode), X, np.array(losses), tuple(names), tuple(ids))
    return data, IngestReport(len(losses), rejected)


# -- draws files ----------------------------------------------------------------

def write_draws(path, draws: PosteriorDraws):
    """Comment lines ``# key=value`` with metadata, then a CSV header and rows.

    Values use 17 significant digits so a reload is bit-identical.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# p={draws.p}\n# n={draws.n}\n")
        for key in sorted(draws.meta):
            fh.write(f"# {key}={draws.meta[key]}\n")
        fh.write(",".join(draws.names) + "\n")
        for row in draws.draws:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _meta_value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_draws(path) -> PosteriorDraws:
    meta = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = []
    for i, line in enumerate(lines, start=1):
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise IngestError(f"malformed metadata line {line!r}", i)
            meta[key.strip()] = _meta_value(value.strip())
        elif line.strip():
            body.append((i, line))
    if "p" not in meta or "n" not in meta:
        raise IngestError("draws file lacks p/n metadata")
    p, n = int(meta.pop("p")), int(meta.pop("n"))
    if not body:
        raise IngestError("draws file has no header")
    names = body[0][1].split(",")
    rows = []
    for i, line in body[1:]:
        parts = line.split(",")
        if len(parts) != len(names):
            raise IngestError(f"expected {len(names)} values, got {len(parts)}", i)
        rows.append([_parse_float(v, names[j], i) for j, v in enumerate(parts)])
    if not rows:
        raise IngestError("draws file has no draws")
    return PosteriorDraws(np.array(rows), p, n, names, meta)


# -- tables -----------------------------------------------------------------------

def format_number(v):
    return repr(float(v))


def write_table(path, columns, rows):
    """CSV with a header; floats are written with :func:`format_number`."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_number(v) if isinstance(v, (float, np.floating)) else str(v)
                              for v in row) + "\n")


def read_table(path):
    """Inverse of :func:`write_table`: ``(columns, list of row dicts)`` with numeric parsing."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = []
        for row in reader:
            rows.append({c: _meta_value(v) for c, v in zip(columns, row)})
    return columns, rows


# -- configuration ------------------------------------------------------------------

def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunSettings:
    """Every key accepted in a config file, with its default."""

    # model
    k: float = 0.7
    alpha_beta: float = 10_000.0
    kappa_beta: float = 1e-4
    alpha_w: float = 1.0
    kappa_w: float = 1.0
    phi_grid: tuple = tuple(float(v) for v in range(1, 11))
    mh_step_sigma: float = 0.3
    mh_step_sigma_w: float = 0.3
    w_basis: str = "whitened"
    # chain
    n_iter: int = 25_000
    n_burn: int = 20_000
    seed: int = 0
    n_jobs: int = 1
    # data
    intercept: bool = False
    coord_mode: str = "lonlat"
    # summaries and selection
    hpd_level: float = 0.95
    k_grid: tuple = tuple(round(0.1 * i, 1) for i in range(1, 10))
    cpo_per_draw_w: bool = False
    # risk
    risk_levels: tuple = (0.90, 0.95, 0.99)
    site: int = 0
    x_star: tuple = ()
    n_pred_per_draw: int = 100
    # simulation
    sim_n: int = 200
    sim_k: float = 0.5
    sim_beta_true: tuple = (-1.0, -1.0, -1.0)
    sim_domain: float = 3.0
    sim_phi_true: float = 5.0
    sim_sigma_w_true: float = 1.0
    sim_w_law: str = "mlg"
    sim_alpha_w: float = 1.0
    sim_kappa_w: float = 1.0
    sim_alpha_beta: float = 1.0
    sim_kappa_beta: float = 1.0
    sim_replicates: int = 100
    sim_n_iter: int = 5000
    sim_n_burn: int = 2000


_CONVERTERS = {int: int, float: float, bool: _bool, str: str, tuple: _floats}


def _field_types():
    types = {}
    for f in fields(RunSettings):
        default = f.default
        types[f.name] = type(default)
    return types


def parse_config(text, settings=None) -> RunSettings:
    """Parse ``key = value`` lines (``#`` comments allowed); unknown keys are errors."""
    settings = settings or RunSettings()
    types = _field_types()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"config line {line_no}: expected key=value, got {raw!r}")
        if key not in types:
            raise ConfigError(f"config line {line_no}: unknown key {key!r}")
        try:
            setattr(settings, key, _CONVERTERS[types[key]](value))
        except ValueError as exc:
            raise ConfigError(f"config line {line_no}: bad value for {key!r}: {exc}") from None
    return settings


def load_config(path) -> RunSettings:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
