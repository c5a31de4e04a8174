"""Datasets, run configuration, and the on-disk formats for data and reports.

Two dataset formats are supported, sniffed by content:

  CSV     UTF-8, comma separated, header row ``x0,...,x{d-1}``, one point
          per row.  Reals are parsed as 64-bit floats.
  binary  magic bytes ``KDC1``, little-endian u32 n, u32 d, then n*d
          little-endian IEEE-754 doubles, row-major.  This format round-trips
          points bit-exactly and is the source of truth for benchmarks.

Reports (coreset builds and discrepancy estimates) are JSON documents with a
stable key set; see `write_report`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import DomainError, FormatError, IoError, ParamError
from .kernels import KernelSpec, first_domain_violation

DOMAIN_TAGS = ("euclidean", "sphere", "simplex")

_BINARY_MAGIC = b"KDC1"

# Env var that, when set, overrides the seed passed on the command line.
SEED_ENV_VAR = "CORESET_FORGE_SEED"

# Name of the pseudo-random generator used throughout; recorded in reports
# so runs can be reproduced bit-for-bit.
PRNG_NAME = "pcg64"


@dataclass(frozen=True)
class DataSet:
    """n points in R^d with a declared domain.

    points is an (n, d) float64 array, made read-only on construction.
    domain_tag is one of DOMAIN_TAGS; sphere points must have unit l2 norm
    and simplex points nonnegative coordinates summing to one (both within
    1e-9).  Points containing NaN or infinity are rejected.
    """

    points: np.ndarray
    domain_tag: str
    id: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise FormatError(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise FormatError(f"need n >= 1 and d >= 1, got shape {pts.shape}")
        if self.domain_tag not in DOMAIN_TAGS:
            raise ParamError(f"unknown domain tag {self.domain_tag!r}")
        bad = np.flatnonzero(~np.isfinite(pts).all(axis=1))
        if bad.size:
            raise FormatError(f"non-finite coordinate at row {bad[0]}")
        hit = first_domain_violation(pts, self.domain_tag)
        if hit is not None:
            row, reason = hit
            raise DomainError(f"row {row} violates {self.domain_tag} domain ({reason})")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def subset(self, indices) -> "DataSet":
        """Dataset restricted to the given rows (same domain tag and id)."""
        idx = np.asarray(indices, dtype=np.intp)
        return DataSet(self.points[idx], self.domain_tag, self.id)


def renormalize_points(points: np.ndarray, domain_tag: str) -> np.ndarray:
    """Project near-domain points exactly onto the domain.

    Applied once at load time so downstream identities (K(x, x) = 1, unit
    feature norms) hold without tolerance stacking.  Inputs must already be
    within the admission tolerance; this only removes the residual error.
    """
    pts = np.asarray(points, dtype=np.float64)
    if domain_tag == "sphere":
        return pts / np.linalg.norm(pts, axis=1, keepdims=True)
    if domain_tag == "simplex":
        pts = np.maximum(pts, 0.0)
        return pts / pts.sum(axis=1, keepdims=True)
    return pts


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Everything a coreset build run depends on besides the dataset.

    Exactly one of epsilon (target sup-norm KDE error, in (0, 1)) and
    target_size (surviving point count) must be set.
    """

    kernel_family: str
    alpha: float
    epsilon: float | None = None
    target_size: int | None = None
    seed: int = 0
    query_budget: int = 2000
    partitioned: bool = False
    threshold_constant: float = 2.0
    max_rejection_rounds: int = 50

    def __post_init__(self):
        KernelSpec(self.kernel_family, self.alpha)  # validates family and alpha
        if (self.epsilon is None) == (self.target_size is None):
            raise ParamError("exactly one of epsilon and target_size must be set")
        if self.epsilon is not None and not (0.0 < self.epsilon < 1.0):
            raise ParamError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if self.target_size is not None and self.target_size < 1:
            raise ParamError(f"target_size must be a positive integer, got {self.target_size!r}")
        if self.query_budget < 1:
            raise ParamError(f"query_budget must be >= 1, got {self.query_budget!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ParamError("seed must fit in 64 unsigned bits")
        if self.threshold_constant <= 0:
            raise ParamError("threshold_constant must be positive")
        if self.max_rejection_rounds < 1:
            raise ParamError("max_rejection_rounds must be >= 1")

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(self.kernel_family, self.alpha)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def resolve_seed(seed: int) -> int:
    """Apply the CORESET_FORGE_SEED environment override, if present."""
    env = os.environ.get(SEED_ENV_VAR)
    if env is None:
        return int(seed)
    try:
        return int(env)
    except ValueError as exc:
        raise ParamError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------


def load_dataset(path, domain_tag: str) -> DataSet:
    """Load and validate a dataset from a CSV or binary file.

    The format is sniffed from the leading magic bytes.  Near-domain points
    are renormalized exactly once; anything outside the 1e-9 admission
    tolerance rejects the whole file with a DomainError naming the first
    offending row.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if raw[:4] == _BINARY_MAGIC:
        pts = _parse_binary(raw, path)
    else:
        pts = _parse_csv(raw, path)
    bad = np.flatnonzero(~np.isfinite(pts).all(axis=1))
    if bad.size:
        raise FormatError(f"{path}: non-finite value at row {bad[0]}")
    hit = first_domain_violation(pts, domain_tag)
    if hit is not None:
        row, reason = hit
        raise DomainError(f"{path}: row {row} violates {domain_tag} domain ({reason})")
    pts = renormalize_points(pts, domain_tag)
    return DataSet(pts, domain_tag, id=os.path.splitext(os.path.basename(str(path)))[0])


def _parse_binary(raw: bytes, path) -> np.ndarray:
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated binary header")
    magic, n, d = struct.unpack_from("<4sII", raw, 0)
    expected = 12 + 8 * n * d
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for n={n}, d={d}, got {len(raw)}")
    if n < 1 or d < 1:
        raise FormatError(f"{path}: invalid header n={n}, d={d}")
    pts = np.frombuffer(raw, dtype="<f8", offset=12).reshape(n, d)
    return pts.astype(np.float64)


def _parse_csv(raw: bytes, path) -> np.ndarray:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8 ({exc})") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(f"{path}: empty file") from None
    d = len(header)
    expected_header = [f"x{i}" for i in range(d)]
    if [h.strip() for h in header] != expected_header:
        raise FormatError(f"{path}: header must be {','.join(expected_header)}")
    rows = []
    for i, row in enumerate(reader):
        if not row:
            continue
        if len(row) != d:
            raise FormatError(f"{path}: row {i} has {len(row)} fields, expected {d}")
        try:
            rows.append([float(v) for v in row])
        except ValueError as exc:
            raise FormatError(f"{path}: row {i} has a non-numeric field ({exc})") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def save_dataset(dataset: DataSet, path, fmt: str = "csv") -> None:
    """Write a dataset as CSV (shortest round-trip decimals) or binary."""
    if fmt not in ("csv", "binary"):
        raise ParamError(f"unknown dataset format {fmt!r}")
    try:
        if fmt == "binary":
            with open(path, "wb") as fh:
                fh.write(struct.pack("<4sII", _BINARY_MAGIC, dataset.n, dataset.d))
                fh.write(np.ascontiguousarray(dataset.points, dtype="<f8").tobytes())
        else:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(",".join(f"x{i}" for i in range(dataset.d)) + "\n")
                for row in dataset.points:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelRecord:
    """One halving level: size before the cut and the measured discrepancy."""

    n_before: int
    sup_discrepancy: float
    witness: list
    rebalance_flips: int = 0
    method: str = ""
    n_cells: int = 0
    rejection_rounds: list = field(default_factory=list)
    rejection_exhausted: list = field(default_factory=list)


@dataclass(frozen=True)
class CoresetResult:
    """Outcome of a coreset build: surviving indices plus the error budget.

    error_estimate is sum over levels s of 2^{s-1}/n * f_s, where f_s is the
    measured sup discrepancy of level s; by the telescoping triangle
    inequality it upper-bounds the sup-norm KDE error of the returned subset
    (up to the search's own lower-bound slack).
    """

    dataset_id: str
    kernel: KernelSpec
    seed: int
    indices: list
    levels: list
    error_estimate: float
    config: dict = field(default_factory=dict)
    wall_ms: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DiscrepancyReport:
    """Sup-norm discrepancy estimate with the query point attaining it.

    The reported value is a certified lower bound on the true sup (it is the
    exact objective value at `witness`); `method` records how the query space
    was searched.
    """

    sup_discrepancy: float
    witness: list
    evaluations: int
    method: str
    dataset_id: str = ""
    kernel: KernelSpec | None = None
    seed: int = 0
    n_points: int = 0
    wall_ms: int = field(default=0, compare=False)


def _kernel_dict(kernel: KernelSpec | None) -> dict:
    if kernel is None:
        return {"family": "", "alpha": 0.0}
    return {"family": kernel.family, "alpha": kernel.alpha}


def report_to_dict(report) -> dict:
    """JSON-ready dict with the stable report schema."""
    if isinstance(report, CoresetResult):
        return {
            "kind": "coreset",
            "dataset_id": report.dataset_id,
            "kernel": _kernel_dict(report.kernel),
            "seed": report.seed,
            "prng": PRNG_NAME,
            "indices": [int(i) for i in report.indices],
            "levels": [
                {
                    "n_before": rec.n_before,
                    "sup_discrepancy": rec.sup_discrepancy,
                    "witness": [float(v) for v in rec.witness],
                    "rebalance_flips": rec.rebalance_flips,
                    "method": rec.method,
                    "n_cells": rec.n_cells,
                    "rejection_rounds": [int(r) for r in rec.rejection_rounds],
                    "rejection_exhausted": [int(c) for c in rec.rejection_exhausted],
                }
                for rec in report.levels
            ],
            "error_estimate": report.error_estimate,
            "wall_ms": report.wall_ms,
            "config": dict(report.config),
        }
    if isinstance(report, DiscrepancyReport):
        return {
            "kind": "discrepancy",
            "dataset_id": report.dataset_id,
            "kernel": _kernel_dict(report.kernel),
            "seed": report.seed,
            "prng": PRNG_NAME,
            "indices": [],
            "levels": [
                {
                    "n_before": report.n_points,
                    "sup_discrepancy": report.sup_discrepancy,
                    "witness": [float(v) for v in report.witness],
                    "evaluations": report.evaluations,
                    "method": report.method,
                }
            ],
            "error_estimate": report.sup_discrepancy,
            "wall_ms": report.wall_ms,
        }
    raise ParamError(f"cannot serialize object of type {type(report).__name__}")


def report_to_json(report) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def write_report(report, path) -> None:
    """Write a report as JSON.

    Integers survive a round trip bit-exactly and reals to full precision
    (shortest round-trip decimal representation).
    """
    parent = os.path.dirname(os.path.abspath(str(path)))
    if not os.path.isdir(parent):
        raise IoError(f"parent directory does not exist: {parent}")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report_to_json(report))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_report(path):
    """Inverse of write_report: rebuild the report object from JSON."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    try:
        kind = doc["kind"]
        kernel = None
        if doc["kernel"]["family"]:
            kernel = KernelSpec(doc["kernel"]["family"], doc["kernel"]["alpha"])
        if kind == "coreset":
            levels = [
                LevelRecord(
                    n_before=rec["n_before"],
                    sup_discrepancy=rec["sup_discrepancy"],
                    witness=list(rec["witness"]),
                    rebalance_flips=rec.get("rebalance_flips", 0),
                    method=rec.get("method", ""),
                    n_cells=rec.get("n_cells", 0),
                    rejection_rounds=list(rec.get("rejection_rounds", [])),
                    rejection_exhausted=list(rec.get("rejection_exhausted", [])),
                )
                for rec in doc["levels"]
            ]
            return CoresetResult(
                dataset_id=doc["dataset_id"],
                kernel=kernel,
                seed=doc["seed"],
                indices=list(doc["indices"]),
                levels=levels,
                error_estimate=doc["error_estimate"],
                config=doc.get("config", {}),
                wall_ms=doc.get("wall_ms", 0),
            )
        if kind == "discrepancy":
            rec = doc["levels"][0]
            return DiscrepancyReport(
                sup_discrepancy=rec["sup_discrepancy"],
                witness=list(rec["witness"]),
                evaluations=rec.get("evaluations", 0),
                method=rec.get("method", ""),
                dataset_id=doc["dataset_id"],
                kernel=kernel,
                seed=doc["seed"],
                n_points=rec.get("n_before", 0),
                wall_ms=doc.get("wall_ms", 0),
            )
    except (KeyError, IndexError, TypeError) as exc:
        raise FormatError(f"{path}: malformed report ({exc})") from exc
    raise FormatError(f"{path}: unknown report kind {doc.get('kind')!r}")
