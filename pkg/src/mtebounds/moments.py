"""Observed samples and the conditional moments every bound is built from."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels

MIN_STRATUM_COUNT = 30


class InputError(ValueError):
    """Malformed or inconsistent user input."""


@dataclass(frozen=True)
class InstrumentOrdering:
    """Instrument labels listed in ascending order of the (true) propensity score.

    The ordering is a maintained assumption supplied by the user. It is never
    inferred from observed treatment shares, which misreporting can reorder.
    """

    labels: tuple

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise InputError("instrument ordering needs at least two labels")
        if len(set(labels)) != len(labels):
            raise InputError(f"instrument labels must be distinct, got {labels}")

    @classmethod
    def parse(cls, text: str) -> "InstrumentOrdering":
        return cls(tuple(t.strip() for t in text.split(",") if t.strip()))

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def rank(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise InputError(f"unknown instrument label {label!r}") from None

    def pairs(self) -> list:
        """All (z_hi, z_lo) pairs with z_hi ranked above z_lo."""
        return [(hi, lo) for lo, hi in combinations(self.labels, 2)]


@dataclass(frozen=True)
class Sample:
    """Rows of (outcome y, reported treatment dstar, instrument label z)."""

    y: np.ndarray
    dstar: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        d = np.asarray(self.dstar)
        z = np.asarray(self.z).astype(str)
        if not (y.shape == d.shape == z.shape) or y.ndim != 1:
            raise InputError("y, dstar and z must be 1-d arrays of equal length")
        if d.size and not np.isin(d, (0, 1)).all():
            raise InputError("dstar must be 0 or 1 in every row")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "dstar", d.astype(np.int8))
        object.__setattr__(self, "z", z)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence]) -> "Sample":
        rows = list(rows)
        if not rows:
            return cls(np.empty(0), np.empty(0, dtype=np.int8), np.empty(0, dtype=str))
        y, d, z = zip(*rows)
        return cls(np.array(y, float), np.array(d), np.array([str(t) for t in z]))

    def __len__(self):
        return self.y.shape[0]

    def take(self, idx) -> "Sample":
        return Sample(self.y[idx], self.dstar[idx], self.z[idx])

    def codes(self, ordering: InstrumentOrdering) -> np.ndarray:
        """Integer position of each row's label in ``ordering``."""
        uniq, inv = np.unique(self.z, return_inverse=True)
        unknown = [u for u in uniq.tolist() if u not in ordering.labels]
        if unknown:
            raise InputError(f"labels {sorted(unknown)} are not in the instrument ordering")
        lookup = np.array([ordering.labels.index(u) for u in uniq.tolist()], dtype=np.int64)
        return lookup[inv.reshape(-1)] if uniq.size else np.empty(0, dtype=np.int64)


def read_sample_csv(path) -> Sample:
    """Read a ``y,dstar,z`` CSV. Errors name the offending line."""
    ys, ds, zs = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["y", "dstar", "z"]:
            raise InputError(f"{path}: line 1: expected header 'y,dstar,z', got {header}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise InputError(f"{path}: line {line}: expected 3 fields, got {len(row)}")
            try:
                y = float(row[0])
            except ValueError:
                raise InputError(f"{path}: line {line}: y={row[0]!r} is not a number") from None
            if not np.isfinite(y):
                raise InputError(f"{path}: line {line}: y must be finite")
            d = row[1].strip()
            if d not in ("0", "1"):
                raise InputError(f"{path}: line {line}: dstar={row[1]!r} must be 0 or 1")
            z = row[2].strip()
            if not z:
                raise InputError(f"{path}: line {line}: empty instrument label")
            ys.append(y)
            ds.append(int(d))
            zs.append(z)
    return Sample(np.array(ys, float), np.array(ds, dtype=np.int8), np.array(zs, dtype=str))


def write_sample_csv(sample: Sample, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", "dstar", "z"])
        for y, d, z in zip(sample.y, sample.dstar, sample.z):
            w.writerow([repr(float(y)), int(d), z])


@dataclass(frozen=True)
class MomentTable:
    """Per-instrument E[Y|Z=z], P(D*=1|Z=z) and row counts, in ordering order.

    Population tables store instrument probabilities in ``n`` instead of counts.

    ``var_y`` (within-stratum variance of Y) is optional; it is only used to
    size default equality slack in the LP route.
    """

    labels: tuple
    ey: np.ndarray
    pdstar: np.ndarray
    n: np.ndarray
    var_y: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        for name in ("ey", "pdstar", "n"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.var_y is not None:
            object.__setattr__(self, "var_y", np.asarray(self.var_y, dtype=np.float64))
        k = len(self.labels)
        if not (self.ey.shape == self.pdstar.shape == self.n.shape == (k,)):
            raise InputError("moment arrays must have one entry per label")
        if ((self.pdstar < 0) | (self.pdstar > 1)).any():
            raise InputError("P(D*=1|Z=z) must lie in [0, 1]")
        if not (self.n > 0).all():
            raise InputError("every stratum needs a positive count")

    @property
    def ordering(self) -> InstrumentOrdering:
        return InstrumentOrdering(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise InputError(f"unknown instrument label {label!r}") from None

    def as_dict(self) -> dict:
        out = {
            lab: {"ey": float(self.ey[i]), "pdstar": float(self.pdstar[i]), "n": float(self.n[i])}
            for i, lab in enumerate(self.labels)
        }
        return out


def read_moments_csv(path, ordering: Optional[InstrumentOrdering] = None) -> MomentTable:
    """Read published summary moments from a ``z,ey,pdstar,n`` CSV.

    Row order is taken as the instrument ordering unless ``ordering`` is given.
    """
    rows = {}
    order = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) < {"z", "ey", "pdstar"}:
            raise InputError(f"{path}: line 1: expected columns z,ey,pdstar[,n]")
        for row in reader:
            try:
                rows[row["z"].strip()] = (float(row["ey"]), float(row["pdstar"]), float(row.get("n") or 1))
            except ValueError as exc:
                raise InputError(f"{path}: line {reader.line_num}: {exc}") from None
            order.append(row["z"].strip())
    labels = ordering.labels if ordering is not None else tuple(order)
    missing = [lab for lab in labels if lab not in rows]
    if missing:
        raise InputError(f"{path}: no moments for labels {missing}")
    ey, pd, n = zip(*(rows[lab] for lab in labels))
    return MomentTable(labels, np.array(ey), np.array(pd), np.array(n))


def estimate_moments(sample: Sample, ordering: InstrumentOrdering, min_count: int = MIN_STRATUM_COUNT) -> MomentTable:
    """Sample analogs of E[Y|Z=z] and P(D*=1|Z=z) for every label in ``ordering``."""
    if len(sample) == 0:
        raise InputError("sample is empty")
    codes = sample.codes(ordering)
    k = len(ordering)
    counts, sy, syy, sd = _kernels.strata_sums(codes, sample.y, sample.dstar.astype(np.float64), k)
    return _table_from_sums(ordering.labels, counts, sy, syy, sd, min_count)


def _table_from_sums(labels, counts, sy, syy, sd, min_count=MIN_STRATUM_COUNT) -> MomentTable:
    empty = [lab for lab, c in zip(labels, counts) if c == 0]
    if empty:
        raise InputError(f"no rows for instrument labels {empty}")
    small = [lab for lab, c in zip(labels, counts) if c < min_count]
    if small:
        warnings.warn(f"strata {small} have fewer than {min_count} rows", stacklevel=3)
    ey = sy / counts
    var = np.maximum(syy / counts - ey * ey, 0.0)
    pd = sd / counts
    ties = [(labels[i], labels[i + 1]) for i in range(len(labels) - 1) if pd[i] == pd[i + 1]]
    if ties:
        warnings.warn(f"equal observed treatment shares for adjacent labels {ties}", stacklevel=3)
    return MomentTable(labels, ey, np.clip(pd, 0.0, 1.0), counts, var)


def pair_deltas(moments: MomentTable, z_hi, z_lo) -> tuple:
    """(E[Y|z_hi] - E[Y|z_lo], P(D*=1|z_hi) - P(D*=1|z_lo))."""
    i, j = moments.index(z_hi), moments.index(z_lo)
    if i == j:
        raise InputError("a pair needs two distinct instrument values")
    return float(moments.ey[i] - moments.ey[j]), float(moments.pdstar[i] - moments.pdstar[j])
