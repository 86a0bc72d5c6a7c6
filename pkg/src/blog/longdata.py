"""Rectangular longitudinal panel container and CSV ingestion.

A panel holds one response trajectory and p feature trajectories for each
of n subjects on a shared grid of T time points.  Subjects are ordered by
identifier and time points are ordered numerically, so any two loads of
the same rows produce identical arrays regardless of row order on disk.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateKey, MissingCell, RaggedPanel, ValidationError

__all__ = [
    "ColumnConfig",
    "LongitudinalDataset",
    "ValidationReport",
    "load_long_csv",
    "write_long_csv",
    "validate",
]


@dataclass(frozen=True)
class ColumnConfig:
    """Names of the key columns in a long-format CSV file.

    Every column other than the three named here is treated as a feature,
    in header order.
    """

    subject: str = "subject"
    time: str = "time"
    response: str = "response"
    delimiter: str = ","


@dataclass(frozen=True)
class LongitudinalDataset:
    """Immutable rectangular panel.

    Attributes
    ----------
    responses : ndarray, shape (n_subjects, n_times)
        Response value per subject and time point.
    features : ndarray, shape (n_subjects, n_times, n_features)
        Feature values per subject, time point and feature.
    subject_ids : tuple of str
        Sorted subject identifiers; row i of the arrays belongs to
        ``subject_ids[i]``.
    times : tuple of float
        Strictly increasing observation times shared by all subjects.
    feature_names : tuple of str
        Feature column names in original header order.
    """

    responses: np.ndarray
    features: np.ndarray
    subject_ids: tuple
    times: tuple
    feature_names: tuple

    def __post_init__(self):
        resp = np.ascontiguousarray(np.asarray(self.responses, dtype=np.float64))
        feat = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "responses", resp)
        object.__setattr__(self, "features", feat)
        object.__setattr__(self, "subject_ids", tuple(str(s) for s in self.subject_ids))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "feature_names", tuple(str(f) for f in self.feature_names))

        n, t = resp.shape if resp.ndim == 2 else (0, 0)
        if resp.ndim != 2 or n < 1:
            raise ValidationError("responses must be a (n_subjects, n_times) array with n_subjects >= 1")
        if t < 2:
            raise ValidationError("a panel needs at least two time points, got %d" % t)
        if feat.ndim != 3 or feat.shape[:2] != (n, t):
            raise ValidationError(
                "features shape %s inconsistent with responses shape %s" % (feat.shape, resp.shape)
            )
        if feat.shape[2] < 1:
            raise ValidationError("a panel needs at least one feature column")
        if len(self.subject_ids) != n:
            raise ValidationError("subject_ids length %d != %d rows" % (len(self.subject_ids), n))
        if len(set(self.subject_ids)) != n:
            raise ValidationError("subject identifiers are not unique")
        if len(self.times) != t:
            raise ValidationError("times length %d != %d columns" % (len(self.times), t))
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValidationError("times must be strictly increasing")
        if len(self.feature_names) != feat.shape[2]:
            raise ValidationError("feature_names length does not match feature count")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValidationError("feature names are not unique")
        if not np.isfinite(resp).all() or not np.isfinite(feat).all():
            raise ValidationError("panel contains non-finite values")
        resp.setflags(write=False)
        feat.setflags(write=False)

    @property
    def n_subjects(self):
        return self.responses.shape[0]

    @property
    def n_times(self):
        return self.responses.shape[1]

    @property
    def n_features(self):
        return self.features.shape[2]


@dataclass(frozen=True)
class ValidationReport:
    """Names of features whose within-subject changes are (nearly) zero."""

    constant_features: tuple = ()
    near_constant_features: tuple = ()

    @property
    def clean(self):
        return not self.constant_features and not self.near_constant_features


def _parse_cell(raw, row_no, col_name):
    text = raw.strip() if raw is not None else ""
    if not text:
        raise MissingCell("row %d, column %r: empty cell" % (row_no, col_name))
    try:
        return float(text)
    except ValueError:
        raise MissingCell("row %d, column %r: cannot parse %r as a number" % (row_no, col_name, text)) from None


def load_long_csv(path, config=None):
    """Read a long-format CSV file into a :class:`LongitudinalDataset`.

    One row per (subject, time) pair.  The subject column is kept as text,
    the time and response columns and every feature column must parse as
    numbers.  Raises MissingCell, DuplicateKey or RaggedPanel on malformed
    input.
    """
    config = config or ColumnConfig()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=config.delimiter)
        header = next(reader, None)
        if not header:
            raise MissingCell("%s: empty file" % path)
        header = [h.strip() for h in header]
        for name in (config.subject, config.time, config.response):
            if name not in header:
                raise MissingCell("%s: missing required column %r" % (path, name))
        sub_i = header.index(config.subject)
        time_i = header.index(config.time)
        resp_i = header.index(config.response)
        feat_cols = [(i, h) for i, h in enumerate(header) if i not in (sub_i, time_i, resp_i)]
        if not feat_cols:
            raise MissingCell("%s: no feature columns" % path)

        cells = {}
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise RaggedPanel("row %d: %d fields, header has %d" % (row_no, len(row), len(header)))
            subject = row[sub_i].strip()
            if not subject:
                raise MissingCell("row %d, column %r: empty cell" % (row_no, config.subject))
            time = _parse_cell(row[time_i], row_no, config.time)
            key = (subject, time)
            if key in cells:
                raise DuplicateKey("subject %r, time %r appears more than once" % (subject, time))
            resp = _parse_cell(row[resp_i], row_no, config.response)
            feats = [_parse_cell(row[i], row_no, name) for i, name in feat_cols]
            cells[key] = (resp, feats)

    if not cells:
        raise MissingCell("%s: no data rows" % path)

    subjects = sorted({s for s, _ in cells})
    grids = {s: sorted(t for s2, t in cells if s2 == s) for s in subjects}
    times = grids[subjects[0]]
    for s in subjects:
        if grids[s] != times:
            raise RaggedPanel(
                "subject %r observed at %d time points %s, expected %s"
                % (s, len(grids[s]), grids[s], times)
            )

    n, t, p = len(subjects), len(times), len(feat_cols)
    if t < 2:
        raise RaggedPanel("%s: only %d time point(s); need at least two" % (path, t))
    responses = np.empty((n, t))
    features = np.empty((n, t, p))
    for i, s in enumerate(subjects):
        for j, tv in enumerate(times):
            resp, feats = cells[(s, tv)]
            responses[i, j] = resp
            features[i, j, :] = feats

    return LongitudinalDataset(
        responses=responses,
        features=features,
        subject_ids=tuple(subjects),
        times=tuple(times),
        feature_names=tuple(name for _, name in feat_cols),
    )


def write_long_csv(dataset, path, config=None):
    """Write a panel back to long-format CSV.

    Floats are written with ``repr`` so a write/load round trip reproduces
    the arrays bit for bit.
    """
    config = config or ColumnConfig()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=config.delimiter)
        writer.writerow([config.subject, config.time, config.response, *dataset.feature_names])
        for i, subject in enumerate(dataset.subject_ids):
            for j, time in enumerate(dataset.times):
                writer.writerow(
                    [subject, repr(time), repr(float(dataset.responses[i, j]))]
                    + [repr(float(v)) for v in dataset.features[i, j, :]]
                )
    return path


def validate(dataset, variance_floor=1e-10):
    """Flag features whose within-subject changes carry no information.

    A feature is constant when every within-subject change is exactly zero,
    and near constant when the pooled variance of those changes falls below
    ``variance_floor``.  Either way its differenced design column would be
    useless, so callers should drop or investigate flagged features.
    """
    deltas = np.diff(dataset.features, axis=1)
    flat = deltas.reshape(-1, dataset.n_features)
    constant = []
    near = []
    for j, name in enumerate(dataset.feature_names):
        col = flat[:, j]
        if not col.any():
            constant.append(name)
        elif col.var() < variance_floor:
            near.append(name)
    return ValidationReport(constant_features=tuple(constant), near_constant_features=tuple(near))
