"""Dataset CSV files and JSON documents.

Dataset files have a header of feature names followed by a ``label``
column; labels are ``accepted`` or ``rejected``.  Numbers are written with
``repr`` so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InputError
from .model import ACCEPTED, REJECTED, Dataset


def read_dataset_text(text: str, source: str = "<text>") -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError(f"{source}: empty dataset file") from None
    header = [h.strip() for h in header]
    if not header or header[-1] != "label":
        raise InputError(f"{source}:1: last header column must be 'label'")
    names = header[:-1]
    if not names:
        raise InputError(f"{source}:1: no feature columns")
    pts, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row[:-1]]
        except ValueError as exc:
            raise InputError(f"{source}:{lineno}: {exc}") from None
        if not all(np.isfinite(vals)):
            raise InputError(f"{source}:{lineno}: non-finite coordinate")
        lab = row[-1].strip()
        if lab not in (ACCEPTED, REJECTED):
            raise InputError(f"{source}:{lineno}: unknown label {lab!r}")
        pts.append(vals)
        labels.append(lab == ACCEPTED)
    if not pts:
        raise InputError(f"{source}: dataset has no observations")
    return Dataset(np.array(pts), np.array(labels, bool), names)


def read_dataset(path) -> Dataset:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc}") from None
    return read_dataset_text(text, str(p))


def dataset_to_text(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(ds.feature_names) + ["label"])
    for x, lab in zip(ds.points, ds.labels):
        w.writerow([repr(float(v)) for v in x] + [ACCEPTED if lab else REJECTED])
    return buf.getvalue()


def atomic_write_text(path, text: str) -> None:
    """Write to a temporary sibling, then rename over ``path``."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=f".{p.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_dataset(ds: Dataset, path) -> None:
    atomic_write_text(path, dataset_to_text(ds))


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def write_json(obj, path) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, default=_default) + "\n")


def read_json(path):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}:{exc.lineno}: {exc.msg}") from None
