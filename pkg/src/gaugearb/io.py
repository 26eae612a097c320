"""CSV panels, JSON reports and persisted detection output.

Panel files have a header ``time,<asset_1>,...,<asset_N>`` and one row per
observation.  Integer time columns are used as step indices directly; any
other strictly increasing time column (floats or ISO timestamps) is mapped to
steps ``0, 1, ...`` in file order, treating irregular spacing as unit steps.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
import zipfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .detector import ArbitrageSignal, DetectionConfig
from .errors import DataError, InsufficientDataError
from .estimators import NullBasis
from .market import PricePanel

__all__ = [
    "ingest_csv",
    "emit_panel",
    "atomic_write_text",
    "write_json",
    "write_series_csv",
    "file_digest",
    "sanitize",
    "save_signal",
    "load_signal",
]

log = logging.getLogger(__name__)


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to a temporary sibling and rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _parse_time(raw: str):
    try:
        return int(raw), "int"
    except ValueError:
        pass
    try:
        v = float(raw)
        if math.isfinite(v):
            return v, "float"
    except ValueError:
        pass
    try:
        stamp = datetime.fromisoformat(raw)
    except ValueError:
        return None, None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp(), "datetime"


def ingest_csv(path, add_numeraire: bool = False, numeraire_label: str = "USD",
               drop_invalid_rows: bool = False, strict_spacing: bool = False) -> PricePanel:
    """Read and validate a price panel.

    Parameters
    ----------
    path
        CSV file with a ``time`` column followed by one column per asset.
    add_numeraire
        Prepend a constant-one column ``numeraire_label`` so the file's unit
        of account becomes asset 0.
    drop_invalid_rows
        Skip rows with a missing, non-numeric or non-positive price (logged)
        instead of rejecting the file.
    strict_spacing
        Require equally spaced time stamps.

    Raises
    ------
    DataError
        Listing every offending cell by line and column, or a malformed
        header, or a time column that is not strictly increasing.
    InsufficientDataError
        Fewer than two valid rows.

    A missing or unreadable file is also a :class:`DataError`.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: cannot read ({exc})") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise DataError(f"{path}: line 1: need a time column and at least one asset")
    assets = header[1:]
    problems = []
    if any(not a for a in assets):
        problems.append(f"{path}: line 1: empty asset name")
    if len(set(assets)) != len(assets):
        problems.append(f"{path}: line 1: duplicate asset names")
    if add_numeraire and numeraire_label in assets:
        problems.append(f"{path}: line 1: numéraire label {numeraire_label!r} already used")
    if problems:
        raise DataError("; ".join(problems), problems)

    times, kinds, prices = [], set(), []
    bad_rows = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            problems.append(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            continue
        t, kind = _parse_time(row[0].strip())
        if kind is None:
            problems.append(f"line {lineno}, column 'time': cannot parse {row[0]!r}")
            continue
        cells = []
        row_problems = []
        for name, raw in zip(assets, row[1:]):
            raw = raw.strip()
            try:
                v = float(raw)
            except ValueError:
                row_problems.append(f"line {lineno}, column {name!r}: "
                                    f"{'missing' if not raw else 'non-numeric'} value {raw!r}")
                continue
            if not (math.isfinite(v) and v > 0):
                row_problems.append(f"line {lineno}, column {name!r}: "
                                    f"price {raw} is not strictly positive and finite")
            cells.append(v)
        if row_problems:
            if drop_invalid_rows:
                bad_rows.extend(row_problems)
                continue
            problems.extend(row_problems)
            continue
        times.append(t)
        kinds.add(kind)
        prices.append(cells)
    if problems:
        raise DataError(f"{path}: {len(problems)} problem(s): " + "; ".join(problems[:10]),
                        problems)
    for msg in bad_rows:
        log.warning("dropped row: %s", msg)
    if len(prices) < 2:
        raise InsufficientDataError(f"{path}: need at least 2 valid rows, got {len(prices)}",
                                    required=2, available=len(prices))
    if len(kinds) > 1:
        raise DataError(f"{path}: mixed time formats {sorted(kinds)}")
    tv = np.array(times, dtype=float)
    step = np.diff(tv)
    if np.any(step <= 0):
        i = int(np.argmax(step <= 0))
        raise DataError(f"{path}: time column not strictly increasing at data row {i + 2}")
    if strict_spacing and not np.allclose(step, step[0], rtol=1e-9, atol=0):
        raise DataError(f"{path}: time stamps are not equally spaced "
                        f"(spacing ranges {step.min():g} to {step.max():g})")
    if kinds == {"int"}:
        steps = np.array(times, dtype=np.int64)
    else:
        steps = np.arange(len(times), dtype=np.int64)
    p = np.array(prices, dtype=float)
    if add_numeraire:
        p = np.column_stack([np.ones(len(p)), p])
        assets = [numeraire_label] + assets
    return PricePanel(tuple(assets), steps, p)


def emit_panel(panel: PricePanel, path) -> Path:
    """Write ``panel`` so that :func:`ingest_csv` reads it back bit-for-bit."""
    lines = [",".join(["time", *panel.asset_ids])]
    for t, row in zip(panel.times, panel.prices):
        lines.append(",".join([str(int(t)), *(repr(float(v)) for v in row)]))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def sanitize(obj):
    """Make ``obj`` JSON-safe: arrays to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload: dict) -> Path:
    text = json.dumps(sanitize(payload), sort_keys=True, indent=2)
    return atomic_write_text(path, text + "\n")


def write_series_csv(path, columns: dict) -> Path:
    """Write equally long columns; keys are headers such as ``"a2_hat [1/step^2]"``."""
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    lengths = {len(d) for d in data}
    if len(lengths) > 1:
        raise ValueError(f"series have different lengths: {sorted(lengths)}")

    def fmt(v):
        if isinstance(v, (np.integer, int)):
            return str(int(v))
        return repr(float(v))

    lines = [",".join(names)]
    for i in range(lengths.pop() if lengths else 0):
        lines.append(",".join(fmt(d[i]) for d in data))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def save_signal(signal: ArbitrageSignal, path, extra: dict | None = None) -> Path:
    """Persist everything needed to rebuild ``signal`` (including its bases)."""
    b = signal.bases
    arrays = dict(
        times=signal.times,
        a2_hat=signal.a2_hat,
        noise_lo=signal.noise_lo,
        noise_hi=signal.noise_hi,
        alpha_times=signal.alpha_times,
        alpha_hat=signal.alpha_hat,
        lambda_k=signal.lambda_k,
        spectra=signal.spectra,
        degenerate=signal.degenerate,
        eta2_times=signal.eta2_times,
        eta2_hat=signal.eta2_hat,
        basis_vectors=np.stack([x.vectors for x in b]),
        basis_eigenvalues=np.stack([x.eigenvalues for x in b]),
        basis_frames=np.stack([x.frame for x in b]),
        basis_end_times=np.array([x.end_time for x in b], dtype=np.int64),
        asset_ids=np.array(signal.asset_ids, dtype=str),
        config=np.array(json.dumps(sanitize(signal.config.__dict__), sort_keys=True)),
        extra=np.array(json.dumps(sanitize(extra or {}), sort_keys=True)),
        warnings=np.array(json.dumps(signal.warnings)),
    )
    if signal.per_numeraire_a2 is not None:
        arrays["per_numeraire_a2"] = signal.per_numeraire_a2
    return _write_npz(path, arrays)


def _write_npz(path, arrays: dict) -> Path:
    """``np.savez_compressed`` equivalent with fixed entry timestamps (byte-reproducible)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        with zipfile.ZipFile(tmp, "w") as zf:
            for name in sorted(arrays):
                info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
                info.compress_type = zipfile.ZIP_DEFLATED
                buf = io.BytesIO()
                np.lib.format.write_array(buf, np.asarray(arrays[name]), allow_pickle=False)
                zf.writestr(info, buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_signal(path) -> tuple[ArbitrageSignal, dict]:
    """Inverse of :func:`save_signal`; returns the signal and its ``extra`` dict."""
    try:
        z = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: cannot read detection output ({exc})") from exc
    with z:
        cfg = json.loads(str(z["config"]))
        extra = json.loads(str(z["extra"]))
        bases = [
            NullBasis(vectors=v, eigenvalues=e, all_eigenvalues=s, end_time=int(t), frame=f)
            for v, e, s, t, f in zip(z["basis_vectors"], z["basis_eigenvalues"], z["spectra"],
                                     z["basis_end_times"], z["basis_frames"])
        ]
        per = z["per_numeraire_a2"] if "per_numeraire_a2" in z.files else None
        signal = ArbitrageSignal(
            config=DetectionConfig(**cfg),
            asset_ids=tuple(str(a) for a in z["asset_ids"]),
            times=z["times"],
            a2_hat=z["a2_hat"],
            noise_lo=z["noise_lo"],
            noise_hi=z["noise_hi"],
            alpha_times=z["alpha_times"],
            alpha_hat=z["alpha_hat"],
            lambda_k=z["lambda_k"],
            spectra=z["spectra"],
            bases=bases,
            degenerate=z["degenerate"],
            eta2_times=z["eta2_times"],
            eta2_hat=z["eta2_hat"],
            per_numeraire_a2=per,
            warnings=json.loads(str(z["warnings"])),
        )
    return signal, extra
