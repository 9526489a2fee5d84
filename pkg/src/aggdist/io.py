"""File formats: activation dumps, fit files, statistics records and JSON output.

JSON is written by a small deterministic serializer: keys keep insertion
order, floats use 17 significant digits and non-finite floats become null.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .distributions import Moments, ZeroGammaParams
from .errors import ParseError
from .fitting import ActivationDump, FitReport
from .propagation import BlockStats, PixelStats

DUMP_COLUMNS = ("image_id", "filter", "pixel", "value", "label")


def format_float(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def _encode(obj, indent, level, parts):
    pad = " " * (indent * (level + 1))
    end_pad = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        parts.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(format_float(obj))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            parts.append(pad + json.dumps(str(key)) + ": ")
            _encode(value, indent, level + 1, parts)
            parts.append(",\n" if i < len(obj) - 1 else "\n")
        parts.append(end_pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not items:
            parts.append("[]")
            return
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            # flat numeric arrays stay on one line
            inner = []
            for v in items:
                _encode(v, indent, level + 1, inner)
                inner.append(", ")
            parts.append("[" + "".join(inner[:-1]) + "]")
            return
        parts.append("[\n")
        for i, value in enumerate(items):
            parts.append(pad)
            _encode(value, indent, level + 1, parts)
            parts.append(",\n" if i < len(items) - 1 else "\n")
        parts.append(end_pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=1):
    parts = []
    _encode(obj, indent, 0, parts)
    return "".join(parts) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


# --- activation dumps -------------------------------------------------------


def read_dump(path):
    """Read a dump, choosing the format from the file extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return _read_dump_csv(path)
    if suffix == ".json":
        return dump_from_json(read_json(path))
    raise ParseError(f"{path}: unknown dump extension {suffix!r} (use .csv or .json)")


def _read_dump_csv(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != DUMP_COLUMNS:
                raise ParseError(f"{path}: header must be {','.join(DUMP_COLUMNS)}")
            rows = [row for row in reader if row]
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: no data rows")
    try:
        if any(len(row) != 5 for row in rows):
            raise ValueError("every row needs 5 fields")
        idx = np.array([[int(r[0]), int(r[1]), int(r[2])] for r in rows])
        vals = np.array([float(r[3]) for r in rows])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if np.any(idx < 0):
        raise ParseError(f"{path}: negative index")
    shape = tuple(int(v) + 1 for v in idx.max(axis=0))
    if len(rows) != shape[0] * shape[1] * shape[2]:
        raise ParseError(f"{path}: expected {np.prod(shape)} rows for shape {shape}, got {len(rows)}")
    values = np.full(shape, np.nan)
    values[idx[:, 0], idx[:, 1], idx[:, 2]] = vals
    if np.any(np.isnan(values)):
        raise ParseError(f"{path}: duplicate or missing (image, filter, pixel) entries")
    labels = [None] * shape[0]
    for (image, _, _), row in zip(idx, rows):
        if labels[image] is None:
            labels[image] = row[4]
        elif labels[image] != row[4]:
            raise ParseError(f"{path}: image {image} carries conflicting labels")
    return _make_dump(values, labels, path)


def _make_dump(values, labels, source):
    try:
        return ActivationDump(values, np.array(labels, dtype=str))
    except ValueError as exc:
        raise ParseError(f"{source}: {exc}") from exc


def dump_from_json(obj, source="dump"):
    try:
        shape = (int(obj["n_images"]), int(obj["n_filters"]), int(obj["n_pixels"]))
        flat = np.asarray(obj["values"], dtype=float)
        if "labels" in obj:
            labels = [str(v) for v in obj["labels"]]
        else:
            labels = [str(obj["label"])] * shape[0]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{source}: {exc}") from exc
    if flat.size != shape[0] * shape[1] * shape[2]:
        raise ParseError(f"{source}: {flat.size} values do not fill shape {shape}")
    return _make_dump(flat.reshape(shape), labels, source)


def dump_to_json(dump):
    return {
        "n_images": dump.n_images,
        "n_filters": dump.n_filters,
        "n_pixels": dump.n_pixels,
        "labels": dump.labels.tolist(),
        "values": dump.values.ravel(),
    }


def write_dump(path, dump):
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        write_json(path, dump_to_json(dump))
        return
    if suffix != ".csv":
        raise ParseError(f"{path}: unknown dump extension {suffix!r}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DUMP_COLUMNS)
        n, f, r = dump.values.shape
        for i in range(n):
            for k in range(f):
                for p in range(r):
                    writer.writerow((i, k, p, format_float(dump.values[i, k, p]), dump.labels[i]))


# --- fit files ----------------------------------------------------------------


def fit_report_to_json(index, report):
    p = report.params
    return {
        "filter": index,
        "p": p.p,
        "a": p.a,
        "s": p.s,
        "n_zero": report.n_zero,
        "n_pos": report.n_pos,
        "log_likelihood": report.log_likelihood,
        "ks_stat": report.ks_stat,
    }


def fit_report_from_json(obj):
    return FitReport(
        ZeroGammaParams(float(obj["p"]), float(obj["a"]), float(obj["s"])),
        int(obj["n_zero"]),
        int(obj["n_pos"]),
        float(obj["log_likelihood"]),
        float(obj["ks_stat"]),
    )


def group_to_json(n_images, reports, stats):
    return {
        "n_images": n_images,
        "filters": [fit_report_to_json(k, r) for k, r in enumerate(reports)],
        "pixel_moments": [s.moments for s in stats.within],
        "pooled_moments": stats.pooled,
    }


def group_from_json(obj, source="fit"):
    """(FitReports, BlockStats) from one fit-file group."""
    try:
        reports = [fit_report_from_json(f) for f in obj["filters"]]
        within = tuple(PixelStats(np.asarray(m, dtype=float)) for m in obj["pixel_moments"])
        stats = BlockStats(within, np.asarray(obj["pooled_moments"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{source}: malformed group: {exc}") from exc
    if len(reports) != stats.n_filters:
        raise ParseError(f"{source}: {len(reports)} fits but {stats.n_filters} moment tables")
    return reports, stats


# --- statistics records -----------------------------------------------------


def moments_record(moments):
    moments = list(moments)
    return {
        "mean": [m.mean for m in moments],
        "std": [math.sqrt(m.variance) for m in moments],
    }


def layer_record(conv, activation, gap, cov_gap, deact, cov_deact, output):
    """Statistics of one group (class side) in the shared layout."""
    gap_rec = moments_record(gap)
    gap_rec["cov"] = np.asarray(cov_gap)
    deact_rec = moments_record(deact)
    deact_rec["cov"] = np.asarray(cov_deact)
    return {
        "conv": moments_record(conv),
        "activation": moments_record(activation),
        "gap": gap_rec,
        "deactivation": deact_rec,
        "output": {"mean": output.mean, "std": math.sqrt(output.variance)},
    }


def output_moments(gaussian):
    return Moments(gaussian.mu, gaussian.sigma ** 2)
