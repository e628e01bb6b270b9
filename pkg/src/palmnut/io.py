"""Vector files, trace CSVs and 16-bit PGM export.

Vector file layout: one UTF-8 JSON line
``{"type":"cvec"|"rvec","n":N,"w":W,"h":H}`` followed by ``N`` (rvec) or
``2N`` (cvec, interleaved re/im) little-endian float64 values.
"""
import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError

TRACE_HEADER = ("iter", "seconds", "objective", "nrmse")
ABLATION_HEADER = ("variant",) + TRACE_HEADER
_LE_F8 = np.dtype("<f8")
_LE_C16 = np.dtype("<c16")  # interleaved re/im pairs of <f8


def _dims(v, width, height):
    if width is None and height is None:
        if v.ndim == 2:
            height, width = v.shape
        else:
            width, height = v.size, 1
    if width * height != v.size:
        raise DimensionError(f"w*h = {width}*{height} does not match {v.size} entries")
    return int(width), int(height)


def write_vector(path, v, width=None, height=None):
    """Write a real or complex array; 2D arrays record ``w``/``h`` from their shape."""
    v = np.asarray(v)
    if v.size == 0:
        raise DimensionError("cannot write an empty vector")
    width, height = _dims(v, width, height)
    if np.iscomplexobj(v):
        kind = "cvec"
        payload = np.ascontiguousarray(v, dtype=np.complex128).reshape(-1).astype(_LE_C16)
    else:
        kind = "rvec"
        payload = np.ascontiguousarray(v, dtype=np.float64).reshape(-1).astype(_LE_F8)
    header = json.dumps({"type": kind, "n": int(v.size), "w": width, "h": height}, separators=(",", ":"))
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8") + b"\n")
        fh.write(payload.tobytes())


def read_vector(path):
    """Read a vector file; returns an ``(h, w)`` array (1D when ``h == 1``)."""
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError(f"{path}: missing header line")
    try:
        header = json.loads(data[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: malformed header ({exc})") from None
    if not isinstance(header, dict) or set(header) != {"type", "n", "w", "h"}:
        raise FormatError(f"{path}: header must have exactly the keys type, n, w, h")
    kind, n, w, h = header["type"], header["n"], header["w"], header["h"]
    if kind not in ("cvec", "rvec"):
        raise FormatError(f"{path}: unknown type {kind!r}")
    for key, val in (("n", n), ("w", w), ("h", h)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise FormatError(f"{path}: {key} must be a positive integer, got {val!r}")
    if w * h != n:
        raise FormatError(f"{path}: w*h = {w * h} does not match n = {n}")
    width = 2 if kind == "cvec" else 1
    payload = data[nl + 1:]
    if len(payload) != 8 * width * n:
        raise FormatError(f"{path}: payload has {len(payload)} bytes, expected {8 * width * n}")
    if kind == "cvec":
        vals = np.frombuffer(payload, dtype=_LE_C16).astype(np.complex128)
    else:
        vals = np.frombuffer(payload, dtype=_LE_F8).astype(np.float64)
    return vals if h == 1 else vals.reshape(h, w)


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def format_trace(trace, timing=True, variant=None):
    """Render trace rows as CSV text; ``timing=False`` leaves ``seconds`` blank."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if variant is None:
        writer.writerow(TRACE_HEADER)
    for k, sec, obj, nrm in trace.records:
        row = [k, _fmt(sec) if timing else "", _fmt(obj), _fmt(nrm)]
        writer.writerow(row if variant is None else [variant] + row)
    return buf.getvalue()


def write_trace(path, trace, timing=True):
    Path(path).write_text(format_trace(trace, timing), encoding="utf-8")


def write_ablation(path, traces, timing=True):
    """``traces`` maps variant name to trace; rows are grouped by variant."""
    parts = [",".join(ABLATION_HEADER) + "\n"]
    parts += [format_trace(tr, timing, variant=name) for name, tr in traces.items()]
    Path(path).write_text("".join(parts), encoding="utf-8")


def _parse_float(s):
    return None if s == "" else float(s)


def read_trace(path):
    """Parse a trace CSV into a list of ``(iter, seconds, objective, nrmse)``.

    A leading ``variant`` column (ablation files) is kept as the first field.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty trace file")
    header = tuple(rows[0])
    if header not in (TRACE_HEADER, ABLATION_HEADER):
        raise FormatError(f"{path}: unexpected header {header}")
    has_variant = header == ABLATION_HEADER
    out = []
    last = {}
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}:{line}: expected {len(header)} fields")
        try:
            it = int(row[-4])
            rec = (it, _parse_float(row[-3]), float(row[-2]), _parse_float(row[-1]))
        except ValueError as exc:
            raise FormatError(f"{path}:{line}: {exc}") from None
        key = row[0] if has_variant else None
        if key in last and it <= last[key]:
            raise FormatError(f"{path}:{line}: iter not strictly increasing")
        last[key] = it
        out.append((key,) + rec if has_variant else rec)
    return out


def pgm_samples(values):
    """Min-max scale to 0..65535; a constant image maps to 32768."""
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot export non-finite values")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.full(v.shape, 32768, dtype=np.uint16)
    return np.rint((v - lo) / (hi - lo) * 65535.0).astype(np.uint16)


def export_pgm(values, width, height, path):
    """Binary 16-bit PGM (P5, big-endian samples)."""
    v = np.asarray(values)
    if width * height != v.size:
        raise DimensionError(f"w*h = {width * height} does not match {v.size} values")
    samples = pgm_samples(v.reshape(height, width)).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n65535\n".encode("ascii"))
        fh.write(samples.tobytes())


def read_pgm(path):
    """Read a 16-bit binary PGM written by :func:`export_pgm`."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5" or parts[2] != b"65535":
        raise FormatError(f"{path}: not a 16-bit P5 file")
    width, height = (int(t) for t in parts[1].split())
    samples = np.frombuffer(parts[3], dtype=">u2")
    if samples.size != width * height:
        raise FormatError(f"{path}: truncated sample data")
    return samples.reshape(height, width).astype(np.uint16)
