"""File formats. Every format carries a magic string and loaders reject anything else.

* State: little-endian ``b"TQS1"``, u64 N, N pairs of f64 (re, im); JSON sidecar.
* State bundle: concatenated TQS1 records plus an index JSON.
* CSV tables (spectrum, zeros, LDOS, ...): first line ``# toruslab-<kind>/1``.
* Husimi image: 16-bit binary PGM (P5, maxval 65535, big-endian) scaled by the
  grid maximum; JSON sidecar. Image row r, column c shows x = c/M, p = (M-1-r)/M.
* Field dump: raw little-endian float32, C order ``values[i, j]`` at x=i/M,
  y=j/M; JSON sidecar.
* JSON documents carry a ``"format"`` key and are written with sorted keys.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .torus import TorusState

STATE_MAGIC = b"TQS1"
_HEADER = struct.Struct("<4sQ")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _clean(obj):
    """JSON-ready copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, doc: dict, fmt: str) -> Path:
    path = Path(path)
    body = dict(_clean(doc))
    body["format"] = fmt
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path, fmt: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise FormatError(f"cannot read JSON {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != fmt:
        raise FormatError(f"{path}: expected format {fmt!r}, found {doc.get('format') if isinstance(doc, dict) else None!r}")
    return doc


# ---------------------------------------------------------------------------
# States


def _state_bytes(state: TorusState) -> bytes:
    amps = np.ascontiguousarray(state.amps, dtype="<c16")
    return _HEADER.pack(STATE_MAGIC, state.N) + amps.tobytes()


def write_state(path, state: TorusState) -> list[Path]:
    path = Path(path)
    path.write_bytes(_state_bytes(state))
    meta = {"N": state.N, "norm": state.norm, "description": state.description}
    if state.seed is not None:
        meta["seed"] = state.seed
    return [path, write_json(sidecar_path(path), meta, "toruslab-state/1")]


def _parse_states(data: bytes, source) -> list[TorusState]:
    out = []
    pos = 0
    while pos < len(data):
        if len(data) - pos < _HEADER.size:
            raise FormatError(f"{source}: truncated header at byte {pos}")
        magic, N = _HEADER.unpack_from(data, pos)
        if magic != STATE_MAGIC:
            raise FormatError(f"{source}: bad magic {magic!r} (expected {STATE_MAGIC!r})")
        pos += _HEADER.size
        nbytes = 16 * N
        if N < 1 or len(data) - pos < nbytes:
            raise FormatError(f"{source}: record claims N={N} but only {len(data) - pos} bytes remain")
        amps = np.frombuffer(data, dtype="<c16", count=N, offset=pos).astype(np.complex128)
        out.append(TorusState(int(N), amps))
        pos += nbytes
    return out


def read_state(path) -> TorusState:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read state {path}: {exc}") from exc
    states = _parse_states(data, path)
    if len(states) != 1:
        raise FormatError(f"{path}: expected one state record, found {len(states)}")
    st = states[0]
    side = sidecar_path(path)
    desc, seed = "", None
    if side.exists():
        meta = read_json(side, "toruslab-state/1")
        if meta.get("N") != st.N:
            raise FormatError(f"{side}: N={meta.get('N')} disagrees with the binary (N={st.N})")
        desc, seed = meta.get("description", ""), meta.get("seed")
    return TorusState(st.N, st.amps, desc, seed)


def write_state_bundle(path, states: list[TorusState], extra: dict | None = None) -> list[Path]:
    path = Path(path)
    path.write_bytes(b"".join(_state_bytes(s) for s in states))
    index = {"count": len(states), "N": [s.N for s in states], "descriptions": [s.description for s in states]}
    index.update(extra or {})
    return [path, write_json(sidecar_path(path), index, "toruslab-state-bundle/1")]


def read_state_bundle(path) -> list[TorusState]:
    path = Path(path)
    states = _parse_states(path.read_bytes(), path)
    index = read_json(sidecar_path(path), "toruslab-state-bundle/1")
    if index.get("count") != len(states):
        raise FormatError(f"{path}: index lists {index.get('count')} states, file has {len(states)}")
    return [TorusState(s.N, s.amps, d) for s, d in zip(states, index.get("descriptions", [""] * len(states)))]


# ---------------------------------------------------------------------------
# CSV tables


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if v is None:
        return ""
    return repr(float(v))


def write_table(path, kind: str, columns: list[str], rows) -> Path:
    path = Path(path)
    buf = _io.StringIO()
    buf.write(f"# toruslab-{kind}/1\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def read_table(path, kind: str) -> tuple[list[str], np.ndarray]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != f"# toruslab-{kind}/1":
        raise FormatError(f"{path}: not a toruslab-{kind}/1 table")
    reader = csv.reader(lines[1:])
    header = next(reader)
    data = [[float(x) if x != "" else math.nan for x in row] for row in reader]
    return header, np.array(data, dtype=float).reshape(-1, len(header))


def write_spectrum(path, spec) -> Path:
    return write_table(path, "spectrum", ["j", "theta_j", "residual"],
                       ((j, t, r) for j, (t, r) in enumerate(zip(spec.eigenphases, spec.residuals))))


def write_zeros(path, zeros) -> Path:
    return write_table(path, "zeros", ["x", "p", "multiplicity"],
                       ((x, p, int(m)) for (x, p), m in zip(zeros.points, zeros.multiplicity)))


def write_orbit(path, points) -> Path:
    return write_table(path, "orbit", ["t", "x", "p"], ((t, x, p) for t, (x, p) in enumerate(points)))


def write_correlation(path, series) -> Path:
    return write_table(path, "correlation-series", ["t", "C", "stderr"],
                       zip(series.times, series.values, series.stderr))


def write_ldos(path, curve) -> Path:
    return write_table(path, "ldos", ["theta", "weight"], zip(curve.theta, curve.weights))


# ---------------------------------------------------------------------------
# Images and fields


def write_pgm16(path, values: np.ndarray) -> tuple[Path, float]:
    """16-bit P5 image of a nonnegative M x M array indexed [x, p]; returns (path, max)."""
    v = np.asarray(values, dtype=float)
    vmax = float(v.max())
    scaled = np.zeros_like(v) if vmax <= 0 else np.rint(np.clip(v / vmax, 0, 1) * 65535)
    img = scaled.T[::-1, :].astype(">u2")  # rows: p descending; columns: x
    h, w = img.shape
    path = Path(path)
    path.write_bytes(f"P5\n{w} {h}\n65535\n".encode("ascii") + img.tobytes())
    return path, vmax


def read_pgm16(path) -> np.ndarray:
    """Inverse of :func:`write_pgm16` up to scaling: array indexed [x, p] with values in [0, 1]."""
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5" or parts[3] != b"65535":
        raise FormatError(f"{path}: not a 16-bit P5 image")
    w, h = int(parts[1]), int(parts[2])
    raw = parts[4]
    if len(raw) != 2 * w * h:
        raise FormatError(f"{path}: expected {2 * w * h} data bytes, found {len(raw)}")
    img = np.frombuffer(raw, dtype=">u2").reshape(h, w)
    return img[::-1, :].T / 65535.0


def write_husimi(path, grid) -> list[Path]:
    path, vmax = write_pgm16(path, grid.values)
    meta = {"N": grid.N, "M": grid.M, "max_density": vmax, "raw_mean": grid.raw_mean,
            "description": grid.description, "orientation": "row r, column c: x=c/M, p=(M-1-r)/M"}
    return [path, write_json(sidecar_path(path), meta, "toruslab-husimi/1")]


def write_field(path, field_) -> list[Path]:
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(field_.values, dtype="<f4").tobytes())
    meta = {"M": field_.M, "k": field_.k, "descriptor": field_.descriptor, "seed": field_.seed,
            "periodic": field_.periodic, "dtype": "<f4", "layout": "C order, values[i, j] at x=i/M, y=j/M"}
    return [path, write_json(sidecar_path(path), meta, "toruslab-field/1")]


def read_field(path):
    from .waves import ScalarField2D

    path = Path(path)
    meta = read_json(sidecar_path(path), "toruslab-field/1")
    M = int(meta["M"])
    data = path.read_bytes()
    if len(data) != 4 * M * M:
        raise FormatError(f"{path}: expected {4 * M * M} bytes for M={M}, found {len(data)}")
    vals = np.frombuffer(data, dtype="<f4").reshape(M, M).astype(float)
    return ScalarField2D(M, vals, float(meta["k"]), meta.get("descriptor", ""), meta.get("seed"),
                         bool(meta.get("periodic", False)))
