"""On-disk formats: binary grids with a text manifest, CSV slices, plot tables, reports.

Binary grids are row-major ``[zeta, tau]`` arrays of little-endian float64
(real, imag) pairs, one file per field.  The manifest is ``key = value``
text, one entry per line, sorted by key.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

GRID_FIELDS = ("omega_a", "omega_b", "psi1", "psi2", "psi3")
MANIFEST_NAME = "grids.manifest"
_DTYPE = np.dtype("<c16")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_manifest(path, entries: dict) -> None:
    lines = [f"{k} = {_fmt(entries[k])}" for k in sorted(entries)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def write_grids(result, directory, extra: dict | None = None) -> dict[str, str]:
    """Write every grid of ``result`` plus ``grids.manifest``; returns checksums."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    sums = {}
    for name, arr in result.arrays().items():
        path = directory / f"{name}.bin"
        np.ascontiguousarray(arr, dtype=_DTYPE).tofile(path)
        sums[name] = sha256_file(path)
    n_zeta, n_tau = result.omega_a.shape
    entries = {
        "format": "row-major zeta-outer tau-inner, little-endian float64 (re, im) pairs",
        "n_zeta": n_zeta,
        "n_tau": n_tau,
        "zeta_min": float(result.zeta[0]),
        "zeta_max": float(result.zeta[-1]),
        "tau_min": float(result.tau[0]),
        "tau_max": float(result.tau[-1]),
        "h_zeta": float(result.h_zeta),
        "h_tau": float(result.h_tau),
        "stride": int(result.stride),
        "scheme": result.scheme,
    }
    for key, value in result.params.to_dict().items():
        entries[f"params.{key}"] = value
    for name, digest in sums.items():
        entries[f"sha256.{name}"] = digest
    entries.update(extra or {})
    write_manifest(directory / MANIFEST_NAME, entries)
    return sums


def read_grids(directory, verify: bool = True) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    directory = Path(directory)
    manifest = read_manifest(directory / MANIFEST_NAME)
    shape = (int(manifest["n_zeta"]), int(manifest["n_tau"]))
    arrays = {}
    for name in GRID_FIELDS:
        path = directory / f"{name}.bin"
        if verify and sha256_file(path) != manifest[f"sha256.{name}"]:
            raise ValueError(f"checksum mismatch for {path}")
        arrays[name] = np.fromfile(path, dtype=_DTYPE).reshape(shape)
    return arrays, manifest


SLICE_COLUMNS = ("tau", "zeta", "omega_a_re", "omega_a_im", "omega_b_re", "omega_b_im",
                 "psi1_re", "psi1_im", "psi2_re", "psi2_im", "psi3_re", "psi3_im")


def write_slice_csv(path, result, row: int) -> None:
    """One stored zeta slice as CSV with round-trip float text."""
    cols = [result.tau, np.full(result.tau.shape, result.zeta[row])]
    for name in GRID_FIELDS:
        arr = result.arrays()[name][row]
        cols += [arr.real, arr.imag]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SLICE_COLUMNS)
        for values in zip(*cols):
            w.writerow([repr(float(v)) for v in values])


def read_slice_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    return {name: data[:, i] for i, name in enumerate(header)}


def write_table(path, header: str, columns) -> None:
    """Whitespace-separated numeric table with a ``#`` header line."""
    data = np.column_stack([np.asarray(c, dtype=float).ravel() for c in columns])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {header}\n")
        for row in data:
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")


def write_heatmap(path, zeta, tau, values, max_points: int = 200) -> None:
    """``zeta tau value`` rows, subsampled to at most ``max_points`` per axis."""
    sz = max(1, -(-len(zeta) // max_points))
    st = max(1, -(-len(tau) // max_points))
    Z, T = np.meshgrid(zeta[::sz], tau[::st], indexing="ij")
    write_table(path, "zeta tau abs_omega_a", [Z, T, np.asarray(values)[::sz, ::st]])


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list) and obj and isinstance(obj[0], dict):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, obj))


def write_report(stem, report: dict) -> None:
    """Write ``stem.json`` (machine-readable) and ``stem.txt`` (one metric per line)."""
    stem = Path(stem)
    plain = _plain(report)
    stem.with_suffix(".json").write_text(json.dumps(plain, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
    pairs: list = []
    _flatten("", plain, pairs)
    stem.with_suffix(".txt").write_text("".join(f"{k} = {_fmt(v)}\n" for k, v in pairs),
                                        encoding="utf-8")
