"""Plain-text persistence: curve CSVs, JSON manifests and matrix dumps.

Every writer is deterministic: floats are written with ``repr`` precision,
JSON keys are sorted and nothing time-dependent is recorded, so repeated
runs produce byte-identical files.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .curve import ManifoldCurve, TimeGrid
from .errors import NotOnSphereError

#: Rows whose norm deviates from 1 by at most this are renormalized on read.
READ_NORM_TOL = 1e-6


def _fmt(x):
    return repr(float(x))


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_curve_csv(path, curve):
    """CSV with header ``t,c1,...,cd0`` and one row per node."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d0 = curve.dim
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"c{k + 1}" for k in range(d0)])
        for t, p in zip(curve.grid.nodes, curve.points):
            w.writerow([_fmt(t)] + [_fmt(c) for c in p])


def read_curve_csv(path):
    """Read a curve CSV, renormalizing rows within ``READ_NORM_TOL`` of unit norm."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if not header or header[0] != "t" or any(h != f"c{k}" for k, h in enumerate(header[1:], 1)):
        raise ValueError(f"{path}: header must be t,c1,...,cd0")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged or empty curve file")
    pts = data[:, 1:]
    norms = np.linalg.norm(pts, axis=1)
    dev = np.abs(norms - 1.0)
    if np.any(dev > READ_NORM_TOL):
        k = int(np.argmax(dev))
        raise NotOnSphereError(f"{path}: row {k + 1} has norm {norms[k]:.9f}")
    return ManifoldCurve(TimeGrid(data[:, 0]), pts / norms[:, None])


def write_matrix_csv(path, a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in a:
            w.writerow([_fmt(x) for x in row])


def read_matrix_csv(path):
    with Path(path).open(newline="") as fh:
        return np.array([[float(x) for x in r] for r in csv.reader(fh) if r], dtype=float)


def curve_name(kind, i):
    return f"{kind}_{i:04d}.csv"


def save_sample(directory, Y, X, manifest):
    """Write ``curves/Y_iiii.csv``, ``curves/X_iiii.csv`` and ``manifest.json``."""
    directory = Path(directory)
    for i, (y, x) in enumerate(zip(Y, X)):
        write_curve_csv(directory / "curves" / curve_name("Y", i), y)
        write_curve_csv(directory / "curves" / curve_name("X", i), x)
    manifest = dict(manifest, n=len(Y))
    write_json(directory / "manifest.json", manifest)


def load_sample(directory):
    """Inverse of :func:`save_sample`; returns ``(Y, X, manifest)``."""
    directory = Path(directory)
    mpath = directory / "manifest.json"
    if not mpath.exists():
        raise FileNotFoundError(f"{directory} has no manifest.json")
    manifest = read_json(mpath)
    n = int(manifest["n"])
    Y = [read_curve_csv(directory / "curves" / curve_name("Y", i)) for i in range(n)]
    X = [read_curve_csv(directory / "curves" / curve_name("X", i)) for i in range(n)]
    return Y, X, manifest


def dump_operator(directory, op):
    """JSON manifest plus CSV dumps of a block covariance operator."""
    directory = Path(directory)
    write_json(directory / "operator.json", {
        "d0": op.d0, "m": op.m, "size": op.size, "grid": op.grid.nodes,
        "files": {"matrix": "operator_matrix.csv", "eigenvalues": "operator_eigenvalues.csv"},
    })
    write_matrix_csv(directory / "operator_matrix.csv", op.matrix)
    write_matrix_csv(directory / "operator_eigenvalues.csv", op.eigenvalues[None])


def load_operator_matrix(directory):
    directory = Path(directory)
    meta = read_json(directory / "operator.json")
    return meta, read_matrix_csv(directory / meta["files"]["matrix"])


def model_manifest(model):
    from dataclasses import asdict

    return {
        "n": model.n, "m": model.m, "config": asdict(model.config),
        "grid": model.grid.nodes, "work_index": model.work_index,
        "retained": model.inverse.retained, "kernel_retained": model.kern.retained,
        "ridge": model.inverse.ridge, "lambda_1": float(model.weight_op.eigenvalues[0]),
    }


def dump_model(directory, model, operator=False):
    """Model state as ``model.json`` and CSV tensors (optionally the full operator)."""
    directory = Path(directory)
    write_json(directory / "model.json", model_manifest(model))
    write_curve_csv(directory / "mu_hat.csv", model.mu_hat)
    write_matrix_csv(directory / "xbar.csv", model.xbar)
    write_matrix_csv(directory / "kernel_gammas.csv", model.kern.gammas[None])
    write_matrix_csv(directory / "kernel_eigenfunctions.csv", model.kern.phis)
    write_matrix_csv(directory / "weight_eigenvalues.csv", model.inverse.eigenvalues[None])
    if operator:
        dump_operator(directory / "operator", model.weight_op)
