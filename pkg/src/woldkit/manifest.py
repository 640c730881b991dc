"""Tuple manifests, Matrix Market matrices and oracle files.

Manifest layout (``schema_version`` ``"woldkit/1"``)::

    {
      "schema_version": "woldkit/1",
      "ambient_dim": N,
      "operators": [<matrix source>, ...],
      "interior_projector": <matrix source> | null,
      "tolerances": {"rank_tol": ..., "residual_tol": ..., ...}
    }

A matrix source is either ``{"inline": rows}`` with every entry a
``[re, im]`` pair, or ``{"file": "relative/path.mtx"}`` naming a complex
Matrix Market file resolved against the manifest's directory.
"""

import json
import os
import tempfile
from pathlib import Path

import numpy as np
import scipy.io

from .exceptions import InputError
from .operators import IsometryTuple
from .subspace import ToleranceConfig

SCHEMA_VERSION = "woldkit/1"
TOLERANCE_KEYS = ("rank_tol", "residual_tol", "stabilization_window", "max_power")


class ManifestError(InputError):
    """Raised for unreadable or schema-violating manifests and oracle files."""


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj):
    return json.dumps(obj, indent=2) + "\n"


def encode_matrix(A):
    """Rows of ``[re, im]`` pairs; ``float`` reprs round-trip exactly."""
    A = np.asarray(A, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def decode_matrix(rows, name="matrix"):
    try:
        arr = np.asarray(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"{name}: entries must be [re, im] pairs ({exc})") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ManifestError(f"{name}: expected rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def read_matrix_market(path):
    try:
        M = scipy.io.mmread(str(path))
    except (OSError, ValueError) as exc:
        raise ManifestError(f"cannot read Matrix Market file {path}: {exc}") from exc
    if hasattr(M, "toarray"):
        M = M.toarray()
    return np.asarray(M, dtype=np.complex128)


def write_matrix_market(path, A):
    """Dense complex Matrix Market (array format), 17 significant digits."""
    A = np.asarray(A, dtype=np.complex128)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".mtx")
    os.close(fd)
    try:
        scipy.io.mmwrite(tmp, A, field="complex", precision=17)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _load_source(src, base, name):
    if isinstance(src, list):
        return decode_matrix(src, name)
    if not isinstance(src, dict):
        raise ManifestError(f"{name}: matrix source must be an object or a list")
    if "inline" in src:
        return decode_matrix(src["inline"], name)
    if "file" in src:
        return read_matrix_market(Path(base) / src["file"])
    raise ManifestError(f"{name}: matrix source needs 'inline' or 'file'")


def parse_manifest(doc, base="."):
    """Build ``(IsometryTuple, tolerance overrides)`` from a decoded manifest."""
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ManifestError(f"unrecognised schema_version {version!r}")
    try:
        N = int(doc["ambient_dim"])
        sources = doc["operators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"manifest missing field: {exc}") from exc
    if not isinstance(sources, list) or not sources:
        raise ManifestError("manifest needs a non-empty 'operators' list")
    ops = [_load_source(s, base, f"operators[{i}]") for i, s in enumerate(sources)]
    for i, V in enumerate(ops):
        if V.shape != (N, N):
            raise ManifestError(f"operators[{i}] has shape {V.shape}, expected ({N}, {N})")
    interior = doc.get("interior_projector")
    P = None
    if interior is not None:
        P = _load_source(interior, base, "interior_projector")
        if P.shape != (N, N):
            raise ManifestError(f"interior_projector has shape {P.shape}, expected ({N}, {N})")
    overrides = doc.get("tolerances") or {}
    unknown = set(overrides) - set(TOLERANCE_KEYS)
    if unknown:
        raise ManifestError(f"unknown tolerance keys {sorted(unknown)}")
    try:
        t = IsometryTuple(tuple(ops), P)
    except InputError as exc:
        raise ManifestError(str(exc)) from exc
    return t, dict(overrides)


def load_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read {path}: {exc}") from exc


def load_manifest(path):
    return parse_manifest(load_json(path), Path(path).parent)


def manifest_dict(t, tolerances=None, sources=None):
    """Manifest document for a tuple; ``sources`` overrides the inline operator encodings."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "ambient_dim": t.dim,
        "operators": sources or [{"inline": encode_matrix(V)} for V in t.operators],
        "interior_projector": None if t.interior is None else {"inline": encode_matrix(t.interior)},
    }
    if tolerances:
        doc["tolerances"] = dict(tolerances)
    return doc


def write_manifest(path, t, tolerances=None, matrix_market=False):
    """Write a manifest; with ``matrix_market`` the operators go to sidecar ``.mtx`` files."""
    path = Path(path)
    sources = None
    if matrix_market:
        sources = []
        for i, V in enumerate(t.operators, start=1):
            name = f"{path.stem}.V{i}.mtx"
            write_matrix_market(path.parent / name, V)
            sources.append({"file": name})
    atomic_write(path, dumps(manifest_dict(t, tolerances, sources)))


def tolerance_dict(cfg):
    return {k: getattr(cfg, k) for k in TOLERANCE_KEYS if getattr(cfg, k) is not None}


def config_from(overrides, base=None):
    base = base or ToleranceConfig()
    try:
        return base.with_overrides(**overrides)
    except (TypeError, InputError) as exc:
        raise ManifestError(f"invalid tolerances: {exc}") from exc


def oracle_dict(oracle):
    return {"schema_version": SCHEMA_VERSION, **oracle.to_dict()}


def write_oracle(path, oracle):
    atomic_write(path, dumps(oracle_dict(oracle)))


def load_oracle(path):
    """Expected block dimensions keyed by sorted label tuple."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return {tuple(sorted(b["label"])): int(b["dim"]) for b in doc["blocks"]}
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"cannot read oracle {path}: {exc}") from exc
