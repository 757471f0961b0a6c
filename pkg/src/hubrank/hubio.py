"""On-disk formats: PTMF matrices, label files, hub manifests, head dumps.

PTMF is a minimal self-describing binary container for one real matrix:

    bytes 0..3    magic "PTMF"
    bytes 4..7    format version, unsigned 32-bit little-endian (currently 1)
    bytes 8..15   n (rows), unsigned 64-bit little-endian
    bytes 16..23  D (columns), unsigned 64-bit little-endian
    byte  24      element type: 1 = float64, 2 = float32 (upcast on read)
    bytes 25..    row-major element data, little-endian

Readers reject anything malformed with the byte offset of the violation,
and reject trailing bytes; a write followed by a read is bit-exact for
float64 payloads.  The full layout is documented in docs/formats.md.
"""

from __future__ import annotations

import base64
import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError
from .evidence import FeatureMatrix
from .logme import TaskLabels
from .predictive import PredictiveHead
from .ranking import TRUTH_DIRECTIONS

PTMF_MAGIC = b"PTMF"
PTMF_VERSION = 1
PTMF_HEADER = struct.Struct("<4sIQQB")
_ELEMENT_TYPES = {1: np.dtype("<f8"), 2: np.dtype("<f4")}
_ELEMENT_TAGS = {"float64": 1, "float32": 2}

HEAD_FORMAT_NAME = "hubrank-head"
HEAD_VERSION = 1


# ---------------------------------------------------------------------------
# PTMF matrices
# ---------------------------------------------------------------------------


def dump_matrix(matrix: np.ndarray, element_type: str = "float64") -> bytes:
    """Serialize a matrix to PTMF bytes."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2:
        raise InputError(f"PTMF stores 2-D matrices, got shape {a.shape}")
    n, d = a.shape
    if n == 0 or d == 0:
        raise InputError(f"refusing to write a degenerate {n} x {d} matrix")
    if element_type not in _ELEMENT_TAGS:
        raise InputError(f"unsupported element type {element_type!r}")
    tag = _ELEMENT_TAGS[element_type]
    payload = np.ascontiguousarray(a, dtype=_ELEMENT_TYPES[tag]).tobytes()
    return PTMF_HEADER.pack(PTMF_MAGIC, PTMF_VERSION, n, d, tag) + payload


def load_matrix(blob: bytes, source: str = "<bytes>") -> np.ndarray:
    """Parse PTMF bytes back into a float64 matrix."""
    if len(blob) < PTMF_HEADER.size:
        raise FormatError(f"{source}: truncated header, {len(blob)} bytes", offset=len(blob))
    magic, version, n, d, tag = PTMF_HEADER.unpack_from(blob)
    if magic != PTMF_MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}", offset=0)
    if version != PTMF_VERSION:
        raise FormatError(f"{source}: unsupported version {version}", offset=4)
    if n == 0:
        raise FormatError(f"{source}: invalid dims {n} x {d}: zero rows", offset=8)
    if d == 0:
        raise FormatError(f"{source}: invalid dims {n} x {d}: zero columns", offset=16)
    if tag not in _ELEMENT_TYPES:
        raise FormatError(f"{source}: unknown element type tag {tag}", offset=24)
    dtype = _ELEMENT_TYPES[tag]
    expected = n * d * dtype.itemsize
    actual = len(blob) - PTMF_HEADER.size
    if actual < expected:
        raise FormatError(
            f"{source}: truncated payload, expected {expected} data bytes, got {actual}",
            offset=len(blob),
        )
    if actual > expected:
        raise FormatError(
            f"{source}: {actual - expected} trailing bytes after payload",
            offset=PTMF_HEADER.size + expected,
        )
    data = np.frombuffer(blob, dtype=dtype, count=n * d, offset=PTMF_HEADER.size)
    return data.reshape(n, d).astype(np.float64)


def write_matrix(path, matrix: np.ndarray, element_type: str = "float64") -> None:
    Path(path).write_bytes(dump_matrix(matrix, element_type))


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    return load_matrix(path.read_bytes(), source=str(path))


def write_feature_file(path, features: FeatureMatrix) -> None:
    write_matrix(path, features.data)


def read_feature_file(path) -> FeatureMatrix:
    return FeatureMatrix(read_matrix(path))


def feature_content_hash(matrix: np.ndarray) -> str:
    """SHA-256 of the canonical (float64) PTMF serialization of a matrix.

    Used to pin predictive heads to the exact feature matrix they were
    fitted on.
    """
    return hashlib.sha256(dump_matrix(matrix, "float64")).hexdigest()


# ---------------------------------------------------------------------------
# labels
# ---------------------------------------------------------------------------


def read_class_indices(path, num_classes: int | None = None) -> TaskLabels:
    """Classification labels: integer class indices separated by commas/newlines."""
    text = Path(path).read_text(encoding="ascii")
    tokens = [tok.strip() for tok in text.replace("\n", ",").split(",")]
    tokens = [tok for tok in tokens if tok]
    if not tokens:
        raise FormatError(f"{path}: no label tokens found")
    indices = []
    for pos, tok in enumerate(tokens):
        try:
            indices.append(int(tok))
        except ValueError as exc:
            raise FormatError(f"{path}: token {pos} is not an integer: {tok!r}") from exc
    return TaskLabels.classification(np.array(indices), num_classes=num_classes)


def read_regression_targets(path) -> TaskLabels:
    """Regression labels: an n x C PTMF matrix."""
    return TaskLabels.regression(read_matrix(path))


def read_labels(path, kind: str, num_classes: int | None = None) -> TaskLabels:
    if kind == "classification":
        return read_class_indices(path, num_classes=num_classes)
    if kind == "regression":
        return read_regression_targets(path)
    raise InputError(f"unknown task kind {kind!r}")


def write_class_indices(path, indices) -> None:
    idx = np.asarray(indices, dtype=np.int64)
    Path(path).write_text(",".join(str(int(i)) for i in idx), encoding="ascii")


# ---------------------------------------------------------------------------
# hub manifest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestModel:
    model_id: str
    feature_file: Path
    truth: float | None = None


@dataclass(frozen=True)
class HubManifest:
    """Declaration of a model hub: feature files, labels, optional truths."""

    dataset: str
    task_kind: str
    labels_file: Path
    num_classes: int | None
    truth_direction: str
    models: tuple[ManifestModel, ...]

    @property
    def has_truths(self) -> bool:
        return all(m.truth is not None for m in self.models)

    def labels(self) -> TaskLabels:
        return read_labels(self.labels_file, self.task_kind, num_classes=self.num_classes)


def read_manifest(path) -> HubManifest:
    """Load and validate a JSON hub manifest.

    Relative file references are resolved against the manifest's directory;
    every referenced file must exist at load time and model ids must be
    unique.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: manifest must be a JSON object")

    def require(key, types, where="manifest"):
        if key not in doc:
            raise FormatError(f"{path}: {where} is missing {key!r}")
        value = doc[key]
        if not isinstance(value, types):
            raise FormatError(f"{path}: {key!r} has the wrong type")
        return value

    dataset = require("dataset", str)
    task = require("task", dict)
    kind = task.get("kind")
    if kind not in ("classification", "regression"):
        raise FormatError(f"{path}: task.kind must be classification or regression")
    labels_file = task.get("labels_file")
    if not isinstance(labels_file, str):
        raise FormatError(f"{path}: task.labels_file must be a string")
    num_classes = task.get("num_classes")
    if num_classes is not None and (not isinstance(num_classes, int) or num_classes < 2):
        raise FormatError(f"{path}: task.num_classes must be an integer >= 2")
    direction = doc.get("truth_direction", "higher_better")
    if direction not in TRUTH_DIRECTIONS:
        raise FormatError(f"{path}: truth_direction must be one of {TRUTH_DIRECTIONS}")
    raw_models = require("models", list)
    if not raw_models:
        raise FormatError(f"{path}: manifest lists no models")

    base = path.parent
    models = []
    seen = set()
    for i, entry in enumerate(raw_models):
        if not isinstance(entry, dict):
            raise FormatError(f"{path}: models[{i}] must be an object")
        mid = entry.get("id")
        if not isinstance(mid, str) or not mid:
            raise FormatError(f"{path}: models[{i}].id must be a non-empty string")
        if mid in seen:
            raise FormatError(f"{path}: duplicate model id {mid!r}")
        seen.add(mid)
        feature_file = entry.get("feature_file")
        if not isinstance(feature_file, str):
            raise FormatError(f"{path}: models[{i}].feature_file must be a string")
        truth = entry.get("truth")
        if truth is not None and not isinstance(truth, (int, float)):
            raise FormatError(f"{path}: models[{i}].truth must be a number")
        resolved = (base / feature_file).resolve()
        if not resolved.exists():
            raise InputError(f"{path}: feature file for {mid!r} does not exist: {resolved}")
        models.append(
            ManifestModel(model_id=mid, feature_file=resolved, truth=None if truth is None else float(truth))
        )

    labels_path = (base / labels_file).resolve()
    if not labels_path.exists():
        raise InputError(f"{path}: labels file does not exist: {labels_path}")
    return HubManifest(
        dataset=dataset,
        task_kind=kind,
        labels_file=labels_path,
        num_classes=num_classes,
        truth_direction=direction,
        models=tuple(models),
    )


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2), encoding="utf-8")


# ---------------------------------------------------------------------------
# predictive head dumps
# ---------------------------------------------------------------------------


def _embed(matrix: np.ndarray) -> str:
    return base64.b64encode(dump_matrix(matrix)).decode("ascii")


def _extract(doc: dict, key: str, source: str) -> np.ndarray:
    blob = doc.get("matrices", {}).get(key)
    if not isinstance(blob, str):
        raise FormatError(f"{source}: head dump is missing matrix {key!r}")
    try:
        raw = base64.b64decode(blob.encode("ascii"), validate=True)
    except Exception as exc:
        raise FormatError(f"{source}: matrix {key!r} is not valid base64") from exc
    return load_matrix(raw, source=f"{source}#{key}")


def write_head(path, head: PredictiveHead) -> None:
    """Dump a predictive head: JSON header with PTMF-embedded matrices."""
    doc = {
        "format": HEAD_FORMAT_NAME,
        "version": HEAD_VERSION,
        "model_id": head.model_id,
        "feature_dim": head.feature_dim,
        "dimension_indices": list(head.dimension_indices),
        "alpha": [float(a) for a in head.alpha_star],
        "beta": [float(b) for b in head.beta_star],
        "feature_hash": head.feature_hash,
        "matrices": {
            "weights": _embed(head.weights),
            "right_vectors": _embed(head.right_vectors),
            "singular_values": _embed(head.singular_values[:, None]),
        },
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def read_head(path) -> PredictiveHead:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != HEAD_FORMAT_NAME:
        raise FormatError(f"{path}: not a {HEAD_FORMAT_NAME} file")
    if doc.get("version") != HEAD_VERSION:
        raise FormatError(f"{path}: unsupported head version {doc.get('version')}")
    for key in ("model_id", "feature_dim", "dimension_indices", "alpha", "beta", "feature_hash"):
        if key not in doc:
            raise FormatError(f"{path}: head dump is missing {key!r}")
    weights = _extract(doc, "weights", str(path))
    right_vectors = _extract(doc, "right_vectors", str(path))
    singular_values = _extract(doc, "singular_values", str(path))[:, 0]
    return PredictiveHead(
        model_id=str(doc["model_id"]),
        feature_dim=int(doc["feature_dim"]),
        dimension_indices=tuple(int(i) for i in doc["dimension_indices"]),
        weights=weights,
        alpha_star=np.asarray(doc["alpha"], dtype=np.float64),
        beta_star=np.asarray(doc["beta"], dtype=np.float64),
        right_vectors=right_vectors,
        singular_values=singular_values,
        feature_hash=str(doc["feature_hash"]),
    )
