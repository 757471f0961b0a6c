"""Writers for the scoring engine's on-disk formats.

Implemented against the documented byte layout (see the engine's
docs/formats.md) rather than by importing the engine: the formats are the
integration contract, and any extraction stack must be able to produce
them standalone.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"PTMF"
VERSION = 1
HEADER = struct.Struct("<4sIQQB")
ELEMENT_FLOAT64 = 1
ELEMENT_FLOAT32 = 2


def write_matrix(path, matrix: np.ndarray, element_type: str = "float64") -> None:
    """Write one real matrix as a PTMF file (row-major, little-endian)."""
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise ValueError(f"PTMF stores non-empty 2-D matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    if element_type == "float64":
        tag, dtype = ELEMENT_FLOAT64, "<f8"
    elif element_type == "float32":
        tag, dtype = ELEMENT_FLOAT32, "<f4"
    else:
        raise ValueError(f"unsupported element type {element_type!r}")
    payload = np.ascontiguousarray(a, dtype=dtype).tobytes()
    header = HEADER.pack(MAGIC, VERSION, a.shape[0], a.shape[1], tag)
    Path(path).write_bytes(header + payload)


def write_class_labels(path, indices) -> None:
    """Write classification labels as a comma-separated index list."""
    idx = np.asarray(indices)
    if idx.ndim != 1:
        raise ValueError("class labels must be 1-D")
    Path(path).write_text(",".join(str(int(i)) for i in idx), encoding="ascii")


def write_manifest(
    path,
    dataset: str,
    labels_file: str,
    num_classes: int | None,
    models: list[dict],
    task_kind: str = "classification",
    truth_direction: str = "higher_better",
) -> None:
    task = {"kind": task_kind, "labels_file": labels_file}
    if num_classes is not None:
        task["num_classes"] = int(num_classes)
    doc = {
        "dataset": dataset,
        "task": task,
        "truth_direction": truth_direction,
        "models": models,
    }
    Path(path).write_text(json.dumps(doc, indent=2), encoding="utf-8")
