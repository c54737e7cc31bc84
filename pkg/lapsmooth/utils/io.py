"""
File input/output helpers: numeric CSV tables, JSON documents and run manifests.
"""

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from ..exceptions import InputError
from .validators import validate_file_path


def read_matrix_csv(file_path: str) -> np.ndarray:
    """
    Read a headerless numeric CSV into an (n, d) matrix.

    Args:
        file_path: Path to the CSV (one row per point, d columns)

    Returns:
        Float matrix with one row per line
    """
    if not validate_file_path(str(file_path)):
        raise InputError(f"Invalid or non-existent file: {file_path}")

    rows: List[List[float]] = []
    with open(file_path, "r", newline="") as handle:
        for line_number, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise InputError(f"{file_path}:{line_number}: non-numeric value in {row}")

    if not rows:
        raise InputError(f"{file_path} contains no rows")
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise InputError(f"{file_path} has ragged rows (widths {sorted(widths)})")
    return np.asarray(rows, dtype=np.float64)


def read_vector_csv(file_path: str) -> np.ndarray:
    """Read a single-column headerless CSV into a vector."""
    matrix = read_matrix_csv(file_path)
    if matrix.shape[1] != 1:
        raise InputError(f"{file_path} must have exactly one column, found {matrix.shape[1]}")
    return matrix[:, 0]


def write_matrix_csv(file_path: str, matrix: np.ndarray) -> Path:
    """Write a matrix (or vector) as headerless CSV with round-trip precision."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    array = np.asarray(matrix, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for row in array:
            writer.writerow([repr(float(value)) for value in row])
    return path


def write_table_csv(
    file_path: str,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """Write a CSV table with a header line."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])
    return path


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_json(file_path: str, document: Any) -> Path:
    """Write a JSON document with sorted keys and a trailing newline."""
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as handle:
        json.dump(document, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write("\n")
    return path


def read_json(file_path: str) -> Any:
    """Read a JSON document."""
    if not validate_file_path(str(file_path)):
        raise InputError(f"Invalid or non-existent file: {file_path}")
    with open(file_path, "r") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as e:
            raise InputError(f"{file_path} is not valid JSON: {e}")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def content_hash(file_path: str) -> str:
    """Git-style blob hash: sha1 over b"blob <size>\\0" followed by the file bytes."""
    data = Path(file_path).read_bytes()
    digest = hashlib.sha1()
    digest.update(f"blob {len(data)}\0".encode("ascii"))
    digest.update(data)
    return digest.hexdigest()


def write_manifest(
    out_dir: str,
    config: Mapping[str, Any],
    files: Iterable[Path],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write manifest.json echoing the resolved configuration and hashing outputs.

    The manifest never hashes itself.
    """
    out_path = Path(out_dir)
    manifest_path = out_path / "manifest.json"
    hashes = {}
    for file_path in sorted({Path(f) for f in files}):
        if file_path.resolve() == manifest_path.resolve():
            continue
        hashes[file_path.name] = content_hash(str(file_path))

    document: Dict[str, Any] = {
        "config": dict(config),
        "outputs": hashes,
    }
    if extra:
        document.update(extra)
    return write_json(str(manifest_path), document)
