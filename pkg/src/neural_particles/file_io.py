"""
File I/O operations for the Neural Particle Method.

Reading user-supplied text (config files, experimental CSV) with encoding
detection, and atomic writing of every run artifact.
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import chardet
import numpy as np

from .constants import EXPERIMENT_COLUMNS, FLOAT_FORMAT

PathLike = Union[str, Path]


def detect_encoding(file_path: PathLike) -> str:
    """
    Detect the encoding of a file, trying UTF-8 first.
    Reads only a sample (64KB) to avoid loading huge files into memory.
    """
    SAMPLE_SIZE = 65536

    with open(file_path, 'rb') as f:
        raw_data = f.read(SAMPLE_SIZE)
    try:
        raw_data.decode('utf-8')
        return 'utf-8'
    except UnicodeDecodeError:
        pass

    result = chardet.detect(raw_data)
    return result.get('encoding') or 'utf-8'


def read_file_content(file_path: PathLike, encoding: Optional[str] = None) -> str:
    """
    Read a text file with automatic encoding detection.

    Raises:
        FileNotFoundError / PermissionError: propagated to the caller
    """
    if encoding is None:
        encoding = detect_encoding(file_path)
    with open(file_path, 'r', encoding=encoding, errors='replace') as f:
        text = f.read()
    # A UTF-8 BOM survives decoding with some detected codecs
    return text.lstrip('\ufeff')


def atomic_write_text(file_path: PathLike, content: str, encoding: str = 'utf-8') -> None:
    """
    Write content through a temporary file in the target directory and
    rename it into place, so readers never see a partial file.
    """
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, 'w', encoding=encoding, newline='') as f:
            f.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def format_value(value: Any) -> str:
    """Render a CSV cell; floats use 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, FLOAT_FORMAT)
    if isinstance(value, np.integer):
        return str(int(value))
    if isinstance(value, np.floating):
        return format(float(value), FLOAT_FORMAT)
    return "" if value is None else str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"Row has {len(row)} cells, expected {len(columns)}")
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_csv(file_path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    atomic_write_text(file_path, render_csv(columns, rows))


def read_csv(file_path: PathLike) -> List[Dict[str, str]]:
    """Read a headed CSV into a list of dicts (values left as strings)."""
    text = read_file_content(file_path)
    reader = csv.DictReader(io.StringIO(text))
    return [dict(row) for row in reader]


def read_experiment_csv(file_path: PathLike) -> List[tuple]:
    """
    Ingest experimental dam-break data: header ``Tstar,Zstar``.

    Returns:
        (Tstar, Zstar) pairs sorted by Tstar
    """
    rows = read_csv(file_path)
    t_key, z_key = EXPERIMENT_COLUMNS
    if rows and not set(EXPERIMENT_COLUMNS) <= set(rows[0]):
        raise ValueError(f"{file_path}: expected header '{','.join(EXPERIMENT_COLUMNS)}', got {sorted(rows[0])}")
    pairs = []
    for line, row in enumerate(rows, start=2):
        try:
            pairs.append((float(row[t_key]), float(row[z_key])))
        except (TypeError, ValueError) as e:
            raise ValueError(f"{file_path}:{line}: {e}") from e
    return sorted(pairs)


def write_json(file_path: PathLike, data: Dict[str, Any]) -> None:
    atomic_write_text(file_path, json.dumps(data, indent=2, sort_keys=True) + "\n")
