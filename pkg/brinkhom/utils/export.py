"""
Atomic artifact writers.

Every file is written into a temporary sibling and moved into place with os.replace,
so an interrupted run never leaves a truncated artifact behind.
"""

import io
import logging
import os
import tempfile
from collections.abc import Iterator, Mapping, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any

import numpy as np
import orjson
import pandas as pd

from brinkhom.config import settings
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


@contextmanager
def atomic_writer(path: str | Path, binary: bool = False) -> Iterator[IO[Any]]:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        mode = "wb" if binary else "w"
        kwargs = {} if binary else {"encoding": "utf-8", "newline": "\n"}
        with os.fdopen(fd, mode, **kwargs) as handle:
            yield handle
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    """Header row, LF endings, 17 significant digits."""
    with atomic_writer(path) as handle:
        frame.to_csv(
            handle, index=False, float_format=settings.csv_float_format, lineterminator="\n"
        )
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return Path(path)


def write_rows(rows: Sequence[Mapping[str, Any]], columns: Sequence[str], path: str | Path) -> Path:
    return write_csv(pd.DataFrame(list(rows), columns=list(columns)), path)


def to_jsonable(obj: Any) -> bytes:
    return orjson.dumps(obj, option=JSON_OPTIONS, default=_default)


def _default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "model_dump"):
        return obj.model_dump(mode="json")
    raise TypeError(f"Cannot serialize {type(obj).__name__}")


def write_json(obj: Any, path: str | Path) -> Path:
    with atomic_writer(path, binary=True) as handle:
        handle.write(to_jsonable(obj))
        handle.write(b"\n")
    return Path(path)


def _format_block(values: FloatArray) -> str:
    buffer = io.StringIO()
    np.savetxt(buffer, values, fmt="%.9e")
    return buffer.getvalue()


def write_vtk_structured(
    path: str | Path,
    axes: Sequence[FloatArray],
    scalars: Mapping[str, FloatArray] | None = None,
    vectors: Mapping[str, FloatArray] | None = None,
    title: str = "brinkhom field",
) -> Path:
    """
    Legacy ASCII STRUCTURED_GRID file with point data on the tensor grid of `axes`.

    Scalars have shape (nx, ny, nz), vectors (nx, ny, nz, 3); x varies fastest in the file.
    """
    nx, ny, nz = (len(a) for a in axes)
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([g.ravel(order="F") for g in (gx, gy, gz)])
    count = points.shape[0]

    with atomic_writer(path) as handle:
        handle.write("# vtk DataFile Version 3.0\n")
        handle.write(f"{title}\n")
        handle.write("ASCII\n")
        handle.write("DATASET STRUCTURED_GRID\n")
        handle.write(f"DIMENSIONS {nx} {ny} {nz}\n")
        handle.write(f"POINTS {count} double\n")
        handle.write(_format_block(points))
        handle.write(f"POINT_DATA {count}\n")
        for name, values in (scalars or {}).items():
            handle.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            handle.write(_format_block(np.asarray(values, dtype=float).ravel(order="F")))
        for name, values in (vectors or {}).items():
            arr = np.asarray(values, dtype=float)
            flat = np.column_stack([arr[..., a].ravel(order="F") for a in range(3)])
            handle.write(f"VECTORS {name} double\n")
            handle.write(_format_block(flat))
    logger.debug(f"Wrote VTK structured grid {nx}x{ny}x{nz} to {path}")
    return Path(path)
