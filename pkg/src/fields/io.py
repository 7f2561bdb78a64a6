"""DFF1 grid files.

Layout: the 8-byte magic ``DFF1GRID``, little-endian uint64 n, float64 box
length L, then 3 n^3 float64 values, component-interleaved (u1 u2 u3 per
point) with x varying fastest.
"""
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from src.errors import FieldError
from src.fields.grid import GridField
from src.logging.logger import get_logger

logger = get_logger(__name__)

MAGIC = b"DFF1GRID"
_HEADER = np.dtype([("n", "<u8"), ("box", "<f8")])


def encode_grid(grid: GridField) -> bytes:
    header = np.array([(grid.n, grid.box)], dtype=_HEADER).tobytes()
    # (c, ix, iy, iz) -> (iz, iy, ix, c): C-order flattening makes c fastest, then x
    payload = np.ascontiguousarray(grid.u.transpose(3, 2, 1, 0), dtype="<f8").tobytes()
    return MAGIC + header + payload


def decode_grid(blob: bytes, origin: float = 0.0) -> GridField:
    if len(blob) < len(MAGIC) + _HEADER.itemsize or blob[:len(MAGIC)] != MAGIC:
        raise FieldError("not a DFF1 grid file (bad magic)")
    head = np.frombuffer(blob, dtype=_HEADER, count=1, offset=len(MAGIC))[0]
    n, box = int(head["n"]), float(head["box"])
    expected = 3 * n ** 3
    values = np.frombuffer(blob, dtype="<f8", offset=len(MAGIC) + _HEADER.itemsize)
    if values.size != expected:
        raise FieldError(f"DFF1 payload holds {values.size} values, expected {expected} for n={n}")
    u = values.reshape(n, n, n, 3).transpose(3, 2, 1, 0).astype(float)
    return GridField(u=np.ascontiguousarray(u), box=box, origin=origin)


def write_grid(path: Union[str, Path], grid: GridField) -> str:
    """Write a DFF1 file and return the SHA-256 of its bytes."""
    blob = encode_grid(grid)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(blob)
    digest = hashlib.sha256(blob).hexdigest()
    logger.info("grid written", path=str(path), n=grid.n, sha256=digest)
    return digest


def read_grid(path: Union[str, Path], origin: Optional[float] = None) -> GridField:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise FieldError(f"cannot read grid file {path}: {e}") from e
    sidecar = read_sidecar(path)
    if origin is None:
        origin = float(sidecar.get("origin", 0.0)) if sidecar else 0.0
    return decode_grid(blob, origin=origin)


def sidecar_path(path: Union[str, Path]) -> Path:
    return Path(str(path) + ".json")


def write_checkpoint(path: Union[str, Path], grid: GridField, info: Dict[str, Any]) -> Tuple[str, Path]:
    """DFF1 file plus a JSON sidecar (time, viscosity, config hash, origin)."""
    digest = write_grid(path, grid)
    meta = dict(info, origin=grid.origin, sha256=digest)
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return digest, side


def read_sidecar(path: Union[str, Path]) -> Optional[Dict[str, Any]]:
    side = sidecar_path(path)
    if not side.exists():
        return None
    return json.loads(side.read_text())
