"""Binary parameter checkpoints and their JSON sidecar.

Layout (little-endian): magic ``NGFW``, version u32, tensor count u32, then
per tensor: name length u32, UTF-8 name, rank u32, extents u64 each, values
f64 in row-major order.
"""

import json
import logging
import struct
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from src.autodiff.tensor import Tensor
from src.errors import DataError

logger = logging.getLogger(__name__)

MAGIC = b"NGFW"
VERSION = 1
SIDECAR_SUFFIX = ".json"
# Sidecar fields that may differ between otherwise identical runs.
VOLATILE_FIELDS = ("created_at",)

PathLike = Union[str, Path]


def save_checkpoint(path: PathLike, tensors: Mapping[str, Tensor]) -> None:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, tensor in tensors.items():
        encoded = name.encode("utf-8")
        values = np.ascontiguousarray(tensor.values, dtype="<f8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", values.ndim))
        chunks.append(struct.pack(f"<{values.ndim}Q", *values.shape))
        chunks.append(values.tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))
    logger.info("Wrote checkpoint with %d tensor(s) to %s", len(tensors), path)


class _Reader:
    def __init__(self, data: bytes, path: PathLike):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise DataError(f"Checkpoint {self.path} is truncated")
        chunk = self.data[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: PathLike, requires_grad: bool = True) -> dict[str, Tensor]:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise DataError(f"Checkpoint not found: {path}")
    reader = _Reader(data, path)
    if reader.take(4) != MAGIC:
        raise DataError(f"{path} is not a parameter checkpoint (bad magic)")
    version, count = reader.unpack("<II")
    if version != VERSION:
        raise DataError(f"Unsupported checkpoint version {version} in {path}")

    tensors: dict[str, Tensor] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<I")
        name = reader.take(name_len).decode("utf-8")
        (rank,) = reader.unpack("<I")
        shape = reader.unpack(f"<{rank}Q") if rank else ()
        size = int(np.prod(shape)) if rank else 1
        values = np.frombuffer(reader.take(8 * size), dtype="<f8").reshape(shape)
        tensors[name] = Tensor(values.astype(np.float64), requires_grad=requires_grad)
    if reader.pos != len(data):
        raise DataError(f"Trailing bytes after {count} tensor(s) in {path}")
    return tensors


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + SIDECAR_SUFFIX)


def save_model(path: PathLike, tensors: Mapping[str, Tensor], metadata: dict) -> None:
    """Write the checkpoint plus a JSON sidecar describing how to rebuild it."""
    save_checkpoint(path, tensors)
    sidecar = dict(metadata)
    sidecar["created_at"] = datetime.now(timezone.utc).isoformat()
    with open(sidecar_path(path), "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)


def load_model(path: PathLike) -> tuple[dict[str, Tensor], dict]:
    tensors = load_checkpoint(path)
    try:
        with open(sidecar_path(path), "r") as f:
            metadata = json.load(f)
    except FileNotFoundError:
        raise DataError(f"Model sidecar not found: {sidecar_path(path)}")
    return tensors, metadata
