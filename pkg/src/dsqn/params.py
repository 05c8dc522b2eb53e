"""Named trainable arrays and their on-disk container.

The container format is deliberately dumb: little-endian, versioned, with a
magic header and a trailing CRC32 over everything after the magic. Entries
are written sorted by name so identical contents always produce identical
bytes.
"""

from __future__ import annotations

import struct
import zlib
from typing import Iterator, Mapping

import numpy as np

from .autodiff import Tensor

MAGIC = b"DSQC"
VERSION = 1


class ParameterStore:
    """Registry of named, shaped, trainable tensors."""

    def __init__(self):
        self._tensors: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._tensors:
            raise ValueError(f"parameter {name!r} already registered")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True)
        self._tensors[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return sorted(self._tensors)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._tensors.items())

    def tensors(self) -> list[Tensor]:
        return [self._tensors[n] for n in self.names()]

    def zero_grad(self) -> None:
        for t in self._tensors.values():
            t.grad = None

    def arrays(self) -> dict[str, np.ndarray]:
        return {n: t.data for n, t in self._tensors.items()}

    def clone(self) -> "ParameterStore":
        other = ParameterStore()
        for name in self.names():
            other.add(name, self._tensors[name].data.copy())
        return other

    def copy_from(self, other: "ParameterStore") -> None:
        """Overwrite every value with a bit-identical copy from `other`."""
        if self.names() != other.names():
            mine, theirs = set(self._tensors), set(other._tensors)
            raise ValueError(
                f"parameter name mismatch: only-here={sorted(mine - theirs)} only-there={sorted(theirs - mine)}"
            )
        for name, t in self._tensors.items():
            src = other._tensors[name]
            if t.data.shape != src.data.shape:
                raise ValueError(
                    f"parameter {name!r} shape mismatch: {t.data.shape} vs {src.data.shape}"
                )
            t.data = src.data.copy()


def save_arrays(path, arrays: Mapping[str, np.ndarray]) -> None:
    """Write named float64 arrays to the versioned binary container."""
    body = bytearray()
    body += struct.pack("<II", VERSION, len(arrays))
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype=np.float64)
        encoded = name.encode("utf-8")
        body += struct.pack("<H", len(encoded))
        body += encoded
        body += struct.pack("<B", arr.ndim)
        body += struct.pack(f"<{arr.ndim}I", *arr.shape)
        body += arr.astype("<f8").tobytes()
    crc = zlib.crc32(bytes(body)) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(body)
        fh.write(struct.pack("<I", crc))


def load_arrays(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:4]!r}")
    body, (crc,) = blob[4:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise ValueError(f"{path}: checksum mismatch")
    version, count = struct.unpack_from("<II", body, 0)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported container version {version}")
    offset = 8
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", body, offset)
        offset += 2
        name = body[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", body, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", body, offset)
        offset += 4 * ndim
        n = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(body, dtype="<f8", count=n, offset=offset).reshape(shape)
        offset += 8 * n
        out[name] = arr.astype(np.float64)
    return out


def store_from_arrays(arrays: Mapping[str, np.ndarray]) -> ParameterStore:
    store = ParameterStore()
    for name in sorted(arrays):
        store.add(name, arrays[name])
    return store
