"""Minimal MetaImage (MHD + RAW) reader/writer and slice-window selection.

Only the uncompressed, detached-data subset is supported: element types
MET_SHORT, MET_USHORT, MET_FLOAT and MET_DOUBLE in either byte order.
Anything else is rejected with a :class:`VolumeFormatError`.

Voxel arrays are held as ``float64`` with shape ``(N, Y, X)``, so the
C-order flattening is x-fastest, then y, then z, matching the RAW layout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._atomic import atomic_write_bytes, atomic_write_text
from .errors import DataError

logger = logging.getLogger(__name__)

ELEMENT_TYPES = {
    "MET_SHORT": "i2",
    "MET_USHORT": "u2",
    "MET_FLOAT": "f4",
    "MET_DOUBLE": "f8",
}

KNOWN_KEYS = {
    "ObjectType",
    "NDims",
    "DimSize",
    "ElementType",
    "ElementSpacing",
    "ElementByteOrderMSB",
    "BinaryDataByteOrderMSB",
    "ElementDataFile",
    "BinaryData",
    "CompressedData",
}


class VolumeFormatError(DataError):
    pass


class SliceRangeError(DataError, IndexError):
    pass


@dataclass(frozen=True, eq=False)
class Volume:
    """A 3D scalar grid. ``data`` has shape ``(N, Y, X)``."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 3 or min(data.shape) < 1:
            raise VolumeFormatError(f"volume data must be a non-empty 3D array, got shape {data.shape}")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or not all(s > 0 and np.isfinite(s) for s in spacing):
            raise VolumeFormatError(f"spacing must be three positive reals, got {self.spacing}")
        if not np.all(np.isfinite(data)):
            raise VolumeFormatError("non-finite voxel value")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> tuple[int, int, int]:
        """(X, Y, N) in voxels."""
        n, y, x = self.data.shape
        return x, y, n

    @property
    def n_slices(self) -> int:
        return self.data.shape[0]

    @property
    def voxels(self) -> np.ndarray:
        """Flat view, x fastest."""
        return self.data.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, Volume):
            return NotImplemented
        return self.spacing == other.spacing and np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class SliceSelection:
    center_index: int
    half_window: int = 2


def _parse_header(path: Path) -> dict[str, str]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise VolumeFormatError(f"missing header: {path}") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise VolumeFormatError(f"unreadable header {path}: {exc}") from None

    header = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise VolumeFormatError(f"unparseable header line {lineno} in {path}: {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            logger.warning("ignoring unknown MetaImage key %r in %s", key, path)
        header[key] = value
        if key == "ElementDataFile":
            break  # by convention the last header key
    return header


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "1"):
        return True
    if v in ("false", "0"):
        return False
    raise VolumeFormatError(f"expected True/False, got {value!r}")


def read_metaimage(path) -> tuple[np.ndarray, tuple[float, ...]]:
    """Read an MHD header and its RAW file.

    Returns the array (axes reversed relative to DimSize, so the last axis is
    x) as float64, plus the spacing in DimSize order.
    """
    path = Path(path)
    header = _parse_header(path)

    if _parse_bool(header.get("CompressedData", "False")):
        raise VolumeFormatError("compressed data is not supported")
    if "ObjectType" in header and header["ObjectType"] != "Image":
        raise VolumeFormatError(f"unsupported ObjectType {header['ObjectType']!r}")
    for key in ("NDims", "DimSize", "ElementType", "ElementDataFile"):
        if key not in header:
            raise VolumeFormatError(f"header missing required key {key}")

    try:
        ndims = int(header["NDims"])
        dims = [int(v) for v in header["DimSize"].split()]
    except ValueError:
        raise VolumeFormatError("NDims/DimSize must be integers") from None
    if len(dims) != ndims or any(d < 1 for d in dims):
        raise VolumeFormatError(f"DimSize {dims} inconsistent with NDims={ndims}")

    if "ElementSpacing" in header:
        try:
            spacing = tuple(float(v) for v in header["ElementSpacing"].split())
        except ValueError:
            raise VolumeFormatError("ElementSpacing must be numeric") from None
        if len(spacing) != ndims:
            raise VolumeFormatError(f"ElementSpacing has {len(spacing)} entries, expected {ndims}")
    else:
        spacing = (1.0,) * ndims

    etype = header["ElementType"]
    if etype not in ELEMENT_TYPES:
        raise VolumeFormatError(f"unsupported element type {etype!r}")
    order = header.get("ElementByteOrderMSB", header.get("BinaryDataByteOrderMSB", "False"))
    dtype = np.dtype((">" if _parse_bool(order) else "<") + ELEMENT_TYPES[etype])

    datafile = header["ElementDataFile"]
    if datafile.upper() in ("LOCAL", "LIST") or " " in datafile:
        raise VolumeFormatError(f"unsupported ElementDataFile {datafile!r}; only a detached RAW file is supported")
    raw_path = path.parent / datafile
    try:
        raw = raw_path.read_bytes()
    except FileNotFoundError:
        raise VolumeFormatError(f"missing raw data: {raw_path}") from None

    count = int(np.prod(dims))
    if len(raw) != count * dtype.itemsize:
        raise VolumeFormatError(
            f"size mismatch: header declares {count} x {dtype.itemsize} bytes, raw file has {len(raw)}"
        )
    data = np.frombuffer(raw, dtype=dtype).astype(np.float64).reshape(dims[::-1])
    if not np.all(np.isfinite(data)):
        raise VolumeFormatError(f"non-finite voxel value in {raw_path}")
    return data, spacing


def write_metaimage(path, data: np.ndarray, spacing=None, element_type: str = "MET_DOUBLE") -> None:
    """Write ``data`` (last axis = x) as MHD + RAW next to each other.

    The RAW file takes the header's stem with a ``.raw`` suffix. The default
    element type is lossless for the float64 arrays this package produces.
    """
    path = Path(path)
    data = np.asarray(data)
    if element_type not in ELEMENT_TYPES:
        raise VolumeFormatError(f"unsupported element type {element_type!r}")
    dims = data.shape[::-1]
    spacing = (1.0,) * data.ndim if spacing is None else tuple(float(s) for s in spacing)
    if len(spacing) != data.ndim:
        raise VolumeFormatError("spacing length must match array rank")

    raw_name = path.with_suffix(".raw").name
    header = "\n".join(
        [
            "ObjectType = Image",
            f"NDims = {data.ndim}",
            "BinaryData = True",
            "BinaryDataByteOrderMSB = False",
            "CompressedData = False",
            "DimSize = " + " ".join(str(d) for d in dims),
            "ElementSpacing = " + " ".join(repr(s) for s in spacing),
            f"ElementType = {element_type}",
            f"ElementDataFile = {raw_name}",
        ]
    )
    raw = np.ascontiguousarray(data, dtype=np.dtype("<" + ELEMENT_TYPES[element_type])).tobytes()
    atomic_write_bytes(path.parent / raw_name, raw)
    atomic_write_text(path, header + "\n")


def load_volume(path) -> Volume:
    data, spacing = read_metaimage(path)
    if data.ndim != 3:
        raise VolumeFormatError(f"expected NDims = 3, got {data.ndim}")
    return Volume(data, spacing)


def save_volume(vol: Volume, path, element_type: str = "MET_DOUBLE") -> None:
    write_metaimage(path, vol.data, vol.spacing, element_type)


def slice_window(vol: Volume, sel: SliceSelection) -> Volume:
    """Sub-volume of slices ``max(0, u-k) .. min(N-1, u+k)``; clamped, never padded."""
    u, k = sel.center_index, sel.half_window
    if k < 0:
        raise ValueError(f"half_window must be >= 0, got {k}")
    if not 0 <= u < vol.n_slices:
        raise SliceRangeError(f"center_index {u} out of range for volume with {vol.n_slices} slices")
    lo, hi = max(0, u - k), min(vol.n_slices - 1, u + k)
    return Volume(vol.data[lo : hi + 1], vol.spacing)
