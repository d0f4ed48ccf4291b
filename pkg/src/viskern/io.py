"""Raw dataset format: a JSON descriptor plus a raw little-endian float32 file.

The descriptor holds {"dims", "components", "dtype", "origin", "spacing"};
the raw file is exactly nx*ny*nz*components*4 bytes.  The raw file sits next
to the descriptor with the same stem and a .raw suffix.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .field import Dims, StructuredField


class DatasetError(Exception):
    """Problem with a raw dataset descriptor or payload."""


class DatasetFormatError(DatasetError):
    """Descriptor is malformed or declares an unsupported layout."""


class DatasetSizeError(DatasetError):
    """Raw payload size does not match the descriptor."""


def raw_path_for(descriptor_path) -> Path:
    return Path(descriptor_path).with_suffix(".raw")


def load_field(descriptor_path) -> StructuredField:
    """Load a field from a JSON descriptor and its sidecar .raw file."""
    descriptor_path = Path(descriptor_path)
    with open(descriptor_path) as fh:  # missing file -> FileNotFoundError
        try:
            desc = json.load(fh)
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"{descriptor_path}: invalid JSON: {e}") from e

    for key in ("dims", "components", "dtype"):
        if key not in desc:
            raise DatasetFormatError(f"{descriptor_path}: missing key {key!r}")
    if desc["dtype"] != "f32":
        raise DatasetFormatError(
            f"{descriptor_path}: unsupported dtype {desc['dtype']!r} (only f32)"
        )
    try:
        dims = Dims(*(int(n) for n in desc["dims"]))
    except (TypeError, ValueError) as e:
        raise DatasetFormatError(f"{descriptor_path}: bad dims: {e}") from e
    components = int(desc["components"])
    if components not in (1, 3):
        raise DatasetFormatError(
            f"{descriptor_path}: components must be 1 or 3, got {components}"
        )
    origin = tuple(float(x) for x in desc.get("origin", (0.0, 0.0, 0.0)))
    spacing = tuple(float(x) for x in desc.get("spacing", (1.0, 1.0, 1.0)))

    raw_path = raw_path_for(descriptor_path)
    data = raw_path.read_bytes()  # missing file -> FileNotFoundError
    expected = dims.num_points * components * 4
    if len(data) != expected:
        raise DatasetSizeError(
            f"{raw_path}: {len(data)} bytes, expected {expected}"
        )
    values = np.frombuffer(data, dtype="<f4")
    return StructuredField(dims, values, components=components,
                           origin=origin, spacing=spacing)


def save_field(f: StructuredField, descriptor_path) -> Path:
    """Write descriptor JSON and sidecar .raw; returns the descriptor path."""
    descriptor_path = Path(descriptor_path)
    desc = {
        "dims": list(f.dims.as_tuple()),
        "components": f.components,
        "dtype": "f32",
        "origin": list(f.origin),
        "spacing": list(f.spacing),
    }
    descriptor_path.parent.mkdir(parents=True, exist_ok=True)
    with open(descriptor_path, "w") as fh:
        json.dump(desc, fh, indent=2)
        fh.write("\n")
    raw_path_for(descriptor_path).write_bytes(
        np.ascontiguousarray(f.values, dtype="<f4").tobytes()
    )
    return descriptor_path
