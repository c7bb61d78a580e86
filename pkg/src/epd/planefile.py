"""Raw binary plane files with a JSON sidecar, plus PGM ingestion for labels.

A plane file is a pair of files: the payload at ``path`` holding raw
little-endian, channel-planar, row-major samples, and a sidecar at
``path + ".json"`` describing it:

    {"height": H, "width": W, "channels": C,
     "dtype": "u8" | "i16" | "f64",
     "byte_order": "little-endian",
     "semantic": "hard-label" | "soft-label" | "image-hu" | "image-norm",
     "num_classes": C_total}            # hard-label only

The format is deliberately codec-free so round trips are bit-exact. Hard
labels can additionally be read from binary 8-bit PGM (P5), where the gray
value is the class index and maxval is the largest index (so C = maxval + 1).
"""
from __future__ import annotations

import json
import os
from typing import Union

import numpy as np

from .core import (
    HardLabelMap,
    ImagePlane,
    MultiChannelImage,
    SoftLabelMap,
    ValidationError,
    validate,
)

__all__ = ["load", "save", "load_pgm", "sidecar_path"]

PlaneObject = Union[HardLabelMap, SoftLabelMap, ImagePlane, MultiChannelImage]

_DTYPES = {"u8": np.dtype("u1"), "i16": np.dtype("<i2"), "f64": np.dtype("<f8")}
_SEMANTICS = ("hard-label", "soft-label", "image-hu", "image-norm")


def sidecar_path(path: str) -> str:
    return path + ".json"


def _read_sidecar(path: str) -> dict:
    try:
        with open(sidecar_path(path), "r", encoding="ascii") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"missing sidecar {sidecar_path(path)}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed sidecar {sidecar_path(path)}: {exc}") from None
    for key in ("height", "width", "channels", "dtype", "byte_order", "semantic"):
        if key not in meta:
            raise ValidationError(f"sidecar missing field {key!r}")
    if meta["dtype"] not in _DTYPES:
        raise ValidationError(f"unknown dtype {meta['dtype']!r}; expected one of {list(_DTYPES)}")
    if meta["byte_order"] != "little-endian":
        raise ValidationError(f"unsupported byte order {meta['byte_order']!r}")
    if meta["semantic"] not in _SEMANTICS:
        raise ValidationError(
            f"unknown semantic {meta['semantic']!r}; expected one of {list(_SEMANTICS)}"
        )
    for key in ("height", "width", "channels"):
        if not isinstance(meta[key], int) or meta[key] < 1:
            raise ValidationError(f"sidecar field {key!r} must be a positive integer")
    return meta


def _read_payload(path: str, meta: dict) -> np.ndarray:
    dtype = _DTYPES[meta["dtype"]]
    expected = meta["height"] * meta["width"] * meta["channels"] * dtype.itemsize
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except FileNotFoundError:
        raise ValidationError(f"missing payload {path}") from None
    if len(raw) != expected:
        raise ValidationError(
            f"payload length mismatch in {path}: expected {expected} bytes, got {len(raw)}"
        )
    flat = np.frombuffer(raw, dtype=dtype)
    return flat.reshape(meta["channels"], meta["height"], meta["width"])


def load(path: str) -> PlaneObject:
    """Load a plane file into its in-memory type, validating as it goes."""
    meta = _read_sidecar(path)
    planes = _read_payload(path, meta)
    semantic = meta["semantic"]
    if semantic == "hard-label":
        if meta["channels"] != 1:
            raise ValidationError(f"hard-label must have 1 channel, got {meta['channels']}")
        if meta["dtype"] == "f64":
            raise ValidationError("hard-label payload must be integer (u8 or i16)")
        data = planes[0].astype(np.int32)
        declared = meta.get("num_classes")
        num_classes = declared if declared is not None else int(data.max()) + 1
        return HardLabelMap(data, max(int(num_classes), 2))
    if semantic == "soft-label":
        if meta["dtype"] != "f64":
            raise ValidationError("soft-label payload must be f64")
        soft = SoftLabelMap(np.moveaxis(planes, 0, 2), meta["channels"])
        check = validate(soft)
        if not check.ok:
            raise ValidationError(f"soft-label file {path}: {check}")
        return soft
    # image-hu / image-norm
    data = planes.astype(np.float64)
    if not np.isfinite(data).all():
        raise ValidationError(f"image file {path} contains non-finite values")
    if meta["channels"] == 1:
        return ImagePlane(data[0])
    return MultiChannelImage(tuple(ImagePlane(p) for p in data))


def _write(path: str, meta: dict, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(payload)
    with open(sidecar_path(path), "w", encoding="ascii") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def save(path: str, obj: PlaneObject, semantic: str | None = None) -> None:
    """Write a plane file; ``semantic`` is only needed for images (hu vs norm).

    Labels infer their semantic; hard labels choose u8 when the class count
    fits in a byte, i16 otherwise. Saving then loading reproduces the object
    exactly.
    """
    if isinstance(obj, HardLabelMap):
        if semantic not in (None, "hard-label"):
            raise ValidationError(f"hard labels save as hard-label, not {semantic!r}")
        if obj.num_classes <= 256:
            dtype_name, np_dtype = "u8", _DTYPES["u8"]
        elif obj.num_classes <= 32768:
            dtype_name, np_dtype = "i16", _DTYPES["i16"]
        else:
            raise ValidationError(f"cannot store {obj.num_classes} classes in u8/i16")
        meta = {
            "height": obj.height,
            "width": obj.width,
            "channels": 1,
            "dtype": dtype_name,
            "byte_order": "little-endian",
            "semantic": "hard-label",
            "num_classes": obj.num_classes,
        }
        _write(path, meta, obj.data.astype(np_dtype).tobytes(order="C"))
        return
    if isinstance(obj, SoftLabelMap):
        if semantic not in (None, "soft-label"):
            raise ValidationError(f"soft labels save as soft-label, not {semantic!r}")
        meta = {
            "height": obj.height,
            "width": obj.width,
            "channels": obj.num_classes,
            "dtype": "f64",
            "byte_order": "little-endian",
            "semantic": "soft-label",
        }
        planar = np.moveaxis(obj.data, 2, 0)
        _write(path, meta, np.ascontiguousarray(planar, dtype=_DTYPES["f64"]).tobytes(order="C"))
        return
    if isinstance(obj, (ImagePlane, MultiChannelImage)):
        if semantic not in ("image-hu", "image-norm"):
            raise ValidationError(
                f"images need semantic 'image-hu' or 'image-norm', got {semantic!r}"
            )
        if isinstance(obj, ImagePlane):
            planes = obj.data[None, :, :]
        else:
            planes = obj.stacked()
        meta = {
            "height": obj.height,
            "width": obj.width,
            "channels": planes.shape[0],
            "dtype": "f64",
            "byte_order": "little-endian",
            "semantic": semantic,
        }
        _write(path, meta, np.ascontiguousarray(planes, dtype=_DTYPES["f64"]).tobytes(order="C"))
        return
    raise ValidationError(f"cannot save object of type {type(obj).__name__}")


def _pgm_tokens(raw: bytes):
    """Yield header tokens of a PGM, honoring '#' comments."""
    pos = 0
    while True:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValidationError("truncated PGM header")
        yield raw[start:pos], pos


def load_pgm(path: str) -> HardLabelMap:
    """Read a binary 8-bit PGM (P5) as a hard label; C = maxval + 1."""
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens = _pgm_tokens(raw)
    magic, _ = next(tokens)
    if magic != b"P5":
        raise ValidationError(f"not a binary PGM (P5) file: magic {magic!r}")
    fields = []
    pos = 0
    for _ in range(3):
        token, pos = next(tokens)
        try:
            fields.append(int(token))
        except ValueError:
            raise ValidationError(f"bad PGM header token {token!r}") from None
    width, height, maxval = fields
    if not 0 < maxval < 256:
        raise ValidationError(f"only 8-bit PGM supported, maxval {maxval}")
    # exactly one whitespace byte separates the header from the pixels
    payload = raw[pos + 1 :]
    expected = width * height
    if len(payload) != expected:
        raise ValidationError(
            f"PGM payload length mismatch: expected {expected} bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width).astype(np.int32)
    return HardLabelMap(data, maxval + 1)
