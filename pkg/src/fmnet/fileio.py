"""Binary file formats.

FMT1 tensor container: magic "FMT1", u32 rank, rank x u64 extents, u8 dtype
tag (0 = f64, 1 = f32, 2 = complex-f64 interleaved re,im), then the raw
little-endian payload.

PGM (P5) and PPM (P6) carry grayscale masks and color inputs with maxval
255; pixels map to [0, 1] via /255 and back via round(x*255) with clamping.

Checkpoints concatenate FMT1 records behind a JSON manifest listing
parameter names, shapes, and byte offsets (plus the model config).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .fourier import ComplexTensor
from .tensor import Tensor

_MAGIC = b"FMT1"
_TAG_F64, _TAG_F32, _TAG_C128 = 0, 1, 2


class ParseError(ValueError):
    def __init__(self, path, offset: int, message: str):
        super().__init__(f"{path}: byte {offset}: {message}")
        self.offset = offset


# -- FMT1 -----------------------------------------------------------------------


def fmt1_bytes(t) -> bytes:
    """Serialize a Tensor or ComplexTensor to an FMT1 record."""
    if isinstance(t, ComplexTensor):
        arr = t.to_numpy().astype(np.complex128)
        tag = _TAG_C128
        payload = np.ascontiguousarray(arr).view(np.float64)
    else:
        arr = t.data if isinstance(t, Tensor) else np.asarray(t)
        if arr.dtype == np.float32:
            tag = _TAG_F32
        else:
            arr = arr.astype(np.float64, copy=False)
            tag = _TAG_F64
        payload = np.ascontiguousarray(arr)
    head = _MAGIC + struct.pack("<I", arr.ndim)
    head += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    head += struct.pack("<B", tag)
    return head + payload.astype(payload.dtype.newbyteorder("<"), copy=False).tobytes()


def fmt1_parse(buf: bytes, path="<buffer>"):
    """Parse one FMT1 record; returns (tensor, bytes_consumed)."""
    if buf[:4] != _MAGIC:
        raise ParseError(path, 0, f"bad magic {buf[:4]!r}, expected {_MAGIC!r}")
    off = 4
    if len(buf) < off + 4:
        raise ParseError(path, off, "truncated rank field")
    (rank,) = struct.unpack_from("<I", buf, off)
    off += 4
    if rank > 32:
        raise ParseError(path, 4, f"implausible rank {rank}")
    if len(buf) < off + 8 * rank:
        raise ParseError(path, off, "truncated extents")
    shape = struct.unpack_from(f"<{rank}Q", buf, off)
    off += 8 * rank
    if len(buf) < off + 1:
        raise ParseError(path, off, "truncated dtype tag")
    tag = buf[off]
    off += 1
    count = int(np.prod(shape, dtype=np.int64)) if rank else 1
    if tag == _TAG_F64:
        nbytes, dtype = 8 * count, "<f8"
    elif tag == _TAG_F32:
        nbytes, dtype = 4 * count, "<f4"
    elif tag == _TAG_C128:
        nbytes, dtype = 16 * count, "<f8"
    else:
        raise ParseError(path, off - 1, f"unknown dtype tag {tag}")
    if len(buf) < off + nbytes:
        raise ParseError(path, off, f"truncated payload: need {nbytes} bytes, "
                                    f"have {len(buf) - off}")
    if tag == _TAG_C128:
        flat = np.frombuffer(buf, dtype=dtype, count=2 * count, offset=off)
        re = flat[0::2].reshape(shape).copy()
        im = flat[1::2].reshape(shape).copy()
        tensor = ComplexTensor(Tensor(re), Tensor(im))
    else:
        arr = np.frombuffer(buf, dtype=dtype, count=count, offset=off).reshape(shape)
        tensor = Tensor(arr.astype(arr.dtype.newbyteorder("="), copy=True))
    return tensor, off + nbytes


def write_fmt1(path, t):
    Path(path).write_bytes(fmt1_bytes(t))


def read_fmt1(path):
    tensor, _ = fmt1_parse(Path(path).read_bytes(), path=path)
    return tensor


# -- PGM / PPM ------------------------------------------------------------------


def _parse_netpbm_header(buf: bytes, path, magic: bytes):
    if buf[:2] != magic:
        raise ParseError(path, 0, f"bad magic {buf[:2]!r}, expected {magic!r}")
    fields = []
    off = 2
    while len(fields) < 3:
        while off < len(buf) and buf[off:off + 1].isspace():
            off += 1
        if off < len(buf) and buf[off:off + 1] == b"#":
            while off < len(buf) and buf[off] != 0x0A:
                off += 1
            continue
        start = off
        while off < len(buf) and not buf[off:off + 1].isspace():
            off += 1
        token = buf[start:off]
        if not token.isdigit():
            raise ParseError(path, start, f"expected integer header field, got {token!r}")
        fields.append(int(token))
    if off >= len(buf):
        raise ParseError(path, off, "missing whitespace after maxval")
    off += 1  # single whitespace byte separates header from payload
    w, h, maxval = fields
    if maxval != 255:
        raise ParseError(path, off, f"only maxval 255 is supported, got {maxval}")
    if w < 1 or h < 1:
        raise ParseError(path, 2, f"bad dimensions {w}x{h}")
    return w, h, off


def read_pgm(path) -> np.ndarray:
    """Binary P5 grayscale -> [H, W] float64 in [0, 1]."""
    buf = Path(path).read_bytes()
    w, h, off = _parse_netpbm_header(buf, path, b"P5")
    if len(buf) - off < w * h:
        raise ParseError(path, off, f"truncated payload: need {w * h} bytes, "
                                    f"have {len(buf) - off}")
    pix = np.frombuffer(buf, dtype=np.uint8, count=w * h, offset=off)
    return pix.reshape(h, w).astype(np.float64) / 255.0


def write_pgm(path, img: np.ndarray):
    arr = np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    if arr.ndim != 2:
        raise ValueError(f"PGM wants [H, W], got {arr.shape}")
    h, w = arr.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + arr.tobytes())


def read_ppm(path) -> np.ndarray:
    """Binary P6 color -> [3, H, W] float64 in [0, 1]."""
    buf = Path(path).read_bytes()
    w, h, off = _parse_netpbm_header(buf, path, b"P6")
    if len(buf) - off < 3 * w * h:
        raise ParseError(path, off, f"truncated payload: need {3 * w * h} bytes, "
                                    f"have {len(buf) - off}")
    pix = np.frombuffer(buf, dtype=np.uint8, count=3 * w * h, offset=off)
    return pix.reshape(h, w, 3).transpose(2, 0, 1).astype(np.float64) / 255.0


def write_ppm(path, img: np.ndarray):
    arr = np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ValueError(f"PPM wants [3, H, W], got {arr.shape}")
    _, h, w = arr.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode()
                           + arr.transpose(1, 2, 0).tobytes())


# -- checkpoints ------------------------------------------------------------------


def save_checkpoint(path, model, config_dict: dict):
    entries = []
    blobs = []
    offset = 0
    for name, param in model.named_params():
        blob = fmt1_bytes(param)
        entries.append({"name": name, "shape": list(param.shape),
                        "offset": offset, "length": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    manifest = json.dumps({"config": config_dict, "params": entries}).encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(manifest)))
        fh.write(manifest)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path):
    """Returns (config_dict, {name: ndarray})."""
    buf = Path(path).read_bytes()
    if len(buf) < 8:
        raise ParseError(path, 0, "truncated manifest length")
    (mlen,) = struct.unpack_from("<Q", buf, 0)
    manifest = json.loads(buf[8:8 + mlen].decode())
    base = 8 + mlen
    params = {}
    for entry in manifest["params"]:
        start = base + entry["offset"]
        tensor, used = fmt1_parse(buf[start:start + entry["length"]], path=path)
        if used != entry["length"]:
            raise ParseError(path, start, f"record length mismatch for {entry['name']}")
        params[entry["name"]] = tensor.data
    return manifest["config"], params


def restore_model(model, params: dict):
    for name, param in model.named_params():
        if name not in params:
            raise KeyError(f"checkpoint missing parameter {name}")
        loaded = params[name]
        if tuple(loaded.shape) != param.shape:
            raise ValueError(f"shape mismatch for {name}: {loaded.shape} vs {param.shape}")
        param.data[...] = loaded
