"""Checkpoint container: JSON manifest + raw little-endian tensor blob.

File layout: u32 LE manifest byte length, then the UTF-8 JSON manifest,
then every tensor back to back in manifest order.  The manifest records
name/shape/dtype per tensor plus a sha256 of the blob, so truncation and
bit rot surface as explicit errors instead of silently wrong weights.
Tensors are stored at full f64 so a reloaded model reproduces training
losses bit-for-bit.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .model import ModelHyper, ModelWeights
from .train import AdamState

CHECKPOINT_VERSION = 1

_LEN = struct.Struct("<I")


def save_checkpoint(weights: ModelWeights, path,
                    opt: AdamState | None = None,
                    meta: dict | None = None) -> None:
    named: list[tuple[str, np.ndarray]] = sorted(weights.tensors.items())
    if opt is not None:
        named += [(f"opt.m.{k}", v) for k, v in sorted(opt.m.items())]
        named += [(f"opt.v.{k}", v) for k, v in sorted(opt.v.items())]
    blob = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                    for _, a in named)
    manifest = {
        "version": CHECKPOINT_VERSION,
        "hyper": weights.hyper.as_dict(),
        "meta": {**weights.meta, **(meta or {})},
        "adam_t": None if opt is None else opt.t,
        "tensors": [{"name": n, "shape": list(a.shape), "dtype": "<f8"}
                    for n, a in named],
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
    }
    mbytes = json.dumps(manifest, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_LEN.pack(len(mbytes)))
        fh.write(mbytes)
        fh.write(blob)


def load_checkpoint(path):
    """-> (ModelWeights, AdamState | None)."""
    with open(path, "rb") as fh:
        head = fh.read(_LEN.size)
        if len(head) < _LEN.size:
            raise ValueError("checkpoint truncated before manifest length")
        (mlen,) = _LEN.unpack(head)
        mbytes = fh.read(mlen)
        if len(mbytes) < mlen:
            raise ValueError("checkpoint truncated inside manifest")
        try:
            manifest = json.loads(mbytes.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ValueError(f"checkpoint manifest corrupt: {exc}") from exc
        blob = fh.read()

    version = manifest.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r} "
                         f"(expected {CHECKPOINT_VERSION})")
    if hashlib.sha256(blob).hexdigest() != manifest["blob_sha256"]:
        raise ValueError("checkpoint blob checksum mismatch (corrupt file)")

    tensors: dict[str, np.ndarray] = {}
    off = 0
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 8
        if off + nbytes > len(blob):
            raise ValueError("checkpoint blob shorter than manifest claims")
        arr = np.frombuffer(blob, entry["dtype"], count, off).reshape(shape)
        tensors[entry["name"]] = arr.astype(np.float64)
        off += nbytes
    if off != len(blob):
        raise ValueError("checkpoint blob longer than manifest claims")

    model_t = {k: v for k, v in tensors.items() if not k.startswith("opt.")}
    weights = ModelWeights(model_t, ModelHyper.from_dict(manifest["hyper"]),
                           version=version, meta=dict(manifest.get("meta", {})))
    opt = None
    if manifest.get("adam_t") is not None:
        opt = AdamState(
            m={k[len("opt.m."):]: v for k, v in tensors.items()
               if k.startswith("opt.m.")},
            v={k[len("opt.v."):]: v for k, v in tensors.items()
               if k.startswith("opt.v.")},
            t=int(manifest["adam_t"]),
        )
    return weights, opt
