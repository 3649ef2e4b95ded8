"""Bit-exact binary checkpoints.

Layout (all little-endian):
    magic "OPSC" | u32 format version | u32 x5 dims
    (vocab_size, embed_dim, hidden1, hidden2, max_len)
    | parameter tensors as row-major f64 in PARAM_ORDER | u32 CRC32 of
    everything before the checksum.
"""

import struct
import zlib

import numpy as np

from ..encoding import EmbeddingMatrix
from ..errors import CheckpointError
from .params import LstmLayerParams, ModelDims, ModelParams

MAGIC = b"OPSC"
FORMAT_VERSION = 1


def _tensor_shapes(dims: ModelDims):
    h1, h2 = dims.hidden1, dims.hidden2
    return [
        ("embedding", (dims.embed_dim, dims.vocab_size)),
        ("l1.w_x", (4 * h1, dims.embed_dim)),
        ("l1.w_h", (4 * h1, h1)),
        ("l1.b", (4 * h1,)),
        ("l2.w_x", (4 * h2, h1)),
        ("l2.w_h", (4 * h2, h2)),
        ("l2.b", (4 * h2,)),
        ("w_out", (h2,)),
        ("b_out", (1,)),
    ]


def save_checkpoint(params: ModelParams, path) -> None:
    dims = params.dims
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", FORMAT_VERSION)
    blob += struct.pack("<5I", dims.vocab_size, dims.embed_dim,
                        dims.hidden1, dims.hidden2, dims.max_len)
    arrays = dict(params.param_items())
    for name, shape in _tensor_shapes(dims):
        arr = arrays[name]
        if arr.shape != shape:
            raise CheckpointError(f"tensor {name} has shape {arr.shape}, "
                                  f"expected {shape}")
        blob += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_checkpoint(path) -> ModelParams:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}") from exc
    if len(blob) < 4 + 4 + 20 + 4:
        raise CheckpointError("checkpoint file truncated")
    if blob[:4] != MAGIC:
        raise CheckpointError("bad magic; not an opscan checkpoint")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (stored_crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CheckpointError("checksum mismatch; checkpoint corrupted")

    dims = ModelDims(*struct.unpack_from("<5I", blob, 8))
    offset = 28
    tensors = {}
    for name, shape in _tensor_shapes(dims):
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(blob) - 4:
            raise CheckpointError("checkpoint payload shorter than header dims imply")
        tensors[name] = np.frombuffer(blob, dtype="<f8", count=count,
                                      offset=offset).astype(np.float64).reshape(shape)
        offset = end
    if offset != len(blob) - 4:
        raise CheckpointError("trailing bytes after parameter tensors")

    return ModelParams(
        embedding=EmbeddingMatrix(values=tensors["embedding"].copy()),
        layer1=LstmLayerParams(tensors["l1.w_x"].copy(), tensors["l1.w_h"].copy(),
                               tensors["l1.b"].copy()),
        layer2=LstmLayerParams(tensors["l2.w_x"].copy(), tensors["l2.w_h"].copy(),
                               tensors["l2.b"].copy()),
        w_out=tensors["w_out"].copy(),
        b_out=tensors["b_out"].copy(),
        dims=dims,
    )
