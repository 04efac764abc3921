"""
Binary checkpoint format for MlpParams.

Layout (all little-endian):

    magic         8 bytes   b"CLMLP\\x00\\x01\\x00"
    n_layers      uint32
    normalize     uint8     1 if output_normalize
    per layer:    uint32 in_dim, uint32 out_dim, uint8 activation code
    payload       float64   W0 (row-major), b0, W1, b1, ...
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from centrolab.errors import DataError
from centrolab.numkit.mlp import Activation, Layer, MlpParams

MAGIC = b"CLMLP\x00\x01\x00"

_ACTIVATION_CODES = {
    Activation.RELU: 0,
    Activation.SIGMOID: 1,
    Activation.IDENTITY: 2,
}
_CODE_ACTIVATIONS = {code: act for act, code in _ACTIVATION_CODES.items()}


def encode_mlp(params: MlpParams) -> bytes:
    """Serialize MlpParams to checkpoint bytes."""
    header = [MAGIC, struct.pack("<IB", len(params.layers), int(params.output_normalize))]
    for layer in params.layers:
        header.append(struct.pack("<IIB", layer.in_dim, layer.out_dim, _ACTIVATION_CODES[layer.activation]))
    payload = [np.ascontiguousarray(a, dtype="<f8").tobytes() for a in params.arrays()]
    return b"".join(header + payload)


def decode_mlp(blob: bytes) -> MlpParams:
    """
    Parse checkpoint bytes.

    Raises:
        DataError: If the magic, header or payload length is wrong
    """
    if blob[:8] != MAGIC:
        raise DataError("not an MLP checkpoint (bad magic)")

    offset = 8
    n_layers, normalize = struct.unpack_from("<IB", blob, offset)
    offset += struct.calcsize("<IB")

    specs = []
    for _ in range(n_layers):
        in_dim, out_dim, code = struct.unpack_from("<IIB", blob, offset)
        offset += struct.calcsize("<IIB")
        if code not in _CODE_ACTIVATIONS:
            raise DataError(f"unknown activation code {code}")
        specs.append((in_dim, out_dim, _CODE_ACTIVATIONS[code]))

    expected = sum(i * o + o for i, o, _ in specs) * 8
    if len(blob) - offset != expected:
        raise DataError(f"payload has {len(blob) - offset} bytes, header implies {expected}")

    layers = []
    for in_dim, out_dim, activation in specs:
        weight = np.frombuffer(blob, dtype="<f8", count=in_dim * out_dim, offset=offset)
        offset += weight.nbytes
        bias = np.frombuffer(blob, dtype="<f8", count=out_dim, offset=offset)
        offset += bias.nbytes
        layers.append(
            Layer(
                weight=weight.reshape(in_dim, out_dim).astype(np.float64),
                bias=bias.astype(np.float64),
                activation=activation,
            )
        )
    return MlpParams(layers=layers, output_normalize=bool(normalize))


def save_mlp(params: MlpParams, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_mlp(params))
    return path


def load_mlp(path: Union[str, Path]) -> MlpParams:
    return decode_mlp(Path(path).read_bytes())
