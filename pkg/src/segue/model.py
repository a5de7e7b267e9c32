"""Sequence-model parameter containers and the versioned binary model file.

File layout (little-endian throughout):

    magic   4 bytes  b"SGM1" (the trailing digit is the format version)
    header  4 x u32  num_layers, hidden_size, dimension, context_length (0 = unset)
    blocks  one per parameter, canonical order (see ``SequenceModel.parameter_items``):
            u32 element count, then count float64 values, row-major

The numeric payload is raw float64, so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SGM1"

# Gate order is part of the file format and of every canonical parameter walk.
GATES = ("input", "forget", "output", "candidate")


class ModelFormatError(ValueError):
    """A model file or model structure violates the format contract."""


class ModelVersionError(ModelFormatError):
    """The file magic names a format version this code does not read."""


class ModelShapeError(ModelFormatError):
    """Recorded shapes are internally inconsistent."""


class ModelCorruptError(ModelFormatError):
    """The file is truncated, has trailing bytes, or is not a model file."""


@dataclass
class LstmLayerParams:
    """Per-gate weights for one LSTM layer.

    Each dict maps a gate name from ``GATES`` to an array: ``w_x`` input
    weights (H, in_dim), ``w_h`` recurrent weights (H, H), ``bias`` (H,).
    """

    w_x: dict[str, np.ndarray]
    w_h: dict[str, np.ndarray]
    bias: dict[str, np.ndarray]


@dataclass
class SequenceModel:
    """A stacked LSTM plus sigmoid output projection onto the feature space.

    ``context_length`` is the window length the model was trained with; it is
    unset (None) until training and is persisted in the model file header.
    ``train_meta`` records the rest of the training configuration for
    reproducibility echoes; it is not persisted.
    """

    layers: list[LstmLayerParams]
    w_out: np.ndarray  # (D, H)
    b_out: np.ndarray  # (D,)
    context_length: int | None = None
    train_meta: dict = field(default_factory=dict)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def hidden_size(self) -> int:
        return self.w_out.shape[1]

    @property
    def dimension(self) -> int:
        return self.w_out.shape[0]

    def parameter_items(self) -> list[tuple[str, np.ndarray]]:
        """All parameter arrays in canonical (serialization) order."""
        items: list[tuple[str, np.ndarray]] = []
        for index, layer in enumerate(self.layers):
            for gate in GATES:
                items.append((f"layer{index}.{gate}.w_x", layer.w_x[gate]))
                items.append((f"layer{index}.{gate}.w_h", layer.w_h[gate]))
                items.append((f"layer{index}.{gate}.bias", layer.bias[gate]))
        items.append(("out.w", self.w_out))
        items.append(("out.b", self.b_out))
        return items

    @property
    def parameter_count(self) -> int:
        return sum(array.size for _, array in self.parameter_items())

    def validate(self) -> None:
        """Check shape consistency against (L, H, D) and finiteness of all parameters."""
        if self.num_layers < 1:
            raise ModelShapeError("model must have at least one layer")
        expected = dict(_expected_shapes(self.num_layers, self.hidden_size, self.dimension))
        for name, array in self.parameter_items():
            if array.shape != expected[name]:
                raise ModelShapeError(f"parameter '{name}': shape {array.shape} != {expected[name]}")
            if not np.isfinite(array).all():
                raise ModelShapeError(f"parameter '{name}': non-finite value")

    def copy(self) -> "SequenceModel":
        """Deep copy; parameter arrays are duplicated."""
        layers = [
            LstmLayerParams(
                w_x={g: layer.w_x[g].copy() for g in GATES},
                w_h={g: layer.w_h[g].copy() for g in GATES},
                bias={g: layer.bias[g].copy() for g in GATES},
            )
            for layer in self.layers
        ]
        return SequenceModel(
            layers=layers,
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
            context_length=self.context_length,
            train_meta=dict(self.train_meta),
        )

    def equals(self, other: "SequenceModel") -> bool:
        """Exact structural and parameter-wise equality (bitwise on values)."""
        if self.num_layers != other.num_layers or self.context_length != other.context_length:
            return False
        mine, theirs = self.parameter_items(), other.parameter_items()
        return all(
            a_name == b_name and a.shape == b.shape and np.array_equal(a, b)
            for (a_name, a), (b_name, b) in zip(mine, theirs)
        )


def _expected_shapes(num_layers: int, hidden: int, dim: int) -> list[tuple[str, tuple[int, ...]]]:
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for index in range(num_layers):
        in_dim = dim if index == 0 else hidden
        for gate in GATES:
            shapes.append((f"layer{index}.{gate}.w_x", (hidden, in_dim)))
            shapes.append((f"layer{index}.{gate}.w_h", (hidden, hidden)))
            shapes.append((f"layer{index}.{gate}.bias", (hidden,)))
    shapes.append(("out.w", (dim, hidden)))
    shapes.append(("out.b", (dim,)))
    return shapes


def save_model(model: SequenceModel, path: str | Path) -> None:
    """Write a model to the binary format; round-trips losslessly through ``load_model``."""
    model.validate()
    path = Path(path)
    with path.open("wb") as handle:
        handle.write(MAGIC)
        handle.write(
            struct.pack(
                "<4I",
                model.num_layers,
                model.hidden_size,
                model.dimension,
                model.context_length or 0,
            )
        )
        for _, array in model.parameter_items():
            block = np.ascontiguousarray(array, dtype="<f8")
            handle.write(struct.pack("<I", block.size))
            handle.write(block.tobytes())


def load_model(path: str | Path) -> SequenceModel:
    """Read a model file written by ``save_model``.

    Raises ``ModelVersionError`` for an unknown format version,
    ``ModelShapeError`` when header and block shapes disagree, and
    ``ModelCorruptError`` for truncated or otherwise unreadable files.
    """
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:3] != MAGIC[:3]:
        raise ModelCorruptError("not a sequence-model file")
    if data[:4] != MAGIC:
        raise ModelVersionError(f"unsupported model format version {data[3:4]!r}")
    offset = 4
    if len(data) < offset + 16:
        raise ModelCorruptError("truncated header")
    num_layers, hidden, dim, context = struct.unpack_from("<4I", data, offset)
    offset += 16
    if num_layers < 1 or hidden < 1 or dim < 1:
        raise ModelShapeError(f"invalid header (L={num_layers}, H={hidden}, D={dim})")

    arrays: dict[str, np.ndarray] = {}
    for name, shape in _expected_shapes(num_layers, hidden, dim):
        if len(data) < offset + 4:
            raise ModelCorruptError(f"truncated before block '{name}'")
        (count,) = struct.unpack_from("<I", data, offset)
        offset += 4
        expected = int(np.prod(shape))
        if count != expected:
            raise ModelShapeError(
                f"block '{name}': header implies {expected} elements, file records {count}"
            )
        end = offset + 8 * count
        if len(data) < end:
            raise ModelCorruptError(f"truncated inside block '{name}'")
        arrays[name] = np.frombuffer(data[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    if offset != len(data):
        raise ModelCorruptError(f"{len(data) - offset} trailing bytes after final block")

    layers = [
        LstmLayerParams(
            w_x={g: arrays[f"layer{i}.{g}.w_x"] for g in GATES},
            w_h={g: arrays[f"layer{i}.{g}.w_h"] for g in GATES},
            bias={g: arrays[f"layer{i}.{g}.bias"] for g in GATES},
        )
        for i in range(num_layers)
    ]
    model = SequenceModel(
        layers=layers,
        w_out=arrays["out.w"],
        b_out=arrays["out.b"],
        context_length=context or None,
    )
    if any(not np.isfinite(a).all() for _, a in model.parameter_items()):
        raise ModelCorruptError("non-finite parameter value")
    model.validate()
    return model
