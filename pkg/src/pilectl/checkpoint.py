"""Bit-exact controller checkpoint format.

Layout:
  ASCII header line  `PILECTL v1 <kind> <input_dim> <attention_input_dim|-> <norm:zscore|none>`
  one line per tensor `name rows cols`
  a blank line
  all tensor values concatenated in declared order, little-endian IEEE-754
  binary64, row-major, followed (when norm:zscore) by the 7-channel
  normalization mean and std vectors in the same encoding.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .controllers import CHANNELS, ControllerParams, ControllerSpec

MAGIC = "PILECTL"
VERSION = "v1"


class CheckpointError(Exception):
    """Malformed or inconsistent checkpoint file."""


def save_checkpoint(params: ControllerParams, path):
    path = Path(path)
    spec = params.spec
    att = "-" if spec.attention_input_dim is None else str(spec.attention_input_dim)
    norm = "norm:zscore" if params.normalized else "norm:none"
    tensors = list(params.all_tensors())
    lines = [f"{MAGIC} {VERSION} {spec.kind} {spec.input_dim} {att} {norm}"]
    for name, t in tensors:
        rows, cols = (t.value.shape if t.value.ndim == 2 else (1, t.value.shape[0]))
        lines.append(f"{name} {rows} {cols}")
    header = ("\n".join(lines) + "\n\n").encode("ascii")
    payload = b"".join(
        np.ascontiguousarray(t.value, dtype="<f8").tobytes() for _, t in tensors)
    if params.normalized:
        payload += np.asarray(params.norm_mean, dtype="<f8").tobytes()
        payload += np.asarray(params.norm_std, dtype="<f8").tobytes()
    path.write_bytes(header + payload)


def load_checkpoint(path) -> ControllerParams:
    path = Path(path)
    raw = path.read_bytes()
    sep = raw.find(b"\n\n")
    if sep < 0:
        raise CheckpointError(f"{path}: missing header terminator")
    header_lines = raw[:sep].decode("ascii", errors="replace").splitlines()
    payload = raw[sep + 2:]

    fields = header_lines[0].split()
    if len(fields) != 6 or fields[0] != MAGIC or fields[1] != VERSION:
        raise CheckpointError(f"{path}: bad magic/header line {header_lines[0]!r}")
    kind = fields[2]
    input_dim = int(fields[3])
    att_dim = None if fields[4] == "-" else int(fields[4])
    if fields[5] not in ("norm:zscore", "norm:none"):
        raise CheckpointError(f"{path}: unknown normalization tag {fields[5]!r}")
    normalized = fields[5] == "norm:zscore"
    spec = ControllerSpec(kind=kind, input_dim=input_dim, attention_input_dim=att_dim)

    shapes = []
    for line in header_lines[1:]:
        parts = line.split()
        if len(parts) != 3:
            raise CheckpointError(f"{path}: malformed tensor line {line!r}")
        shapes.append((parts[0], int(parts[1]), int(parts[2])))

    from .controllers import build_controller  # shape template
    params = build_controller(spec, np.random.default_rng(0))
    params.normalized = normalized
    expected = [(name, *(t.value.shape if t.value.ndim == 2 else (1, t.value.shape[0])))
                for name, t in params.all_tensors()]
    if shapes != expected:
        raise CheckpointError(
            f"{path}: tensor table does not match the {kind} architecture: "
            f"got {shapes}, expected {expected}")

    n_values = sum(r * c for _, r, c in shapes)
    n_norm = 2 * len(CHANNELS) if normalized else 0
    expected_bytes = 8 * (n_values + n_norm)
    if len(payload) != expected_bytes:
        raise CheckpointError(
            f"{path}: payload is {len(payload)} bytes, expected {expected_bytes}")

    values = np.frombuffer(payload, dtype="<f8")
    offset = 0
    for (_, t), (_, rows, cols) in zip(params.all_tensors(), shapes):
        n = rows * cols
        chunk = values[offset:offset + n]
        t.value[...] = chunk.reshape(t.value.shape)
        offset += n
    if normalized:
        params.norm_mean = values[offset:offset + len(CHANNELS)].copy()
        params.norm_std = values[offset + len(CHANNELS):].copy()
    return params
