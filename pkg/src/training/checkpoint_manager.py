"""Binary checkpoints: magic, version, JSON manifest, raw little-endian tensors.

Layout::

    b"SENC" | u32 version | u64 manifest length | manifest (UTF-8 JSON) | data

The manifest lists ``(name, dtype, shape)`` for each tensor in data order and
carries the run config, decoder names, optimizer scalars, the flip/mask
random state and the step counter. JSON is written with sorted keys and
fixed separators, so saving a loaded checkpoint reproduces the same bytes.
"""

import json
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from src import cli_logging as log
from src.config.config_models import RunConfig
from src.errors import CheckpointError, ContractError
from src.model.senet import SenetModel
from src.training.optim import OptimizerState

MAGIC = b"SENC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQ")
_MOMENT_PREFIXES = ("opt.m.", "opt.v.")
_DTYPES = {"float32": "<f4", "float64": "<f8"}


@dataclass
class Checkpoint:
    """Everything needed to rebuild a model and resume its training."""

    config: Dict[str, Any]
    decoders: List[str]
    tensors: "OrderedDict[str, np.ndarray]"
    optimizer_t: int = 0
    optimizer_hyper: Dict[str, float] = field(default_factory=dict)
    rng_state: Optional[Dict[str, Any]] = None
    step: int = 0
    epoch: int = 0
    version: int = FORMAT_VERSION

    @property
    def params(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((k, v) for k, v in self.tensors.items() if not k.startswith(_MOMENT_PREFIXES))

    def run_config(self) -> RunConfig:
        return RunConfig.from_dict(self.config)

    def optimizer_state(self) -> Optional[OptimizerState]:
        if not any(k.startswith("opt.m.") for k in self.tensors):
            return None
        state = OptimizerState(t=self.optimizer_t, **self.optimizer_hyper)
        for name in self.params:
            state.m[name] = self.tensors[f"opt.m.{name}"].copy()
            state.v[name] = self.tensors[f"opt.v.{name}"].copy()
        return state


def build_checkpoint(
    model: SenetModel,
    config: RunConfig,
    optimizer: Optional[OptimizerState] = None,
    rng_state: Optional[Dict[str, Any]] = None,
    step: int = 0,
    epoch: int = 0,
) -> Checkpoint:
    tensors: "OrderedDict[str, np.ndarray]" = OrderedDict(model.params.state_dict())
    hyper: Dict[str, float] = {}
    t = 0
    if optimizer is not None:
        for name in model.params:
            tensors[f"opt.m.{name}"] = optimizer.m[name].copy()
        for name in model.params:
            tensors[f"opt.v.{name}"] = optimizer.v[name].copy()
        hyper = {"beta1": optimizer.beta1, "beta2": optimizer.beta2, "eps": optimizer.eps}
        t = optimizer.t
    return Checkpoint(
        config=config.to_flat_dict(),
        decoders=list(model.decoders),
        tensors=tensors,
        optimizer_t=t,
        optimizer_hyper=hyper,
        rng_state=rng_state,
        step=step,
        epoch=epoch,
    )


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    entries = []
    chunks = []
    for name, array in ckpt.tensors.items():
        dtype = str(array.dtype)
        if dtype not in _DTYPES:
            raise CheckpointError(f"{name}: unsupported dtype {dtype}")
        entries.append({"name": name, "dtype": dtype, "shape": list(array.shape)})
        chunks.append(np.ascontiguousarray(array, dtype=_DTYPES[dtype]).tobytes())
    manifest = {
        "version": ckpt.version,
        "config": ckpt.config,
        "decoders": ckpt.decoders,
        "tensors": entries,
        "optimizer": {"t": ckpt.optimizer_t, **ckpt.optimizer_hyper},
        "rng": ckpt.rng_state,
        "counters": {"step": ckpt.step, "epoch": ckpt.epoch},
    }
    text = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _HEADER.pack(MAGIC, FORMAT_VERSION, len(text)) + text + b"".join(chunks)


def save_checkpoint(path: Union[str, Path], ckpt: Checkpoint) -> Path:
    """Write atomically through a sibling temp file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp = path.with_suffix(path.suffix + ".tmp")
    try:
        temp.write_bytes(encode_checkpoint(ckpt))
        temp.replace(path)
    finally:
        if temp.exists():
            temp.unlink()
    return path


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> Checkpoint:
    if len(blob) < _HEADER.size:
        raise CheckpointError(f"{source}: truncated header")
    magic, version, length = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"{source}: bad magic {magic!r}, not a checkpoint")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{source}: format version {version} is not supported (expected {FORMAT_VERSION})")
    start = _HEADER.size
    if len(blob) < start + length:
        raise CheckpointError(f"{source}: truncated manifest")
    try:
        manifest = json.loads(blob[start : start + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source}: unreadable manifest: {e}") from None

    offset = start + length
    tensors: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for entry in manifest.get("tensors", []):
        name, dtype, shape = entry["name"], entry["dtype"], tuple(entry["shape"])
        if dtype not in _DTYPES:
            raise CheckpointError(f"{source}: {name} has unsupported dtype {dtype}")
        count = int(np.prod(shape, dtype=np.int64))
        nbytes = count * np.dtype(_DTYPES[dtype]).itemsize
        if offset + nbytes > len(blob):
            raise CheckpointError(f"{source}: truncated data for {name}")
        raw = np.frombuffer(blob, dtype=_DTYPES[dtype], count=count, offset=offset)
        tensors[name] = raw.astype(dtype).reshape(shape)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{source}: {len(blob) - offset} trailing bytes after tensor data")

    optimizer = dict(manifest.get("optimizer", {}))
    counters = manifest.get("counters", {})
    return Checkpoint(
        config=manifest.get("config", {}),
        decoders=list(manifest.get("decoders", [])),
        tensors=tensors,
        optimizer_t=int(optimizer.pop("t", 0)),
        optimizer_hyper=optimizer,
        rng_state=manifest.get("rng"),
        step=int(counters.get("step", 0)),
        epoch=int(counters.get("epoch", 0)),
        version=version,
    )


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"{path}: cannot read checkpoint: {e}") from None
    return decode_checkpoint(blob, str(path))


def restore_model(ckpt: Checkpoint, strict: bool = True) -> SenetModel:
    """Rebuild the model a checkpoint describes and load its parameters.

    With ``strict`` false, parameters absent from the file keep their fresh
    initial values, so external weights for a compatible subset can be
    imported. Names the model does not have are always rejected.

    Raises:
        CheckpointError: on unknown names, shape mismatches and, when strict,
            absent parameters.
    """
    cfg = ckpt.run_config()
    model = SenetModel(cfg.model, ckpt.decoders or ("decoder",))
    try:
        missing = model.params.load_arrays(ckpt.params, strict=strict)
    except ContractError as e:
        raise CheckpointError(str(e)) from None
    if missing:
        log.verbose(f"{len(missing)} parameter(s) kept their initial values")
    return model
