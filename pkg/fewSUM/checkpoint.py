"""Saving and loading model and plug-in parameters in hdf5 format.

A checkpoint file holds the attributes ``format_version``, ``config`` (JSON),
``stage``, ``mode`` and ``sha256``, a structured ``manifest`` dataset
(see :data:`fewSUM.dtype.MANIFEST_DTYPE`) and a ``data`` dataset with the
little-endian bytes of all tensors.
Plug-in tensors are prefixed with ``"plugin."``.

A train-state file (see :func:`save_train_state`) snapshots a stage in progress:
the trainable tensors, the optimizer moments, the :mod:`torch` RNG state,
the step number and the loss history.

Index
-----
.. currentmodule:: fewSUM.checkpoint
.. autosummary::
    Checkpoint
    save_checkpoint
    load_checkpoint
    verify_checkpoint
    validate_checkpoint
    tensor_digest
    TrainState
    save_train_state
    load_train_state

API
---
.. autoclass:: Checkpoint
.. autofunction:: save_checkpoint
.. autofunction:: load_checkpoint
.. autofunction:: verify_checkpoint
.. autofunction:: validate_checkpoint
.. autofunction:: tensor_digest
.. autoclass:: TrainState
.. autofunction:: save_train_state
.. autofunction:: load_train_state

"""

import os
import json
import hashlib
from typing import Optional, NamedTuple, List, Tuple, Dict, Any, Iterable, Mapping

import h5py
import numpy as np
import torch
from torch import nn
from assertionlib import assertion
from nanoutils import PathType

from .dtype import MANIFEST_DTYPE
from .model import EncoderGenerator, ModelConfig
from .plugin import PropertyPlugin, PluginConfig

__all__ = ['Checkpoint', 'save_checkpoint', 'load_checkpoint', 'verify_checkpoint',
           'validate_checkpoint', 'tensor_digest', 'TrainState', 'save_train_state',
           'load_train_state']

FORMAT_VERSION = 1
PLUGIN_PREFIX = 'plugin.'

_DTYPES = {torch.float32: '<f4', torch.float64: '<f8'}


class Checkpoint(NamedTuple):
    """The content of a checkpoint file."""

    model: EncoderGenerator
    plugin: Optional[PropertyPlugin]
    stage: str
    mode: str
    digest: str


def _named_tensors(model: nn.Module, plugin: Optional[nn.Module]
                   ) -> List[Tuple[str, torch.Tensor]]:
    ret = [(k, v.detach()) for k, v in model.named_parameters()]
    if plugin is not None:
        ret += [(PLUGIN_PREFIX + k, v.detach()) for k, v in plugin.named_parameters()]
    return ret


def _to_bytes(tensor: torch.Tensor) -> Tuple[bytes, str]:
    code = _DTYPES.get(tensor.dtype)
    if code is None:
        raise TypeError(f"unsupported tensor dtype: {tensor.dtype!r}")
    return tensor.cpu().contiguous().numpy().astype(code, copy=False).tobytes(), code


def tensor_digest(modules: Iterable[Optional[nn.Module]]) -> str:
    """Return the sha256 hex digest of all parameters of **modules**, in registration order."""
    h = hashlib.sha256()
    for module in modules:
        if module is None:
            continue
        for name, tensor in module.named_parameters():
            h.update(name.encode())
            h.update(_to_bytes(tensor.detach())[0])
    return h.hexdigest()


def save_checkpoint(path: PathType, model: EncoderGenerator,
                    plugin: Optional[PropertyPlugin] = None,
                    stage: str = '', mode: str = 'FewSum',
                    metadata: Optional[Dict[str, Any]] = None) -> str:
    """Write **model** and, optionally, **plugin** to **path**.

    The file is written to a temporary path first and then moved into place.

    Returns
    -------
    :class:`str`
        The sha256 hex digest of the raw tensor data.

    """
    tensors = _named_tensors(model, plugin)
    manifest = np.zeros(len(tensors), dtype=MANIFEST_DTYPE)
    chunks: List[bytes] = []
    offset = 0
    for i, (name, tensor) in enumerate(tensors):
        raw, code = _to_bytes(tensor)
        manifest[i] = (name, np.asarray(tensor.shape, dtype='int64'),
                       code.encode(), offset, len(raw))
        chunks.append(raw)
        offset += len(raw)

    data = b''.join(chunks)
    digest = hashlib.sha256(data).hexdigest()
    config = {
        'model': model.cfg.as_dict(),
        'plugin': None if plugin is None else vars(plugin.cfg),
        'd_memory': None if plugin is None else plugin.d_memory,
        'metadata': metadata or {},
    }

    tmp = f'{os.fspath(path)}.tmp'
    with h5py.File(tmp, 'w') as f:
        f.attrs['format_version'] = FORMAT_VERSION
        f.attrs['config'] = json.dumps(config, sort_keys=True)
        f.attrs['stage'] = stage
        f.attrs['mode'] = mode
        f.attrs['sha256'] = digest
        f.create_dataset('manifest', data=manifest, dtype=MANIFEST_DTYPE)
        f.create_dataset('data', data=np.frombuffer(data, dtype='uint8'), dtype='uint8')
    os.replace(tmp, path)
    return digest


def validate_checkpoint(f: h5py.File) -> None:
    """Validate the structure of an open checkpoint file.

    Raises
    ------
    :exc:`AssertionError`
        Raised if the validation process fails.

    """
    for key in ('format_version', 'config', 'stage', 'mode', 'sha256'):
        assertion.contains(f.attrs.keys(), key, message=f'missing attribute {key!r}')
    assertion.eq(f.attrs['format_version'], FORMAT_VERSION, message='unsupported format version')
    assertion.contains(f.keys(), 'manifest', message="missing dataset 'manifest'")
    assertion.contains(f.keys(), 'data', message="missing dataset 'data'")
    assertion.eq(f['manifest'].dtype, MANIFEST_DTYPE, message="invalid 'manifest' dtype")


def _data_digest(f: h5py.File) -> str:
    return hashlib.sha256(f['data'][:].tobytes()).hexdigest()


def verify_checkpoint(path: PathType) -> bool:
    """Return whether **path** is a structurally valid checkpoint whose digest matches its data."""
    if not os.path.isfile(path):
        return False
    try:
        with h5py.File(path, 'r') as f:
            validate_checkpoint(f)
            return _data_digest(f) == f.attrs['sha256']
    except (OSError, AssertionError, KeyError):
        return False


def load_checkpoint(path: PathType) -> Checkpoint:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises
    ------
    :exc:`ValueError`
        Raised if the data digest does not match or if a tensor is missing,
        unknown or of the wrong shape.

    """
    with h5py.File(path, 'r') as f:
        validate_checkpoint(f)
        digest = _data_digest(f)
        if digest != f.attrs['sha256']:
            raise ValueError(f"{os.fspath(path)!r}: checksum mismatch; the file is corrupted")

        config = json.loads(f.attrs['config'])
        stage = str(f.attrs['stage'])
        mode = str(f.attrs['mode'])
        manifest = f['manifest'][:]
        data = f['data'][:].tobytes()

    model = EncoderGenerator(ModelConfig.from_dict(config['model']))
    plugin = None
    if config['plugin'] is not None:
        plugin = PropertyPlugin(PluginConfig.from_dict(config['plugin']), config['d_memory'])

    expected = dict(_named_tensors(model, plugin))
    params = dict(model.named_parameters())
    if plugin is not None:
        params.update({PLUGIN_PREFIX + k: v for k, v in plugin.named_parameters()})

    seen = set()
    with torch.no_grad():
        for name, shape, code, offset, nbytes in manifest:
            name = name.decode() if isinstance(name, bytes) else str(name)
            shape = tuple(int(i) for i in shape)
            if name not in expected:
                raise ValueError(f"{os.fspath(path)!r}: unknown tensor {name!r}")
            elif shape != tuple(expected[name].shape):
                raise ValueError(f"{os.fspath(path)!r}: tensor {name!r} has shape {shape}; "
                                 f"expected {tuple(expected[name].shape)}")
            ar = np.frombuffer(data[offset:offset + nbytes], dtype=code.decode()).reshape(shape)
            params[name].data = torch.from_numpy(ar.astype(ar.dtype.newbyteorder('=')))
            seen.add(name)

    missing = expected.keys() - seen
    if missing:
        raise ValueError(f"{os.fspath(path)!r}: missing tensors {sorted(missing)!r}")
    return Checkpoint(model, plugin, stage, mode, digest)


class TrainState(NamedTuple):
    """The content of a train-state file."""

    #: The name of the stage.
    stage: str

    #: The JSON-serialized stage settings.
    config: str

    #: The number of completed optimizer steps.
    step: int

    #: The loss on the evaluation batch before the first step.
    initial_loss: float

    #: ``(step, loss)`` pairs recorded so far.
    history: List[Tuple[int, float]]

    #: The trainable tensors.
    params: Dict[str, torch.Tensor]

    #: The ``"state"`` entry of :meth:`torch.optim.Optimizer.state_dict`.
    optimizer: Dict[int, Dict[str, torch.Tensor]]

    #: The value of :func:`torch.get_rng_state`.
    rng_state: torch.Tensor


def save_train_state(path: PathType, stage: str, config: str, step: int, initial_loss: float,
                     history: Iterable[Tuple[int, float]], params: Mapping[str, torch.Tensor],
                     optimizer: torch.optim.Optimizer) -> None:
    """Snapshot a training stage after **step** optimizer steps.

    The file is written to a temporary path first and then moved into place.

    """
    tmp = f'{os.fspath(path)}.tmp'
    with h5py.File(tmp, 'w') as f:
        f.attrs['format_version'] = FORMAT_VERSION
        f.attrs['stage'] = stage
        f.attrs['config'] = config
        f.attrs['step'] = step
        f.attrs['initial_loss'] = initial_loss
        f.create_dataset('history', data=np.array(list(history), dtype='f8').reshape(-1, 2))
        f.create_dataset('rng_state', data=torch.get_rng_state().numpy())

        group = f.create_group('params')
        for name, tensor in params.items():
            group.create_dataset(name, data=tensor.detach().cpu().numpy())

        group = f.create_group('optimizer')
        for idx, state in optimizer.state_dict()['state'].items():
            sub = group.create_group(str(idx))
            for key, value in state.items():
                ar = value.detach().cpu().numpy() if isinstance(value, torch.Tensor) else value
                sub.create_dataset(key, data=np.asarray(ar))
    os.replace(tmp, path)


def load_train_state(path: PathType) -> Optional[TrainState]:
    """Read a file written by :func:`save_train_state`.

    Returns :data:`None` if **path** does not exist or can not be read.

    """
    if not os.path.isfile(path):
        return None
    try:
        with h5py.File(path, 'r') as f:
            if f.attrs['format_version'] != FORMAT_VERSION:
                return None
            history = [(int(i), float(loss)) for i, loss in f['history'][:]]
            params = {k: torch.from_numpy(v[...]) for k, v in f['params'].items()}
            optimizer = {
                int(idx): {k: torch.as_tensor(np.asarray(v[()])) for k, v in sub.items()}
                for idx, sub in f['optimizer'].items()
            }
            return TrainState(
                stage=str(f.attrs['stage']),
                config=str(f.attrs['config']),
                step=int(f.attrs['step']),
                initial_loss=float(f.attrs['initial_loss']),
                history=history,
                params=params,
                optimizer=optimizer,
                rng_state=torch.from_numpy(f['rng_state'][:]),
            )
    except (OSError, KeyError):
        return None
