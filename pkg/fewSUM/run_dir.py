"""A module which holds the :class:`.RunDirectory` class.

Index
-----
.. currentmodule:: fewSUM
.. autosummary::
    RunDirectory
    RunManifest
    create_run_file
    validate_run_file

API
---
.. autoclass:: RunDirectory
    :members:
.. autoclass:: RunManifest
.. autofunction:: create_run_file
.. autofunction:: validate_run_file

"""

import os
import json
import textwrap
from os import getcwd, PathLike
from os.path import abspath, join
from functools import partial
from contextlib import contextmanager
from typing import (
    Optional, Union, Any, Dict, Tuple, Type, TypeVar, Mapping, Iterator, NamedTuple, List
)

import h5py
import numpy as np
from assertionlib import assertion

from .logger import logger
from .config import config_hash
from .checkpoint import verify_checkpoint
from .hdf5_log import create_hdf5_log

__all__ = ['RunDirectory', 'RunManifest', 'create_run_file', 'validate_run_file']

ST = TypeVar('ST', bound='RunDirectory')

RUN_FORMAT_VERSION = 1

RUN_DOC = """The manifest of a run directory.

Attributes
----------
stages : group
    One attribute per completed stage, holding the sha256 digest of its checkpoint.
logger : group
    The training log, see :func:`fewSUM.create_hdf5_log`.

format_version : attribute
    The version of this layout.
config_hash : attribute
    The sha256 digest of the normalized configuration of the run.
config : attribute
    The normalized configuration as JSON.
seed : attribute
    The seed of the run.

"""


class RunManifest(NamedTuple):
    """A summary of the state of a run directory."""

    dirname: str
    config_hash: str
    seed: int
    stages: Dict[str, str]
    artifacts: Dict[str, str]


def create_run_file(path: Union[str, 'PathLike[str]'], name: str = 'run.hdf5') -> str:
    """Create the run manifest (hdf5 format) in the directory **path**, if it does not exist yet.

    Returns
    -------
    :class:`str`
        The absolute path+filename of the manifest.

    """
    filename = abspath(join(path, name))
    with h5py.File(filename, 'a', libver='latest') as f:
        if 'format_version' not in f.attrs:
            f.attrs['format_version'] = RUN_FORMAT_VERSION
            f.attrs['config_hash'] = ''
            f.attrs['config'] = '{}'
            f.attrs['seed'] = -1
            f.attrs['__doc__'] = np.bytes_(RUN_DOC)
        if 'stages' not in f:
            f.create_group('stages', track_order=True)
        if 'logger' not in f:
            create_hdf5_log(f, compression='gzip')
    return filename


def validate_run_file(f: h5py.File) -> None:
    """Validate the structure of an open run manifest.

    Raises
    ------
    :exc:`AssertionError`
        Raised if the validation process fails.

    """
    for key in ('format_version', 'config_hash', 'config', 'seed'):
        assertion.contains(f.attrs.keys(), key, message=f'missing attribute {key!r}')
    assertion.eq(f.attrs['format_version'], RUN_FORMAT_VERSION,
                 message='unsupported format version')
    assertion.contains(f.keys(), 'stages', message="missing group 'stages'")
    assertion.contains(f.keys(), 'logger', message="missing group 'logger'")


class RunDirectory:
    """A directory holding all artefacts, checkpoints and the manifest of a single run."""

    __slots__ = ('__weakref__', '_dirname', '_hdf5', '_hash')

    @property
    def dirname(self) -> str:
        """Get the path+filename of the run directory."""
        return self._dirname

    @property
    def hdf5(self) -> 'partial[h5py.File]':
        """:data:`Callable[..., h5py.File]<typing.Callable>`: Get a function for opening the ``run.hdf5`` manifest."""  # noqa: E501
        return self._hdf5

    def __init__(self, path: Union[str, 'PathLike[str]', None] = None) -> None:
        """Initialize :class:`RunDirectory`, creating the directory and its manifest if needed.

        Parameters
        ----------
        path : str
            The path of the run directory; defaults to the current working directory.

        """
        self._dirname: str = abspath(path) if path is not None else getcwd()
        for sub in ('', 'checkpoints', 'summaries', 'reports'):
            os.makedirs(join(self._dirname, sub), exist_ok=True)
        hdf5_path = create_run_file(self._dirname)
        self._hdf5 = partial(h5py.File, hdf5_path, libver='latest')

    def __repr__(self) -> str:
        """Implement :class:`str(self)<str>` and :func:`repr(self)<repr>`."""
        attr_tup = ('dirname', 'hdf5')
        attr_max = max(len(i) for i in attr_tup)
        args = ',\n'.join(f'{name:{attr_max}} = {getattr(self, name)!r}' for name in attr_tup)
        indent = 4 * ' '
        return f'{self.__class__.__name__}(\n{textwrap.indent(args, indent)}\n)'

    def __eq__(self, value: Any) -> bool:
        """Implement :meth:`self == value<object.__eq__>`."""
        if type(self) is not type(value):
            return False
        return self.dirname == value.dirname

    def __hash__(self) -> int:
        """Implement :func:`hash(self)<hash>`."""
        try:
            return self._hash
        except AttributeError:
            self._hash: int = hash((type(self), self.dirname))
            return self._hash

    def __reduce__(self: ST) -> Tuple[Type[ST], Tuple[str]]:
        """Helper for :mod:`pickle`."""
        return type(self), (self.dirname,)

    def __copy__(self: ST) -> ST:
        """Implement :func:`copy.copy(self)<copy.copy>`."""
        return self

    def __deepcopy__(self: ST, memo: Optional[Dict[int, Any]] = None) -> ST:
        """Implement :func:`copy.deepcopy(self, memo=memo)<copy.deepcopy>`."""
        return self

    """ ##################################  Paths  ################################## """

    def path(self, *names: str) -> str:
        """Return the absolute path of an artefact in this directory."""
        return join(self.dirname, *names)

    def checkpoint_path(self, stage: str) -> str:
        """Return the checkpoint path of **stage**."""
        return self.path('checkpoints', f'{stage}.hdf5')

    def state_path(self, stage: str) -> str:
        """Return the path of the train state of an interrupted **stage**."""
        return self.path('checkpoints', f'{stage}.state.hdf5')

    """ ##################################  Config  ################################# """

    def bind_config(self, normalized: Mapping[str, Any], seed: int) -> bool:
        """Store the hash of **normalized** and the **seed**; clear all markers if they changed.

        Train states of interrupted stages are discarded as well.

        Returns
        -------
        :class:`bool`
            Whether the stored configuration or seed was replaced.

        """
        digest = config_hash(normalized)
        with self.hdf5('r+') as f:
            validate_run_file(f)
            if f.attrs['config_hash'] == digest and f.attrs['seed'] == seed:
                return False

            if f.attrs['config_hash'] and len(f['stages'].attrs):
                logger.warning(f'{self.dirname!r}: the configuration or seed changed; '
                               'clearing all stage markers')
            for k in list(f['stages'].attrs):
                del f['stages'].attrs[k]
            f.attrs['config_hash'] = digest
            f.attrs['config'] = json.dumps(normalized, sort_keys=True)
            f.attrs['seed'] = seed

        checkpoints = self.path('checkpoints')
        for name in os.listdir(checkpoints):
            if name.endswith('.state.hdf5'):
                os.remove(join(checkpoints, name))
        return True

    def config(self) -> Dict[str, Any]:
        """Return the stored normalized configuration."""
        with self.hdf5('r') as f:
            return json.loads(f.attrs['config'])

    """ ##################################  Stages  ################################# """

    def mark_stage(self, stage: str, digest: str) -> None:
        """Record **stage** as completed; its checkpoint must verify and match **digest**."""
        path = self.checkpoint_path(stage)
        if not verify_checkpoint(path):
            raise ValueError(f"stage {stage!r}: the checkpoint {path!r} does not verify")
        with h5py.File(path, 'r') as f:
            if f.attrs['sha256'] != digest:
                raise ValueError(f"stage {stage!r}: the checkpoint digest does not match")
        with self.hdf5('r+') as f:
            f['stages'].attrs[stage] = digest

    def is_complete(self, stage: str) -> bool:
        """Return whether **stage** has a marker whose checkpoint verifies.

        Markers of checkpoints that no longer verify are removed.

        """
        with self.hdf5('r') as f:
            digest = f['stages'].attrs.get(stage)
        if digest is None:
            return False

        path = self.checkpoint_path(stage)
        ok = verify_checkpoint(path)
        if ok:
            with h5py.File(path, 'r') as f:
                ok = f.attrs['sha256'] == digest
        if not ok:
            logger.warning(f'stage {stage!r}: checkpoint missing or corrupted; removing its marker')
            self.clear_stage(stage)
        return ok

    def clear_stage(self, stage: str) -> None:
        """Remove the marker of **stage**, if any."""
        with self.hdf5('r+') as f:
            if stage in f['stages'].attrs:
                del f['stages'].attrs[stage]

    def completed_stages(self) -> List[str]:
        """Return the names of all stages with a verified marker, in completion order."""
        with self.hdf5('r') as f:
            names = list(f['stages'].attrs)
        return [k for k in names if self.is_complete(k)]

    @contextmanager
    def open_log(self) -> Iterator[h5py.Group]:
        """Open the manifest for writing and yield its ``logger`` group."""
        with self.hdf5('r+') as f:
            yield f['logger']

    def manifest(self) -> RunManifest:
        """Return a :class:`RunManifest` of the current state."""
        stages = {k: self.checkpoint_path(k) for k in self.completed_stages()}
        with self.hdf5('r') as f:
            digest = str(f.attrs['config_hash'])
            seed = int(f.attrs['seed'])
        artifacts = {}
        for root, _, files in os.walk(self.dirname):
            for name in sorted(files):
                if name != 'run.hdf5':
                    full = join(root, name)
                    artifacts[os.path.relpath(full, self.dirname)] = full
        return RunManifest(self.dirname, digest, seed, stages, artifacts)
