"""The structured training log, stored in hdf5 format.

Index
-----
.. currentmodule:: fewSUM
.. autosummary::
    create_hdf5_log
    update_hdf5_log
    reset_hdf5_log
    log_to_dataframe

API
---
.. autofunction:: create_hdf5_log
.. autofunction:: update_hdf5_log
.. autofunction:: reset_hdf5_log
.. autofunction:: log_to_dataframe

"""

import re
import json
from typing import Union, Sequence, Tuple, Mapping, Optional, Any
from datetime import datetime

import h5py
import numpy as np
import pandas as pd
import torch
from nanoutils import VersionInfo

from .__version__ import __version__
from .logger import logger
from .dtype import DT_DTYPE, VERSION_DTYPE, MSG_DTYPE

__all__ = [
    'create_hdf5_log', 'update_hdf5_log', 'reset_hdf5_log', 'log_to_dataframe'
]


def _version_info(version: str) -> VersionInfo:
    match = re.match(r'(\d+)\.(\d+)\.(\d+)', version)
    if match is None:
        return VersionInfo(-1, -1, -1)
    return VersionInfo(*(int(i) for i in match.groups()))


_VERSION = np.array(
    [_version_info(__version__), _version_info(torch.__version__), _version_info(np.__version__)],
    dtype=VERSION_DTYPE,
)
_VERSION.setflags(write=False)

_VERSION_NAMES = np.array(['Few-SUM', 'torch', 'numpy'], dtype=np.bytes_)
_VERSION_NAMES.setflags(write=False)


LOG_DOC = """A h5py Group holding one record per logged training step.

Attributes
----------
date : dataset
    A dataset with the date and time of every record.
    Used as dimensional scale for all other record datasets.
version : dataset
    A dataset with the package versions at the time of every record.
version_names : dataset
    A dataset with the names of the packages in **version**.
stage : dataset
    The name of the training stage.
step : dataset
    The optimizer step within the stage.
loss : dataset
    The total loss.
components : dataset
    A JSON object with the individual loss components.

n : attribute
    An attribute with the index of the next to-be set record.
n_step : attribute
    The increment by which all datasets grow once full.
clear_when_full : :class:`bool`
    Whether or not to delete and recreate the datasets when they are full.
date_created : attribute
    An attribute with the date and time from when this logger was created.

"""


def _get_now() -> np.recarray:
    now = datetime.now()
    tup = tuple(getattr(now, k) for k in DT_DTYPE.fields.keys())
    return np.rec.array(tup, dtype=DT_DTYPE)


def create_hdf5_log(file: h5py.Group,
                    n_entries: int = 100,
                    clear_when_full: bool = False,
                    version_names: Sequence[Union[str, bytes]] = _VERSION_NAMES,
                    version_values: Sequence[Tuple[int, int, int]] = _VERSION,
                    **kwargs: Any) -> h5py.Group:
    r"""Create a hdf5 group for logging training records.

    Examples
    --------
    .. testsetup:: python

        >>> import os
        >>> from fewSUM.testing_utils import HDF5_TMP as hdf5_file

        >>> if os.path.isfile(hdf5_file):
        ...     os.remove(hdf5_file)

    .. code:: python

        >>> import h5py
        >>> from fewSUM import create_hdf5_log

        >>> hdf5_file = str(...)  # doctest: +SKIP
        >>> with h5py.File(hdf5_file, 'a') as f:
        ...     group = create_hdf5_log(f)
        ...     print(group)
        ...     print(group['loss'])
        <HDF5 group "/logger" (7 members)>
        <HDF5 dataset "loss": shape (100,), type "<f8">

    .. testcleanup:: python

        >>> if os.path.isfile(hdf5_file):
        ...     os.remove(hdf5_file)

    Parameters
    ----------
    file : :class:`h5py.File` or :class:`h5py.Group`
        The File or Group where the logger should be created.
    n_entries : :class:`int`
        The initial number of records of each to-be created dataset;
        also the increment by which the datasets grow.
    clear_when_full : :class:`bool`
        If :data:`True`, delete the logger and create a new one whenever it is full.
    version_names : :class:`Sequence[str or bytes]<typing.Sequence>`
        The names of the to-be stored package versions.
    version_values : :class:`Sequence[Tuple[int, int, int]]<typing.Sequence>`
        The package versions associated with **version_names**.
    \**kwargs : :data:`~Any`
        Further keyword arguments for :meth:`h5py.Group.create_dataset`.

    Returns
    -------
    :class:`h5py.Group`
        The newly created ``"logger"`` group.

    """
    m = len(version_values)
    if n_entries < 1:
        raise ValueError(f"'n_entries' must be larger than 0; observed value: {n_entries!r}")
    elif m < 1:
        raise ValueError(f"'version_values' must not be empty; observed value: {version_values!r}")

    grp = file.create_group('logger', track_order=True)
    grp.attrs['__doc__'] = np.bytes_(LOG_DOC)
    grp.attrs['n'] = 0
    grp.attrs['n_step'] = n_entries
    grp.attrs['clear_when_full'] = clear_when_full
    grp.attrs['date_created'] = _get_now()

    shape1 = (n_entries,)
    shape2 = (n_entries, m)
    names = np.asarray(version_names, dtype=np.bytes_)

    scale1 = grp.create_dataset('date', shape=shape1, maxshape=(None,), dtype=DT_DTYPE, chunks=shape1, **kwargs)  # noqa: E501
    grp.create_dataset('version', shape=shape2, maxshape=(None, m), dtype=VERSION_DTYPE, chunks=shape2, **kwargs)  # noqa: E501
    scale2 = grp.create_dataset('version_names', data=names, shape=(m,), dtype=names.dtype, **kwargs)  # noqa: E501
    grp.create_dataset('stage', shape=shape1, maxshape=(None,), dtype=MSG_DTYPE, chunks=shape1, **kwargs)  # noqa: E501
    grp.create_dataset('step', shape=shape1, maxshape=(None,), dtype='int64', chunks=shape1, **kwargs)  # noqa: E501
    grp.create_dataset('loss', shape=shape1, maxshape=(None,), dtype='float64', chunks=shape1, **kwargs)  # noqa: E501
    grp.create_dataset('components', shape=shape1, maxshape=(None,), dtype=MSG_DTYPE, chunks=shape1, **kwargs)  # noqa: E501

    scale1.make_scale('date')
    for name in ('version', 'stage', 'step', 'loss', 'components'):
        grp[name].dims[0].label = 'date'
        grp[name].dims[0].attach_scale(scale1)

    scale2.make_scale('version_names')
    grp['version'].dims[1].label = 'version_names'
    grp['version'].dims[1].attach_scale(scale2)
    return grp


_RECORD_NAMES = ('date', 'version', 'stage', 'step', 'loss', 'components')


def update_hdf5_log(group: h5py.Group, stage: str, step: int, loss: float,
                    components: Optional[Mapping[str, float]] = None,
                    version_values: Sequence[Tuple[int, int, int]] = _VERSION) -> None:
    """Append a training record to the ``"logger"`` **group**.

    The record is also emitted as a single line through the package logger.

    Parameters
    ----------
    group : :class:`h5py.Group`
        The ``logger`` Group.
    stage : :class:`str`
        The name of the training stage.
    step : :class:`int`
        The optimizer step.
    loss : :class:`float`
        The total loss.
    components : :class:`Mapping[str, float]<typing.Mapping>`, optional
        The individual loss components.
    version_values : :class:`Sequence[Tuple[int, int, int]]<typing.Sequence>`
        A sequence with 3-tuples representing to-be updated package versions.


    :rtype: :data:`None`

    """
    n = group.attrs['n']
    n_max = len(group['date'])

    if n >= n_max:
        if group.attrs['clear_when_full']:
            group = reset_hdf5_log(group, version_values)
            n = 0
        else:
            n_max += group.attrs['n_step']
            for name in _RECORD_NAMES:
                group[name].resize(n_max, axis=0)

    components_json = json.dumps(dict(components or {}), sort_keys=True)
    group['date'][n] = _get_now()
    group['version'][n] = version_values
    group['stage'][n] = stage
    group['step'][n] = step
    group['loss'][n] = loss
    group['components'][n] = components_json
    group.attrs['n'] += 1

    logger.info(f'stage={stage} step={step} loss={loss:.6f} components={components_json}')


def reset_hdf5_log(group: h5py.Group,
                   version_values: Sequence[Tuple[int, int, int]] = _VERSION) -> h5py.Group:
    """Clear and reset the passed ``logger`` Group.

    Parameters
    ----------
    group : :class:`h5py.Group`
        The ``logger`` Group.
    version_values : :class:`Sequence[Tuple[int, int, int]]<typing.Sequence>`
        A sequence with 3-tuples representing to-be updated package versions.

    Returns
    -------
    :class:`h5py.Group`
        The newly (re-)created ``"logger"`` group.

    """
    version_names = group['version_names'][:]
    n_entries = group.attrs['n_step']
    clear_when_full = group.attrs['clear_when_full']

    parent = group.parent
    del group.file[group.name]
    return create_hdf5_log(parent, n_entries, clear_when_full, version_names, version_values)


def log_to_dataframe(group: h5py.Group) -> pd.DataFrame:
    """Export the training records of the ``"logger"`` **group** to a DataFrame.

    Parameters
    ----------
    group : :class:`h5py.Group`
        The ``logger`` Group.

    Returns
    -------
    :class:`pandas.DataFrame`
        A DataFrame indexed by date, with the package versions, stage, step,
        loss and decoded loss components as columns.

    """
    n = group.attrs['n']
    _columns = group['version_names'][:].astype(str)
    columns = pd.MultiIndex.from_product([_columns, group['version'].dtype.names])

    if not n:
        index = pd.Index([], dtype='datetime64[ns]', name='date')
        df = pd.DataFrame(columns=columns, index=index, dtype='int8')
        df[('stage', '')] = np.array([], dtype=str)
        df[('step', '')] = np.array([], dtype='int64')
        df[('loss', '')] = np.array([], dtype='float64')
        df[('components', '')] = np.array([], dtype=object)
        return df

    date = group['date'][:n]
    _index = np.fromiter((datetime(*i) for i in date), count=len(date), dtype='datetime64[us]')
    index = pd.Index(_index, dtype='datetime64[ns]', name='date')

    data = group['version'][:n].view('int8')
    df = pd.DataFrame(data, index=index, columns=columns)
    df[('stage', '')] = group['stage'].asstr()[:n]
    df[('step', '')] = group['step'][:n]
    df[('loss', '')] = group['loss'][:n]
    df[('components', '')] = [json.loads(i) for i in group['components'].asstr()[:n]]
    return df
