"""A module with various data-types used throughout **Few-SUM**.

Index
-----
.. currentmodule:: fewSUM.dtype
.. autosummary::
    DT_DTYPE
    VERSION_DTYPE
    MSG_DTYPE
    MANIFEST_DTYPE
    PROPERTY_DTYPE
    PROPERTY_NAMES
    INSTANCE_ID_DTYPE

API
---
.. autodata:: DT_DTYPE
    :annotation: : numpy.dtype = ...

    .

    Field names are based on their, identically named, counterpart in
    the :class:`~datetime.datetime` class.

    .. code:: python

        >>> from fewSUM.dtype import DT_DTYPE

        >>> print(repr(DT_DTYPE))  # doctest: +NORMALIZE_WHITESPACE
        dtype([('year', '<i2'),
               ('month', 'i1'),
               ('day', 'i1'),
               ('hour', 'i1'),
               ('minute', 'i1'),
               ('second', 'i1'),
               ('microsecond', '<i4')])

.. autodata:: VERSION_DTYPE
    :annotation: : numpy.dtype = ...

    .

    Field names are based on their, identically named, counterpart in
    the :class:`nanoutils.VersionInfo` namedtuple.

.. autodata:: MSG_DTYPE
    :annotation: : numpy.dtype = ...

    .

    Used for representing variable-length ASCII strings,
    *e.g.* stage names and loss components in the training log.

    .. code:: python

        >>> import h5py
        >>> from fewSUM.dtype import MSG_DTYPE

        >>> h5py.check_string_dtype(MSG_DTYPE)
        string_info(encoding='ascii', length=None)

.. autodata:: MANIFEST_DTYPE
    :annotation: : numpy.dtype = ...

    .

    One row per tensor of a checkpoint: its name, shape, element type and
    the byte range it occupies in the raw ``"data"`` dataset.

.. autodata:: PROPERTY_DTYPE
    :annotation: : numpy.dtype = ...

.. autodata:: PROPERTY_NAMES
    :annotation: : Tuple[str, ...] = ...

    .

    .. code:: python

        >>> from fewSUM.dtype import PROPERTY_NAMES

        >>> print(PROPERTY_NAMES)  # doctest: +NORMALIZE_WHITESPACE
        ('rouge1_f1', 'rouge2_f1', 'rougel_f1', 'pov_1st', 'pov_2nd', 'pov_3rd', 'pov_none',
         'rating_dev', 'length_dev')

.. autodata:: INSTANCE_ID_DTYPE
    :annotation: : numpy.dtype = ...

"""

from typing import Tuple

import h5py
import numpy as np

__all__ = [
    'DT_DTYPE', 'VERSION_DTYPE', 'MSG_DTYPE', 'MANIFEST_DTYPE',
    'PROPERTY_DTYPE', 'PROPERTY_NAMES', 'INSTANCE_ID_DTYPE'
]

_DT_MAPPING = {
    'year': 'int16',
    'month': 'int8',
    'day': 'int8',
    'hour': 'int8',
    'minute': 'int8',
    'second': 'int8',
    'microsecond': 'int32'
}
#: The datatype of the ``"date"`` dataset created by :func:`~fewSUM.create_hdf5_log`
DT_DTYPE = np.dtype(list(_DT_MAPPING.items()))


_VERSION_MAPPING = {
    'major': 'int8',
    'minor': 'int8',
    'micro': 'int8'
}
#: The datatype of the ``"version"`` dataset created by :func:`~fewSUM.create_hdf5_log`
VERSION_DTYPE = np.dtype(list(_VERSION_MAPPING.items()))

#: The datatype of the ``"stage"`` and ``"components"`` datasets of the training log
MSG_DTYPE = h5py.string_dtype(encoding='ascii')

_MANIFEST_MAPPING = {
    'name': h5py.string_dtype(encoding='ascii'),
    'shape': h5py.vlen_dtype(np.dtype('int64')),
    'dtype': 'S4',
    'offset': 'int64',
    'nbytes': 'int64'
}
#: The datatype of the ``"manifest"`` dataset of a checkpoint
MANIFEST_DTYPE = np.dtype(list(_MANIFEST_MAPPING.items()))

#: The names of the nine property-vector components, in layout order
PROPERTY_NAMES: Tuple[str, ...] = (
    'rouge1_f1', 'rouge2_f1', 'rougel_f1',
    'pov_1st', 'pov_2nd', 'pov_3rd', 'pov_none',
    'rating_dev', 'length_dev'
)

#: The datatype of a property dataset
PROPERTY_DTYPE = np.dtype('float64')

#: The datatype of the ``"index"`` dataset of a property group
INSTANCE_ID_DTYPE = h5py.string_dtype(encoding='ascii')
