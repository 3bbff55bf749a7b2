"""Storage of per-instance property vectors in hdf5 format.

Index
-----
.. currentmodule:: fewSUM
.. autosummary::
    create_prop_group
    create_prop_dset
    update_prop_dset
    validate_prop_group
    prop_to_dataframe
    dump_properties

API
---
.. autofunction:: create_prop_group
.. autofunction:: create_prop_dset
.. autofunction:: update_prop_dset
.. autofunction:: validate_prop_group
.. autofunction:: prop_to_dataframe
.. autofunction:: dump_properties

"""

from typing import Union, Sequence, Any, Optional

import h5py
import numpy as np
import pandas as pd
from assertionlib import assertion
from nanoutils import PathType

from .dtype import PROPERTY_NAMES, PROPERTY_DTYPE, INSTANCE_ID_DTYPE
from .oracle import PropertyVector

__all__ = ['create_prop_group', 'create_prop_dset', 'update_prop_dset',
           'validate_prop_group', 'prop_to_dataframe', 'dump_properties']

PROPERTY_DOC = r"""A h5py Group containing property vectors, one row per instance.

Attributes
----------
\*args : dataset
    A property dataset of shape :math:`(n, 9)`, *e.g.* oracle targets or plug-in predictions.

index : attribute
    A reference to the dataset with the instance ids, used as dimensional scale
    for all property datasets embedded within this group.

"""


def create_prop_group(file: h5py.Group, instance_ids: Sequence[str],
                      name: str = 'properties') -> h5py.Group:
    r"""Create a group for holding property vectors of the instances in **instance_ids**.

    .. testsetup:: python

        >>> import os
        >>> from fewSUM.testing_utils import HDF5_TMP as hdf5_file

        >>> if os.path.isfile(hdf5_file):
        ...     os.remove(hdf5_file)

    .. code:: python

        >>> import h5py
        >>> from fewSUM import create_prop_group

        >>> hdf5_file = str(...)  # doctest: +SKIP
        >>> with h5py.File(hdf5_file, 'a') as f:
        ...     group = create_prop_group(f, ['g0/0', 'g0/1'])
        ...     print('group', '=', group)
        group = <HDF5 group "/properties" (0 members)>

    .. testcleanup:: python

        >>> if os.path.isfile(hdf5_file):
        ...     os.remove(hdf5_file)

    Parameters
    ----------
    file : :class:`h5py.File` or :class:`h5py.Group`
        The File or Group where the new group should be created.
    instance_ids : :class:`Sequence[str]<typing.Sequence>`
        The instance ids; stored in the ``"{name}_index"`` dataset of **file**.
    name : :class:`str`
        The name of the new group.

    Returns
    -------
    :class:`h5py.Group`
        The newly created group.

    """
    ids = np.asarray(instance_ids, dtype=object)
    scale = file.create_dataset(f'{name}_index', data=ids, shape=(len(ids),),
                                maxshape=(None,), dtype=INSTANCE_ID_DTYPE)
    scale.make_scale('index')

    grp = file.create_group(name, track_order=True)
    grp.attrs['index'] = scale.ref
    grp.attrs['__doc__'] = np.bytes_(PROPERTY_DOC)
    return grp


def create_prop_dset(group: h5py.Group, name: str,
                     prop_names: Optional[Sequence[str]] = PROPERTY_NAMES,
                     **kwargs: Any) -> h5py.Dataset:
    r"""Construct a new float64 dataset for holding property vectors.

    Parameters
    ----------
    group : :class:`h5py.Group`
        The group created by :func:`create_prop_group`.
    name : :class:`str`
        The name of the new dataset.
    prop_names : :class:`Sequence[str]<typing.Sequence>`, optional
        The names of the columns, used as dimensional scale of the second axis.
        If :data:`None`, create a 1D dataset instead.
    \**kwargs : :data:`~Any`
        Further keyword arguments for :meth:`h5py.Group.create_dataset`.

    Returns
    -------
    :class:`h5py.Dataset`
        The newly created dataset.

    """
    index = group.file[group.attrs['index']]
    n = len(index)

    if prop_names is None:
        dset = group.create_dataset(name, shape=(n,), maxshape=(None,),
                                    dtype=PROPERTY_DTYPE, **kwargs)
        dset.dims[0].label = 'index'
        dset.dims[0].attach_scale(index)
        return dset

    name_array = np.asarray(prop_names, dtype=np.bytes_)
    if name_array.ndim != 1:
        raise ValueError("'prop_names' expected None or a 1D array-like object; "
                         f"observed dimensionality: {name_array.ndim!r}")

    m = len(name_array)
    dset = group.create_dataset(name, shape=(n, m), maxshape=(None, m), dtype=PROPERTY_DTYPE,
                                fillvalue=np.nan, **kwargs)
    scale_name = f'{name}_names'
    scale = group.create_dataset(scale_name, data=name_array, shape=(m,), dtype=name_array.dtype)
    scale.make_scale(scale_name)

    dset.dims[0].label = 'index'
    dset.dims[0].attach_scale(index)
    dset.dims[1].label = scale_name
    dset.dims[1].attach_scale(scale)
    return dset


def update_prop_dset(dset: h5py.Dataset, data: Union[np.ndarray, Sequence[PropertyVector]],
                     index: Union[None, slice, np.ndarray] = None) -> None:
    """Update **dset** at position **index** with **data**.

    Parameters
    ----------
    dset : :class:`h5py.Dataset`
        The to-be updated h5py dataset.
    data : :class:`numpy.ndarray` or :class:`Sequence[PropertyVector]<typing.Sequence>`
        The to-be added property values.
    index : :class:`slice` or :class:`numpy.ndarray`, optional
        The indices of all to-be updated rows in **dset**.


    :rtype: :data:`None`

    """
    idx = slice(None) if index is None else index
    if len(data) and isinstance(data[0], PropertyVector):
        data = np.stack([v.to_array() for v in data])  # type: ignore[union-attr]

    try:
        n = len(dset.dims[0][0])
        if n > len(dset):
            dset.resize(n, axis=0)
        dset[idx] = data
    except Exception as ex:
        validate_prop_group(dset.parent)
        raise ex


def validate_prop_group(group: h5py.Group) -> None:
    """Validate the passed hdf5 **group**, ensuring it is compatible with :func:`create_prop_group`.

    Raises
    ------
    :exc:`AssertionError`
        Raised if the validation process fails.

    """
    assertion.isinstance(group, h5py.Group)
    idx = group.file[group.attrs['index']]

    iterator = ((k, v) for k, v in group.items() if not k.endswith('_names'))
    for name, dset in iterator:
        assertion.le(len(dset), len(idx), message=f'{name!r} invalid dataset length')
        assertion.contains(dset.dims[0].keys(), 'index', message=f'{name!r} missing dataset scale')
        assertion.eq(dset.dims[0]['index'], idx, message=f'{name!r} invalid dataset scale')


def prop_to_dataframe(dset: h5py.Dataset) -> pd.DataFrame:
    """Convert the passed property Dataset into a DataFrame indexed by instance id."""
    index = pd.Index(dset.dims[0][0].asstr()[:], name='instance')
    if dset.ndim == 1:
        columns = pd.Index([dset.name.rsplit('/', 1)[-1]])
    else:
        dim1 = dset.dims[1]
        columns = pd.Index(dim1[0][:].astype(str), name=dim1.label)
    return pd.DataFrame(dset[:], index=index, columns=columns)


def dump_properties(path: PathType, instance_ids: Sequence[str],
                    vectors: Sequence[PropertyVector]) -> pd.DataFrame:
    """Write property vectors to a CSV file with the nine property names as header."""
    if len(instance_ids) != len(vectors):
        raise ValueError(f"'instance_ids' and 'vectors' differ in length: "
                         f"{len(instance_ids)} vs {len(vectors)}")
    data = np.stack([v.to_array() for v in vectors]) if vectors else np.empty((0, 9))
    df = pd.DataFrame(data, index=pd.Index(instance_ids, name='instance'),
                      columns=list(PROPERTY_NAMES))
    df.to_csv(path)
    return df
