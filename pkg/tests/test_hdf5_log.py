"""Tests for :mod:`fewSUM.hdf5_log`."""

from types import MappingProxyType

import h5py
import numpy as np
import pytest

from assertionlib import assertion
from nanoutils import delete_finally
from fewSUM import create_hdf5_log, update_hdf5_log, reset_hdf5_log, log_to_dataframe
from fewSUM.testing_utils import HDF5_TMP


@delete_finally(HDF5_TMP)
def test_update_hdf5_log1() -> None:
    """Test :func:`fewSUM.update_hdf5_log`."""
    with h5py.File(HDF5_TMP, 'a', libver='latest') as f:
        group = create_hdf5_log(f, n_entries=4)
        for i in range(6):
            update_hdf5_log(group, 'train_loo', i, 1.0 / (i + 1), {'nll': 0.5})

        assertion.eq(group.attrs['n'], 6)
        for name, dset in group.items():
            if name != 'version_names':
                assertion.len_eq(dset, 8)
        assertion.eq(group['stage'].asstr()[5], 'train_loo')
        assertion.eq(group['step'][5], 5)


@delete_finally(HDF5_TMP)
def test_update_hdf5_log2() -> None:
    """Test :func:`fewSUM.update_hdf5_log` with ``clear_when_full=True``."""
    with h5py.File(HDF5_TMP, 'a', libver='latest') as f:
        group = create_hdf5_log(f, n_entries=4, clear_when_full=True)
        for i in range(4):
            update_hdf5_log(group, 'pretrain_lm', i, 1.0)
        update_hdf5_log(group, 'pretrain_lm', 4, 0.5)

        group_new = f['logger']
        assertion.eq(group_new.attrs['n'], 1)
        assertion.eq(group_new['loss'][0], 0.5)
        for name, dset in group_new.items():
            if name != 'version_names':
                assertion.len_eq(dset, 4)


def test_create_hdf5_log_raise() -> None:
    """Test :func:`fewSUM.create_hdf5_log` with invalid arguments."""
    with h5py.File('raise.hdf5', 'w', driver='core', backing_store=False) as f:
        assertion.assert_(create_hdf5_log, f, n_entries=0, exception=ValueError)
        assertion.assert_(create_hdf5_log, f, version_values=[], exception=ValueError)


REF_COLUMNS = MappingProxyType({
    ('Few-SUM', 'major'): np.dtype('int8'),
    ('Few-SUM', 'minor'): np.dtype('int8'),
    ('Few-SUM', 'micro'): np.dtype('int8'),
    ('torch', 'major'): np.dtype('int8'),
    ('torch', 'minor'): np.dtype('int8'),
    ('torch', 'micro'): np.dtype('int8'),
    ('numpy', 'major'): np.dtype('int8'),
    ('numpy', 'minor'): np.dtype('int8'),
    ('numpy', 'micro'): np.dtype('int8'),
    ('stage', ''): np.dtype('O'),
    ('step', ''): np.dtype('int64'),
    ('loss', ''): np.dtype('float64'),
    ('components', ''): np.dtype('O'),
})


@delete_finally(HDF5_TMP)
def test_log_to_dataframe() -> None:
    """Test :func:`fewSUM.log_to_dataframe`."""
    with h5py.File(HDF5_TMP, 'a', libver='latest') as f:
        group = create_hdf5_log(f)
        update_hdf5_log(group, 'novelty_phase', 3, 2.0, {'nll': 1.5, 'penalty': 0.25})
        df = log_to_dataframe(group)
        dct = {k: v.dtype for k, v in df.items()}
        assertion.eq(dct, REF_COLUMNS)
        assertion.len_eq(df, 1)
        assertion.eq(df[('components', '')].iloc[0], {'nll': 1.5, 'penalty': 0.25})

        group = reset_hdf5_log(group)
        df = log_to_dataframe(group)
        assertion.len_eq(df, 0)
        assertion.eq(df.index.name, 'date')


@pytest.mark.parametrize('n', [0, 2])
@delete_finally(HDF5_TMP)
def test_reset_hdf5_log(n: int) -> None:
    """Test :func:`fewSUM.reset_hdf5_log`."""
    with h5py.File(HDF5_TMP, 'a', libver='latest') as f:
        group = create_hdf5_log(f, n_entries=3)
        for i in range(n):
            update_hdf5_log(group, 'mtl', i, 1.0)
        group = reset_hdf5_log(group)
        assertion.eq(group.attrs['n'], 0)
        assertion.eq(group.attrs['n_step'], 3)
        assertion.eq(group['version_names'].asstr()[:].tolist(), ['Few-SUM', 'torch', 'numpy'])
