"""Tests for :mod:`fewSUM.run_dir`."""

import os
import copy
import pickle

import h5py
from assertionlib import assertion
from nanoutils import delete_finally

from fewSUM import RunDirectory, save_checkpoint
from fewSUM.run_dir import validate_run_file
from fewSUM.testing_utils import TMP_DIR, tiny_model

RUN_TMP = TMP_DIR / '.run'
CONFIG = {'decode': {'beam_size': 2}}


@delete_finally(RUN_TMP)
def test_init() -> None:
    """Test :class:`fewSUM.RunDirectory` creation and its dunder methods."""
    run = RunDirectory(RUN_TMP)
    for sub in ('checkpoints', 'summaries', 'reports'):
        assertion(os.path.isdir(run.path(sub)))
    with run.hdf5('r') as f:
        validate_run_file(f)
        assertion.eq(f.attrs['seed'], -1)

    run2 = RunDirectory(RUN_TMP)
    assertion.eq(run, run2)
    assertion.eq(hash(run), hash(run2))
    assertion.is_(copy.deepcopy(run), run)
    assertion.eq(pickle.loads(pickle.dumps(run)), run)
    assertion.contains(repr(run), 'dirname')
    assertion.ne(run, RUN_TMP)


@delete_finally(RUN_TMP)
def test_bind_config() -> None:
    """Changing the configuration or seed clears all stage markers."""
    run = RunDirectory(RUN_TMP)
    assertion(run.bind_config(CONFIG, seed=1))
    assertion.is_(run.bind_config(CONFIG, seed=1), False)
    assertion.eq(run.config(), CONFIG)

    digest = save_checkpoint(run.checkpoint_path('train_loo'), tiny_model())
    run.mark_stage('train_loo', digest)
    assertion.eq(run.completed_stages(), ['train_loo'])

    assertion(run.bind_config(CONFIG, seed=2))
    assertion.eq(run.completed_stages(), [])
    assertion.eq(run.manifest().seed, 2)


@delete_finally(RUN_TMP)
def test_mark_stage() -> None:
    """Markers require a verified checkpoint with a matching digest."""
    run = RunDirectory(RUN_TMP)
    run.bind_config(CONFIG, seed=0)
    assertion.assert_(run.mark_stage, 'pretrain_lm', 'abc', exception=ValueError)

    digest = save_checkpoint(run.checkpoint_path('pretrain_lm'), tiny_model())
    assertion.assert_(run.mark_stage, 'pretrain_lm', 'abc', exception=ValueError)
    run.mark_stage('pretrain_lm', digest)
    assertion(run.is_complete('pretrain_lm'))
    assertion.is_(run.is_complete('train_loo'), False)

    manifest = run.manifest()
    assertion.eq(manifest.stages, {'pretrain_lm': run.checkpoint_path('pretrain_lm')})
    assertion.contains(manifest.artifacts, 'checkpoints/pretrain_lm.hdf5')
    assertion.not_contains(manifest.artifacts, 'run.hdf5')

    run.clear_stage('pretrain_lm')
    assertion.is_(run.is_complete('pretrain_lm'), False)
    run.clear_stage('pretrain_lm')


@delete_finally(RUN_TMP)
def test_corrupted_checkpoint() -> None:
    """A corrupted checkpoint invalidates its marker."""
    run = RunDirectory(RUN_TMP)
    run.bind_config(CONFIG, seed=0)
    path = run.checkpoint_path('train_loo')
    run.mark_stage('train_loo', save_checkpoint(path, tiny_model()))

    with h5py.File(path, 'r+') as f:
        f['data'][0] = (int(f['data'][0]) + 1) % 256
    assertion.is_(run.is_complete('train_loo'), False)
    with run.hdf5('r') as f:
        assertion.not_contains(f['stages'].attrs.keys(), 'train_loo')


@delete_finally(RUN_TMP)
def test_open_log() -> None:
    """The training log lives in the run manifest."""
    run = RunDirectory(RUN_TMP)
    with run.open_log() as log:
        assertion.eq(log.attrs['n'], 0)
