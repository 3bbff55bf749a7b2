"""Tests for :mod:`fewSUM.cli`."""

import os
import json
from pathlib import Path

import yaml
import h5py
import pytest
import pandas as pd
from assertionlib import assertion
from nanoutils import delete_finally

from fewSUM.cli import ENV_RUN_DIR, SUBCOMMANDS, COMMANDS, build_parser, dispatch
from fewSUM.corpus import read_groups
from fewSUM.decoding import read_summaries
from fewSUM.testing_utils import TMP_DIR, tiny_config

RUN_TMP = TMP_DIR / '.cli_run'
DESK_TMP = TMP_DIR / '.cli_desk'
CONFIG_TMP = TMP_DIR / '.cli_config.yaml'
REQUIRED_ARGS = {
    'baseline': ['lead'],
    'evaluate': ['--summaries', 'a.jsonl'],
    'analyze-text': ['--summaries', 'a.jsonl'],
}

TINY_CONFIG = {**tiny_config(), 'corpus': {'split': [4, 2, 6]}}


@pytest.fixture(autouse=True)
def no_env_run_dir(monkeypatch: pytest.MonkeyPatch) -> None:
    """Make sure the ``--run-dir`` flag is not overridden by the environment."""
    monkeypatch.delenv(ENV_RUN_DIR, raising=False)


def _run(*args: str) -> int:
    return dispatch([*args, '--run-dir', str(RUN_TMP), '--config', str(CONFIG_TMP)])


def _write_config() -> None:
    with open(CONFIG_TMP, 'w', encoding='utf-8') as f:
        yaml.safe_dump(TINY_CONFIG, f)


def test_commands() -> None:
    """Every subcommand has a parser and an implementation."""
    assertion.eq(set(COMMANDS), set(SUBCOMMANDS))
    parser = build_parser()
    for name in SUBCOMMANDS:
        args = parser.parse_args([name, *REQUIRED_ARGS.get(name, [])])
        assertion.eq(args.command, name)


@pytest.mark.parametrize('argv', [
    ['bogus'],
    ['preprocess', '--bogus'],
    ['baseline', 'meansum'],
    ['summarize', '--mode', 'bogus'],
    ['evaluate'],
    [],
])
def test_usage_error(argv: list, capsys: pytest.CaptureFixture) -> None:
    """Usage errors return exit code 1 and name the offending argument."""
    assertion.eq(dispatch(argv), 1)
    err = capsys.readouterr().err
    assertion.contains(err, 'error')
    if '--bogus' in argv:
        assertion.contains(err, '--bogus')


def test_version(capsys: pytest.CaptureFixture) -> None:
    """``--version`` exits successfully."""
    assertion.eq(dispatch(['--version']), 0)
    assertion.contains(capsys.readouterr().out, 'fewsum')


@delete_finally(RUN_TMP, CONFIG_TMP)
def test_validate_config(capsys: pytest.CaptureFixture) -> None:
    """Test the ``validate-config`` subcommand."""
    _write_config()
    assertion.eq(_run('validate-config'), 0)
    dumped = yaml.safe_load(capsys.readouterr().out)
    assertion.eq(dumped['model']['d_model'], 16)
    assertion.eq(dumped['novelty'], {'lambda': 2.0})

    with open(CONFIG_TMP, 'w', encoding='utf-8') as f:
        yaml.safe_dump({'model': {'n_heads': 3}}, f)
    assertion.eq(_run('validate-config'), 2)


@delete_finally(RUN_TMP, CONFIG_TMP)
def test_missing_prerequisite() -> None:
    """Stages without their prerequisites fail with exit code 2."""
    _write_config()
    assertion.eq(_run('train-loo'), 2)
    assertion.eq(_run('pretrain-lm'), 2)
    assertion.eq(_run('summarize'), 2)


@delete_finally(RUN_TMP, CONFIG_TMP)
def test_preprocess() -> None:
    """Test the ``make-corpus`` and ``preprocess`` subcommands."""
    _write_config()
    assertion.eq(_run('make-corpus'), 0)
    assertion(os.path.isfile(RUN_TMP / 'corpus' / 'reviews.jsonl'))

    out = RUN_TMP / 'groups'
    inp = RUN_TMP / 'corpus' / 'reviews.jsonl'
    assertion.eq(_run('preprocess', '--in', str(inp), '--out', str(out)), 0)
    groups = read_groups(out / 'groups.jsonl')
    assertion.len_eq(groups, 12)
    assertion(all(len(g.reviews) == 9 for g in groups))


@delete_finally(RUN_TMP)
def test_cross_domain_scores(capsys: pytest.CaptureFixture) -> None:
    """Test the ``cross-domain`` subcommand with a score file."""
    os.makedirs(RUN_TMP, exist_ok=True)
    scores = RUN_TMP / 'scores.json'
    with open(scores, 'w', encoding='utf-8') as f:
        json.dump({'home': [0.2, 0.3], 'toys': [0.25]}, f)

    argv = ['cross-domain', '--run-dir', str(RUN_TMP)]
    assertion.eq(dispatch([*argv, '--scores', str(scores)]), 0)
    assertion.contains(capsys.readouterr().out, 'overall')
    assertion(os.path.isfile(RUN_TMP / 'reports' / 'cross_domain.csv'))
    assertion.eq(dispatch(argv), 1)


@pytest.mark.slow
@delete_finally(RUN_TMP, CONFIG_TMP)
def test_pipeline(monkeypatch: pytest.MonkeyPatch) -> None:
    """Run every stage on a tiny synthetic corpus; a second run skips all stages."""
    _write_config()
    monkeypatch.setenv(ENV_RUN_DIR, str(RUN_TMP))
    argv = ['--config', str(CONFIG_TMP), '--seed', '1']
    assertion.eq(dispatch(['pipeline', *argv]), 0)

    run = Path(RUN_TMP)
    for name in ('fewsum', 'usl', 'usl_finetune', 'mtl', 'lexrank', 'clustroid', 'random',
                 'lead'):
        records = read_summaries(run / 'summaries' / f'{name}.jsonl')
        assert len(records) == 6, name

    rouge = pd.read_csv(run / 'reports' / 'rouge.csv', index_col=0)
    assertion.len_eq(rouge, 8)
    assertion(((rouge >= 0) & (rouge <= 1)).all().all())
    assertion(os.path.isfile(run / 'reports' / 'text.csv'))

    mtime = os.path.getmtime(run / 'checkpoints' / 'joint_finetune.hdf5')
    assertion.eq(dispatch(['pipeline', *argv]), 0)
    assertion.eq(os.path.getmtime(run / 'checkpoints' / 'joint_finetune.hdf5'), mtime)

    assertion.eq(dispatch(['properties', '--limit', '2', *argv]), 0)
    oracle = pd.read_csv(run / 'reports' / 'oracle.csv', index_col=0)
    assertion.len_eq(oracle, 18)
    assertion(os.path.isfile(run / 'reports' / 'plugin.csv'))

    assertion.eq(dispatch(['export-log', *argv]), 0)
    assertion(os.path.isfile(run / 'reports' / 'log.csv'))


@pytest.mark.slow
@delete_finally(DESK_TMP)
def test_pipeline_desk() -> None:
    """On the desk preset every stage lowers its loss and the summaries beat random reviews."""
    argv = ['--run-dir', str(DESK_TMP), '--preset', 'desk', '--seed', '0']
    assertion.eq(dispatch(['pipeline', *argv]), 0)

    run = Path(DESK_TMP)
    for stage in ('pretrain_lm', 'train_loo', 'novelty_phase', 'plugin_init', 'plugin_finetune',
                  'joint_finetune'):
        with h5py.File(run / 'checkpoints' / f'{stage}.hdf5', 'r') as f:
            metadata = json.loads(f.attrs['config'])['metadata']
        assert metadata['final_loss'] < metadata['initial_loss'], stage

    rouge = pd.read_csv(run / 'reports' / 'rouge.csv', index_col=0)
    assertion.gt(rouge.at['fewsum', 'rougeL'], rouge.at['random', 'rougeL'])
