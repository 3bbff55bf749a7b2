"""Tests for :mod:`fewSUM.config`."""

from typing import Any, Dict

import pytest
import yaml
from assertionlib import assertion
from nanoutils import delete_finally

from fewSUM.data import PRESET_DICT
from fewSUM.exceptions import ConfigError
from fewSUM.training import STAGE_NAMES
from fewSUM.config import (
    SECTIONS, RunConfig, load_preset, validate_config, parse_config, config_hash, dump_config
)
from fewSUM.testing_utils import TMP_DIR

YAML_TMP = TMP_DIR / '.config.yaml'


@pytest.mark.parametrize('preset', sorted(PRESET_DICT))
def test_presets(preset: str) -> None:
    """Every bundled preset validates and parses."""
    normalized = validate_config(preset=preset)
    assertion.eq(normalized['preset'], preset)
    assertion.eq(set(normalized), set(SECTIONS) | {'preset'})
    assertion.eq(set(normalized['stages']), set(STAGE_NAMES))

    cfg = parse_config(normalized)
    assertion.isinstance(cfg, RunConfig)
    assertion.eq(cfg.model.d_model, normalized['model']['d_model'])


def test_paper_preset() -> None:
    """The paper preset describes the full-size model."""
    cfg = parse_config(validate_config(preset='paper'))
    assertion.eq(cfg.model.d_model, 400)
    assertion.eq(cfg.model.n_heads, 8)
    assertion.eq(cfg.plugin.n_heads, 3)


def test_load_preset() -> None:
    """Test :func:`fewSUM.config.load_preset`."""
    assertion.eq(load_preset('desk')['model']['d_model'], 64)
    assertion.assert_(load_preset, 'bogus', exception=ConfigError)


def test_overrides() -> None:
    """User values override the preset; unspecified values keep their defaults."""
    normalized = validate_config({'decode': {'beam_size': 3}, 'corpus': {'split': [4, 2, 2]}})
    assertion.eq(normalized['decode']['beam_size'], 3)
    assertion.eq(normalized['decode']['block_n'], 3)
    assertion.eq(normalized['corpus']['split'], [4, 2, 2])
    assertion.eq(parse_config(normalized).corpus.split_spec, (4, 2, 2))

    labels = validate_config({'corpus': {'split': 'labels'}})
    assertion.is_(parse_config(labels).corpus.split_spec, None)


def test_novelty_lambda() -> None:
    """The novelty weight defaults to 2.0 and propagates to the novelty stage."""
    normalized = validate_config({'novelty': None})
    assertion.eq(normalized['novelty'], {'lambda': 2.0})

    normalized = validate_config({'novelty': {'lambda': 3.0}})
    assertion.eq(normalized['stages']['novelty_phase']['novelty_lambda'], 3.0)
    assertion.eq(normalized['stages']['train_loo']['novelty_lambda'], 0.0)

    normalized = validate_config({
        'novelty': {'lambda': 3.0},
        'stages': {'novelty_phase': {'novelty_lambda': 1.5}},
    })
    assertion.eq(normalized['stages']['novelty_phase']['novelty_lambda'], 1.5)


@pytest.mark.parametrize('config,key', [
    ({'model': {'n_heads': 3}}, 'model.n_heads'),
    ({'model': {'d_model': 65}}, 'model.d_model'),
    ({'model': {'foo': 1}}, 'model.foo'),
    ({'foo': {}}, 'foo'),
    ({'bpe': {'merges': -1}}, 'bpe.merges'),
    ({'bpe': {'merges': True}}, 'bpe.merges'),
    ({'novelty': {'lambda': -1}}, 'novelty.lambda'),
    ({'decode': {'beam_size': 0}}, 'decode'),
    ({'decode': []}, 'decode'),
    ({'corpus': {'split': 'bogus'}}, 'corpus'),
    ({'stages': {'bogus': {}}}, 'stages.bogus'),
    ({'stages': {'mtl': {'lr': 0}}}, 'stages.mtl'),
    ({'evaluation': {'split': 'dev'}}, 'evaluation.split'),
    ({'evaluation': {'aggregate': 'median'}}, 'evaluation.aggregate'),
])
def test_validate_raise(config: Dict[str, Any], key: str) -> None:
    """Invalid configs raise a :exc:`~fewSUM.exceptions.ConfigError` naming the key."""
    try:
        validate_config(config)
    except ConfigError as ex:
        assertion.eq(ex.key, key)
    else:
        raise AssertionError(f'{config!r} failed to raise')


def test_validate_missing_file() -> None:
    """Non-existing files are rejected."""
    assertion.assert_(validate_config, TMP_DIR / '.missing.yaml', exception=ConfigError)


@delete_finally(YAML_TMP)
def test_validate_file() -> None:
    """Configs are read from YAML files, including their ``preset`` key."""
    with open(YAML_TMP, 'w', encoding='utf-8') as f:
        yaml.safe_dump({'preset': 'paper', 'decode': {'beam_size': 2}}, f)
    normalized = validate_config(YAML_TMP)
    assertion.eq(normalized['preset'], 'paper')
    assertion.eq(normalized['decode']['beam_size'], 2)

    with open(YAML_TMP, 'w', encoding='utf-8') as f:
        f.write('- a\n- b\n')
    assertion.assert_(validate_config, YAML_TMP, exception=ConfigError)


def test_config_hash() -> None:
    """Test :func:`fewSUM.config.config_hash`."""
    ref = config_hash(validate_config())
    assertion.eq(ref, config_hash(validate_config()))
    assertion.len_eq(ref, 64)
    assertion.ne(ref, config_hash(validate_config({'decode': {'beam_size': 2}})))


def test_dump_config() -> None:
    """The dumped YAML validates to the same normalized config."""
    normalized = validate_config({'model': {'n_layers': 1}})
    dumped = yaml.safe_load(dump_config(normalized))
    assertion.eq(validate_config(dumped), normalized)
    assertion.eq(config_hash(validate_config(dumped)), config_hash(normalized))
