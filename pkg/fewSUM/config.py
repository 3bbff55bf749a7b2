"""Loading, validation and normalization of run configurations.

A configuration is a YAML file whose sections override those of a bundled preset
(see :data:`fewSUM.data.PRESET_DICT`).

Index
-----
.. currentmodule:: fewSUM.config
.. autosummary::
    SECTIONS
    NoveltyConfig
    CorpusConfig
    RunConfig
    load_preset
    validate_config
    parse_config
    config_hash
    dump_config

API
---
.. autodata:: SECTIONS
.. autoclass:: NoveltyConfig
.. autoclass:: CorpusConfig
.. autoclass:: RunConfig
.. autofunction:: load_preset
.. autofunction:: validate_config
.. autofunction:: parse_config
.. autofunction:: config_hash
.. autofunction:: dump_config

"""

import os
import json
import hashlib
import dataclasses
from dataclasses import dataclass
from typing import Dict, Any, Mapping, Union, Optional, Tuple, NamedTuple, Type, Callable

import yaml
from nanoutils import PathType

from .data import PRESET_DICT
from .exceptions import ConfigError
from .corpus import FilterConfig, SPLIT_PRESETS, SPLITS
from .model import ModelConfig
from .plugin import PluginConfig, DistanceWeights
from .decoding import DecodeConfig
from .training import StageConfig, STAGE_NAMES
from .synthetic import SyntheticConfig

__all__ = [
    'SECTIONS', 'NoveltyConfig', 'CorpusConfig', 'RunConfig', 'load_preset',
    'validate_config', 'parse_config', 'config_hash', 'dump_config'
]

#: The names of all configuration sections.
SECTIONS: Tuple[str, ...] = (
    'bpe', 'filter', 'corpus', 'synthetic', 'model', 'plugin', 'distance',
    'novelty', 'decode', 'stages', 'evaluation'
)

DEFAULT_LAMBDA = 2.0


@dataclass(frozen=True)
class NoveltyConfig:
    """The scaling of the novelty penalty."""

    novelty_lambda: float = DEFAULT_LAMBDA

    def __post_init__(self) -> None:
        if self.novelty_lambda < 0:
            raise ValueError(f"'lambda' must be non-negative; "
                             f"observed value: {self.novelty_lambda!r}")


@dataclass(frozen=True)
class CorpusConfig:
    """Grouping and annotated-split settings.

    A **split** of ``"labels"`` keeps the split labels stored in the annotated file.

    """

    group_size: int = 9
    split: Union[str, Tuple[int, int, int]] = 'amazon'
    n_sources: int = 8
    n_references: int = 3

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ValueError(f"'group_size' must be at least 2; "
                             f"observed value: {self.group_size!r}")
        elif self.n_sources < 1 or self.n_references < 1:
            raise ValueError("'n_sources' and 'n_references' must be larger than 0")
        elif isinstance(self.split, str) and self.split not in tuple(SPLIT_PRESETS) + ('labels',):
            raise ValueError(f"'split' expected 'labels', one of {tuple(SPLIT_PRESETS)!r} "
                             f"or three counts; observed value: {self.split!r}")
        elif not isinstance(self.split, str) and (
            len(self.split) != 3 or min(self.split) < 0
        ):
            raise ValueError(f"'split' expected three non-negative counts; "
                             f"observed value: {self.split!r}")

    @property
    def split_spec(self) -> Optional[Union[str, Tuple[int, int, int]]]:
        """Get the **split_spec** argument of :func:`~fewSUM.corpus.load_annotated`."""
        return None if self.split == 'labels' else self.split


class RunConfig(NamedTuple):
    """The typed records of a normalized configuration."""

    bpe_merges: int
    filter: FilterConfig
    corpus: CorpusConfig
    synthetic: SyntheticConfig
    model: ModelConfig
    plugin: PluginConfig
    distance: DistanceWeights
    novelty: NoveltyConfig
    decode: DecodeConfig
    stages: Dict[str, StageConfig]
    eval_split: str
    eval_aggregate: str


def load_preset(name: str) -> Dict[str, Any]:
    """Read the bundled preset **name**."""
    try:
        path = PRESET_DICT[name]
    except KeyError:
        raise ConfigError('preset', f'expected one of {tuple(PRESET_DICT)!r}; '
                                    f'observed value: {name!r}') from None
    with open(path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


def _merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    ret = dict(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(ret.get(k), Mapping):
            ret[k] = _merge(ret[k], v)
        else:
            ret[k] = v
    return ret


def _fields(cls: type) -> Tuple[str, ...]:
    return tuple(f.name for f in dataclasses.fields(cls))


def _check_keys(section: str, dct: Any, allowed: Tuple[str, ...]) -> Dict[str, Any]:
    if dct is None:
        return {}
    elif not isinstance(dct, Mapping):
        raise ConfigError(section, f'expected a mapping; observed type: {type(dct).__name__!r}')
    for k in dct:
        if k not in allowed:
            raise ConfigError(f'{section}.{k}', 'unknown key')
    return dict(dct)


def _build(section: str, func: Callable[..., Any], *args: Any) -> Any:
    try:
        return func(*args)
    except (ValueError, TypeError) as ex:
        raise ConfigError(section, str(ex)) from ex


def _normalize_model(dct: Dict[str, Any]) -> Dict[str, Any]:
    dct = _check_keys('model', dct, _fields(ModelConfig) + ('d_model',))
    cfg = ModelConfig()
    sub = dct.get('d_subword_emb', cfg.d_subword_emb)
    length = dct.get('d_len_emb', cfg.d_len_emb)
    d_model = dct.pop('d_model', sub + length)
    if d_model != sub + length:
        raise ConfigError('model.d_model', f'must equal d_subword_emb + d_len_emb '
                                           f'({sub} + {length}); observed value: {d_model!r}')
    n_heads = dct.get('n_heads', cfg.n_heads)
    if not isinstance(n_heads, int) or n_heads < 1 or d_model % n_heads:
        raise ConfigError('model.n_heads', f'd_model ({d_model}) must be divisible by '
                                           f'n_heads ({n_heads})')
    ret = _build('model', ModelConfig.from_dict, dct).as_dict()
    ret['d_model'] = d_model
    return ret


def _normalize_record(section: str, cls: Type[Any], dct: Any) -> Dict[str, Any]:
    dct = _check_keys(section, dct, _fields(cls))
    return dataclasses.asdict(_build(section, cls.from_dict, dct))


def _normalize_stages(dct: Any, novelty_lambda: float) -> Dict[str, Dict[str, Any]]:
    dct = _check_keys('stages', dct, STAGE_NAMES)
    ret = {}
    for name in STAGE_NAMES:
        stage = _check_keys(f'stages.{name}', dct.get(name), _fields(StageConfig))
        stage.pop('name', None)
        if name == 'novelty_phase':
            stage.setdefault('novelty_lambda', novelty_lambda)
        cfg = _build(f'stages.{name}', StageConfig.from_dict, name, stage)
        ret[name] = {k: (list(v) if isinstance(v, tuple) else v)
                     for k, v in dataclasses.asdict(cfg).items() if k != 'name'}
    return ret


def validate_config(config: Union[None, PathType, Mapping[str, Any]] = None,
                    preset: Optional[str] = None) -> Dict[str, Any]:
    """Merge **config** over a preset, fill in all defaults and check all ranges.

    Parameters
    ----------
    config : path-like or :class:`Mapping[str, Any]<typing.Mapping>`, optional
        A YAML file or an already parsed mapping. A top-level ``preset`` key selects
        the base preset if **preset** is not given.
    preset : :class:`str`, optional
        The name of the base preset; defaults to ``"desk"``.

    Returns
    -------
    :class:`Dict[str, Any]<typing.Dict>`
        The normalized configuration, with all sections of :data:`SECTIONS`.

    Raises
    ------
    :exc:`~fewSUM.exceptions.ConfigError`
        Raised for unknown keys and invalid values; the offending key and constraint are named.

    """
    if config is None:
        raw: Dict[str, Any] = {}
    elif isinstance(config, Mapping):
        raw = dict(config)
    else:
        if not os.path.isfile(config):
            raise ConfigError('config', f'no such file: {os.fspath(config)!r}')
        with open(config, 'r', encoding='utf-8') as f:
            raw = yaml.safe_load(f) or {}
        if not isinstance(raw, Mapping):
            raise ConfigError('config', 'expected a mapping at the top level')

    name = preset or raw.pop('preset', None) or 'desk'
    raw.pop('preset', None)
    for k in raw:
        if k not in SECTIONS:
            raise ConfigError(k, 'unknown section')
    merged = _merge(load_preset(name), raw)

    bpe = _check_keys('bpe', merged.get('bpe'), ('merges',))
    merges = bpe.get('merges', 0)
    if isinstance(merges, bool) or not isinstance(merges, int) or merges < 0:
        raise ConfigError('bpe.merges',
                          f'must be a non-negative integer; observed value: {merges!r}')

    novelty = _check_keys('novelty', merged.get('novelty'), ('lambda',))
    lam = novelty.get('lambda', DEFAULT_LAMBDA)
    if isinstance(lam, bool) or not isinstance(lam, (int, float)) or lam < 0:
        raise ConfigError('novelty.lambda',
                          f'must be a non-negative number; observed value: {lam!r}')

    corpus = _check_keys('corpus', merged.get('corpus'), _fields(CorpusConfig))
    if isinstance(corpus.get('split'), list):
        corpus['split'] = tuple(corpus['split'])
    corpus_cfg = _build('corpus', lambda: CorpusConfig(**corpus))
    evaluation = _check_keys('evaluation', merged.get('evaluation'), ('split', 'aggregate'))
    split = evaluation.get('split', 'test')
    aggregate = evaluation.get('aggregate', 'mean')
    if split not in SPLITS:
        raise ConfigError('evaluation.split',
                          f'expected one of {SPLITS!r}; observed value: {split!r}')
    elif aggregate not in ('mean', 'max'):
        raise ConfigError('evaluation.aggregate',
                          f"expected 'mean' or 'max'; observed value: {aggregate!r}")

    corpus_dct = dataclasses.asdict(corpus_cfg)
    if isinstance(corpus_dct['split'], tuple):
        corpus_dct['split'] = list(corpus_dct['split'])

    return {
        'preset': name,
        'bpe': {'merges': merges},
        'filter': _normalize_record('filter', FilterConfig, merged.get('filter')),
        'corpus': corpus_dct,
        'synthetic': _normalize_record('synthetic', SyntheticConfig, merged.get('synthetic')),
        'model': _normalize_model(merged.get('model') or {}),
        'plugin': _normalize_record('plugin', PluginConfig, merged.get('plugin')),
        'distance': _normalize_record('distance', DistanceWeights, merged.get('distance')),
        'novelty': {'lambda': float(lam)},
        'decode': _normalize_record('decode', DecodeConfig, merged.get('decode')),
        'stages': _normalize_stages(merged.get('stages'), float(lam)),
        'evaluation': {'split': split, 'aggregate': aggregate},
    }


def parse_config(normalized: Mapping[str, Any]) -> RunConfig:
    """Convert the output of :func:`validate_config` into typed records."""
    corpus = dict(normalized['corpus'])
    if isinstance(corpus['split'], list):
        corpus['split'] = tuple(corpus['split'])
    return RunConfig(
        bpe_merges=normalized['bpe']['merges'],
        filter=FilterConfig.from_dict(normalized['filter']),
        corpus=CorpusConfig(**corpus),
        synthetic=SyntheticConfig.from_dict(normalized['synthetic']),
        model=ModelConfig.from_dict(normalized['model']),
        plugin=PluginConfig.from_dict(normalized['plugin']),
        distance=DistanceWeights.from_dict(normalized['distance']),
        novelty=NoveltyConfig(normalized['novelty']['lambda']),
        decode=DecodeConfig.from_dict(normalized['decode']),
        stages={k: StageConfig.from_dict(k, v) for k, v in normalized['stages'].items()},
        eval_split=normalized['evaluation']['split'],
        eval_aggregate=normalized['evaluation']['aggregate'],
    )


def config_hash(normalized: Mapping[str, Any]) -> str:
    """Return the sha256 hex digest of the canonical JSON form of **normalized**."""
    return hashlib.sha256(json.dumps(normalized, sort_keys=True).encode()).hexdigest()


def dump_config(normalized: Mapping[str, Any]) -> str:
    """Return **normalized** as a YAML string, sections in :data:`SECTIONS` order."""
    return yaml.safe_dump(dict(normalized), sort_keys=False, default_flow_style=False)
