"""A module with testing utilities for **Few-SUM**.

All objects are small enough for a test suite that runs in seconds on a single core.

Index
-----
.. currentmodule:: fewSUM.testing_utils
.. autosummary::
    HDF5_TMP
    TMP_DIR
    TINY_REVIEWS
    TINY_GROUPS
    TINY_ANNOTATED
    TINY_BPE
    TINY_MODEL
    TINY_PLUGIN
    DESK_MODEL
    DESK_PLUGIN
    tiny_model
    tiny_plugin
    tiny_config
    sampled_gradients

API
---
.. autodata:: HDF5_TMP
    :annotation: : pathlib.Path = ...
.. autodata:: TMP_DIR
    :annotation: : pathlib.Path = ...
.. autodata:: TINY_REVIEWS
    :annotation: : Tuple[Review, ...] = ...
.. autodata:: TINY_GROUPS
    :annotation: : Tuple[ReviewGroup, ...] = ...
.. autodata:: TINY_ANNOTATED
    :annotation: : AnnotatedSet = ...
.. autodata:: TINY_BPE
    :annotation: : BpeModel = ...
.. autodata:: TINY_MODEL
    :annotation: : ModelConfig = ...
.. autodata:: TINY_PLUGIN
    :annotation: : PluginConfig = ...
.. autodata:: DESK_MODEL
    :annotation: : ModelConfig = ...
.. autodata:: DESK_PLUGIN
    :annotation: : PluginConfig = ...
.. autofunction:: tiny_model
.. autofunction:: tiny_plugin
.. autofunction:: tiny_config
.. autofunction:: sampled_gradients

"""

import dataclasses
from typing import Tuple, Dict, Any, List, Callable
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .corpus import SPLITS, Review, ReviewGroup, AnnotatedSet, make_groups
from .textproc import BpeModel, train_bpe
from .model import ModelConfig, EncoderGenerator, DESK_MODEL
from .plugin import PluginConfig, PropertyPlugin, DESK_PLUGIN
from .synthetic import SyntheticConfig, synthetic_reviews, synthetic_annotated

__all__ = [
    'HDF5_TMP', 'TMP_DIR', 'TINY_REVIEWS', 'TINY_GROUPS', 'TINY_ANNOTATED', 'TINY_BPE',
    'TINY_MODEL', 'TINY_PLUGIN', 'DESK_MODEL', 'DESK_PLUGIN',
    'tiny_model', 'tiny_plugin', 'tiny_config', 'sampled_gradients',
]

#: A path to a temporary (to-be created) hdf5 file.
HDF5_TMP = Path('tests') / 'test_files' / '.fewsum.hdf5'

#: A directory for temporary files.
TMP_DIR = Path('tests') / 'test_files'

_SYNTHETIC = SyntheticConfig(n_products=4, reviews_per_product=9, n_annotated=6,
                             n_sources=8, seed=0)

#: 36 reviews of four products.
TINY_REVIEWS: Tuple[Review, ...] = tuple(synthetic_reviews(_SYNTHETIC))

#: Four groups of nine reviews.
TINY_GROUPS: Tuple[ReviewGroup, ...] = tuple(make_groups(TINY_REVIEWS, 9, seed=0))

_LABELS = 4 * SPLITS[:1] + SPLITS[1:]

#: Six annotated entries; four training, one validation and one test entry.
TINY_ANNOTATED = AnnotatedSet(tuple(
    dataclasses.replace(e, split=k) for e, k in zip(synthetic_annotated(_SYNTHETIC), _LABELS)
))

#: A subword model learned from :data:`TINY_REVIEWS` and the references of :data:`TINY_ANNOTATED`.
TINY_BPE: BpeModel = train_bpe(
    [r.text for r in TINY_REVIEWS] + [s for e in TINY_ANNOTATED for s in e.references], 80
)

#: A one-layer model config without dropout, sized to :data:`TINY_BPE`.
TINY_MODEL = ModelConfig(
    n_layers=1, n_heads=2, d_subword_emb=14, d_len_emb=2, d_ffn=16,
    vocab_size=len(TINY_BPE), dropout_sublayer=0.0, dropout_emb=0.0, max_len=96,
)

#: A one-layer plug-in config without dropout.
TINY_PLUGIN = PluginConfig(n_layers=1, n_heads=2, d_state=8, d_ffn_hidden=8,
                           dropout_internal=0.0, dropout_attention=0.0)


def tiny_model(seed: int = 0, dtype: torch.dtype = torch.float32,
               **kwargs: Any) -> EncoderGenerator:
    """Construct a seeded model from :data:`TINY_MODEL`, updated with **kwargs**."""
    cfg = ModelConfig.from_dict({**TINY_MODEL.as_dict(), **kwargs})
    torch.manual_seed(seed)
    return EncoderGenerator(cfg).to(dtype)


def tiny_plugin(model: EncoderGenerator, seed: int = 0, **kwargs: Any) -> PropertyPlugin:
    """Construct a seeded plug-in from :data:`TINY_PLUGIN` for the memory of **model**."""
    cfg = PluginConfig.from_dict({**dataclasses.asdict(TINY_PLUGIN), **kwargs})
    torch.manual_seed(seed)
    return PropertyPlugin(cfg, model.cfg.d_model).to(model.embed.dtype)


def tiny_config(steps: int = 2, batch_size: int = 4) -> Dict[str, Any]:
    """Return a desk-preset override with tiny models and **steps** steps per stage."""
    stage = {'steps': steps, 'batch_size': batch_size, 'eval_size': 4, 'log_every': 1}
    return {
        'bpe': {'merges': 80},
        'synthetic': {'n_products': 12, 'reviews_per_product': 10, 'n_annotated': 12},
        'model': {
            'n_layers': 1, 'n_heads': 2, 'd_subword_emb': 14, 'd_len_emb': 2, 'd_model': 16,
            'd_ffn': 16, 'max_len': 96,
        },
        'plugin': {'n_layers': 1, 'n_heads': 2, 'd_state': 8, 'd_ffn_hidden': 8},
        'decode': {'beam_size': 2, 'max_tokens': 8},
        'stages': {k: dict(stage) for k in (
            'pretrain_lm', 'train_loo', 'novelty_phase', 'plugin_init', 'plugin_finetune',
            'joint_finetune', 'usl_finetune', 'mtl'
        )},
    }


def sampled_gradients(loss_fn: Callable[[], torch.Tensor], module: nn.Module, n: int = 20,
                      seed: int = 0, h: float = 1e-6) -> List[Tuple[str, int, float, float]]:
    """Compare autograd with central differences on **n** randomly selected parameter entries.

    Entries are drawn with a seeded generator from those with a non-zero analytical gradient.

    Returns
    -------
    :class:`List[Tuple[str, int, float, float]]<typing.List>`
        The parameter name, flat index, analytical and numerical gradient of every entry.

    """
    params = dict(module.named_parameters())
    module.zero_grad(set_to_none=True)
    loss_fn().backward()
    candidates = [
        (name, int(i)) for name, p in params.items() if p.grad is not None
        for i in torch.nonzero(p.grad.reshape(-1)).reshape(-1).tolist()
    ]
    if len(candidates) < n:
        raise ValueError(f"only {len(candidates)} parameter entries have a non-zero gradient")

    rng = np.random.default_rng(seed)
    ret = []
    with torch.no_grad():
        for j in sorted(rng.choice(len(candidates), size=n, replace=False)):
            name, i = candidates[j]
            flat = params[name].view(-1)
            analytical = float(params[name].grad.reshape(-1)[i])
            value = float(flat[i])
            flat[i] = value + h
            plus = float(loss_fn())
            flat[i] = value - h
            minus = float(loss_fn())
            flat[i] = value
            ret.append((name, i, analytical, (plus - minus) / (2 * h)))
    module.zero_grad(set_to_none=True)
    return ret
