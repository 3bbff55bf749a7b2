"""The plug-in network predicting property values from encoded source reviews.

Index
-----
.. currentmodule:: fewSUM.plugin
.. autosummary::
    PluginConfig
    PAPER_PLUGIN
    DESK_PLUGIN
    DistanceWeights
    PropertyPlugin
    plugin_forward
    plugin_distance
    to_property_vectors
    distance_components

API
---
.. autoclass:: PluginConfig
    :members: from_dict
.. autodata:: PAPER_PLUGIN
.. autodata:: DESK_PLUGIN
.. autoclass:: DistanceWeights
    :members: from_dict
.. autoclass:: PropertyPlugin
.. autofunction:: plugin_forward
.. autofunction:: plugin_distance
.. autofunction:: to_property_vectors
.. autofunction:: distance_components

"""

import math
import dataclasses
from dataclasses import dataclass
from typing import Optional, Mapping, Any, List, Dict

import numpy as np
import torch
from torch import nn

from . import ops
from .model import Memory
from .oracle import PropertyVector

__all__ = [
    'PluginConfig', 'PAPER_PLUGIN', 'DESK_PLUGIN', 'DistanceWeights', 'PropertyPlugin',
    'plugin_forward', 'plugin_distance', 'to_property_vectors', 'distance_components'
]

#: Output slices of the coverage, point-of-view and deviation blocks.
COVERAGE = slice(0, 3)
POV = slice(3, 7)
DEVIATIONS = slice(7, 9)

_EPS = 1e-8


@dataclass(frozen=True)
class PluginConfig:
    """Hyperparameters of :class:`PropertyPlugin`."""

    n_layers: int = 3
    n_heads: int = 3
    d_state: int = 30
    d_ffn_hidden: int = 20
    dropout_internal: float = 0.4
    dropout_attention: float = 0.15
    n_properties: int = 9

    def __post_init__(self) -> None:
        for name in ('n_layers', 'n_heads', 'd_state', 'd_ffn_hidden'):
            value = getattr(self, name)
            if value <= 0:
                raise ValueError(f"{name!r} must be larger than 0; observed value: {value!r}")
        if self.d_state % self.n_heads:
            raise ValueError(f"'d_state' ({self.d_state}) must be divisible by "
                             f"'n_heads' ({self.n_heads})")
        if self.n_properties != 9:
            raise ValueError(f"'n_properties' must be 9; observed value: {self.n_properties!r}")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> 'PluginConfig':
        """Construct a config from a mapping, ignoring unknown keys."""
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in dct.items() if k in names})


PAPER_PLUGIN = PluginConfig()
DESK_PLUGIN = PluginConfig(dropout_internal=0.1, dropout_attention=0.05)


@dataclass(frozen=True)
class DistanceWeights:
    """Weights of the length, rating, point-of-view and coverage distances."""

    w_len_dev: float = 0.1
    w_rating_dev: float = 1.0
    w_pov: float = 0.08
    w_coverage: float = 0.5

    def __post_init__(self) -> None:
        for k, v in dataclasses.asdict(self).items():
            if v < 0:
                raise ValueError(f"{k!r} must be non-negative; observed value: {v!r}")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> 'DistanceWeights':
        """Construct the weights from a mapping, ignoring unknown keys."""
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in dct.items() if k in names})


class PooledAttentionLayer(nn.Module):
    """Attention from a single state vector over all memory positions plus a feed-forward."""

    def __init__(self, cfg: PluginConfig, d_memory: int, device: Optional[str] = None) -> None:
        super().__init__()
        d = cfg.d_state
        self.n_heads = cfg.n_heads
        self.p_attn = cfg.dropout_attention
        self.p_ffn = cfg.dropout_internal
        self.q_proj = nn.Linear(d, d, device=device)
        self.k_proj = nn.Linear(d_memory, d, device=device)
        self.v_proj = nn.Linear(d_memory, d, device=device)
        self.out_proj = nn.Linear(d, d, device=device)
        self.ffn_in = nn.Linear(d, cfg.d_ffn_hidden, device=device)
        self.ffn_out = nn.Linear(cfg.d_ffn_hidden, d, device=device)
        self.norm1 = nn.LayerNorm(d, device=device)
        self.norm2 = nn.LayerNorm(d, device=device)

    def forward(self, state: torch.Tensor, memory: Memory) -> torch.Tensor:
        b, d = state.shape
        h = self.n_heads
        q = self.q_proj(state).view(b, h, 1, d // h)
        k = self.k_proj(memory.states).view(b, -1, h, d // h).transpose(1, 2)
        v = self.v_proj(memory.states).view(b, -1, h, d // h).transpose(1, 2)

        attn = ops.masked_attention(q, k, v, memory.mask).reshape(b, d)
        attn = ops.dropout(self.out_proj(attn), self.p_attn, self.training)
        state = ops.layer_norm(state + attn, self.norm1.weight, self.norm1.bias)

        ffn = self.ffn_out(ops.dropout(torch.relu(self.ffn_in(state)), self.p_ffn, self.training))
        return ops.layer_norm(state + ffn, self.norm2.weight, self.norm2.bias)


class PropertyPlugin(nn.Module):
    """A permutation-invariant network mapping a :class:`~fewSUM.model.Memory` to property values.

    Parameters
    ----------
    cfg : :class:`PluginConfig`
        The plug-in hyperparameters.
    d_memory : :class:`int`
        The width of the encoder states.
    device : :class:`str`, optional
        The device of all parameters.

    """

    def __init__(self, cfg: PluginConfig, d_memory: int, device: Optional[str] = None) -> None:
        super().__init__()
        self.cfg = cfg
        self.d_memory = d_memory
        self.init_state = nn.Parameter(torch.empty(cfg.d_state, device=device))
        self.layers = nn.ModuleList([
            PooledAttentionLayer(cfg, d_memory, device) for _ in range(cfg.n_layers)
        ])
        self.head = nn.Linear(cfg.d_state, cfg.n_properties, device=device)
        if device != 'meta':
            self.reset_parameters()

    def reset_parameters(self) -> None:
        """Glorot-initialize all matrices; the initial state is drawn uniformly."""
        bound = 1 / math.sqrt(self.cfg.d_state)
        for name, p in self.named_parameters():
            if p.ndim >= 2:
                nn.init.xavier_uniform_(p)
            elif name == 'init_state':
                nn.init.uniform_(p, -bound, bound)
            elif 'norm' in name and name.endswith('weight'):
                nn.init.ones_(p)
            else:
                nn.init.zeros_(p)

    def forward(self, memory: Memory) -> torch.Tensor:
        """Return squashed property values of shape :math:`(B, 9)`."""
        if not bool(memory.mask.any(dim=-1).all()):
            raise ValueError('plugin_forward: every batch element needs at least one '
                             'attendable memory position')

        memory = _canonical_order(memory)
        b = memory.states.shape[0]
        state = self.init_state.to(memory.states.dtype).expand(b, -1)
        for layer in self.layers:
            state = layer(state, memory)
        raw = self.head(state)
        return torch.cat([
            torch.sigmoid(raw[:, COVERAGE]),
            ops.softmax(raw[:, POV]),
            raw[:, DEVIATIONS],
        ], dim=-1)


def _canonical_order(memory: Memory) -> Memory:
    """Sort the memory positions of every batch element by (padding, state values).

    Reductions then visit positions in a fixed order, making the output bit-identical
    under any permutation of the sources.

    """
    states = memory.states.detach().cpu().numpy()
    masks = memory.mask.cpu().numpy()
    orders: List[np.ndarray] = []
    for x, m in zip(states, masks):
        keys = np.vstack([x.T[::-1], (~m)[None].astype(x.dtype)])
        orders.append(np.lexsort(keys))
    idx = torch.as_tensor(np.stack(orders), device=memory.states.device)

    states_sorted = torch.gather(
        memory.states, 1, idx[..., None].expand(-1, -1, memory.states.shape[-1])
    )
    return Memory(states_sorted, torch.gather(memory.mask, 1, idx))


def plugin_forward(plugin: PropertyPlugin, memory: Memory) -> torch.Tensor:
    """Predict the :math:`(B, 9)` property values of the sources encoded in **memory**."""
    return plugin(memory)


def _kl(target: torch.Tensor, pred: torch.Tensor) -> torch.Tensor:
    log_ratio = torch.log(target + _EPS) - torch.log(pred + _EPS)
    return (target * log_ratio).sum(dim=-1)


def plugin_distance(pred: torch.Tensor, target: torch.Tensor,
                    w: DistanceWeights = DistanceWeights(),
                    reduce: bool = True) -> torch.Tensor:
    """Weighted L1 distances on coverage and deviations plus a weighted KL on the POV block.

    The divergence is taken from **target** to **pred**, smoothed with :math:`\\epsilon = 10^{-8}`.

    Parameters
    ----------
    pred, target : :class:`torch.Tensor`, shape :math:`(B, 9)` or :math:`(9,)`
        Predicted and oracle property values.
    w : :class:`DistanceWeights`
        The per-property weights.
    reduce : :class:`bool`
        If :data:`True`, return the batch mean; otherwise one distance per batch element.

    """
    if pred.shape != target.shape or pred.shape[-1] != 9:
        raise ValueError(f"plugin_distance: expected matching (..., 9) shapes; "
                         f"observed {tuple(pred.shape)} and {tuple(target.shape)}")
    target = target.to(pred.dtype)
    diff = (pred - target).abs()
    ret = (
        w.w_coverage * diff[..., COVERAGE].sum(dim=-1)
        + w.w_rating_dev * diff[..., 7]
        + w.w_len_dev * diff[..., 8]
        + w.w_pov * _kl(target[..., POV], pred[..., POV]).clamp(min=0)
    )
    return ret.mean() if reduce else ret


def to_property_vectors(values: torch.Tensor) -> List[PropertyVector]:
    """Convert a :math:`(B, 9)` tensor into a list of :class:`~fewSUM.oracle.PropertyVector`."""
    ar = values.detach().cpu().double().numpy()
    ret = []
    for row in ar:
        row = row.copy()
        row[POV] /= row[POV].sum()
        row[COVERAGE] = np.clip(row[COVERAGE], 0, 1)
        ret.append(PropertyVector.from_array(row))
    return ret


def distance_components(pred: torch.Tensor, target: torch.Tensor) -> Dict[str, float]:
    """Return the unweighted batch-mean distance of every property group."""
    diff = (pred - target.to(pred.dtype)).abs()
    return {
        'coverage': float(diff[..., COVERAGE].sum(dim=-1).mean()),
        'rating_dev': float(diff[..., 7].mean()),
        'length_dev': float(diff[..., 8].mean()),
        'pov': float(_kl(target[..., POV].to(pred.dtype), pred[..., POV]).mean()),
    }
