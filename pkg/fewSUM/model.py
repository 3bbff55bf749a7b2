"""The parameter-shared Transformer encoder-generator.

A single stack of layers serves both as the review encoder (self-attention only)
and as the property-conditioned generator (causal self-attention plus attention
over the encoded sources).
The subword embedding doubles as the output projection.

Index
-----
.. currentmodule:: fewSUM.model
.. autosummary::
    ModelConfig
    PAPER_MODEL
    DESK_MODEL
    Memory
    EncoderGenerator
    LossOutput
    encode_sources
    generator_forward
    loo_loss
    source_vocab_mask
    novelty_penalty
    novel_mass
    param_count
    param_manifest
    plugin_ratio

API
---
.. autoclass:: ModelConfig
    :members: d_model, from_dict, as_dict
.. autodata:: PAPER_MODEL
.. autodata:: DESK_MODEL
.. autoclass:: Memory
    :members: repeat
.. autoclass:: EncoderGenerator
    :members: encode, generate
.. autoclass:: LossOutput
.. autofunction:: encode_sources
.. autofunction:: generator_forward
.. autofunction:: loo_loss
.. autofunction:: source_vocab_mask
.. autofunction:: novelty_penalty
.. autofunction:: novel_mass
.. autofunction:: param_count
.. autofunction:: param_manifest
.. autofunction:: plugin_ratio

"""

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence, Dict, Tuple, NamedTuple, Any, Mapping, Union

import torch
from torch import nn

from . import ops
from .exceptions import ShapeError
from .textproc import TokenSeq, SPECIALS

__all__ = [
    'ModelConfig', 'PAPER_MODEL', 'DESK_MODEL', 'Memory', 'EncoderGenerator', 'LossOutput',
    'encode_sources', 'generator_forward', 'loo_loss', 'source_vocab_mask',
    'novelty_penalty', 'novel_mass', 'param_count', 'param_manifest', 'plugin_ratio'
]


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of :class:`EncoderGenerator`.

    :attr:`n_tasks` is the number of rows of the task embedding; 0 disables it.
    A tied task embedding shares a single row between all tasks.

    """

    n_layers: int = 2
    n_heads: int = 2
    d_subword_emb: int = 60
    d_len_emb: int = 4
    d_ffn: int = 128
    vocab_size: int = 600
    dropout_sublayer: float = 0.1
    dropout_emb: float = 0.1
    n_properties: int = 9
    max_len: int = 128
    n_tasks: int = 0
    tie_tasks: bool = False

    def __post_init__(self) -> None:
        for name in ('n_layers', 'n_heads', 'd_subword_emb', 'd_len_emb', 'd_ffn',
                     'vocab_size', 'n_properties', 'max_len'):
            value = getattr(self, name)
            if value <= 0:
                raise ValueError(f"{name!r} must be larger than 0; observed value: {value!r}")
        if self.d_model % self.n_heads:
            raise ValueError(f"'d_model' ({self.d_model}) must be divisible by "
                             f"'n_heads' ({self.n_heads})")
        for name in ('dropout_sublayer', 'dropout_emb'):
            value = getattr(self, name)
            if not 0 <= value < 1:
                raise ValueError(f"{name!r} expected a value in [0, 1); observed value: {value!r}")
        if self.n_tasks < 0:
            raise ValueError(f"'n_tasks' must be non-negative; observed value: {self.n_tasks!r}")

    @property
    def d_model(self) -> int:
        """:class:`int`: Get the width of the layer stack, the sum of both embedding widths."""
        return self.d_subword_emb + self.d_len_emb

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> 'ModelConfig':
        """Construct a config from a mapping, ignoring unknown keys such as ``d_model``."""
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in dct.items() if k in names})

    def as_dict(self) -> Dict[str, Any]:
        """Convert this config into a dictionary."""
        return dataclasses.asdict(self)


#: The full-size configuration (shape and parameter-count checks only).
PAPER_MODEL = ModelConfig(
    n_layers=6, n_heads=8, d_subword_emb=390, d_len_emb=10, d_ffn=1000,
    vocab_size=32000, dropout_sublayer=0.1, dropout_emb=0.1, n_properties=9, max_len=256,
)

#: A configuration that trains on a single CPU core in minutes.
DESK_MODEL = ModelConfig()


class Memory(NamedTuple):
    """Encoded sources.

    Holds the states of shape :math:`(B, L, d)` and an attendable-position mask :math:`(B, L)`.

    """

    states: torch.Tensor
    mask: torch.Tensor

    def repeat(self, n: int) -> 'Memory':
        """Repeat every batch element **n** times along the batch axis."""
        return Memory(self.states.repeat_interleave(n, dim=0),
                      self.mask.repeat_interleave(n, dim=0))

    @property
    def n_positions(self) -> torch.Tensor:
        """:class:`torch.Tensor`: Get the number of attendable positions per batch element."""
        return self.mask.sum(dim=-1)


class MultiHeadAttention(nn.Module):
    """Multi-head attention with separate query, key, value and output projections."""

    def __init__(self, d_model: int, n_heads: int, d_key: Optional[int] = None,
                 device: Optional[str] = None) -> None:
        super().__init__()
        d_key = d_model if d_key is None else d_key
        self.n_heads = n_heads
        self.q_proj = nn.Linear(d_model, d_model, device=device)
        self.k_proj = nn.Linear(d_key, d_model, device=device)
        self.v_proj = nn.Linear(d_key, d_model, device=device)
        self.out_proj = nn.Linear(d_model, d_model, device=device)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        b, t, d = x.shape
        return x.view(b, t, self.n_heads, d // self.n_heads).transpose(1, 2)

    def forward(self, query: torch.Tensor, key: torch.Tensor,
                key_mask: Optional[torch.Tensor] = None,
                attn_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        q = self._split(self.q_proj(query))
        k = self._split(self.k_proj(key))
        v = self._split(self.v_proj(key))
        out = ops.masked_attention(q, k, v, key_mask, attn_mask)
        b, _, t, _ = out.shape
        return self.out_proj(out.transpose(1, 2).reshape(b, t, -1))


class TransformerLayer(nn.Module):
    """A post-norm layer; attention over the memory is skipped when encoding."""

    def __init__(self, cfg: ModelConfig, device: Optional[str] = None) -> None:
        super().__init__()
        d = cfg.d_model
        self.p = cfg.dropout_sublayer
        self.self_attn = MultiHeadAttention(d, cfg.n_heads, device=device)
        self.cross_attn = MultiHeadAttention(d, cfg.n_heads, device=device)
        self.ffn_in = nn.Linear(d, cfg.d_ffn, device=device)
        self.ffn_out = nn.Linear(cfg.d_ffn, d, device=device)
        self.norm1 = nn.LayerNorm(d, device=device)
        self.norm2 = nn.LayerNorm(d, device=device)
        self.norm3 = nn.LayerNorm(d, device=device)

    def _residual(self, x: torch.Tensor, dx: torch.Tensor, norm: nn.LayerNorm) -> torch.Tensor:
        dx = ops.dropout(dx, self.p, self.training)
        return ops.layer_norm(x + dx, norm.weight, norm.bias, norm.eps)

    def forward(self, x: torch.Tensor, key_mask: torch.Tensor,
                attn_mask: Optional[torch.Tensor] = None,
                memory: Optional[Memory] = None) -> torch.Tensor:
        x = self._residual(x, self.self_attn(x, x, key_mask, attn_mask), self.norm1)
        if memory is not None:
            dx = self.cross_attn(x, memory.states, memory.mask)
            x = self._residual(x, dx, self.norm2)
        dx = self.ffn_out(torch.relu(self.ffn_in(x)))
        return self._residual(x, dx, self.norm3)


class EncoderGenerator(nn.Module):
    """The conditional review language model.

    Parameters
    ----------
    cfg : :class:`ModelConfig`
        The model hyperparameters.
    device : :class:`str`, optional
        The device of all parameters; parameters on the ``"meta"`` device
        are neither allocated nor initialized.

    """

    def __init__(self, cfg: ModelConfig, device: Optional[str] = None) -> None:
        super().__init__()
        self.cfg = cfg
        d_in = cfg.d_subword_emb + cfg.d_len_emb + cfg.n_properties

        self.embed = nn.Parameter(torch.empty(cfg.vocab_size, cfg.d_subword_emb, device=device))
        self.len_embed = nn.Parameter(torch.empty(cfg.max_len, cfg.d_len_emb, device=device))
        self.layers = nn.ModuleList([TransformerLayer(cfg, device) for _ in range(cfg.n_layers)])
        self.prop_proj = nn.Linear(d_in, cfg.d_model, device=device)
        self.out_proj = nn.Linear(cfg.d_model, cfg.d_subword_emb, device=device)
        self.out_bias = nn.Parameter(torch.empty(cfg.vocab_size, device=device))
        if cfg.n_tasks:
            rows = 1 if cfg.tie_tasks else cfg.n_tasks
            self.task_embed: Optional[nn.Parameter] = nn.Parameter(
                torch.empty(rows, cfg.d_model, device=device)
            )
        else:
            self.task_embed = None

        if device != 'meta':
            self.reset_parameters()

    def reset_parameters(self) -> None:
        """Glorot-initialize all matrices; zero all biases and set all norm gains to 1."""
        for name, p in self.named_parameters():
            if p.ndim >= 2:
                nn.init.xavier_uniform_(p)
            elif 'norm' in name and name.endswith('weight'):
                nn.init.ones_(p)
            else:
                nn.init.zeros_(p)

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        t = ids.shape[-1]
        if t > self.cfg.max_len:
            raise ValueError(f"sequence length {t} exceeds 'max_len' ({self.cfg.max_len}); "
                             "truncate the input first")
        pos = ops.embedding(torch.arange(t, device=ids.device), self.len_embed)
        tok = ops.embedding(ids, self.embed)
        return torch.cat([tok, pos.expand(*ids.shape, -1)], dim=-1)

    def encode(self, sources: torch.Tensor, pad_id: int = 0) -> Memory:
        """Encode a batch of sources of shape :math:`(B, S, T)` into a :class:`Memory`.

        Every source is encoded on its own; the memory of a batch element is the
        concatenation of its :math:`S` encoded sources.

        """
        if sources.ndim != 3:
            raise ShapeError(f"encode: expected sources of shape (B, S, T); "
                             f"observed shape: {tuple(sources.shape)}")
        b, s, t = sources.shape
        ids = sources.reshape(b * s, t)
        mask = ids != pad_id

        x = ops.dropout(self._embed(ids), self.cfg.dropout_emb, self.training)
        for layer in self.layers:
            x = layer(x, mask)
        return Memory(x.reshape(b, s * t, -1), mask.reshape(b, s * t))

    def generate(self, ids: torch.Tensor, memory: Optional[Memory], props: torch.Tensor,
                 task: Optional[torch.Tensor] = None, pad_id: int = 0) -> torch.Tensor:
        """Compute the next-token logits of shape :math:`(B, T, V)` with teacher forcing.

        Parameters
        ----------
        ids : :class:`torch.Tensor`, shape :math:`(B, T)`
            The generator input, starting with the begin-of-sequence symbol.
        memory : :class:`Memory`, optional
            The encoded sources; attention over them is skipped if :data:`None`.
        props : :class:`torch.Tensor`, shape :math:`(B, n_{properties})`
            The conditioning property vectors.
        task : :class:`torch.Tensor`, shape :math:`(B,)`, optional
            Task indices into the task embedding.

        """
        cfg = self.cfg
        if props.ndim != 2 or props.shape != (ids.shape[0], cfg.n_properties):
            raise ShapeError(f"generate: expected properties of shape "
                             f"({ids.shape[0]}, {cfg.n_properties}); "
                             f"observed shape: {tuple(props.shape)}")

        t = ids.shape[-1]
        x = self._embed(ids)
        x = torch.cat([x, props[:, None, :].expand(-1, t, -1).to(x.dtype)], dim=-1)
        x = self.prop_proj(x)
        if task is not None and self.task_embed is not None:
            rows = torch.zeros_like(task) if cfg.tie_tasks else task
            x = x + ops.embedding(rows, self.task_embed)[:, None, :]
        x = ops.dropout(x, cfg.dropout_emb, self.training)

        key_mask = ids != pad_id
        attn_mask = ops.causal_mask(t, device=ids.device)
        for layer in self.layers:
            x = layer(x, key_mask, attn_mask, memory)

        h = self.out_proj(x)
        return ops.add_bias(ops.matmul(h, self.embed.t()), self.out_bias)


def _pad(seqs: Sequence[Sequence[int]], pad_id: int, length: Optional[int] = None) -> torch.Tensor:
    n = max((len(s) for s in seqs), default=0) if length is None else length
    ret = torch.full((len(seqs), max(n, 1)), pad_id, dtype=torch.long)
    for i, s in enumerate(seqs):
        ret[i, :len(s)] = torch.as_tensor(s, dtype=torch.long)
    return ret


def encode_sources(model: EncoderGenerator, sources: Sequence[TokenSeq]) -> Memory:
    """Encode the sources of a single instance into a :class:`Memory` with batch size 1.

    Raises
    ------
    :exc:`ValueError`
        Raised if a source is longer than :attr:`ModelConfig.max_len`.

    """
    if not sources:
        raise ValueError("'sources' must contain at least one sequence")
    pad_id = sources[0].pad_id
    ids = _pad([s.ids for s in sources], pad_id)
    return model.encode(ids[None], pad_id=pad_id)


def generator_forward(model: EncoderGenerator, target: TokenSeq, memory: Optional[Memory],
                      props: Union[torch.Tensor, Sequence[float]]) -> torch.Tensor:
    """Compute the :math:`(T, V)` teacher-forced logits of a single target sequence."""
    ids = torch.as_tensor(target.ids, dtype=torch.long)[None]
    p = torch.as_tensor(props, dtype=model.embed.dtype).reshape(1, -1)
    return model.generate(ids, memory, p, pad_id=target.pad_id)[0]


def source_vocab_mask(sources: torch.Tensor, vocab_size: int,
                      n_specials: int = len(SPECIALS)) -> torch.Tensor:
    """Return a boolean :math:`(B, V)` mask of the subwords present in **sources**.

    Special symbols are never marked.

    """
    b = sources.shape[0]
    mask = torch.zeros(b, vocab_size, dtype=torch.bool, device=sources.device)
    mask.scatter_(1, sources.reshape(b, -1), True)
    mask[:, :n_specials] = False
    return mask


def novelty_penalty(logits: torch.Tensor, mask: torch.Tensor,
                    target_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Sum the probability mass assigned to subwords outside **mask** over all target positions.

    Parameters
    ----------
    logits : :class:`torch.Tensor`, shape :math:`(B, T, V)` or :math:`(T, V)`
        Generator logits.
    mask : :class:`torch.Tensor`, shape :math:`(B, V)` or :math:`(V,)`
        The :func:`source_vocab_mask`.
    target_mask : :class:`torch.Tensor`, shape :math:`(B, T)` or :math:`(T,)`, optional
        Positions to include; all positions by default.

    Returns
    -------
    :class:`torch.Tensor`
        A scalar in :math:`[0, n_{positions}]`.

    """
    if mask.shape[-1] != logits.shape[-1]:
        raise ShapeError(f"novelty_penalty: mask length {mask.shape[-1]} does not match "
                         f"the vocabulary size {logits.shape[-1]}")
    probs = ops.softmax(logits)
    outside = (probs * (~mask).unsqueeze(-2).to(probs.dtype)).sum(dim=-1)
    if target_mask is not None:
        outside = outside * target_mask.to(outside.dtype)
    return outside.sum()


class LossOutput(NamedTuple):
    """The total loss and its components."""

    loss: torch.Tensor
    nll: torch.Tensor
    penalty: torch.Tensor
    n_tokens: int

    def components(self) -> Dict[str, float]:
        """Return the loss components as a dictionary of floats."""
        return {'nll': float(self.nll), 'novelty': float(self.penalty)}


def loo_loss(model: EncoderGenerator, sources: Optional[torch.Tensor], target_in: torch.Tensor,
             target_out: torch.Tensor, props: torch.Tensor, novelty_lambda: float = 0.0,
             task: Optional[torch.Tensor] = None, pad_id: int = 0) -> LossOutput:
    """Compute the teacher-forced negative log-likelihood, plus the scaled novelty penalty.

    Parameters
    ----------
    model : :class:`EncoderGenerator`
        The model.
    sources : :class:`torch.Tensor`, shape :math:`(B, S, T_s)`, optional
        The source reviews; :data:`None` trains a plain language model.
    target_in, target_out : :class:`torch.Tensor`, shape :math:`(B, T)`
        The generator input (starting with BOS) and the to-be predicted output.
    props : :class:`torch.Tensor`, shape :math:`(B, n_{properties})`
        The conditioning property vectors.
    novelty_lambda : :class:`float`
        The scaling of the novelty penalty; the penalty is normalized by the token count.

    Returns
    -------
    :class:`LossOutput`
        The mean per-token loss and its components; call ``.loss.backward()`` for gradients.

    """
    memory = model.encode(sources, pad_id) if sources is not None else None
    logits = model.generate(target_in, memory, props, task=task, pad_id=pad_id)
    nll = ops.cross_entropy(logits, target_out, pad_id)
    n_tokens = int((target_out != pad_id).sum())

    if not novelty_lambda:
        return LossOutput(nll, nll, nll.new_zeros(()), n_tokens)
    if sources is None:
        raise ValueError("the novelty penalty requires source reviews")

    mask = source_vocab_mask(sources, model.cfg.vocab_size)
    penalty = novelty_penalty(logits, mask, target_out != pad_id)
    return LossOutput(nll + novelty_lambda * penalty / n_tokens, nll, penalty, n_tokens)


@torch.no_grad()
def novel_mass(model: EncoderGenerator, sources: torch.Tensor, target_in: torch.Tensor,
               target_out: torch.Tensor, props: torch.Tensor, pad_id: int = 0) -> float:
    """Return the mean probability mass placed on out-of-source subwords per target token."""
    was_training = model.training
    model.eval()
    try:
        logits = model.generate(target_in, model.encode(sources, pad_id), props, pad_id=pad_id)
        mask = source_vocab_mask(sources, model.cfg.vocab_size)
        token_mask = target_out != pad_id
        return float(novelty_penalty(logits, mask, token_mask)) / int(token_mask.sum())
    finally:
        model.train(was_training)


def param_manifest(module: nn.Module) -> Dict[str, Tuple[int, ...]]:
    """Return a mapping of parameter names to shapes."""
    return {k: tuple(v.shape) for k, v in module.named_parameters()}


def param_count(module: Union[nn.Module, ModelConfig]) -> int:
    """Return the exact number of parameters of a module.

    A :class:`ModelConfig` is instantiated on the ``"meta"`` device, without allocating memory.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.model import PAPER_MODEL, param_count

        >>> 22_000_000 <= param_count(PAPER_MODEL) <= 28_000_000
        True

    """
    if isinstance(module, ModelConfig):
        module = EncoderGenerator(module, device='meta')
    return sum(p.numel() for p in module.parameters())


def plugin_ratio(model: Union[nn.Module, ModelConfig], plugin: nn.Module) -> float:
    """Return the plug-in parameter count divided by the model parameter count."""
    return param_count(plugin) / param_count(model)
