"""Shape-checked differentiable operations underlying the encoder-generator and plug-in.

All functions operate on :class:`torch.Tensor` instances and rely on
:mod:`torch.autograd` for their reverse-mode gradients.

Index
-----
.. currentmodule:: fewSUM.ops
.. autosummary::
    matmul
    add_bias
    softmax
    layer_norm
    embedding
    dropout
    masked_attention
    causal_mask
    cross_entropy

API
---
.. autofunction:: matmul
.. autofunction:: add_bias
.. autofunction:: softmax
.. autofunction:: layer_norm
.. autofunction:: embedding
.. autofunction:: dropout
.. autofunction:: masked_attention
.. autofunction:: causal_mask
.. autofunction:: cross_entropy

"""

import math
from typing import Optional

import torch
import torch.nn.functional as F

from .exceptions import ShapeError

__all__ = [
    'matmul', 'add_bias', 'softmax', 'layer_norm', 'embedding', 'dropout',
    'masked_attention', 'causal_mask', 'cross_entropy'
]


def _shape_error(op: str, *tensors: torch.Tensor) -> ShapeError:
    shapes = ', '.join(str(tuple(t.shape)) for t in tensors)
    return ShapeError(f"{op}: incompatible operand shapes {shapes}")


def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Return the (batched) matrix product of **a** and **b**."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise _shape_error('matmul', a, b)
    return a @ b


def add_bias(x: torch.Tensor, bias: torch.Tensor) -> torch.Tensor:
    """Add the vector **bias** to the last axis of **x**."""
    if bias.ndim != 1 or x.shape[-1] != bias.shape[0]:
        raise _shape_error('add_bias', x, bias)
    return x + bias


def softmax(x: torch.Tensor, dim: int = -1) -> torch.Tensor:
    """Return the softmax of **x** along **dim**."""
    return torch.softmax(x, dim=dim)


def layer_norm(x: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor,
               eps: float = 1e-5) -> torch.Tensor:
    """Normalize the last axis of **x** and apply an elementwise affine transformation."""
    if weight.shape != bias.shape or weight.ndim != 1 or x.shape[-1] != weight.shape[0]:
        raise _shape_error('layer_norm', x, weight, bias)
    return F.layer_norm(x, weight.shape, weight, bias, eps)


def embedding(ids: torch.Tensor, table: torch.Tensor) -> torch.Tensor:
    """Look up the rows of **table** indexed by **ids**; gradients scatter back into **table**."""
    if table.ndim != 2:
        raise _shape_error('embedding', ids, table)
    if ids.numel() and (int(ids.min()) < 0 or int(ids.max()) >= table.shape[0]):
        raise ShapeError(f"embedding: index out of range for a table with "
                         f"{table.shape[0]} rows")
    return F.embedding(ids, table)


def dropout(x: torch.Tensor, p: float, training: bool,
            generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """Apply inverted dropout with rate **p**; the identity if not **training** or if **p** is 0."""
    if not 0 <= p < 1:
        raise ValueError(f"'p' expected a value in [0, 1); observed value: {p!r}")
    elif not training or p == 0:
        return x
    keep = torch.empty_like(x).bernoulli_(1 - p, generator=generator)
    return x * keep / (1 - p)


def causal_mask(n: int, device: Optional[torch.device] = None) -> torch.Tensor:
    """Return an ``(n, n)`` boolean mask; position *i* may attend positions ``<= i``."""
    return torch.ones(n, n, dtype=torch.bool, device=device).tril()


def masked_attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor,
                     key_mask: Optional[torch.Tensor] = None,
                     attn_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Scaled dot-product attention with boolean masks (:data:`True` marks attendable positions).

    Parameters
    ----------
    q : :class:`torch.Tensor`, shape :math:`(..., T_q, d)`
        The queries.
    k, v : :class:`torch.Tensor`, shape :math:`(..., T_k, d)`
        The keys and values.
    key_mask : :class:`torch.Tensor`, shape :math:`(B, T_k)`, optional
        Padding mask over the keys; broadcast over the head and query axes.
    attn_mask : :class:`torch.Tensor`, shape :math:`(T_q, T_k)`, optional
        An additional mask, *e.g.* :func:`causal_mask`.

    Returns
    -------
    :class:`torch.Tensor`, shape :math:`(..., T_q, d)`
        The attended values; queries without a single attendable key yield zeros.

    """
    if q.shape[-1] != k.shape[-1] or k.shape[:-1] != v.shape[:-1]:
        raise _shape_error('masked_attention', q, k, v)

    scores = matmul(q, k.transpose(-2, -1)) / math.sqrt(q.shape[-1])
    mask = torch.ones_like(scores, dtype=torch.bool)
    if key_mask is not None:
        if key_mask.shape[-1] != k.shape[-2]:
            raise _shape_error('masked_attention', k, key_mask)
        km = key_mask[:, None, None, :] if scores.ndim == 4 else key_mask[:, None, :]
        mask = mask & km
    if attn_mask is not None:
        if attn_mask.shape != scores.shape[-2:]:
            raise _shape_error('masked_attention', scores, attn_mask)
        mask = mask & attn_mask

    scores = scores.masked_fill(~mask, torch.finfo(scores.dtype).min)
    weights = softmax(scores) * mask
    return matmul(weights, v)


def cross_entropy(logits: torch.Tensor, targets: torch.Tensor, pad_id: int = 0) -> torch.Tensor:
    """Return the mean negative log-likelihood of **targets** over all non-padding positions.

    Raises
    ------
    :exc:`ValueError`
        Raised if every target is padding.

    """
    if logits.shape[:-1] != targets.shape:
        raise _shape_error('cross_entropy', logits, targets)
    n_tokens = int((targets != pad_id).sum())
    if not n_tokens:
        raise ValueError('cross_entropy: all target positions are padding')

    flat = logits.reshape(-1, logits.shape[-1])
    loss = F.cross_entropy(flat, targets.reshape(-1), ignore_index=pad_id, reduction='sum')
    return loss / n_tokens
