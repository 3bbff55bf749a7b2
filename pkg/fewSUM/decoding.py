"""Summary generation with beam search and n-gram blocking.

Index
-----
.. currentmodule:: fewSUM.decoding
.. autosummary::
    DecodeConfig
    Hypothesis
    SummaryRecord
    ngram_block
    beam_search
    summarize
    summarize_oracle
    decode_summary
    write_summaries
    read_summaries

API
---
.. autoclass:: DecodeConfig
.. autoclass:: Hypothesis
    :members: score
.. autoclass:: SummaryRecord
.. autofunction:: ngram_block
.. autofunction:: beam_search
.. autofunction:: summarize
.. autofunction:: summarize_oracle
.. autofunction:: decode_summary
.. autofunction:: write_summaries
.. autofunction:: read_summaries

"""

import json
import dataclasses
from dataclasses import dataclass
from typing import (
    Tuple, Sequence, Callable, Optional, List, Union, Mapping, Any, Iterable, NamedTuple
)

import numpy as np
import torch
from nanoutils import PathType

from .logger import logger
from .corpus import Review
from .textproc import BpeModel, TokenSeq, encode, decode
from .oracle import PropertyVector
from .model import EncoderGenerator, Memory, encode_sources
from .plugin import PropertyPlugin, plugin_forward

__all__ = [
    'DecodeConfig', 'Hypothesis', 'SummaryRecord', 'ngram_block', 'beam_search',
    'summarize', 'summarize_oracle', 'decode_summary', 'write_summaries', 'read_summaries'
]

#: Maps a batch of prefixes to next-token log-probabilities of shape :math:`(k, V)`.
StepFunction = Callable[[Sequence[Tuple[int, ...]]], np.ndarray]


@dataclass(frozen=True)
class DecodeConfig:
    """Beam search settings."""

    beam_size: int = 5
    block_n: int = 3
    max_tokens: int = 60
    alpha: float = 0.8

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValueError(f"'beam_size' must be larger than 0; "
                             f"observed value: {self.beam_size!r}")
        elif self.block_n < 2:
            raise ValueError(f"'block_n' must be at least 2; observed value: {self.block_n!r}")
        elif self.max_tokens < 1:
            raise ValueError(f"'max_tokens' must be larger than 0; "
                             f"observed value: {self.max_tokens!r}")
        elif self.alpha < 0:
            raise ValueError(f"'alpha' must be non-negative; observed value: {self.alpha!r}")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> 'DecodeConfig':
        """Construct a config from a mapping, ignoring unknown keys."""
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in dct.items() if k in names})


@dataclass(frozen=True)
class Hypothesis:
    """A partial or complete output sequence.

    A hypothesis is finished once it ends with the end-of-sequence symbol.

    """

    ids: Tuple[int, ...] = ()
    log_prob: float = 0.0
    finished: bool = False

    def score(self, alpha: float = 0.8) -> float:
        """Return the length-normalized score ``log_prob / len(ids) ** alpha``."""
        return self.log_prob / max(1, len(self.ids)) ** alpha


class SummaryRecord(NamedTuple):
    """A generated summary and its provenance."""

    group_id: str
    summary: str
    properties_used: Optional[Tuple[float, ...]] = None
    score: Optional[float] = None
    finished: bool = True


def ngram_block(ids: Sequence[int], next_token: int, n: int = 3) -> bool:
    """Return whether **next_token** may be appended without repeating an **n**-gram of **ids**.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.decoding import ngram_block

        >>> ngram_block([0, 1, 2, 0, 1], 2, n=3)
        False
        >>> ngram_block([0, 1, 2, 0, 1], 3, n=3)
        True

    """
    if n < 2:
        raise ValueError(f"'n' must be at least 2; observed value: {n!r}")
    if len(ids) < n - 1:
        return True
    new = tuple(ids[len(ids) - n + 1:]) + (next_token,)
    return all(tuple(ids[i:i + n]) != new for i in range(len(ids) - n + 1))


def beam_search(step_fn: StepFunction, eos_id: int,
                cfg: DecodeConfig = DecodeConfig()) -> Tuple[Hypothesis, bool]:
    """Run beam search over the next-token distributions of **step_fn**.

    At every step the ``beam_size`` best expansions (by cumulative log-probability,
    ties broken by the smallest token sequence) that pass :func:`ngram_block` are kept;
    expansions ending with **eos_id** leave the beam as finished hypotheses.
    Non-finite log-probabilities are never expanded.

    Returns
    -------
    :class:`Hypothesis` and :class:`bool`
        The best finished hypothesis by :meth:`Hypothesis.score` and :data:`True`;
        or, if nothing finished within ``max_tokens`` or before every expansion was blocked,
        the best unfinished one and :data:`False`.

    """
    beams = [Hypothesis()]
    finished: List[Hypothesis] = []

    for _ in range(cfg.max_tokens):
        logp = np.asarray(step_fn([h.ids for h in beams]), dtype=np.float64)

        candidates: List[Tuple[float, Tuple[int, ...]]] = []
        for h, row in zip(beams, logp):
            for v in np.flatnonzero(np.isfinite(row)):
                v = int(v)
                if ngram_block(h.ids, v, cfg.block_n):
                    candidates.append((h.log_prob + float(row[v]), h.ids + (v,)))
        if not candidates:
            break
        candidates.sort(key=lambda c: (-c[0], c[1]))

        beams = []
        for log_prob, ids in candidates[:cfg.beam_size]:
            if ids[-1] == eos_id:
                finished.append(Hypothesis(ids, log_prob, True))
            else:
                beams.append(Hypothesis(ids, log_prob))
        if not beams:
            break

    def key(h: Hypothesis) -> Tuple[float, Tuple[int, ...]]:
        return -h.score(cfg.alpha), h.ids

    if finished:
        return min(finished, key=key), True
    if not any(h.ids for h in beams):
        raise ValueError('beam search: no expandable token at the first step')
    logger.warning(f'No hypothesis finished within {cfg.max_tokens} tokens or before every '
                   'expansion was blocked; returning the best unfinished one')
    return min(beams, key=key), False


def _model_step_fn(model: EncoderGenerator, bpe: BpeModel, memory: Memory,
                   props: torch.Tensor, task: Optional[int] = None) -> StepFunction:
    blocked = [bpe.pad_id, bpe.bos_id, bpe.unk_id]

    @torch.no_grad()
    def step(prefixes: Sequence[Tuple[int, ...]]) -> np.ndarray:
        k = len(prefixes)
        ids = torch.tensor([(bpe.bos_id,) + p for p in prefixes], dtype=torch.long)
        tasks = None if task is None else torch.full((k,), task, dtype=torch.long)
        logits = model.generate(ids, memory.repeat(k), props.expand(k, -1), task=tasks,
                                pad_id=bpe.pad_id)[:, -1]
        logp = torch.log_softmax(logits.double(), dim=-1)
        logp[:, blocked] = -np.inf
        return logp.cpu().numpy()
    return step


def _source_tokens(bpe: BpeModel, sources: Sequence[Union[Review, str]],
                   max_len: int) -> List[TokenSeq]:
    if not sources:
        raise ValueError("'sources' must contain at least one review")
    texts = [s.text if isinstance(s, Review) else s for s in sources]
    return [TokenSeq(encode(bpe, t).ids[:max_len], bpe.pad_id) for t in texts]


def decode_summary(model: EncoderGenerator, bpe: BpeModel, sources: Sequence[Union[Review, str]],
                   cfg: DecodeConfig = DecodeConfig(),
                   plugin: Optional[PropertyPlugin] = None,
                   props: Union[None, PropertyVector, Sequence[float]] = None,
                   group_id: str = '', task: Optional[int] = None) -> SummaryRecord:
    """Generate a summary of **sources**, conditioned on **props** or on the **plugin** output.

    Without either, a zero property vector is used (as for models trained without properties).
    **task** selects a row of the task embedding of multi-task models.

    """
    was_training = model.training
    model.eval()
    if plugin is not None:
        plugin.eval()
    try:
        with torch.no_grad():
            memory = encode_sources(model, _source_tokens(bpe, sources, model.cfg.max_len))
            dtype = model.embed.dtype
            if props is not None:
                if not isinstance(props, PropertyVector):
                    props = PropertyVector.from_array(props)
                p = torch.as_tensor(props.to_array(), dtype=dtype)[None]
            elif plugin is not None:
                p = plugin_forward(plugin, memory).to(dtype)
            else:
                p = torch.zeros(1, model.cfg.n_properties, dtype=dtype)

        cfg = dataclasses.replace(cfg, max_tokens=min(cfg.max_tokens, model.cfg.max_len - 1))
        hyp, done = beam_search(_model_step_fn(model, bpe, memory, p, task), bpe.eos_id, cfg)
    finally:
        model.train(was_training)

    ids = hyp.ids[:-1] if done else hyp.ids
    text = decode(bpe, TokenSeq(ids, bpe.pad_id))
    used = tuple(float(i) for i in p[0])
    return SummaryRecord(group_id, text, used, hyp.score(cfg.alpha), done)


def summarize(model: EncoderGenerator, plugin: PropertyPlugin, bpe: BpeModel,
              sources: Sequence[Union[Review, str]], cfg: DecodeConfig = DecodeConfig()) -> str:
    """Summarize **sources** with properties predicted by **plugin**."""
    return decode_summary(model, bpe, sources, cfg, plugin=plugin).summary


def summarize_oracle(model: EncoderGenerator, bpe: BpeModel,
                     sources: Sequence[Union[Review, str]],
                     props: Union[PropertyVector, Sequence[float]],
                     cfg: DecodeConfig = DecodeConfig()) -> str:
    """Summarize **sources** conditioned on a fixed property vector, bypassing the plug-in.

    Raises
    ------
    :exc:`ValueError`
        Raised if **props** is not a valid property vector.

    """
    return decode_summary(model, bpe, sources, cfg, props=props).summary


def write_summaries(path: PathType, records: Iterable[SummaryRecord]) -> None:
    """Write summary records as JSONL."""
    with open(path, 'w', encoding='utf-8') as f:
        for r in records:
            dct = r._asdict()
            if r.properties_used is not None:
                dct['properties_used'] = list(r.properties_used)
            f.write(json.dumps(dct, ensure_ascii=False) + '\n')


def read_summaries(path: PathType) -> List[SummaryRecord]:
    """Read the summary records written by :func:`write_summaries`."""
    ret = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if not line.strip():
                continue
            dct = json.loads(line)
            props = dct.get('properties_used')
            ret.append(SummaryRecord(
                str(dct['group_id']), dct['summary'],
                None if props is None else tuple(props),
                dct.get('score'), bool(dct.get('finished', True)),
            ))
    return ret
