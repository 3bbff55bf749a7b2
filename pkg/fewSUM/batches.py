"""Conversion of reviews, leave-one-out instances and summaries into padded tensor batches.

Index
-----
.. currentmodule:: fewSUM.batches
.. autosummary::
    Example
    Batch
    make_example
    loo_examples
    summary_examples
    lm_examples
    collate
    iter_batches

API
---
.. autoclass:: Example
.. autoclass:: Batch
.. autofunction:: make_example
.. autofunction:: loo_examples
.. autofunction:: summary_examples
.. autofunction:: lm_examples
.. autofunction:: collate
.. autofunction:: iter_batches

"""

from typing import NamedTuple, Tuple, Sequence, Optional, List, Iterator, Iterable

import numpy as np
import torch

from .textproc import BpeModel, encode
from .corpus import ReviewGroup, AnnotatedEntry, Review, leave_one_out
from .oracle import compute_properties, summary_properties, PronounLexicon, DEFAULT_LEXICON

__all__ = ['Example', 'Batch', 'make_example', 'loo_examples', 'summary_examples',
           'lm_examples', 'collate', 'iter_batches', 'TASK_REVIEW', 'TASK_SUMMARY']

#: Task index of review targets.
TASK_REVIEW = 0

#: Task index of summary targets.
TASK_SUMMARY = 1

_ZERO_PROPS = np.zeros(9, dtype=np.float64)


class Example(NamedTuple):
    """A tokenized training example."""

    key: str
    sources: Tuple[Tuple[int, ...], ...]
    target: Tuple[int, ...]
    props: np.ndarray
    task: int = TASK_REVIEW


class Batch(NamedTuple):
    """A padded batch of :class:`Example` instances.

    Attributes
    ----------
    sources : :class:`torch.Tensor`, shape :math:`(B, S, T_s)`, optional
        The source subword ids; :data:`None` if the examples have no sources.
    target_in, target_out : :class:`torch.Tensor`, shape :math:`(B, T)`
        The shifted generator input and output.
    props : :class:`torch.Tensor`, shape :math:`(B, 9)`
        The property vectors.
    task : :class:`torch.Tensor`, shape :math:`(B,)`
        The task indices.

    """

    keys: Tuple[str, ...]
    sources: Optional[torch.Tensor]
    target_in: torch.Tensor
    target_out: torch.Tensor
    props: torch.Tensor
    task: torch.Tensor

    def __len__(self) -> int:
        """Implement :func:`len(self)<len>`."""
        return len(self.keys)


def make_example(bpe: BpeModel, key: str, sources: Sequence[str], target: str,
                 props: Optional[np.ndarray] = None, max_len: int = 128,
                 task: int = TASK_REVIEW) -> Example:
    """Tokenize a single example.

    Sources are truncated to **max_len** subwords and targets to ``max_len - 1``.

    """
    src = tuple(encode(bpe, s).ids[:max_len] for s in sources)
    tgt = encode(bpe, target).ids[:max_len - 1]
    p = _ZERO_PROPS if props is None else np.asarray(props, dtype=np.float64)
    return Example(key, src, tgt, p, task)


def loo_examples(bpe: BpeModel, groups: Iterable[ReviewGroup], max_len: int = 128,
                 max_words: int = 70, use_oracle: bool = True,
                 lexicon: PronounLexicon = DEFAULT_LEXICON) -> List[Example]:
    """Return one example per leave-one-out instance of every group.

    Without **use_oracle** all property vectors are zero.

    """
    ret = []
    for group in groups:
        for i, inst in enumerate(leave_one_out(group)):
            props = None
            if use_oracle:
                props = compute_properties(inst, max_words, lexicon).to_array()
            ret.append(make_example(
                bpe, f'{group.group_id}/{i}', [r.text for r in inst.sources],
                inst.target.text, props, max_len,
            ))
    return ret


def summary_examples(bpe: BpeModel, entries: Iterable[AnnotatedEntry], max_len: int = 128,
                     max_words: int = 70, use_oracle: bool = True,
                     lexicon: PronounLexicon = DEFAULT_LEXICON) -> List[Example]:
    """Return three summary-target examples per annotated entry, one per reference.

    Oracle properties are computed with the summary as target and a rating deviation of 0.

    """
    ret = []
    for entry in entries:
        sources = [r.text for r in entry.sources]
        for k, summary in enumerate(entry.references):
            props = None
            if use_oracle:
                props = summary_properties(summary, entry.sources, max_words, lexicon).to_array()
            ret.append(make_example(
                bpe, f'{entry.group_id}/summary{k}', sources, summary, props, max_len,
                task=TASK_SUMMARY,
            ))
    return ret


def lm_examples(bpe: BpeModel, reviews: Iterable[Review], max_len: int = 128) -> List[Example]:
    """Return one source-free example per review, for unconditional language modelling."""
    return [make_example(bpe, r.id, (), r.text, None, max_len) for r in reviews]


def _pad(seqs: Sequence[Sequence[int]], length: int, pad_id: int) -> torch.Tensor:
    ret = torch.full((len(seqs), length), pad_id, dtype=torch.long)
    for i, s in enumerate(seqs):
        if len(s):
            ret[i, :len(s)] = torch.as_tensor(s, dtype=torch.long)
    return ret


def collate(examples: Sequence[Example], bpe: BpeModel,
            dtype: torch.dtype = torch.float32) -> Batch:
    """Pad **examples** into a :class:`Batch`.

    Examples with fewer sources than the largest example are padded with empty sources.

    """
    if not examples:
        raise ValueError("'examples' must not be empty")
    pad, bos, eos = bpe.pad_id, bpe.bos_id, bpe.eos_id

    tgt_in = [(bos,) + ex.target for ex in examples]
    tgt_out = [ex.target + (eos,) for ex in examples]
    t = max(len(s) for s in tgt_in)

    n_src = max(len(ex.sources) for ex in examples)
    sources = None
    if n_src:
        t_src = max(1, max(len(s) for ex in examples for s in ex.sources))
        sources = torch.full((len(examples), n_src, t_src), pad, dtype=torch.long)
        for i, ex in enumerate(examples):
            if ex.sources:
                sources[i, :len(ex.sources)] = _pad(ex.sources, t_src, pad)

    return Batch(
        keys=tuple(ex.key for ex in examples),
        sources=sources,
        target_in=_pad(tgt_in, t, pad),
        target_out=_pad(tgt_out, t, pad),
        props=torch.as_tensor(np.stack([ex.props for ex in examples]), dtype=dtype),
        task=torch.as_tensor([ex.task for ex in examples], dtype=torch.long),
    )


def iter_batches(examples: Sequence[Example], bpe: BpeModel, batch_size: int,
                 rng: Optional[np.random.Generator] = None,
                 dtype: torch.dtype = torch.float32) -> Iterator[Batch]:
    """Yield batches of at most **batch_size** examples; shuffled if **rng** is given."""
    if batch_size < 1:
        raise ValueError(f"'batch_size' must be larger than 0; observed value: {batch_size!r}")
    order = np.arange(len(examples)) if rng is None else rng.permutation(len(examples))
    for i in range(0, len(order), batch_size):
        yield collate([examples[j] for j in order[i:i + batch_size]], bpe, dtype)
