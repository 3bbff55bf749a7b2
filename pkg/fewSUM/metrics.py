"""ROUGE F1 scores and Best-Worst scaling.

Index
-----
.. currentmodule:: fewSUM.metrics
.. autosummary::
    PrfScore
    BwsJudgments
    rouge_n
    rouge_l
    lcs_length
    bws_score
    bws_table

API
---
.. autoclass:: PrfScore
.. autoclass:: BwsJudgments
.. autofunction:: rouge_n
.. autofunction:: rouge_l
.. autofunction:: lcs_length
.. autofunction:: bws_score
.. autofunction:: bws_table

"""

from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Mapping, Dict

import pandas as pd

__all__ = ['PrfScore', 'BwsJudgments', 'rouge_n', 'rouge_l', 'lcs_length',
           'bws_score', 'bws_table']


class PrfScore(NamedTuple):
    """A precision/recall/F1 triple."""

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, n_candidate: int, n_reference: int) -> 'PrfScore':
        """Construct a score from an overlap count and the two totals."""
        p = overlap / n_candidate if n_candidate else 0.0
        r = overlap / n_reference if n_reference else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f1)


def _ngrams(words: Sequence[str], n: int) -> Counter:
    return Counter(zip(*(words[i:] for i in range(n))))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> PrfScore:
    """Compute ROUGE-N from clipped n-gram overlap counts.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.metrics import rouge_n

        >>> score = rouge_n(['the', 'cat', 'sat'], ['the', 'cat', 'ran'], n=1)
        >>> [round(i, 4) for i in score]
        [0.6667, 0.6667, 0.6667]

    Parameters
    ----------
    candidate, reference : :class:`Sequence[str]<typing.Sequence>`
        Word lists, see :func:`fewSUM.textproc.word_tokenize`.
    n : :class:`int`
        The n-gram order.

    """
    if n < 1:
        raise ValueError(f"'n' must be larger than or equal to 1; observed value: {n!r}")

    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    overlap = sum((cand & ref).values())
    return PrfScore.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Return the length of the longest common subsequence of **a** and **b**.

    Uses the bit-parallel formulation with one bit per position of **b**.

    """
    m = len(b)
    if not a or not m:
        return 0

    masks: Dict[str, int] = {}
    for i, word in enumerate(b):
        masks[word] = masks.get(word, 0) | (1 << i)

    full = (1 << m) - 1
    v = full
    for word in a:
        u = v & masks.get(word, 0)
        v = ((v + u) | (v - u)) & full
    return m - bin(v).count('1')


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> PrfScore:
    """Compute sentence-level ROUGE-L over the whole of both word lists.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.metrics import rouge_l

        >>> rouge_l('a b c d'.split(), 'a c b d'.split())
        PrfScore(precision=0.75, recall=0.75, f1=0.75)

    """
    return PrfScore.from_counts(lcs_length(candidate, reference), len(candidate), len(reference))


@dataclass(frozen=True)
class BwsJudgments:
    """Best-Worst scaling counts of a single system."""

    n_best: int
    n_worst: int
    n_total: int

    def __post_init__(self) -> None:
        if min(self.n_best, self.n_worst, self.n_total) < 0:
            raise ValueError(f"negative judgment count: {self!r}")
        elif self.n_best + self.n_worst > self.n_total:
            raise ValueError(f"'n_best + n_worst' exceeds 'n_total': {self!r}")


def bws_score(j: BwsJudgments) -> float:
    """Return the best-selection rate minus the worst-selection rate, a value in :math:`[-1, 1]`.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.metrics import BwsJudgments, bws_score

        >>> bws_score(BwsJudgments(n_best=4, n_worst=1, n_total=10))
        0.3

    """
    if j.n_total == 0:
        raise ValueError("'n_total' must be larger than 0")
    return (j.n_best - j.n_worst) / j.n_total


def bws_table(judgments: Mapping[str, BwsJudgments]) -> pd.DataFrame:
    """Construct a DataFrame with the counts and :func:`bws_score` of every system."""
    data = {k: (v.n_best, v.n_worst, v.n_total, bws_score(v)) for k, v in judgments.items()}
    df = pd.DataFrame.from_dict(
        data, orient='index', columns=['n_best', 'n_worst', 'n_total', 'score']
    )
    df.index.name = 'system'
    return df
