"""Automatic evaluation: multi-reference ROUGE, text characteristics and cross-domain reports.

Index
-----
.. currentmodule:: fewSUM.evaluation
.. autosummary::
    EvalReport
    TextCharacteristics
    evaluate_rouge
    rouge_table
    text_characteristics
    cross_domain_report
    write_report

API
---
.. autoclass:: EvalReport
    :members: to_frame
.. autoclass:: TextCharacteristics
.. autofunction:: evaluate_rouge
.. autofunction:: rouge_table
.. autofunction:: text_characteristics
.. autofunction:: cross_domain_report
.. autofunction:: write_report

"""

import os
from typing import Mapping, Sequence, Union, Iterable, NamedTuple, Tuple, List

import numpy as np
import pandas as pd
from nanoutils import PathType, Literal

from .logger import logger
from .corpus import AnnotatedSet, AnnotatedEntry
from .metrics import rouge_n, rouge_l
from .oracle import pov_distribution, PronounLexicon, DEFAULT_LEXICON
from .textproc import word_tokenize

__all__ = [
    'EvalReport', 'TextCharacteristics', 'evaluate_rouge', 'rouge_table',
    'text_characteristics', 'cross_domain_report', 'write_report'
]

_SCORES = ('rouge1', 'rouge2', 'rougeL')


class EvalReport(NamedTuple):
    """Mean ROUGE F1 scores of a single system.

    Attributes
    ----------
    per_entry : :class:`pandas.DataFrame`
        Reference-aggregated scores per group id, with a ``category`` column.
    per_domain : :class:`pandas.DataFrame`
        The mean scores per category.

    """

    system: str
    rouge1: float
    rouge2: float
    rougeL: float
    n_entries: int
    per_entry: pd.DataFrame
    per_domain: pd.DataFrame

    def to_frame(self) -> pd.DataFrame:
        """Return the mean scores as a single-row DataFrame indexed by system name."""
        index = pd.Index([self.system], name='system')
        return pd.DataFrame([[self.rouge1, self.rouge2, self.rougeL]], index=index,
                            columns=list(_SCORES))


class TextCharacteristics(NamedTuple):
    """POV percentages over ``(1st, 2nd, 3rd, NoPr)`` and the word-count difference from gold."""

    pov: Tuple[float, float, float, float]
    len_diff: float


def _entry_scores(candidate: str, references: Sequence[str],
                  aggregate: str) -> Tuple[float, float, float]:
    cand = word_tokenize(candidate)
    scores = np.array([
        (rouge_n(cand, r, 1).f1, rouge_n(cand, r, 2).f1, rouge_l(cand, r).f1)
        for r in (word_tokenize(ref) for ref in references)
    ])
    ret = scores.mean(axis=0) if aggregate == 'mean' else scores.max(axis=0)
    return tuple(float(i) for i in ret)  # type: ignore[return-value]


def evaluate_rouge(summaries: Mapping[str, str],
                   annotated: Union[AnnotatedSet, Iterable[AnnotatedEntry]],
                   split: str = 'test', aggregate: Literal['mean', 'max'] = 'mean',
                   system: str = 'system') -> EvalReport:
    """Score **summaries** against the references of all **split** entries.

    Every entry is scored against each of its references; the scores are aggregated
    over references (mean, or max for **aggregate** = ``"max"``) and then averaged over entries.

    Raises
    ------
    :exc:`ValueError`
        Raised if a summary is missing for an entry of **split**.

    """
    if aggregate not in ('mean', 'max'):
        raise ValueError(f"'aggregate' expected 'mean' or 'max'; observed value: {aggregate!r}")
    entries = [e for e in annotated if e.split == split]
    if not entries:
        raise ValueError(f"no annotated entries in split {split!r}")

    missing = sorted(e.group_id for e in entries if e.group_id not in summaries)
    if missing:
        raise ValueError(f"missing summaries for {len(missing)} group ids: {missing!r}")

    entries.sort(key=lambda e: e.group_id)
    data = [_entry_scores(summaries[e.group_id], e.references, aggregate) for e in entries]
    per_entry = pd.DataFrame(data, columns=list(_SCORES),
                             index=pd.Index([e.group_id for e in entries], name='group_id'))
    per_entry.insert(0, 'category', [e.category for e in entries])
    per_domain = per_entry.groupby('category')[list(_SCORES)].mean()

    r1, r2, rl = (float(per_entry[k].mean()) for k in _SCORES)
    logger.info(f'{system}: R1={r1:.4f} R2={r2:.4f} RL={rl:.4f} over {len(entries)} entries')
    return EvalReport(system, r1, r2, rl, len(entries), per_entry, per_domain)


def rouge_table(reports: Iterable[EvalReport]) -> pd.DataFrame:
    """Concatenate the mean scores of several systems into one table."""
    frames = [r.to_frame() for r in reports]
    if not frames:
        return pd.DataFrame(columns=list(_SCORES), index=pd.Index([], name='system'))
    return pd.concat(frames)


def text_characteristics(summaries: Union[Mapping[str, str], Sequence[str]],
                         gold: Union[AnnotatedSet, Iterable[AnnotatedEntry]],
                         lexicon: PronounLexicon = DEFAULT_LEXICON) -> TextCharacteristics:
    """Compute the POV marginal of **summaries** and their length difference from **gold**.

    The marginal is the uniform average of the per-summary POV distributions, in percent;
    the length difference is the mean word count of **summaries** minus that of the gold
    references. If **summaries** is a mapping, only gold entries with a matching group id
    are compared.

    """
    if isinstance(summaries, Mapping):
        entries = [e for e in gold if e.group_id in summaries]
        texts: List[str] = list(summaries.values())
    else:
        entries = list(gold)
        texts = list(summaries)
    if not texts:
        raise ValueError("'summaries' must not be empty")

    refs = [r for e in entries for r in e.references]
    if not refs:
        raise ValueError('no gold summaries to compare against')

    pov = np.mean([pov_distribution(t, lexicon) for t in texts], axis=0) * 100
    len_diff = (np.mean([len(word_tokenize(t)) for t in texts])
                - np.mean([len(word_tokenize(r)) for r in refs]))
    return TextCharacteristics(tuple(float(i) for i in pov), float(len_diff))  # type: ignore


def cross_domain_report(per_domain_scores: Mapping[str, Sequence[float]]) -> pd.DataFrame:
    """Tabulate the mean and sample standard deviation of ROUGE-L per domain and overall.

    A standard deviation over a single value is undefined and stored as NaN
    (rendered as ``n/a`` by :func:`write_report`).

    Examples
    --------
    .. code:: python

        >>> from fewSUM.evaluation import cross_domain_report

        >>> df = cross_domain_report({'a': [0.2, 0.2], 'b': [0.3]})
        >>> df.loc['a', 'std']
        0.0
        >>> df.loc['b', 'mean']
        0.3

    """
    rows = {}
    for domain, scores in per_domain_scores.items():
        if not len(scores):
            raise ValueError(f"domain {domain!r} has no scores")
        ar = np.asarray(scores, dtype=np.float64)
        rows[domain] = (ar.mean(), ar.std(ddof=1) if len(ar) > 1 else np.nan, len(ar))

    pooled = np.concatenate([np.asarray(v, dtype=np.float64) for v in per_domain_scores.values()])
    rows['overall'] = (
        pooled.mean(), pooled.std(ddof=1) if len(pooled) > 1 else np.nan, len(pooled)
    )

    df = pd.DataFrame.from_dict(rows, orient='index', columns=['mean', 'std', 'n'])
    df.index.name = 'domain'
    return df


def write_report(df: pd.DataFrame, path: PathType) -> Tuple[str, str]:
    """Write **df** as ``{path}.csv`` and as a fixed-width ``{path}.txt`` table.

    Returns
    -------
    :class:`Tuple[str, str]<typing.Tuple>`
        The paths of both files.

    """
    base = os.fspath(path)
    csv, txt = f'{base}.csv', f'{base}.txt'
    df.to_csv(csv)
    with open(txt, 'w', encoding='utf-8') as f:
        f.write(df.to_string(float_format='{:.4f}'.format, na_rep='n/a') + '\n')
    return csv, txt
