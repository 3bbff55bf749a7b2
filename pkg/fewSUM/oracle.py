"""The property oracle: content coverage, writing style, rating and length deviations.

Index
-----
.. currentmodule:: fewSUM.oracle
.. autosummary::
    PropertyVector
    PronounLexicon
    DEFAULT_LEXICON
    content_coverage
    pov_distribution
    rating_deviation
    length_deviation
    compute_properties
    summary_properties

API
---
.. autoclass:: PropertyVector
    :members: to_array, from_array, pov
.. autoclass:: PronounLexicon
.. autodata:: DEFAULT_LEXICON
.. autofunction:: content_coverage
.. autofunction:: pov_distribution
.. autofunction:: rating_deviation
.. autofunction:: length_deviation
.. autofunction:: compute_properties
.. autofunction:: summary_properties

"""

from dataclasses import dataclass
from typing import Tuple, Sequence, FrozenSet, Optional

import numpy as np

from .textproc import word_tokenize
from .metrics import rouge_n, rouge_l
from .corpus import Review, LooInstance
from .dtype import PROPERTY_NAMES, PROPERTY_DTYPE

__all__ = [
    'PropertyVector', 'PronounLexicon', 'DEFAULT_LEXICON',
    'content_coverage', 'pov_distribution', 'rating_deviation', 'length_deviation',
    'compute_properties', 'summary_properties'
]

_POV_ATOL = 1e-6


@dataclass(frozen=True)
class PropertyVector:
    """The nine property values of a target text relative to its sources.

    The layout order of :meth:`to_array` is given by :data:`fewSUM.dtype.PROPERTY_NAMES`.

    """

    rouge1_f1: float
    rouge2_f1: float
    rougel_f1: float
    pov_1st: float
    pov_2nd: float
    pov_3rd: float
    pov_none: float
    rating_dev: float
    length_dev: float

    def __post_init__(self) -> None:
        for name in ('rouge1_f1', 'rouge2_f1', 'rougel_f1'):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name!r} expected a value in [0, 1]; observed value: {value!r}")

        pov = np.array(self.pov)
        if not np.isfinite(pov).all() or (pov < 0).any() or abs(pov.sum() - 1) > _POV_ATOL:
            raise ValueError(f"the point-of-view block must be a probability distribution; "
                             f"observed value: {self.pov!r}")
        elif not (np.isfinite(self.rating_dev) and np.isfinite(self.length_dev)):
            raise ValueError("deviations must be finite")

    @property
    def pov(self) -> Tuple[float, float, float, float]:
        """:class:`Tuple[float, float, float, float]<typing.Tuple>`: Get the point-of-view block."""
        return self.pov_1st, self.pov_2nd, self.pov_3rd, self.pov_none

    def to_array(self) -> np.ndarray:
        """Return this vector as a float64 array of length 9."""
        return np.array([getattr(self, k) for k in PROPERTY_NAMES], dtype=PROPERTY_DTYPE)

    @classmethod
    def from_array(cls, array: Sequence[float]) -> 'PropertyVector':
        """Construct a vector from a length-9 sequence; raise a :exc:`ValueError` otherwise."""
        ar = np.asarray(array, dtype=PROPERTY_DTYPE)
        if ar.shape != (len(PROPERTY_NAMES),):
            raise ValueError(f"expected an array of shape ({len(PROPERTY_NAMES)},); "
                             f"observed shape: {ar.shape!r}")
        return cls(*(float(i) for i in ar))


@dataclass(frozen=True)
class PronounLexicon:
    """Three disjoint sets of lowercase pronouns, one per point of view."""

    first: FrozenSet[str]
    second: FrozenSet[str]
    third: FrozenSet[str]

    def __post_init__(self) -> None:
        sets = (self.first, self.second, self.third)
        if any(w != w.lower() for s in sets for w in s):
            raise ValueError('pronoun lexicon entries must be lowercase')
        elif (self.first & self.second) or (self.first & self.third) or (self.second & self.third):
            raise ValueError('pronoun lexicon classes must be disjoint')


#: The pronoun lexicon used by default.
DEFAULT_LEXICON = PronounLexicon(
    first=frozenset({'i', 'me', 'my', 'mine', 'myself', 'we', 'us', 'our', 'ours', 'ourselves'}),
    second=frozenset({'you', 'your', 'yours', 'yourself', 'yourselves'}),
    third=frozenset({
        'he', 'him', 'his', 'himself', 'she', 'her', 'hers', 'herself', 'it', 'its', 'itself',
        'they', 'them', 'their', 'theirs', 'themselves'
    }),
)


def _source_words(sources: Sequence[Review]) -> list:
    if not sources:
        raise ValueError("'sources' must contain at least one review")
    return word_tokenize(' '.join(r.text for r in sources))


def _coverage(candidate: list, reference: list) -> Tuple[float, float, float]:
    if not candidate:
        return 0.0, 0.0, 0.0
    return (rouge_n(candidate, reference, 1).f1,
            rouge_n(candidate, reference, 2).f1,
            rouge_l(candidate, reference).f1)


def content_coverage(target: Review, sources: Sequence[Review]) -> Tuple[float, float, float]:
    """Return the ROUGE-1, ROUGE-2 and ROUGE-L F1 of **target** against the concatenated sources.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.corpus import Review
        >>> from fewSUM.oracle import content_coverage

        >>> target = Review('t', 'p', 5, 'a b')
        >>> sources = [Review('s1', 'p', 5, 'a c'), Review('s2', 'p', 5, 'd b')]
        >>> r1, r2, rl = content_coverage(target, sources)
        >>> round(r1, 6)
        0.666667

    """
    return _coverage(word_tokenize(target.text), _source_words(sources))


def pov_distribution(text: str, lexicon: PronounLexicon = DEFAULT_LEXICON
                     ) -> Tuple[float, float, float, float]:
    """Return the (1st, 2nd, 3rd, no-pronoun) distribution of the pronouns in **text**.

    Texts without any pronoun map to ``(0, 0, 0, 1)``.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.oracle import pov_distribution

        >>> pov_distribution('I bought this as a gift for my husband.')
        (1.0, 0.0, 0.0, 0.0)
        >>> pov_distribution('Very nice, not too overpowering.')
        (0.0, 0.0, 0.0, 1.0)
        >>> pov_distribution('You and I')
        (0.5, 0.5, 0.0, 0.0)

    """
    c1 = c2 = c3 = 0
    for word in word_tokenize(text):
        if word in lexicon.first:
            c1 += 1
        elif word in lexicon.second:
            c2 += 1
        elif word in lexicon.third:
            c3 += 1

    total = c1 + c2 + c3
    if not total:
        return 0.0, 0.0, 0.0, 1.0
    return c1 / total, c2 / total, c3 / total, 0.0


def rating_deviation(target_rating: int, source_ratings: Sequence[int]) -> float:
    """Return **target_rating** minus the mean of **source_ratings**."""
    if not len(source_ratings):
        raise ValueError("'source_ratings' must contain at least one rating")
    return float(target_rating - np.mean(source_ratings))


def length_deviation(target: Review, sources: Sequence[Review]) -> float:
    """Return the word count of **target** minus the mean word count of **sources**."""
    if not sources:
        raise ValueError("'sources' must contain at least one review")
    lengths = [len(word_tokenize(r.text)) for r in sources]
    return float(len(word_tokenize(target.text)) - np.mean(lengths))


def _assemble(text: str, rating_dev: float, sources: Sequence[Review],
              max_words: int, lexicon: PronounLexicon) -> PropertyVector:
    words = word_tokenize(text)
    r1, r2, rl = _coverage(words, _source_words(sources))
    src_len = np.mean([len(word_tokenize(r.text)) for r in sources])
    length_dev = (len(words) - src_len) / max_words
    return PropertyVector(r1, r2, rl, *pov_distribution(text, lexicon),
                          rating_dev, float(length_dev))


def compute_properties(instance: LooInstance, max_words: int = 70,
                       lexicon: PronounLexicon = DEFAULT_LEXICON,
                       summary_mode: bool = False) -> PropertyVector:
    """Compute the :class:`PropertyVector` of a leave-one-out instance.

    Parameters
    ----------
    instance : :class:`~fewSUM.corpus.LooInstance`
        The target review and its sources.
    max_words : :class:`int`
        The length deviation is divided by this value.
    lexicon : :class:`PronounLexicon`
        The pronoun lexicon of the point-of-view block.
    summary_mode : :class:`bool`
        If :data:`True`, the target is a summary and its rating deviation is set to 0.

    """
    if max_words <= 0:
        raise ValueError(f"'max_words' must be larger than 0; observed value: {max_words!r}")

    target, sources = instance.target, instance.sources
    if summary_mode:
        rating_dev = 0.0
    else:
        rating_dev = rating_deviation(target.rating, [r.rating for r in sources])
    return _assemble(target.text, rating_dev, sources, max_words, lexicon)


def summary_properties(summary: str, sources: Sequence[Review], max_words: int = 70,
                       lexicon: PronounLexicon = DEFAULT_LEXICON,
                       rating_dev: Optional[float] = None) -> PropertyVector:
    """Compute the :class:`PropertyVector` of a summary relative to its source reviews.

    The rating deviation is 0 unless **rating_dev** is given.

    """
    if max_words <= 0:
        raise ValueError(f"'max_words' must be larger than 0; observed value: {max_words!r}")
    dev = 0.0 if rating_dev is None else float(rating_dev)
    return _assemble(summary, dev, sources, max_words, lexicon)
