"""Review ingestion, filtering, grouping and annotated-summary splits.

Index
-----
.. currentmodule:: fewSUM.corpus
.. autosummary::
    Review
    ReviewGroup
    LooInstance
    AnnotatedEntry
    AnnotatedSet
    FilterConfig
    load_reviews
    write_reviews
    filter_reviews
    popularity_threshold
    make_groups
    write_groups
    read_groups
    leave_one_out
    load_annotated
    write_annotated
    load_splits
    cross_domain_split

API
---
.. autoclass:: Review
.. autoclass:: ReviewGroup
.. autoclass:: LooInstance
.. autoclass:: AnnotatedEntry
.. autoclass:: AnnotatedSet
    :members:
.. autoclass:: FilterConfig
    :members:
.. autofunction:: load_reviews
.. autofunction:: write_reviews
.. autofunction:: filter_reviews
.. autofunction:: popularity_threshold
.. autofunction:: make_groups
.. autofunction:: write_groups
.. autofunction:: read_groups
.. autofunction:: leave_one_out
.. autofunction:: load_annotated
.. autofunction:: write_annotated
.. autofunction:: load_splits
.. autofunction:: cross_domain_split

"""

import json
import math
import dataclasses
from dataclasses import dataclass
from types import MappingProxyType
from typing import (
    List, Tuple, Mapping, Sequence, Optional, Union, Dict, Any, Iterable, Iterator
)

import numpy as np
import pandas as pd
from nanoutils import PathType, Literal

from .logger import logger
from .exceptions import ReviewFormatError, AnnotationError, ConfigError

__all__ = [
    'Review', 'ReviewGroup', 'LooInstance', 'AnnotatedEntry', 'AnnotatedSet', 'FilterConfig',
    'SPLIT_PRESETS', 'load_reviews', 'write_reviews', 'filter_reviews', 'popularity_threshold',
    'make_groups', 'write_groups', 'read_groups', 'leave_one_out', 'load_annotated',
    'write_annotated', 'load_splits', 'cross_domain_split'
]

Split = Literal['train', 'valid', 'test']
SPLITS: Tuple[str, ...] = ('train', 'valid', 'test')

#: Annotated-set split sizes (train, valid, test) per dataset.
SPLIT_PRESETS: Mapping[str, Tuple[int, int, int]] = MappingProxyType({
    'amazon': (28, 12, 20),
    'yelp': (30, 30, 40),
})

_REVIEW_FIELDS = ('id', 'product_id', 'rating', 'text', 'category')


@dataclass(frozen=True)
class Review:
    """A rated review of a single product."""

    id: str
    product_id: str
    rating: int
    text: str
    category: str = ''

    def __post_init__(self) -> None:
        if not 1 <= self.rating <= 5:
            raise ValueError(f"'rating' expected a value in [1, 5]; "
                             f"observed value: {self.rating!r}")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> 'Review':
        """Construct a review from a mapping with the :class:`Review` fields as keys."""
        for name in _REVIEW_FIELDS:
            if name not in dct:
                raise KeyError(name)
        rating = dct['rating']
        if isinstance(rating, bool) or not isinstance(rating, int):
            raise TypeError(f"'rating' expected an integer; "
                            f"observed type: {type(rating).__name__!r}")
        return cls(str(dct['id']), str(dct['product_id']), rating,
                   str(dct['text']), str(dct['category']))

    def to_dict(self) -> Dict[str, Any]:
        """Convert this review into a JSON-compatible dictionary."""
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ReviewGroup:
    """A group of reviews of the same product."""

    group_id: str
    product_id: str
    reviews: Tuple[Review, ...]

    def __post_init__(self) -> None:
        if any(r.product_id != self.product_id for r in self.reviews):
            raise ValueError(f"group {self.group_id!r} mixes reviews of different products")
        ids = [r.id for r in self.reviews]
        if len(set(ids)) != len(ids):
            raise ValueError(f"group {self.group_id!r} contains duplicate review ids")

    def __len__(self) -> int:
        """Implement :func:`len(self)<len>`."""
        return len(self.reviews)


@dataclass(frozen=True)
class LooInstance:
    """A target review and the remaining reviews of its group."""

    target: Review
    sources: Tuple[Review, ...]
    group_id: str


@dataclass(frozen=True)
class AnnotatedEntry:
    """Eight source reviews with three reference summaries."""

    group_id: str
    category: str
    sources: Tuple[Review, ...]
    references: Tuple[str, ...]
    split: Optional[str] = None

    def validate(self, n_sources: int = 8, n_references: int = 3) -> None:
        """Raise an :exc:`AnnotationError` if the source or reference count is off."""
        if len(self.references) != n_references:
            raise AnnotationError(f"expected {n_references} references; "
                                  f"observed {len(self.references)}", self.group_id)
        elif len(self.sources) != n_sources:
            raise AnnotationError(f"expected {n_sources} source reviews; "
                                  f"observed {len(self.sources)}", self.group_id)

    def to_dict(self) -> Dict[str, Any]:
        """Convert this entry into a JSON-compatible dictionary."""
        return {
            'group_id': self.group_id,
            'category': self.category,
            'reviews': [r.to_dict() for r in self.sources],
            'summaries': list(self.references),
            'split': self.split,
        }


@dataclass(frozen=True)
class AnnotatedSet:
    """A collection of :class:`AnnotatedEntry` instances, each with a split label."""

    entries: Tuple[AnnotatedEntry, ...]

    def __len__(self) -> int:
        """Implement :func:`len(self)<len>`."""
        return len(self.entries)

    def __iter__(self) -> Iterator[AnnotatedEntry]:
        """Implement :func:`iter(self)<iter>`."""
        return iter(self.entries)

    def split(self, name: str) -> List[AnnotatedEntry]:
        """Return all entries of split **name**."""
        if name not in SPLITS:
            raise ValueError(f"'name' expected one of {SPLITS!r}; observed value: {name!r}")
        return [e for e in self.entries if e.split == name]

    @property
    def sizes(self) -> Tuple[int, int, int]:
        """:class:`Tuple[int, int, int]<typing.Tuple>`: Get the train, valid and test sizes."""
        train, valid, test = (len(self.split(k)) for k in SPLITS)
        return train, valid, test

    @property
    def categories(self) -> List[str]:
        """:class:`List[str]<typing.List>`: Get the sorted category names."""
        return sorted({e.category for e in self.entries})


@dataclass(frozen=True)
class FilterConfig:
    """Settings for :func:`filter_reviews`.

    Attributes
    ----------
    min_reviews_per_product : :class:`int`
        Products with fewer surviving reviews are dropped.
    min_words, max_words : :class:`int`
        The inclusive whitespace word-count range of a review.
    popularity_percentile : :class:`float`
        Products whose surviving review count exceeds this (nearest-rank) percentile are dropped.
    max_reviews_per_product : :class:`int`, optional
        A fixed popularity cut-off; computed from the data by :func:`popularity_threshold`
        if :data:`None`.

    """

    min_reviews_per_product: int = 10
    min_words: int = 20
    max_words: int = 70
    popularity_percentile: float = 90.0
    max_reviews_per_product: Optional[int] = None

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> 'FilterConfig':
        """Construct a config from a mapping, ignoring unknown keys."""
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in dct.items() if k in names})

    def resolve(self, reviews: Sequence[Review]) -> 'FilterConfig':
        """Return a copy with :attr:`max_reviews_per_product` fixed to the threshold of **reviews**.

        Filtering with a resolved config is idempotent.

        """
        if self.max_reviews_per_product is not None:
            return self
        threshold = popularity_threshold(reviews, self)
        return dataclasses.replace(self, max_reviews_per_product=threshold)


def load_reviews(path: PathType, format: str = 'jsonl') -> List[Review]:
    """Read all reviews from a JSONL file, preserving file order.

    Blank lines are skipped.

    Raises
    ------
    :exc:`~fewSUM.exceptions.ReviewFormatError`
        Raised for malformed lines or missing/invalid fields;
        the line number and field are included in the message.

    """
    if format != 'jsonl':
        raise ValueError(f"'format' expected 'jsonl'; observed value: {format!r}")

    ret: List[Review] = []
    with open(path, 'r', encoding='utf-8') as f:
        for i, line in enumerate(f, 1):
            if not line.strip():
                continue
            ret.append(_parse_review(line, i))

    logger.info(f'Loaded {len(ret)} reviews from {str(path)!r}')
    return ret


def _parse_review(line: str, lineno: int) -> Review:
    try:
        dct = json.loads(line)
    except json.JSONDecodeError as ex:
        raise ReviewFormatError(f'malformed JSON ({ex.msg})', lineno) from ex
    if not isinstance(dct, dict):
        raise ReviewFormatError('expected a JSON object', lineno)

    try:
        review = Review.from_dict(dct)
    except KeyError as ex:
        field = ex.args[0]
        raise ReviewFormatError(f'missing field {field!r}', lineno, field) from ex
    except (TypeError, ValueError) as ex:
        raise ReviewFormatError(f"invalid field 'rating' ({ex})", lineno, 'rating') from ex

    if not review.text.split():
        raise ReviewFormatError("field 'text' is empty", lineno, 'text')
    return review


def write_reviews(path: PathType, reviews: Iterable[Review]) -> None:
    """Write **reviews** to a JSONL file readable by :func:`load_reviews`."""
    with open(path, 'w', encoding='utf-8') as f:
        for r in reviews:
            f.write(json.dumps(r.to_dict(), ensure_ascii=False) + '\n')


def _length_filter(reviews: Iterable[Review], cfg: FilterConfig) -> List[Review]:
    return [r for r in reviews if cfg.min_words <= len(r.text.split()) <= cfg.max_words]


def popularity_threshold(reviews: Sequence[Review], cfg: FilterConfig) -> int:
    """Return the nearest-rank percentile of the per-product review counts.

    Counts are taken after the word-count filter.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.corpus import Review, FilterConfig, popularity_threshold

        >>> text = ' '.join(['word'] * 25)
        >>> reviews = [Review(f'{p}-{i}', str(p), 5, text) for p in range(1, 12) for i in range(p)]
        >>> popularity_threshold(reviews, FilterConfig())
        10

    """
    counts = pd.Series([r.product_id for r in _length_filter(reviews, cfg)]).value_counts()
    if not len(counts):
        return 0

    values = np.sort(counts.to_numpy())
    rank = max(1, math.ceil(cfg.popularity_percentile / 100 * len(values)))
    return int(values[rank - 1])


def filter_reviews(reviews: Sequence[Review], cfg: FilterConfig) -> List[Review]:
    """Apply the word-count, popularity and minimum-count filters, in that order.

    The popularity cut-off is a property of the raw corpus and must be fixed beforehand
    with :meth:`FilterConfig.resolve`; filtering is then idempotent.

    Parameters
    ----------
    reviews : :class:`Sequence[Review]<typing.Sequence>`
        The to-be filtered reviews.
    cfg : :class:`FilterConfig`
        The filter settings, with :attr:`FilterConfig.max_reviews_per_product` set.

    Returns
    -------
    :class:`List[Review]<typing.List>`
        The surviving reviews in their original order.

    Raises
    ------
    :exc:`~fewSUM.exceptions.ConfigError`
        Raised if the popularity cut-off of **cfg** is unresolved.

    """
    threshold = cfg.max_reviews_per_product
    if threshold is None:
        raise ConfigError('filter.max_reviews_per_product',
                          'unresolved popularity cut-off; use FilterConfig.resolve()')

    kept = _length_filter(reviews, cfg)
    counts = pd.Series([r.product_id for r in kept], dtype=object).value_counts()
    valid = set(counts.index[(counts <= threshold) & (counts >= cfg.min_reviews_per_product)])

    ret = [r for r in kept if r.product_id in valid]
    logger.info(f'Kept {len(ret)} out of {len(reviews)} reviews from {len(valid)} products '
                f'(popularity cut-off: {threshold} reviews)')
    return ret


def make_groups(reviews: Sequence[Review], group_size: int = 9, seed: int = 0) -> List[ReviewGroup]:
    """Partition the reviews of every product into groups sampled without replacement.

    Products are visited in sorted order and share a single seeded generator;
    leftover reviews (fewer than **group_size**) are discarded.

    """
    if group_size < 2:
        raise ValueError(f"'group_size' must be larger than or equal to 2; "
                         f"observed value: {group_size!r}")

    by_product: Dict[str, List[Review]] = {}
    for r in reviews:
        by_product.setdefault(r.product_id, []).append(r)

    rng = np.random.default_rng(seed)
    ret: List[ReviewGroup] = []
    for product_id in sorted(by_product):
        members = by_product[product_id]
        order = rng.permutation(len(members))
        for k in range(len(members) // group_size):
            idx = order[k * group_size:(k + 1) * group_size]
            group = tuple(members[i] for i in idx)
            ret.append(ReviewGroup(f'{product_id}-{k}', product_id, group))
    return ret


def write_groups(path: PathType, groups: Iterable[ReviewGroup]) -> None:
    """Write **groups** to a JSONL file, one group per line."""
    with open(path, 'w', encoding='utf-8') as f:
        for g in groups:
            dct = {'group_id': g.group_id, 'product_id': g.product_id,
                   'reviews': [r.to_dict() for r in g.reviews]}
            f.write(json.dumps(dct, ensure_ascii=False) + '\n')


def read_groups(path: PathType) -> List[ReviewGroup]:
    """Read groups written by :func:`write_groups`."""
    ret: List[ReviewGroup] = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if line.strip():
                dct = json.loads(line)
                reviews = tuple(Review.from_dict(r) for r in dct['reviews'])
                ret.append(ReviewGroup(dct['group_id'], dct['product_id'], reviews))
    return ret


def leave_one_out(group: ReviewGroup) -> List[LooInstance]:
    """Return one instance per member of **group**, with all other members as sources."""
    reviews = group.reviews
    return [
        LooInstance(target, reviews[:i] + reviews[i + 1:], group.group_id)
        for i, target in enumerate(reviews)
    ]


SplitSpec = Union[None, str, Tuple[int, int, int], Mapping[str, Sequence[str]]]


def load_splits(path: PathType) -> Dict[str, List[str]]:
    """Read a JSON splits file mapping split names to lists of group ids."""
    with open(path, 'r', encoding='utf-8') as f:
        dct = json.load(f)
    return {k: [str(i) for i in v] for k, v in dct.items()}


def _annotated_source(dct: Mapping[str, Any], group_id: str, category: str, i: int,
                      lineno: int) -> Review:
    try:
        return Review(
            str(dct.get('id', f'{group_id}/{i}')),
            str(dct.get('product_id', group_id)),
            int(dct['rating']),
            str(dct['text']),
            str(dct.get('category', category)),
        )
    except KeyError as ex:
        raise AnnotationError(f'line {lineno}: review {i} is missing the field {ex.args[0]!r}',
                              group_id) from ex
    except (TypeError, ValueError, AttributeError) as ex:
        raise AnnotationError(f'line {lineno}: review {i} has an invalid field ({ex})',
                              group_id) from ex


def load_annotated(path: PathType, split_spec: SplitSpec = 'amazon',
                   n_sources: int = 8, n_references: int = 3) -> AnnotatedSet:
    """Read an annotated JSONL file and assign splits.

    Parameters
    ----------
    path : path-like
        A JSONL file with the keys ``group_id``, ``category``, ``reviews``,
        ``summaries`` and, optionally, ``split``.
    split_spec
        How to assign splits:

        * :data:`None`: keep the ``split`` field of every entry.
        * A key of :data:`SPLIT_PRESETS` or a (train, valid, test) tuple: assign splits
          in file order. Sizes are rescaled proportionally if they do not add up to
          the number of entries.
        * A mapping of split names to group ids (see :func:`load_splits`).

    Raises
    ------
    :exc:`~fewSUM.exceptions.AnnotationError`
        Raised if an entry does not have exactly **n_references** summaries and
        **n_sources** reviews, if the split assignment is not a partition,
        or if a line or one of its reviews is malformed.

    """
    entries: List[AnnotatedEntry] = []
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                dct = json.loads(line)
                group_id = str(dct['group_id'])
            except (json.JSONDecodeError, KeyError, TypeError) as ex:
                raise AnnotationError(f'line {lineno}: malformed entry ({ex})',
                                      f'<line {lineno}>') from ex
            category = str(dct.get('category', ''))
            sources = tuple(_annotated_source(r, group_id, category, i, lineno)
                            for i, r in enumerate(dct.get('reviews', [])))
            entry = AnnotatedEntry(group_id, category, sources,
                                   tuple(dct.get('summaries', [])), dct.get('split'))
            entry.validate(n_sources, n_references)
            entries.append(entry)

    ret = AnnotatedSet(tuple(_assign_splits(entries, split_spec)))
    logger.info(f'Loaded {len(ret)} annotated entries from {str(path)!r}; '
                f'split sizes (train, valid, test): {ret.sizes}')
    return ret


def _split_sizes(counts: Tuple[int, int, int], n: int) -> Tuple[int, int, int]:
    total = sum(counts)
    if total == n:
        return counts
    train = round(counts[0] * n / total)
    valid = round(counts[1] * n / total)
    logger.warning(f'Split sizes {counts} do not add up to {n} entries; rescaling')
    return train, valid, n - train - valid


def _assign_splits(entries: List[AnnotatedEntry], spec: SplitSpec) -> List[AnnotatedEntry]:
    if spec is None:
        for e in entries:
            if e.split not in SPLITS:
                raise AnnotationError(f"missing or invalid split label {e.split!r}", e.group_id)
        return entries

    if isinstance(spec, Mapping):
        lookup: Dict[str, str] = {}
        for name, ids in spec.items():
            if name not in SPLITS:
                raise ValueError(f"invalid split name {name!r}")
            for i in ids:
                if i in lookup:
                    raise AnnotationError(f"assigned to both {lookup[i]!r} and {name!r}", i)
                lookup[i] = name
        missing = [e.group_id for e in entries if e.group_id not in lookup]
        if missing:
            raise AnnotationError('not assigned to any split', missing[0])
        return [dataclasses.replace(e, split=lookup[e.group_id]) for e in entries]

    counts = SPLIT_PRESETS[spec] if isinstance(spec, str) else tuple(spec)
    train, valid, _ = _split_sizes(counts, len(entries))  # type: ignore[arg-type]
    labels = ['train'] * train + ['valid'] * valid
    labels += ['test'] * (len(entries) - len(labels))
    return [dataclasses.replace(e, split=k) for e, k in zip(entries, labels)]


def write_annotated(path: PathType, annotated: Iterable[AnnotatedEntry]) -> None:
    """Write annotated entries to a JSONL file readable by :func:`load_annotated`."""
    with open(path, 'w', encoding='utf-8') as f:
        for e in annotated:
            f.write(json.dumps(e.to_dict(), ensure_ascii=False) + '\n')


def cross_domain_split(annotated: AnnotatedSet, target: str, seed: int = 0) -> AnnotatedSet:
    """Build the cross-domain variant of **annotated** for the domain **target**.

    The test entries of **target** are kept unchanged, while the training and
    validation entries are drawn from all other domains, with counts matched to
    the in-domain training and validation sizes of **target**.

    """
    in_domain = [e for e in annotated if e.category == target]
    if not in_domain:
        raise ValueError(f"no annotated entries of category {target!r}")

    rng = np.random.default_rng(seed)
    pool = [e for e in annotated if e.category != target and e.split in ('train', 'valid')]
    order = [pool[i] for i in rng.permutation(len(pool))]

    n_train = sum(e.split == 'train' for e in in_domain)
    n_valid = sum(e.split == 'valid' for e in in_domain)
    if n_train + n_valid > len(order):
        raise ValueError(f"only {len(order)} out-of-domain entries available for "
                         f"{n_train + n_valid} training and validation slots")

    ret = [dataclasses.replace(e, split='train') for e in order[:n_train]]
    ret += [dataclasses.replace(e, split='valid') for e in order[n_train:n_train + n_valid]]
    ret += [e for e in in_domain if e.split == 'test']
    return AnnotatedSet(tuple(ret))
