"""A templated product-review corpus for running the full pipeline without proprietary data.

Every product has a hidden polarity per aspect; its reviews mention a few aspects,
mostly agreeing with that polarity, in first, second or third person.
Annotated entries come with three third-person reference summaries that state the
consensus of their eight source reviews.

Index
-----
.. currentmodule:: fewSUM.synthetic
.. autosummary::
    CATEGORIES
    SyntheticConfig
    synthetic_reviews
    synthetic_annotated
    write_synthetic_corpus

API
---
.. autodata:: CATEGORIES
.. autoclass:: SyntheticConfig
.. autofunction:: synthetic_reviews
.. autofunction:: synthetic_annotated
.. autofunction:: write_synthetic_corpus

"""

import os
import dataclasses
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Tuple, List, Dict, Any, Sequence

import numpy as np
from nanoutils import PathType

from .logger import logger
from .corpus import Review, AnnotatedEntry, write_reviews, write_annotated

__all__ = ['CATEGORIES', 'SyntheticConfig', 'synthetic_reviews', 'synthetic_annotated',
           'write_synthetic_corpus']

#: Product nouns and aspects per category.
CATEGORIES: Mapping[str, Mapping[str, Tuple[str, ...]]] = MappingProxyType({
    'electronics': {
        'products': ('headphones', 'charger', 'speaker', 'keyboard', 'mouse'),
        'aspects': ('battery', 'sound', 'price', 'design', 'cable'),
    },
    'clothing': {
        'products': ('jacket', 'sneakers', 'shirt', 'dress', 'scarf'),
        'aspects': ('fit', 'fabric', 'color', 'price', 'stitching'),
    },
    'home': {
        'products': ('blender', 'pan', 'lamp', 'kettle', 'pillow'),
        'aspects': ('handle', 'price', 'design', 'size', 'finish'),
    },
    'health': {
        'products': ('vitamins', 'toothbrush', 'shampoo', 'lotion', 'scale'),
        'aspects': ('smell', 'price', 'texture', 'effect', 'packaging'),
    },
})

_POSITIVE = ('great', 'excellent', 'solid', 'nice', 'perfect')
_NEGATIVE = ('poor', 'weak', 'cheap', 'bad', 'disappointing')
_RELATIVES = ('wife', 'husband', 'son', 'daughter', 'mother', 'friend')
_FILLERS = (
    'Shipping was fast.', 'The box arrived on time.', 'It does the job.',
    'Setup took a few minutes.', 'It came well packed.', 'The instructions were clear.',
)
_POV_WEIGHTS = (0.6, 0.1, 0.3)


@dataclass(frozen=True)
class SyntheticConfig:
    """Size and seed of the synthetic corpus."""

    n_products: int = 250
    reviews_per_product: int = 10
    n_annotated: int = 60
    n_sources: int = 8
    agreement: float = 0.85
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ('n_products', 'reviews_per_product', 'n_annotated', 'n_sources'):
            value = getattr(self, name)
            if value < 1:
                raise ValueError(f"{name!r} must be larger than 0; observed value: {value!r}")
        if not 0.5 <= self.agreement <= 1:
            raise ValueError(f"'agreement' expected a value in [0.5, 1]; "
                             f"observed value: {self.agreement!r}")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> 'SyntheticConfig':
        """Construct a config from a mapping, ignoring unknown keys."""
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in dct.items() if k in names})


@dataclass(frozen=True)
class _Product:
    product_id: str
    category: str
    noun: str
    polarity: Dict[str, bool]

    @property
    def base_rating(self) -> int:
        n_pos = sum(self.polarity.values())
        return int(np.clip(1 + round(4 * n_pos / len(self.polarity)), 1, 5))


def _choice(rng: np.random.Generator, seq: Sequence[str]) -> str:
    return seq[int(rng.integers(len(seq)))]


def _adjective(rng: np.random.Generator, positive: bool) -> str:
    return _choice(rng, _POSITIVE if positive else _NEGATIVE)


def _make_product(rng: np.random.Generator, product_id: str, category: str) -> _Product:
    spec = CATEGORIES[category]
    polarity = {a: bool(rng.random() < 0.6) for a in spec['aspects']}
    return _Product(product_id, category, _choice(rng, spec['products']), polarity)


def _aspect_sentence(rng: np.random.Generator, pov: int, product: _Product,
                     aspect: str, positive: bool) -> str:
    adj = _adjective(rng, positive)
    if pov == 0:
        return _choice(rng, (f'I think the {aspect} is {adj}.',
                             f'My {_choice(rng, _RELATIVES)} says the {aspect} is {adj}.',
                             f'I found the {aspect} {adj}.'))
    elif pov == 1:
        return _choice(rng, (f'You will find the {aspect} {adj}.',
                             f'You can tell the {aspect} is {adj}.'))
    return _choice(rng, (f'The {aspect} is {adj}.',
                         f'The {aspect} of this {product.noun} is {adj}.'))


def _review_text(rng: np.random.Generator, product: _Product, agreement: float) -> Tuple[str, int]:
    pov = int(rng.choice(3, p=_POV_WEIGHTS))
    aspects = list(product.polarity)
    mentioned = rng.permutation(len(aspects))[:int(rng.integers(3, 5))]

    n_pos = 0
    sentences = []
    if pov == 0:
        sentences.append(f'I bought this {product.noun} for my {_choice(rng, _RELATIVES)}.')
    elif pov == 1:
        sentences.append(f'If you need a {product.noun}, read this.')
    else:
        sentences.append(f'This {product.noun} arrived last week.')

    for i in mentioned:
        a = aspects[i]
        positive = product.polarity[a] if rng.random() < agreement else not product.polarity[a]
        n_pos += positive
        sentences.append(_aspect_sentence(rng, pov, product, a, positive))

    fillers = list(rng.permutation(len(_FILLERS)))
    while len(' '.join(sentences).split()) < 24:
        sentences.append(_FILLERS[fillers.pop()])

    good = n_pos * 2 >= len(mentioned)
    closing = ('I would recommend it.', 'You should buy it.', 'It is worth the money.')
    closing_bad = ('I would not buy it again.', 'You should look elsewhere.', 'It is not worth it.')
    sentences.append((closing if good else closing_bad)[pov])

    shift = int(rng.integers(-1, 2))
    rating = int(np.clip(product.base_rating + shift, 1, 5))
    return ' '.join(sentences), rating


def _reviews_of(rng: np.random.Generator, product: _Product, n: int,
                agreement: float) -> List[Review]:
    ret = []
    for k in range(n):
        text, rating = _review_text(rng, product, agreement)
        ret.append(Review(f'{product.product_id}-r{k}', product.product_id, rating,
                          text, product.category))
    return ret


def synthetic_reviews(cfg: SyntheticConfig = SyntheticConfig()) -> List[Review]:
    """Generate ``n_products * reviews_per_product`` reviews, cycling through :data:`CATEGORIES`."""
    rng = np.random.default_rng(cfg.seed)
    categories = list(CATEGORIES)
    ret: List[Review] = []
    for k in range(cfg.n_products):
        product = _make_product(rng, f'P{k:04d}', categories[k % len(categories)])
        ret += _reviews_of(rng, product, cfg.reviews_per_product, cfg.agreement)
    return ret


def _consensus(product: _Product, reviews: Sequence[Review]) -> List[Tuple[str, bool]]:
    votes: Dict[str, int] = {}
    for r in reviews:
        for sentence in r.text.split('.'):
            words = sentence.split()
            for a in product.polarity:
                if a in words:
                    pos = any(w in _POSITIVE for w in words)
                    votes[a] = votes.get(a, 0) + (1 if pos else -1)
    ranked = sorted(votes, key=lambda a: (-abs(votes[a]), a))
    return [(a, votes[a] > 0 if votes[a] else product.polarity[a]) for a in ranked]


def _summaries(rng: np.random.Generator, product: _Product,
               reviews: Sequence[Review]) -> Tuple[str, str, str]:
    consensus = _consensus(product, reviews) or [(a, p) for a, p in product.polarity.items()]
    while len(consensus) < 3:
        consensus.append(consensus[-1])
    (a1, p1), (a2, p2), (a3, p3) = consensus[:3]
    overall = 'a good buy' if np.mean([r.rating for r in reviews]) >= 3 else 'a risky buy'
    noun = product.noun
    adj1, adj2, adj3 = (_adjective(rng, p) for p in (p1, p2, p3))
    return (
        f'This {noun} is {overall}. The {a1} is {adj1} and the {a2} is {adj2}. '
        f'Customers also mention that the {a3} is {adj3}.',
        f'Overall, this {noun} is {overall}. Reviewers say the {a1} is {adj1}. '
        f'The {a2} is {adj2}, while the {a3} is {adj3}.',
        f'The {a1} of this {noun} is {adj1}. Its {a2} is {adj2} and the {a3} is {adj3}. '
        f'In short, it is {overall}.',
    )


def synthetic_annotated(cfg: SyntheticConfig = SyntheticConfig()) -> List[AnnotatedEntry]:
    """Generate ``n_annotated`` entries of ``n_sources`` reviews and three references each.

    Annotated products are disjoint from those of :func:`synthetic_reviews`;
    entries carry no split label.

    """
    rng = np.random.default_rng(cfg.seed + 1)
    categories = list(CATEGORIES)
    ret: List[AnnotatedEntry] = []
    for k in range(cfg.n_annotated):
        category = categories[k % len(categories)]
        product = _make_product(rng, f'A{k:04d}', category)
        sources = tuple(_reviews_of(rng, product, cfg.n_sources, cfg.agreement))
        ret.append(AnnotatedEntry(product.product_id, category, sources,
                                  _summaries(rng, product, sources)))
    return ret


def write_synthetic_corpus(directory: PathType,
                           cfg: SyntheticConfig = SyntheticConfig()) -> Dict[str, str]:
    """Write ``reviews.jsonl`` and ``annotated.jsonl`` to **directory**.

    Returns
    -------
    :class:`Dict[str, str]<typing.Dict>`
        The paths of both files, keyed by ``"reviews"`` and ``"annotated"``.

    """
    os.makedirs(directory, exist_ok=True)
    paths = {
        'reviews': os.path.join(directory, 'reviews.jsonl'),
        'annotated': os.path.join(directory, 'annotated.jsonl'),
    }
    reviews = synthetic_reviews(cfg)
    annotated = synthetic_annotated(cfg)
    write_reviews(paths['reviews'], reviews)
    write_annotated(paths['annotated'], annotated)
    logger.info(f'Wrote {len(reviews)} reviews and {len(annotated)} annotated entries '
                f'to {os.fspath(directory)!r}')
    return paths
