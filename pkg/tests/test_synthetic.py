"""Tests for :mod:`fewSUM.synthetic`."""

import os
from collections import Counter

import pytest
from assertionlib import assertion
from nanoutils import delete_finally

from fewSUM.corpus import load_reviews, load_annotated
from fewSUM.synthetic import (
    CATEGORIES, SyntheticConfig, synthetic_reviews, synthetic_annotated, write_synthetic_corpus
)
from fewSUM.testing_utils import TMP_DIR

CORPUS_TMP = TMP_DIR / '.synthetic'
CFG = SyntheticConfig(n_products=6, reviews_per_product=3, n_annotated=4, n_sources=5, seed=3)


@pytest.mark.parametrize('kwargs', [
    {'n_products': 0},
    {'reviews_per_product': 0},
    {'n_annotated': -1},
    {'n_sources': 0},
    {'agreement': 0.4},
    {'agreement': 1.1},
])
def test_config_raise(kwargs: dict) -> None:
    """Test :class:`fewSUM.synthetic.SyntheticConfig` with invalid arguments."""
    assertion.assert_(SyntheticConfig, **kwargs, exception=ValueError)


def test_config_from_dict() -> None:
    """Unknown keys are ignored by :meth:`fewSUM.synthetic.SyntheticConfig.from_dict`."""
    cfg = SyntheticConfig.from_dict({'n_products': 2, 'seed': 5, 'bogus': None})
    assertion.eq(cfg, SyntheticConfig(n_products=2, seed=5))


def test_synthetic_reviews() -> None:
    """Test :func:`fewSUM.synthetic.synthetic_reviews`."""
    reviews = synthetic_reviews(CFG)
    assertion.len_eq(reviews, 18)
    assertion.eq(reviews[0].id, 'P0000-r0')
    assertion.eq(len({r.id for r in reviews}), 18)

    counts = Counter(r.product_id for r in reviews)
    assertion.eq(set(counts.values()), {3})
    assertion.eq(sorted(counts), [f'P{k:04d}' for k in range(6)])

    categories = list(CATEGORIES)
    for r in reviews:
        k = int(r.product_id[1:])
        assert r.category == categories[k % len(categories)], r.id
        assert 1 <= r.rating <= 5, r.id
        assert len(r.text.split()) >= 24, r.id


def test_synthetic_seed() -> None:
    """Identical seeds produce identical corpora."""
    assertion.eq(synthetic_reviews(CFG), synthetic_reviews(CFG))
    assertion.eq(synthetic_annotated(CFG), synthetic_annotated(CFG))

    other = SyntheticConfig(n_products=6, reviews_per_product=3, seed=4)
    assertion.ne([r.text for r in synthetic_reviews(CFG)],
                 [r.text for r in synthetic_reviews(other)])


def test_synthetic_annotated() -> None:
    """Test :func:`fewSUM.synthetic.synthetic_annotated`."""
    entries = synthetic_annotated(CFG)
    assertion.len_eq(entries, 4)
    review_products = {r.product_id for r in synthetic_reviews(CFG)}

    for entry in entries:
        entry.validate(n_sources=5, n_references=3)
        assertion.is_(entry.split, None)
        assertion.eq(entry.group_id[0], 'A')
        assertion.not_contains(review_products, entry.group_id)
        for summary in entry.references:
            assertion.contains(summary.lower(), 'buy')
        assert all(r.product_id == entry.group_id for r in entry.sources), entry.group_id


@delete_finally(CORPUS_TMP)
def test_write_synthetic_corpus() -> None:
    """Files written by :func:`fewSUM.synthetic.write_synthetic_corpus` can be loaded."""
    paths = write_synthetic_corpus(CORPUS_TMP, CFG)
    assertion.eq(set(paths), {'reviews', 'annotated'})
    assertion(os.path.isfile(paths['reviews']))

    reviews = load_reviews(paths['reviews'])
    assertion.eq([r.text for r in reviews], [r.text for r in synthetic_reviews(CFG)])

    annotated = load_annotated(paths['annotated'], split_spec=(2, 1, 1), n_sources=5)
    assertion.eq(annotated.sizes, (2, 1, 1))
    assertion.eq([e.references for e in annotated],
                 [e.references for e in synthetic_annotated(CFG)])
