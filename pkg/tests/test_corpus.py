"""Tests for :mod:`fewSUM.corpus`."""

import json
from typing import List

import pytest
from hypothesis import given, strategies as st
from assertionlib import assertion
from nanoutils import delete_finally

from fewSUM import ReviewFormatError, AnnotationError, ConfigError
from fewSUM.corpus import (
    Review, ReviewGroup, AnnotatedEntry, AnnotatedSet, FilterConfig, SPLITS,
    load_reviews, write_reviews, filter_reviews, popularity_threshold, make_groups,
    write_groups, read_groups, leave_one_out, load_annotated, write_annotated,
    load_splits, cross_domain_split
)
from fewSUM.testing_utils import TMP_DIR, TINY_GROUPS, TINY_ANNOTATED

JSONL_TMP = TMP_DIR / '.reviews.jsonl'
SPLITS_TMP = TMP_DIR / '.splits.json'


def _text(n: int) -> str:
    return ' '.join(['word'] * n)


def _reviews(counts: List[int], n_words: int = 25) -> List[Review]:
    return [Review(f'p{p}-{i}', f'p{p}', 5, _text(n_words))
            for p, n in enumerate(counts) for i in range(n)]


def _entry(group_id: str, category: str = 'home', n_sources: int = 8,
           n_references: int = 3) -> AnnotatedEntry:
    sources = tuple(Review(f'{group_id}/{i}', group_id, 4, _text(25), category)
                    for i in range(n_sources))
    refs = tuple(f'summary {k} of {group_id}' for k in range(n_references))
    return AnnotatedEntry(group_id, category, sources, refs)


""" #####################################  Reviews  ##################################### """


@delete_finally(JSONL_TMP)
def test_load_reviews() -> None:
    """Test :func:`fewSUM.corpus.load_reviews`."""
    reviews = [Review('a', 'p', 5, 'good stuff', 'home'), Review('b', 'p', 1, 'bad', 'home'),
               Review('c', 'q', 3, 'meh', 'toys')]
    write_reviews(JSONL_TMP, reviews)
    assertion.eq(load_reviews(JSONL_TMP), reviews)

    with open(JSONL_TMP, 'w', encoding='utf-8') as f:
        pass
    assertion.eq(load_reviews(JSONL_TMP), [])


@pytest.mark.parametrize('line,field', [
    ({'id': 'b', 'product_id': 'p', 'text': 'hi', 'category': ''}, 'rating'),
    ({'id': 'b', 'product_id': 'p', 'rating': 5, 'category': ''}, 'text'),
    ({'id': 'b', 'product_id': 'p', 'rating': 7, 'text': 'hi', 'category': ''}, 'rating'),
    ({'id': 'b', 'product_id': 'p', 'rating': '5', 'text': 'hi', 'category': ''}, 'rating'),
    ({'id': 'b', 'product_id': 'p', 'rating': 5, 'text': '  ', 'category': ''}, 'text'),
])
@delete_finally(JSONL_TMP)
def test_load_reviews_raise(line: dict, field: str) -> None:
    """Test :func:`fewSUM.corpus.load_reviews` with invalid records on line 2."""
    valid = {'id': 'a', 'product_id': 'p', 'rating': 5, 'text': 'ok', 'category': ''}
    with open(JSONL_TMP, 'w', encoding='utf-8') as f:
        f.write(json.dumps(valid) + '\n' + json.dumps(line) + '\n')

    try:
        load_reviews(JSONL_TMP)
    except ReviewFormatError as ex:
        assertion.eq(ex.lineno, 2)
        assertion.eq(ex.field, field)
        assertion.contains(str(ex), 'line 2')
    else:
        raise AssertionError('Failed to raise a ReviewFormatError')


@delete_finally(JSONL_TMP)
def test_load_reviews_malformed() -> None:
    """Test :func:`fewSUM.corpus.load_reviews` with malformed JSON."""
    with open(JSONL_TMP, 'w', encoding='utf-8') as f:
        f.write('{"id": \n')
    assertion.assert_(load_reviews, JSONL_TMP, exception=ReviewFormatError)
    assertion.assert_(load_reviews, JSONL_TMP, format='csv', exception=ValueError)


""" #####################################  Filtering  ##################################### """


@pytest.mark.parametrize('n_words,kept', [(19, False), (20, True), (70, True), (71, False)])
def test_length_filter(n_words: int, kept: bool) -> None:
    """Reviews outside the ``[20, 70]`` word range are excluded."""
    reviews = _reviews([10]) + [Review('x', 'p0', 5, _text(n_words))]
    cfg = FilterConfig(max_reviews_per_product=100)
    out = filter_reviews(reviews, cfg)
    assertion.eq(any(r.id == 'x' for r in out), kept)


def test_min_reviews() -> None:
    """Products with fewer than 10 surviving reviews are excluded."""
    reviews = _reviews([9, 10])
    out = filter_reviews(reviews, FilterConfig(max_reviews_per_product=100))
    assertion.eq({r.product_id for r in out}, {'p1'})


def test_popularity() -> None:
    """Out of 11 products with 1 to 11 reviews, the 90th percentile cut removes the last one."""
    reviews = _reviews(list(range(1, 12)))
    cfg = FilterConfig(min_reviews_per_product=1)
    assertion.eq(popularity_threshold(reviews, cfg), 10)

    out = filter_reviews(reviews, cfg.resolve(reviews))
    assertion.len_eq({r.product_id for r in out}, 10)
    assertion.not_contains({r.product_id for r in out}, 'p10')


@given(counts=st.lists(st.integers(1, 15), min_size=1, max_size=12),
       lengths=st.lists(st.integers(15, 75), min_size=1, max_size=5))
def test_filter_idempotent(counts: List[int], lengths: List[int]) -> None:
    """Filtering twice with a resolved config equals filtering once."""
    reviews = [Review(f'p{p}-{i}', f'p{p}', 5, _text(lengths[(p + i) % len(lengths)]))
               for p, n in enumerate(counts) for i in range(n)]
    cfg = FilterConfig(min_reviews_per_product=3).resolve(reviews)
    once = filter_reviews(reviews, cfg)
    assertion.eq(filter_reviews(once, cfg), once)


def test_filter_unresolved() -> None:
    """Filtering requires a fixed popularity cut-off."""
    reviews = _reviews(list(range(1, 21)))
    cfg = FilterConfig(min_reviews_per_product=1)
    try:
        filter_reviews(reviews, cfg)
    except ConfigError as ex:
        assertion.eq(ex.key, 'filter.max_reviews_per_product')
    else:
        raise AssertionError('filter_reviews() failed to raise')

    resolved = cfg.resolve(reviews)
    once = filter_reviews(reviews, resolved)
    assertion.len_eq({r.product_id for r in once}, 18)
    assertion.eq(filter_reviews(once, resolved), once)
    assertion.eq(filter_reviews(once, resolved.resolve(once)), once)


def test_resolve() -> None:
    """Test :meth:`FilterConfig.resolve`."""
    reviews = _reviews(list(range(1, 12)))
    cfg = FilterConfig().resolve(reviews)
    assertion.eq(cfg.max_reviews_per_product, 10)
    assertion.is_(cfg.resolve([]), cfg)


""" #####################################  Groups  ##################################### """


@pytest.mark.parametrize('n,n_groups', [(9, 1), (20, 2), (8, 0)])
def test_make_groups(n: int, n_groups: int) -> None:
    """Test :func:`fewSUM.corpus.make_groups`."""
    groups = make_groups(_reviews([n]), 9, seed=1)
    assertion.len_eq(groups, n_groups)
    ids = [r.id for g in groups for r in g.reviews]
    assertion.len_eq(set(ids), 9 * n_groups)
    for g in groups:
        assertion.len_eq(g, 9)


def test_make_groups_seed() -> None:
    """The same seed yields identical groups; another seed a different order."""
    reviews = _reviews([20, 31])
    assertion.eq(make_groups(reviews, 9, seed=3), make_groups(reviews, 9, seed=3))
    assertion.ne(make_groups(reviews, 9, seed=3), make_groups(reviews, 9, seed=4))
    assertion.assert_(make_groups, reviews, 1, exception=ValueError)


def test_review_group_raise() -> None:
    """Test :class:`fewSUM.corpus.ReviewGroup` with invalid members."""
    a, b = _reviews([1, 1])
    assertion.assert_(ReviewGroup, 'g', 'p0', (a, b), exception=ValueError)
    assertion.assert_(ReviewGroup, 'g', 'p0', (a, a), exception=ValueError)


@delete_finally(JSONL_TMP)
def test_write_read_groups() -> None:
    """Test :func:`fewSUM.corpus.write_groups` and :func:`fewSUM.corpus.read_groups`."""
    write_groups(JSONL_TMP, TINY_GROUPS)
    assertion.eq(tuple(read_groups(JSONL_TMP)), TINY_GROUPS)


@pytest.mark.parametrize('size', [2, 9])
def test_leave_one_out(size: int) -> None:
    """Test :func:`fewSUM.corpus.leave_one_out`."""
    group = make_groups(_reviews([size]), size)[0]
    instances = leave_one_out(group)
    assertion.len_eq(instances, size)
    for i, inst in enumerate(instances):
        assertion.is_(inst.target, group.reviews[i])
        assertion.len_eq(inst.sources, size - 1)
        assertion.not_contains(inst.sources, inst.target)
        assertion.eq({inst.target, *inst.sources}, set(group.reviews))
        assertion.eq(list(inst.sources), [r for r in group.reviews if r is not inst.target])


""" #####################################  Annotated  ##################################### """


@pytest.mark.parametrize('spec,n,sizes', [
    ('amazon', 60, (28, 12, 20)),
    ('yelp', 100, (30, 30, 40)),
    ((1, 1, 1), 3, (1, 1, 1)),
    ('amazon', 30, (14, 6, 10)),
])
@delete_finally(JSONL_TMP)
def test_load_annotated(spec: object, n: int, sizes: tuple) -> None:
    """Test :func:`fewSUM.corpus.load_annotated`."""
    write_annotated(JSONL_TMP, [_entry(f'g{i}') for i in range(n)])
    annotated = load_annotated(JSONL_TMP, spec)
    assertion.eq(annotated.sizes, sizes)
    assertion.eq(sum(annotated.sizes), len(annotated))
    assertion.eq(annotated.categories, ['home'])


@delete_finally(JSONL_TMP)
def test_load_annotated_raise() -> None:
    """An entry with two references raises an error naming its group id."""
    write_annotated(JSONL_TMP, [_entry('g0'), _entry('bad', n_references=2)])
    try:
        load_annotated(JSONL_TMP, (1, 0, 1))
    except AnnotationError as ex:
        assertion.eq(ex.group_id, 'bad')
    else:
        raise AssertionError('Failed to raise an AnnotationError')

    write_annotated(JSONL_TMP, [_entry('g0', n_sources=7)])
    assertion.assert_(load_annotated, JSONL_TMP, (1, 0, 0), exception=AnnotationError)


@pytest.mark.parametrize('field,value', [('rating', None), ('rating', 'five'), ('text', None)])
@delete_finally(JSONL_TMP)
def test_load_annotated_bad_review(field: str, value: object) -> None:
    """A review with a missing or invalid field raises an error naming its group and line."""
    bad = _entry('bad').to_dict()
    if value is None:
        del bad['reviews'][3][field]
    else:
        bad['reviews'][3][field] = value
    with open(JSONL_TMP, 'w', encoding='utf-8') as f:
        f.write(json.dumps(_entry('g0').to_dict()) + '\n')
        f.write(json.dumps(bad) + '\n')

    try:
        load_annotated(JSONL_TMP, (1, 0, 1))
    except AnnotationError as ex:
        assertion.eq(ex.group_id, 'bad')
        assertion.contains(str(ex), 'line 2')
    else:
        raise AssertionError('Failed to raise an AnnotationError')

    with open(JSONL_TMP, 'w', encoding='utf-8') as f:
        f.write('{"category": "home"}\n')
    assertion.assert_(load_annotated, JSONL_TMP, exception=AnnotationError)


@delete_finally(JSONL_TMP, SPLITS_TMP)
def test_load_splits() -> None:
    """Test split assignment from a splits file and from stored labels."""
    write_annotated(JSONL_TMP, [_entry(f'g{i}') for i in range(3)])
    with open(SPLITS_TMP, 'w', encoding='utf-8') as f:
        json.dump({'train': ['g0'], 'valid': ['g2'], 'test': ['g1']}, f)

    annotated = load_annotated(JSONL_TMP, load_splits(SPLITS_TMP))
    assertion.eq([e.split for e in annotated], ['train', 'test', 'valid'])

    write_annotated(JSONL_TMP, annotated)
    assertion.eq(load_annotated(JSONL_TMP, None), annotated)

    assertion.assert_(load_annotated, JSONL_TMP, {'train': ['g0', 'g1']},
                      exception=AnnotationError)
    assertion.assert_(load_annotated, JSONL_TMP, {'train': ['g0', 'g1', 'g2'], 'test': ['g0']},
                      exception=AnnotationError)


def test_annotated_set() -> None:
    """Test :class:`fewSUM.corpus.AnnotatedSet`."""
    assertion.eq(TINY_ANNOTATED.sizes, (4, 1, 1))
    assertion.assert_(TINY_ANNOTATED.split, 'dev', exception=ValueError)
    for name in SPLITS:
        assertion.eq([e.split for e in TINY_ANNOTATED.split(name)],
                     len(TINY_ANNOTATED.split(name)) * [name])


def test_cross_domain_split() -> None:
    """Test :func:`fewSUM.corpus.cross_domain_split`."""
    entries = []
    for cat in ('home', 'toys', 'food'):
        for i, split in enumerate(['train', 'train', 'valid', 'test']):
            e = _entry(f'{cat}{i}', cat)
            entries.append(AnnotatedEntry(e.group_id, cat, e.sources, e.references, split))
    annotated = AnnotatedSet(tuple(entries))

    out = cross_domain_split(annotated, 'home', seed=0)
    assertion.eq(out.sizes, (2, 1, 1))
    for e in out.split('train') + out.split('valid'):
        assertion.ne(e.category, 'home')
    assertion.eq([e.group_id for e in out.split('test')], ['home3'])
    assertion.eq(cross_domain_split(annotated, 'home', seed=0), out)

    assertion.assert_(cross_domain_split, annotated, 'books', exception=ValueError)
