"""Tests for :mod:`fewSUM.oracle`."""

from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from assertionlib import assertion

from fewSUM.corpus import Review, LooInstance, leave_one_out
from fewSUM.dtype import PROPERTY_NAMES
from fewSUM.oracle import (
    PropertyVector, PronounLexicon, DEFAULT_LEXICON, content_coverage, pov_distribution,
    rating_deviation, length_deviation, compute_properties, summary_properties
)
from fewSUM.testing_utils import TINY_GROUPS

POV_WORDS = st.lists(
    st.sampled_from(['i', 'we', 'you', 'your', 'they', 'it', 'the', 'soap', 'smells', 'nice']),
    max_size=12
)


def _review(text: str, rating: int = 5, i: int = 0) -> Review:
    return Review(f'r{i}', 'p', rating, text)


@pytest.mark.parametrize('target,sources,ref', [
    ('a b', ['a c', 'd b'], (2 / 3, 0.0, 2 / 3)),
    ('the cat sat', ['the cat sat'], (1.0, 1.0, 1.0)),
    ('x y', ['a b', 'c d'], (0.0, 0.0, 0.0)),
    ('', ['a b'], (0.0, 0.0, 0.0)),
    ('a b', ['a b', 'a b'], (2 / 3, 0.5, 2 / 3)),
])
def test_content_coverage(target: str, sources: list, ref: tuple) -> None:
    """Test :func:`fewSUM.oracle.content_coverage`."""
    src = [_review(t, i=i) for i, t in enumerate(sources, 1)]
    for i, j in zip(content_coverage(_review(target), src), ref):
        assertion.isclose(i, j)


def test_content_coverage_raise() -> None:
    """Test :func:`fewSUM.oracle.content_coverage` without sources."""
    assertion.assert_(content_coverage, _review('a'), [], exception=ValueError)


@pytest.mark.parametrize('text,ref', [
    ('I bought this as a gift for my husband.', (1.0, 0.0, 0.0, 0.0)),
    ('Very nice, not too overpowering.', (0.0, 0.0, 0.0, 1.0)),
    ('You and I', (0.5, 0.5, 0.0, 0.0)),
    ('They love it and so do we', (0.25, 0.0, 0.75, 0.0)),
    ('', (0.0, 0.0, 0.0, 1.0)),
    ('YOUR kids will like THEIR new toy', (0.0, 0.5, 0.5, 0.0)),
])
def test_pov_distribution(text: str, ref: tuple) -> None:
    """Test :func:`fewSUM.oracle.pov_distribution`."""
    assertion.eq(pov_distribution(text), ref)


@given(words=POV_WORDS)
def test_pov_simplex(words: list) -> None:
    """The point-of-view block always lies on the 4-simplex."""
    pov = np.array(pov_distribution(' '.join(words)))
    assertion((pov >= 0).all())
    assertion.isclose(pov.sum(), 1.0, abs_tol=1e-6)
    if any(w in DEFAULT_LEXICON.first | DEFAULT_LEXICON.second | DEFAULT_LEXICON.third
           for w in words):
        assertion.eq(pov[3], 0.0)


def test_pronoun_lexicon_raise() -> None:
    """Test :class:`fewSUM.oracle.PronounLexicon` with invalid word sets."""
    first = frozenset({'i'})
    assertion.assert_(PronounLexicon, frozenset({'I'}), frozenset(), frozenset(),
                      exception=ValueError)
    assertion.assert_(PronounLexicon, first, first, frozenset(), exception=ValueError)
    assertion.assert_(PronounLexicon, first, frozenset(), first, exception=ValueError)

    custom = PronounLexicon(frozenset({'ik'}), frozenset({'jij'}), frozenset({'zij'}))
    assertion.eq(pov_distribution('ik en jij', custom), (0.5, 0.5, 0.0, 0.0))


@pytest.mark.parametrize('target,sources,ref', [
    (4, [4, 4, 4], 0.0),
    (5, [4, 5], 0.5),
    (1, [5, 5, 5, 5], -4.0),
    (3, [1], 2.0),
])
def test_rating_deviation(target: int, sources: list, ref: float) -> None:
    """Test :func:`fewSUM.oracle.rating_deviation`."""
    assertion.isclose(rating_deviation(target, sources), ref)


@pytest.mark.parametrize('target,sources,ref', [
    ('a b c', ['d e f', 'g h i'], 0.0),
    (' '.join(30 * ['w']), [' '.join(10 * ['w']), ' '.join(30 * ['w'])], 10.0),
    ('', ['a b', 'c d e f'], -3.0),
])
def test_length_deviation(target: str, sources: list, ref: float) -> None:
    """Test :func:`fewSUM.oracle.length_deviation`."""
    src = [_review(t, i=i) for i, t in enumerate(sources, 1)]
    assertion.isclose(length_deviation(_review(target), src), ref)


def test_deviation_raise() -> None:
    """Test the deviation functions without sources."""
    assertion.assert_(rating_deviation, 3, [], exception=ValueError)
    assertion.assert_(length_deviation, _review('a'), [], exception=ValueError)


def test_compute_properties() -> None:
    """Test :func:`fewSUM.oracle.compute_properties`."""
    target = Review('t', 'p', 4, 'I like it')
    inst = LooInstance(target, (Review('s', 'p', 4, 'I like it'),), 'g0')
    vec = compute_properties(inst)
    ref = PropertyVector(1.0, 1.0, 1.0, 0.5, 0.0, 0.5, 0.0, 0.0, 0.0)
    np.testing.assert_allclose(vec.to_array(), ref.to_array())

    words = ' '.join(30 * ['word'])
    inst = LooInstance(Review('t', 'p', 5, words),
                       (Review('s1', 'p', 4, ' '.join(20 * ['word'])),
                        Review('s2', 'p', 5, ' '.join(20 * ['word']))), 'g0')
    vec = compute_properties(inst, max_words=70)
    assertion.isclose(vec.length_dev, 10 / 70)
    assertion.isclose(vec.rating_dev, 0.5)
    assertion.eq(vec.pov, (0.0, 0.0, 0.0, 1.0))

    vec_summary = compute_properties(inst, summary_mode=True)
    assertion.eq(vec_summary.rating_dev, 0.0)

    assertion.assert_(compute_properties, inst, max_words=0, exception=ValueError)


def test_compute_properties_layout() -> None:
    """Every instance of the synthetic corpus yields a valid length-9 vector."""
    for inst in leave_one_out(TINY_GROUPS[0]):
        ar = compute_properties(inst).to_array()
        assertion.eq(ar.shape, (len(PROPERTY_NAMES),))
        assertion.isclose(ar[3:7].sum(), 1.0, abs_tol=1e-6)
        assertion((ar[:3] >= 0).all() and (ar[:3] <= 1).all())
        assertion.le(-4.0, ar[7])
        assertion.le(ar[7], 4.0)


def test_source_permutation() -> None:
    """Permuting the sources leaves the unigram coverage and the deviations unchanged."""
    inst = leave_one_out(TINY_GROUPS[1])[0]
    ref = compute_properties(inst)
    for sources in permutations(inst.sources[:4]):
        sub = LooInstance(inst.target, sources + inst.sources[4:], inst.group_id)
        vec = compute_properties(sub)
        assertion.isclose(vec.rouge1_f1, ref.rouge1_f1)
        assertion.isclose(vec.rating_dev, ref.rating_dev)
        assertion.isclose(vec.length_dev, ref.length_dev)
        assertion.eq(vec.pov, ref.pov)


def test_summary_properties() -> None:
    """Test :func:`fewSUM.oracle.summary_properties`."""
    sources = [_review('a c', i=1), _review('d b', i=2)]
    vec = summary_properties('a b', sources)
    assertion.isclose(vec.rouge1_f1, 2 / 3)
    assertion.eq(vec.rating_dev, 0.0)
    assertion.isclose(vec.length_dev, 0.0)

    vec = summary_properties('a b', sources, rating_dev=-1.5)
    assertion.eq(vec.rating_dev, -1.5)
    assertion.assert_(summary_properties, 'a', sources, max_words=-1, exception=ValueError)


def test_property_vector() -> None:
    """Test :class:`fewSUM.oracle.PropertyVector`."""
    vec = PropertyVector(0.5, 0.2, 0.4, 0.25, 0.25, 0.5, 0.0, -1.0, 0.3)
    assertion.eq(PropertyVector.from_array(vec.to_array()), vec)
    assertion.eq(vec.to_array().tolist()[-2:], [-1.0, 0.3])

    assertion.assert_(PropertyVector, 1.5, 0, 0, 0, 0, 0, 1, 0, 0, exception=ValueError)
    assertion.assert_(PropertyVector, 0, 0, 0, 0.5, 0, 0, 0, 0, 0, exception=ValueError)
    assertion.assert_(PropertyVector, 0, 0, 0, 0, 0, 0, 1, np.nan, 0, exception=ValueError)
    assertion.assert_(PropertyVector.from_array, np.zeros(8), exception=ValueError)
