"""Extractive and trivial summarization baselines: LexRank, clustroid, random review and lead.

Index
-----
.. currentmodule:: fewSUM.baselines
.. autosummary::
    BASELINES
    SimilarityGraph
    similarity_graph
    lexrank_centrality
    lexrank
    clustroid
    clustroid_index
    random_review
    lead
    run_baseline

API
---
.. autodata:: BASELINES
.. autoclass:: SimilarityGraph
.. autofunction:: similarity_graph
.. autofunction:: lexrank_centrality
.. autofunction:: lexrank
.. autofunction:: clustroid
.. autofunction:: clustroid_index
.. autofunction:: random_review
.. autofunction:: lead
.. autofunction:: run_baseline

"""

from dataclasses import dataclass
from typing import Sequence, Tuple, Optional, List, Union

import numpy as np
from sklearn.feature_extraction.text import TfidfVectorizer
from sklearn.metrics.pairwise import cosine_similarity

from .corpus import Review, ReviewGroup
from .metrics import rouge_l
from .textproc import word_tokenize, sentence_split

__all__ = [
    'BASELINES', 'SimilarityGraph', 'similarity_graph', 'lexrank_centrality', 'lexrank',
    'clustroid', 'clustroid_index', 'random_review', 'lead', 'run_baseline'
]

#: The names accepted by :func:`run_baseline`.
BASELINES: Tuple[str, ...] = ('lexrank', 'clustroid', 'random', 'lead')

_Reviews = Union[ReviewGroup, Sequence[Review]]


def _reviews(group: _Reviews) -> Tuple[Review, ...]:
    return tuple(group.reviews) if isinstance(group, ReviewGroup) else tuple(group)


@dataclass(frozen=True)
class SimilarityGraph:
    """Sentences connected by thresholded tf-idf cosine similarities.

    The diagonal of :attr:`weights` is zero.

    """

    sentences: Tuple[str, ...]
    weights: np.ndarray
    threshold: float = 0.1
    damping: float = 0.15

    def __len__(self) -> int:
        """Implement :func:`len(self)<len>`."""
        return len(self.sentences)


def similarity_graph(sentences: Sequence[str], threshold: float = 0.1,
                     damping: float = 0.15) -> SimilarityGraph:
    """Construct the sentence graph; similarities below **threshold** are dropped."""
    n = len(sentences)
    weights = np.zeros((n, n), dtype=np.float64)
    if n > 1:
        vectorizer = TfidfVectorizer(tokenizer=word_tokenize, lowercase=False, token_pattern=None)
        try:
            tfidf = vectorizer.fit_transform(sentences)
        except ValueError:  # Empty vocabulary
            pass
        else:
            weights = np.clip(cosine_similarity(tfidf), 0.0, 1.0)
            weights[weights < threshold] = 0.0
            np.fill_diagonal(weights, 0.0)
    return SimilarityGraph(tuple(sentences), weights, threshold, damping)


def lexrank_centrality(graph: SimilarityGraph, tol: float = 1e-6,
                       max_iter: int = 10_000) -> np.ndarray:
    """Compute the continuous LexRank centrality by power iteration.

    With damping :math:`d`, every step computes :math:`p' = d / n + (1 - d) M^T p`,
    :math:`M` being the row-normalized weight matrix; sentences without edges jump uniformly.
    Iteration stops once the L1 change drops below **tol**.

    Examples
    --------
    .. code:: python

        >>> import numpy as np
        >>> from fewSUM.baselines import SimilarityGraph, lexrank_centrality

        >>> weights = np.array([[0, 0.5, 0.5], [0.5, 0, 0], [0.5, 0, 0]])
        >>> p = lexrank_centrality(SimilarityGraph(('a', 'b', 'c'), weights))
        >>> int(p.argmax())
        0
        >>> round(float(p.sum()), 6)
        1.0

    """
    n = len(graph)
    if not n:
        return np.zeros(0)

    w = graph.weights
    row_sum = w.sum(axis=1, keepdims=True)
    transition = np.where(row_sum > 0, w / np.where(row_sum > 0, row_sum, 1), 1 / n)

    d = graph.damping
    p = np.full(n, 1 / n)
    for _ in range(max_iter):
        p_new = d / n + (1 - d) * transition.T @ p
        p_new /= p_new.sum()
        if np.abs(p_new - p).sum() < tol:
            return p_new
        p = p_new
    return p


def lexrank(group: _Reviews, budget_tokens: Optional[int] = None,
            threshold: float = 0.1, damping: float = 0.15, tol: float = 1e-6) -> str:
    """Select the most central sentences of **group** until **budget_tokens** would be exceeded.

    The budget defaults to the mean review length (in words) of the group.
    Selected sentences are emitted in source order.

    """
    reviews = _reviews(group)
    if not reviews:
        raise ValueError("'group' must not be empty")
    sentences = [s for r in reviews for s in sentence_split(r.text)]
    if not sentences:
        return ''

    if budget_tokens is None:
        budget_tokens = round(np.mean([len(word_tokenize(r.text)) for r in reviews]))

    graph = similarity_graph(sentences, threshold, damping)
    centrality = lexrank_centrality(graph, tol)
    order = np.argsort(-centrality, kind='stable')

    selected: List[int] = []
    used = 0
    for i in order:
        n = len(word_tokenize(sentences[i]))
        if used + n > budget_tokens:
            break
        selected.append(int(i))
        used += n
    return ' '.join(sentences[i] for i in sorted(selected))


def clustroid_index(group: _Reviews) -> int:
    """Return the index of the review with the highest mean ROUGE-L F1 against all others.

    Ties are broken by the lowest index.

    """
    reviews = _reviews(group)
    n = len(reviews)
    if n < 2:
        raise ValueError(f"the clustroid requires at least 2 reviews; observed number: {n}")

    words = [word_tokenize(r.text) for r in reviews]
    scores = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                scores[i, j] = rouge_l(words[i], words[j]).f1
    mean = scores.sum(axis=1) / (n - 1)
    return int(np.argmax(mean))


def clustroid(group: _Reviews) -> Review:
    """Return the clustroid review of **group**, see :func:`clustroid_index`."""
    return _reviews(group)[clustroid_index(group)]


def random_review(group: _Reviews, seed: int = 0) -> Review:
    """Return a uniformly drawn review of **group**."""
    reviews = _reviews(group)
    if not reviews:
        raise ValueError("'group' must not be empty")
    rng = np.random.default_rng(seed)
    return reviews[int(rng.integers(len(reviews)))]


def lead(group: _Reviews) -> str:
    """Concatenate the first sentence of every review; reviews without sentences are skipped.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.corpus import Review
        >>> from fewSUM.baselines import lead

        >>> lead([Review('1', 'p', 5, 'A. B.'), Review('2', 'p', 5, 'C!')])
        'A. C!'

    """
    reviews = _reviews(group)
    if not reviews:
        raise ValueError("'group' must not be empty")
    firsts = (sentence_split(r.text) for r in reviews)
    return ' '.join(s[0] for s in firsts if s)


def run_baseline(name: str, group: _Reviews, seed: int = 0) -> str:
    """Summarize **group** with the baseline **name**, one of :data:`BASELINES`."""
    if name == 'lexrank':
        return lexrank(group)
    elif name == 'clustroid':
        return clustroid(group).text
    elif name == 'random':
        return random_review(group, seed).text
    elif name == 'lead':
        return lead(group)
    raise ValueError(f"'name' expected one of {BASELINES!r}; observed value: {name!r}")
