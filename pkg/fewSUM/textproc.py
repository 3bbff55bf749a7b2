"""Subword (BPE), word and sentence tokenization.

Index
-----
.. currentmodule:: fewSUM.textproc
.. autosummary::
    BpeModel
    TokenSeq
    train_bpe
    encode
    decode
    word_tokenize
    sentence_split

API
---
.. autoclass:: BpeModel
    :members: save, load, pad_id, bos_id, eos_id, unk_id
.. autoclass:: TokenSeq
.. autofunction:: train_bpe
.. autofunction:: encode
.. autofunction:: decode
.. autofunction:: word_tokenize
.. autofunction:: sentence_split

"""

import re
import json
import string
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, List, Mapping, Tuple, Sequence, Dict

from nanoutils import PathType

from .logger import logger

__all__ = [
    'BpeModel', 'TokenSeq', 'SPECIALS', 'END_OF_WORD',
    'train_bpe', 'encode', 'decode', 'word_tokenize', 'sentence_split'
]

#: The special symbols, in id order: padding, begin/end of sequence and unknown.
SPECIALS: Tuple[str, ...] = ('<pad>', '<s>', '</s>', '<unk>')

#: The symbol closing every word.
END_OF_WORD = '</w>'

_FORMAT_VERSION = 1
_Pair = Tuple[str, str]


def _split_words(text: str) -> List[str]:
    """Split on single spaces; consecutive spaces produce empty words and survive a round trip."""
    return text.split(' ') if text else []


@dataclass(frozen=True)
class BpeModel:
    """An immutable byte-pair-encoding model.

    Attributes
    ----------
    merges : :class:`Tuple[Tuple[str, str], ...]<typing.Tuple>`
        The merge table in rank order.
    vocab : :class:`Mapping[str, int]<typing.Mapping>`
        A mapping from symbols to dense ids; :data:`SPECIALS` occupy ids 0 to 3.

    """

    merges: Tuple[_Pair, ...]
    vocab: Mapping[str, int]
    _ranks: Mapping[_Pair, int] = field(init=False, repr=False, compare=False)
    _symbols: Tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ranks = MappingProxyType({pair: i for i, pair in enumerate(self.merges)})
        symbols = [''] * len(self.vocab)
        for k, v in self.vocab.items():
            symbols[v] = k
        object.__setattr__(self, 'vocab', MappingProxyType(dict(self.vocab)))
        object.__setattr__(self, '_ranks', ranks)
        object.__setattr__(self, '_symbols', tuple(symbols))

    @property
    def merge_count(self) -> int:
        """:class:`int`: Get the number of merges."""
        return len(self.merges)

    @property
    def pad_id(self) -> int:
        """:class:`int`: Get the id of the padding symbol."""
        return self.vocab[SPECIALS[0]]

    @property
    def bos_id(self) -> int:
        """:class:`int`: Get the id of the begin-of-sequence symbol."""
        return self.vocab[SPECIALS[1]]

    @property
    def eos_id(self) -> int:
        """:class:`int`: Get the id of the end-of-sequence symbol."""
        return self.vocab[SPECIALS[2]]

    @property
    def unk_id(self) -> int:
        """:class:`int`: Get the id of the unknown symbol."""
        return self.vocab[SPECIALS[3]]

    def __len__(self) -> int:
        """Implement :func:`len(self)<len>`."""
        return len(self.vocab)

    def symbol(self, i: int) -> str:
        """Return the symbol associated with id **i**."""
        return self._symbols[i]

    def __hash__(self) -> int:
        """Implement :func:`hash(self)<hash>`."""
        return hash(self.merges)

    def save(self, filename: PathType) -> None:
        """Write this model to a plain-text file.

        The file consists of a three-line header (format version, specials and
        base alphabet) followed by one JSON-encoded merge pair per line, in rank order.

        """
        alphabet = [s for s in self._symbols[len(SPECIALS):] if len(s) == 1 or s == END_OF_WORD]
        with open(filename, 'w', encoding='utf-8') as f:
            f.write(f'#fewsum-bpe {_FORMAT_VERSION}\n')
            f.write(f'#specials {json.dumps(list(SPECIALS))}\n')
            f.write(f'#alphabet {json.dumps(alphabet, ensure_ascii=False)}\n')
            for pair in self.merges:
                f.write(json.dumps(list(pair), ensure_ascii=False) + '\n')

    @classmethod
    def load(cls, filename: PathType) -> 'BpeModel':
        """Construct a model from a file written by :meth:`BpeModel.save`."""
        with open(filename, 'r', encoding='utf-8') as f:
            lines = f.read().split('\n')

        header, specials, alphabet, *body = lines
        if header != f'#fewsum-bpe {_FORMAT_VERSION}':
            raise ValueError(f"{filename!r}: unsupported BPE header {header!r}")
        if json.loads(specials.split(' ', 1)[1]) != list(SPECIALS):
            raise ValueError(f"{filename!r}: special symbols do not match {SPECIALS!r}")

        base = json.loads(alphabet.split(' ', 1)[1])
        merges = tuple(tuple(json.loads(line)) for line in body if line)
        return _build_model(base, merges)  # type: ignore[arg-type]


@dataclass(frozen=True)
class TokenSeq:
    """A sequence of subword ids.

    Attributes
    ----------
    ids : :class:`Tuple[int, ...]<typing.Tuple>`
        The token ids.

    """

    ids: Tuple[int, ...]
    pad_id: int = 0

    @property
    def length(self) -> int:
        """:class:`int`: Get the number of tokens, excluding padding."""
        return sum(i != self.pad_id for i in self.ids)

    def __len__(self) -> int:
        """Implement :func:`len(self)<len>`."""
        return len(self.ids)


def _build_model(base: Sequence[str], merges: Sequence[_Pair]) -> BpeModel:
    symbols = list(SPECIALS) + list(base) + [a + b for a, b in merges]
    vocab: Dict[str, int] = {}
    for sym in symbols:
        vocab.setdefault(sym, len(vocab))
    return BpeModel(merges=tuple(merges), vocab=vocab)


def train_bpe(corpus: Iterable[str], merges: int) -> BpeModel:
    """Learn a BPE merge table from **corpus**.

    The most frequent adjacent symbol pair is merged repeatedly;
    ties are broken by picking the lexicographically smallest pair.
    Merging stops early when no adjacent pair remains.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.textproc import train_bpe

        >>> model = train_bpe(['ab ab ab c'], merges=1)
        >>> model.merges
        (('a', 'b'),)

    Parameters
    ----------
    corpus : :class:`Iterable[str]<typing.Iterable>`
        An iterable of raw texts.
    merges : :class:`int`
        The maximum number of merges.

    Returns
    -------
    :class:`BpeModel`
        The trained model.

    """
    if merges < 0:
        raise ValueError(f"'merges' must be larger than or equal to 0; observed value: {merges!r}")

    word_freq: Counter = Counter()
    for text in corpus:
        word_freq.update(w for w in _split_words(text) if w)
    if not word_freq:
        raise ValueError("'corpus' contains no words")

    alphabet = sorted({c for w in word_freq for c in w})
    base = alphabet + [END_OF_WORD]
    words: Dict[Tuple[str, ...], int] = {tuple(w) + (END_OF_WORD,): n for w, n in word_freq.items()}

    table: List[_Pair] = []
    for _ in range(merges):
        pairs: Counter = Counter()
        for symbols, n in words.items():
            for pair in zip(symbols, symbols[1:]):
                if not _spans_marker(pair):
                    pairs[pair] += n
        if not pairs:
            break

        best_count = max(pairs.values())
        best = min(p for p, n in pairs.items() if n == best_count)
        table.append(best)
        words = {_merge_pair(symbols, best): n for symbols, n in words.items()}

    logger.info(f'Trained BPE model: {len(table)} merges over {len(word_freq)} word types')
    return _build_model(base, table)


def _spans_marker(pair: _Pair) -> bool:
    """Return whether merging **pair** would spell the end-of-word marker from literal text."""
    a, b = pair
    return (a + b).endswith(END_OF_WORD) and not b.endswith(END_OF_WORD)


def _merge_pair(symbols: Tuple[str, ...], pair: _Pair) -> Tuple[str, ...]:
    a, b = pair
    ret: List[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == a and symbols[i + 1] == b:
            ret.append(a + b)
            i += 2
        else:
            ret.append(symbols[i])
            i += 1
    return tuple(ret)


@lru_cache(maxsize=2**16)
def _encode_word(model: BpeModel, word: str) -> Tuple[int, ...]:
    vocab = model.vocab
    symbols = tuple(c if c in vocab else SPECIALS[3] for c in word) + (END_OF_WORD,)
    ranks = model._ranks

    while len(symbols) > 1:
        candidates = [(ranks[p], p) for p in zip(symbols, symbols[1:]) if p in ranks]
        if not candidates:
            break
        _, pair = min(candidates)
        symbols = _merge_pair(symbols, pair)
    return tuple(vocab[s] for s in symbols)


def encode(model: BpeModel, text: str, add_bos_eos: bool = False) -> TokenSeq:
    """Encode **text** into subword ids.

    Merges are applied in rank order within each word;
    characters outside the training alphabet map to ``<unk>``.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.textproc import train_bpe, encode, decode

        >>> model = train_bpe(['the cat sat on the mat'], merges=10)
        >>> seq = encode(model, 'the cat', add_bos_eos=True)
        >>> seq.ids[0] == model.bos_id and seq.ids[-1] == model.eos_id
        True
        >>> decode(model, seq)
        'the cat'

    """
    ids: List[int] = []
    for word in _split_words(text):
        ids += _encode_word(model, word)
    if add_bos_eos:
        ids = [model.bos_id] + ids + [model.eos_id]
    return TokenSeq(tuple(ids), pad_id=model.pad_id)


def decode(model: BpeModel, seq: TokenSeq) -> str:
    """Decode **seq** back into text, dropping all special symbols.

    Raises
    ------
    :exc:`ValueError`
        Raised if **seq** contains an id outside the vocabulary;
        the message contains the position of the offending id.

    """
    n = len(model)
    n_specials = len(SPECIALS)
    pieces: List[str] = []
    for i, j in enumerate(seq.ids):
        if not 0 <= j < n:
            raise ValueError(f"token id {j!r} at position {i} is outside the vocabulary "
                             f"of size {n}")
        elif j < n_specials:
            continue
        sym = model.symbol(j)
        if sym.endswith(END_OF_WORD):
            sym = sym[:-len(END_OF_WORD)] + ' '
        pieces.append(sym)

    text = ''.join(pieces)
    return text[:-1] if text.endswith(' ') else text


def word_tokenize(text: str) -> List[str]:
    """Lowercase **text**, split it on whitespace and strip leading/trailing punctuation.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.textproc import word_tokenize

        >>> word_tokenize('The cat sat.')
        ['the', 'cat', 'sat']
        >>> word_tokenize('I, I!')
        ['i', 'i']

    """
    ret = (w.strip(string.punctuation) for w in text.lower().split())
    return [w for w in ret if w]


_SENTENCE_PATTERN = re.compile(r'(?<=[.!?])\s+')


def sentence_split(text: str) -> List[str]:
    """Split **text** after every run of ``.``, ``!`` or ``?`` followed by whitespace.

    Delimiters are kept; a run of terminators (*e.g.* an ellipsis) counts as one.

    Examples
    --------
    .. code:: python

        >>> from fewSUM.textproc import sentence_split

        >>> sentence_split('A. B!')
        ['A.', 'B!']
        >>> sentence_split('Hi... ok.')
        ['Hi...', 'ok.']

    """
    return [s for s in (i.strip() for i in _SENTENCE_PATTERN.split(text)) if s]
