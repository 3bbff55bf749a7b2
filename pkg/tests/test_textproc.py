"""Tests for :mod:`fewSUM.textproc`."""

import pytest
from hypothesis import given, strategies as st
from assertionlib import assertion
from nanoutils import delete_finally

from fewSUM.textproc import (
    SPECIALS, END_OF_WORD, BpeModel, TokenSeq, train_bpe, encode, decode, word_tokenize,
    sentence_split
)
from fewSUM.testing_utils import TINY_BPE, TINY_REVIEWS, TMP_DIR

BPE_TMP = TMP_DIR / '.bpe.model'
ALPHABET = 'abcdefghij .,!'
CORPUS = ['a bad cab', 'a bee hid a fig', 'chief jab, big hag!', 'i dig.']


def test_specials() -> None:
    """Test the fixed ids of the special symbols."""
    model = train_bpe(CORPUS, merges=5)
    assertion.eq((model.pad_id, model.bos_id, model.eos_id, model.unk_id), (0, 1, 2, 3))
    assertion.eq([model.symbol(i) for i in range(4)], list(SPECIALS))


def test_train_bpe() -> None:
    """Test :func:`fewSUM.textproc.train_bpe`."""
    model = train_bpe(['ab ab ab c'], merges=10)
    assertion.eq(model.merges, (('a', 'b'), ('ab', '</w>'), ('c', '</w>')))
    assertion.eq(model.merge_count, 3)
    assertion.len_eq(model, 4 + 4 + 3)

    tie = train_bpe(['ba ab'], merges=1)
    assertion.eq(tie.merges, (('a', '</w>'),))

    assertion.assert_(train_bpe, CORPUS, merges=-1, exception=ValueError)
    assertion.assert_(train_bpe, ['', ' '], merges=1, exception=ValueError)


def test_train_bpe_deterministic() -> None:
    """Training twice on the same corpus yields identical merge tables."""
    texts = [r.text for r in TINY_REVIEWS]
    assertion.eq(train_bpe(texts, 50), train_bpe(texts, 50))


@given(text=st.text(alphabet=ALPHABET, max_size=40))
def test_roundtrip(text: str) -> None:
    """Decoding an encoded text in the training alphabet reproduces it exactly."""
    model = train_bpe(CORPUS, merges=20)
    assertion.eq(decode(model, encode(model, text)), text)


@pytest.mark.parametrize('text', ['a</w>b', '</w> w> x<y', '</w></w>', 'tag</w> </w>tag'])
def test_roundtrip_marker(text: str) -> None:
    """Texts spelling the end-of-word marker survive a round trip."""
    corpus = ['a</w>b </w> x<y', 'tag </w></w> w> tag</w>', '</w> </w> </w>']
    model = train_bpe(corpus, merges=60)
    assertion(all(not (a + b).endswith(END_OF_WORD) or b.endswith(END_OF_WORD)
                  for a, b in model.merges))
    assertion.eq(decode(model, encode(model, text)), text)


def test_unknown() -> None:
    """Characters outside the training alphabet map to ``<unk>``."""
    model = train_bpe(CORPUS, merges=0)
    seq = encode(model, 'az')
    assertion.contains(seq.ids, model.unk_id)
    assertion.eq(decode(model, seq), 'a')


def test_decode_raise() -> None:
    """Test :func:`fewSUM.textproc.decode` with an out-of-vocabulary id."""
    seq = TokenSeq((5, len(TINY_BPE)))
    try:
        decode(TINY_BPE, seq)
    except ValueError as ex:
        assertion.contains(str(ex), 'position 1')
    else:
        raise AssertionError('Failed to raise a ValueError')


def test_token_seq() -> None:
    """Test :class:`fewSUM.textproc.TokenSeq`."""
    seq = TokenSeq((1, 5, 6, 0, 0))
    assertion.len_eq(seq, 5)
    assertion.eq(seq.length, 3)


@delete_finally(BPE_TMP)
def test_save_load() -> None:
    """Test :meth:`BpeModel.save` and :meth:`BpeModel.load`."""
    TINY_BPE.save(BPE_TMP)
    model = BpeModel.load(BPE_TMP)
    assertion.eq(model, TINY_BPE)
    text = TINY_REVIEWS[0].text
    assertion.eq(encode(model, text), encode(TINY_BPE, text))


@delete_finally(BPE_TMP)
def test_load_raise() -> None:
    """Test :meth:`BpeModel.load` with an invalid header."""
    with open(BPE_TMP, 'w', encoding='utf-8') as f:
        f.write('#something-else 1\n#specials []\n#alphabet []\n')
    assertion.assert_(BpeModel.load, BPE_TMP, exception=ValueError)


@pytest.mark.parametrize('text,ref', [
    ('The cat sat.', ['the', 'cat', 'sat']),
    ('"Great" -- really!', ['great', 'really']),
    ("It's fine", ["it's", 'fine']),
    ('', []),
])
def test_word_tokenize(text: str, ref: list) -> None:
    """Test :func:`fewSUM.textproc.word_tokenize`."""
    assertion.eq(word_tokenize(text), ref)


@pytest.mark.parametrize('text,ref', [
    ('A. B!', ['A.', 'B!']),
    ('One sentence', ['One sentence']),
    ('Why? Because.  Fine', ['Why?', 'Because.', 'Fine']),
    ('', []),
])
def test_sentence_split(text: str, ref: list) -> None:
    """Test :func:`fewSUM.textproc.sentence_split`."""
    assertion.eq(sentence_split(text), ref)
