import itertools

import pytest
from hypothesis import given, strategies as st

from germforge.words import (
    Block,
    Word,
    block_decompose,
    enumerate_words,
    format_word,
    parse_word,
    reduce_word,
)


def brute_force_normal_forms(k, l, max_blocks):
    """Normal forms in Z/k * Z/l, built from residues independently of the
    enumeration code: pick alternating bases and a nonzero residue per block."""
    def reps(n):
        out = []
        for r in range(1, n):
            e = r if r <= n / 2 else r - n
            out.append(e)
        return out

    words = set()
    for nb in range(1, max_blocks + 1):
        for first in "AB":
            bases = [("A" if (i % 2 == 0) == (first == "A") else "B") for i in range(nb)]
            choices = [reps(k) if b == "A" else reps(l) for b in bases]
            for exps in itertools.product(*choices):
                words.add(tuple(zip(bases, exps)))
    return words


def test_free_cancellation():
    assert reduce_word("AaB") == parse_word("B")
    assert format_word(reduce_word("AaB")) == "B^1"


def test_torsion_reduction_examples():
    assert reduce_word("AA", torsion=(2, 3)).is_empty
    assert block_decompose(reduce_word("BBBB", torsion=(2, 3))) == [Block("B", 1)]
    # brute force in Z/3: 4 = 1 mod 3
    assert (4 % 3) == 1


def test_tie_prefers_positive_exponent():
    assert block_decompose(reduce_word("aa", torsion=(4, 0))) == [Block("A", 2)]
    assert block_decompose(reduce_word("bbb", torsion=(0, 5))) == [Block("B", 2)]
    assert block_decompose(reduce_word("BBB", torsion=(0, 5))) == [Block("B", -2)]


def test_block_decompose_examples():
    assert block_decompose(reduce_word("AAbbb")) == [Block("A", 2), Block("B", -3)]
    assert block_decompose(Word(())) == []
    assert block_decompose(reduce_word("ABab")) == [Block("A", 1), Block("B", 1), Block("A", -1), Block("B", -1)]


def test_serialisation_round_trip():
    w = reduce_word("AAbbb")
    assert format_word(w) == "A^2.B^-3"
    assert parse_word("A^2.B^-3") == w
    assert format_word(Word(())) == "e"
    assert parse_word("e").is_empty


def test_enumeration_examples():
    got = [format_word(w) for w in enumerate_words((2, 3), 2, exclude_pure_powers=True)]
    assert got == ["A^1.B^1", "A^1.B^-1", "B^1.A^1", "B^-1.A^1"]
    assert list(enumerate_words((2, 2), 1, exclude_pure_powers=True)) == []
    stream = enumerate_words(None, 1)
    first = [format_word(next(stream)) for _ in range(6)]
    assert first == ["A^1", "A^-1", "B^1", "B^-1", "A^2", "A^-2"]


@pytest.mark.parametrize("torsion", [(2, 3), (3, 2), (4, 3)])
def test_enumeration_matches_brute_force(torsion):
    got = list(enumerate_words(torsion, 6))
    keys = [tuple((b.base, b.exponent) for b in block_decompose(w)) for w in got]
    assert len(keys) == len(set(keys))
    assert set(keys) == brute_force_normal_forms(*torsion, 6)
    for w in got:
        assert reduce_word(w.letters, torsion=torsion) == w
    lengths = [w.letter_length for w in got]
    assert lengths == sorted(lengths)


def test_free_enumeration_with_letter_bound():
    got = list(enumerate_words(None, 3, max_letters=4))
    assert all(len(block_decompose(w)) <= 3 for w in got)
    assert len(got) == len({format_word(w) for w in got})
    # count words of length <= 4 in the free group with <= 3 blocks by brute force
    brute = set()
    for n in range(1, 5):
        for letters in itertools.product("AaBb", repeat=n):
            w = reduce_word("".join(letters))
            if w.letter_length == n and len(block_decompose(w)) <= 3:
                brute.add(format_word(w))
    assert {format_word(w) for w in got} == brute


letters = st.text(alphabet="AaBb", max_size=30)
torsions = st.sampled_from([None, (2, 3), (3, 2), (4, 0), (0, 5), (5, 4)])


@given(letters, torsions)
def test_reduce_is_idempotent(s, tor):
    w = reduce_word(s, torsion=tor)
    assert reduce_word(w.letters, torsion=tor) == w


@given(letters, torsions)
def test_blocks_expand_back(s, tor):
    w = reduce_word(s, torsion=tor)
    blocks = block_decompose(w)
    expanded = []
    for b in blocks:
        expanded += [b.base if b.exponent > 0 else b.base.lower()] * abs(b.exponent)
    assert "".join(expanded) == w.letters
    for a, b in zip(blocks, blocks[1:]):
        assert a.base != b.base


@given(letters, torsions)
def test_reduced_word_has_no_cancelling_pairs(s, tor):
    w = reduce_word(s, torsion=tor).letters
    for x, y in zip(w, w[1:]):
        assert not (x != y and x.lower() == y.lower())


@given(letters)
def test_word_times_inverse_is_empty(s):
    w = reduce_word(s)
    assert reduce_word(w.letters + w.inverse().letters).is_empty
