"""Free-group word reduction: normal form, order independence, inverses."""

import itertools

import numpy as np
import pytest

from tetherkit import _kernels
from tetherkit.homotopy import Letter, Word, concat_words, inverse_word, reduce_word


def L(code):
    return Letter(f"z{abs(code)}", 1 if code > 0 else -1)


def W(*codes):
    return Word(tuple(L(c) for c in codes))


def test_reduce_examples():
    assert reduce_word(W()).letters == ()
    got = reduce_word(W(1, 2, -2, 3))
    assert got.letters == W(1, 3).letters
    assert got.reduced


def test_reduce_cancels_nested():
    assert reduce_word(W(1, 2, -2, -1)).letters == ()
    assert reduce_word(W(1, -1, 1, -1)).letters == ()
    assert reduce_word(W(1, 1, -1, -1)).letters == ()


def all_reductions(codes):
    """Brute force every cancellation order; returns the set of fixed points."""
    out = set()
    stack = [tuple(codes)]
    seen = set()
    while stack:
        word = stack.pop()
        if word in seen:
            continue
        seen.add(word)
        cancels = [
            i for i in range(len(word) - 1) if word[i] == -word[i + 1]
        ]
        if not cancels:
            out.add(word)
            continue
        for i in cancels:
            stack.append(word[:i] + word[i + 2 :])
    return out


@pytest.mark.parametrize("length", range(0, 6))
def test_all_cancellation_orders_agree_up_to_length_5(length):
    alphabet = [1, -1, 2, -2, 3, -3]
    for codes in itertools.product(alphabet, repeat=length):
        fixed = all_reductions(codes)
        assert len(fixed) == 1
        want = next(iter(fixed))
        got = tuple(
            (1 if l.sign > 0 else -1) * int(l.curve[1:]) for l in reduce_word(W(*codes)).letters
        )
        assert got == want


def test_exhaustive_stack_reduction_up_to_length_8():
    # kernel enumerates all words over 3 letters and compares left-to-right
    # reduction with the reversed-inverse reduction and with re-reduction
    assert _kernels.word_reduction_check(8, 3) == 0


def test_random_long_words_idempotent_and_direction_independent():
    rng = np.random.default_rng(21)
    alphabet = [1, -1, 2, -2, 3, -3]
    for _ in range(300):
        codes = rng.choice(alphabet, size=50)
        w = W(*codes)
        once = reduce_word(w)
        assert reduce_word(once).letters == once.letters
        # reducing the formal inverse gives the inverse of the reduction
        inv = reduce_word(inverse_word(w))
        assert inv.letters == inverse_word(once).letters


def test_concat_words_reduces_across_the_seam():
    a = W(1, 2)
    b = W(-2, -1, 3)
    assert concat_words(a, b).letters == W(3).letters


def test_word_serialization():
    w = Word((Letter("z3", 1), Letter("r2.s5", -1)))
    assert str(w) == "z3+ r2.s5-"
    assert str(Word(())) == "e"
