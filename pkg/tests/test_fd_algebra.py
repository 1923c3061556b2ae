import random
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fockcc.errors import CapacityError
from fockcc.fd_algebra import (
    ANN,
    CRE,
    NormalForm,
    apply_word,
    format_word,
    is_standard,
    jw_matrix,
    kron_matrix,
    matrix_entry,
    multiply_normal,
    normal_order,
    parse_word,
    standard_word,
    verify_groebner,
    word_matrix,
)


def letters(n):
    return [(k, p) for p in range(1, n + 1) for k in (ANN, CRE)]


def kron_word(word, n):
    M = np.eye(1 << n, dtype=np.int64)
    for letter in word:
        M = M @ kron_matrix(letter, n)
    return M


@pytest.mark.parametrize("n", [2, 3, 4])
def test_groebner_basis(n):
    rep = verify_groebner(n)
    assert rep.pairs
    assert rep.passed, rep.failures()[:3]


def test_groebner_capacity():
    with pytest.raises(CapacityError):
        verify_groebner(7)


def test_parse_and_format_word():
    w = parse_word("a3' a1 a2'")
    assert w == ((CRE, 3), (ANN, 1), (CRE, 2))
    assert parse_word(format_word(w)) == w
    with pytest.raises(ValueError, match="position 3"):
        parse_word("a1 b2")


def test_normal_order_examples():
    assert str(normal_order("a1 a1'")) == "1 - a{1}' a{1}"
    assert normal_order("a1 a1") == {}
    assert normal_order("a2 a1") == {(0, 0b11): Fraction(-1)}
    assert normal_order("a1 a2") == {(0, 0b11): Fraction(1)}
    assert normal_order("a1' a2'") == {(0b11, 0): Fraction(-1)}


def test_normal_form_parse_round_trip():
    nf = normal_order("a1 a2' a3 a1' a2")
    assert NormalForm.parse(str(nf)) == nf


@pytest.mark.parametrize("n", [1, 2, 3])
def test_standard_monomial_count(n):
    # the standard words span an algebra of dimension 2^(2n)
    std = {(B, I) for B in range(1 << n) for I in range(1 << n)}
    seen = set()
    for length in range(0, 2 * n + 1):
        for w in product(letters(n), repeat=min(length, 3)):
            seen.update(normal_order(w).keys())
    assert seen <= std
    # every standard monomial appears as the normal form of its own word
    for B, I in std:
        w = standard_word(B, I)
        assert is_standard(w)
        assert normal_order(w) == {(B, I): 1}
    assert len(std) == 4**n


@pytest.mark.parametrize("n", range(1, 7))
def test_anticommutators(n):
    N = 1 << n
    eye = np.eye(N, dtype=np.int64)
    for p, q in product(range(1, n + 1), repeat=2):
        ap, aq = jw_matrix((ANN, p), n).to_dense(int), jw_matrix((ANN, q), n).to_dense(int)
        cp, cq = jw_matrix((CRE, p), n).to_dense(int), jw_matrix((CRE, q), n).to_dense(int)
        assert np.array_equal(ap @ aq + aq @ ap, 0 * eye)
        assert np.array_equal(cp @ cq + cq @ cp, 0 * eye)
        assert np.array_equal(ap @ cq + cq @ ap, eye * (p == q))


@pytest.mark.parametrize("n", range(1, 6))
def test_jw_matches_kronecker(n):
    for letter in letters(n):
        assert np.array_equal(jw_matrix(letter, n).to_dense(int), kron_matrix(letter, n))


def test_matrix_entries_exhaustive_small():
    for n in range(1, 5):
        alphabet = letters(n)
        for length in range(0, 5 if n <= 3 else 4):
            for w in product(alphabet, repeat=length):
                K = kron_word(w, n)
                rows, cols = np.nonzero(K)
                for I, J in zip(rows, cols):
                    assert matrix_entry(w, int(I), int(J), n) == K[I, J]
                # a few zero entries as well
                for I, J in [(0, 0), ((1 << n) - 1, 0), (0, (1 << n) - 1)]:
                    assert matrix_entry(w, I, J, n) == K[I, J]


def test_matrix_entries_random_words():
    rng = random.Random(12)
    for _ in range(500):
        n = rng.randint(1, 5)
        w = tuple(rng.choice(letters(n)) for _ in range(rng.randint(0, 8)))
        K = kron_word(w, n)
        I, J = rng.randrange(1 << n), rng.randrange(1 << n)
        assert matrix_entry(w, I, J, n) == K[I, J]
        s, out = apply_word(w, J)
        if s:
            assert K[out, J] == s


@given(st.lists(st.sampled_from(letters(3)), max_size=6), st.lists(st.sampled_from(letters(3)), max_size=6))
def test_normal_product_is_associative_with_words(x, y):
    # normal form of a concatenation equals the product of normal forms
    assert multiply_normal(normal_order(x), normal_order(y)) == normal_order(tuple(x) + tuple(y))


@given(st.lists(st.sampled_from(letters(3)), max_size=6))
def test_normal_form_matrix_agrees(word):
    n = 3
    nf = normal_order(word)
    M = np.zeros((8, 8), dtype=object)
    for (B, I), c in nf.items():
        M = M + c * word_matrix(standard_word(B, I), n).to_dense()
    assert np.array_equal(M.astype(int), kron_word(word, n))
