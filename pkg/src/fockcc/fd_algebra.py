"""The Fermi-Dirac algebra as a rewriting system, plus two matrix pictures.

Letters are ``(kind, p)`` pairs with ``kind`` either ``ANN`` (``a_p``) or
``CRE`` (``a_p^dagger``).  The generator order is

    a_n > ... > a_1 > a_1^dagger > ... > a_n^dagger

and the anti-commutator relations are oriented so that their degree-lex
leading words are ``a_i a_j`` (i >= j), ``a_i^dagger a_j^dagger`` (i <= j)
and ``a_i a_j^dagger``.  Irreducible words are the standard monomials

    a_B^dagger a_I = a_{b_l}^dagger ... a_{b_1}^dagger a_{i_1} ... a_{i_m}

with ``b_1 < ... < b_l`` and ``i_1 < ... < i_m``.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .combinatorics import elements_of, format_mask, mask_of, parse_mask, popcount
from .errors import CapacityError

ANN = 0
CRE = 1

Letter = tuple[int, int]
Word = tuple[Letter, ...]

JW_MAX_ORBITALS = 12


@dataclass(frozen=True)
class OperatorLetter:
    kind: int
    orbital: int

    def __post_init__(self):
        if self.kind not in (ANN, CRE):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.orbital < 1:
            raise ValueError(f"orbital index must be positive, got {self.orbital}")

    def as_tuple(self) -> Letter:
        return (self.kind, self.orbital)

    def __str__(self) -> str:
        return f"a{self.orbital}" + ("'" if self.kind == CRE else "")


def annihilator(p: int) -> Letter:
    return (ANN, p)


def creator(p: int) -> Letter:
    return (CRE, p)


_LETTER_RE = re.compile(r"a(\d+)('?)")


def parse_word(text: str) -> Word:
    """Parse ``"a3' a1 a2'"`` (prime marks a creation operator)."""
    letters = []
    pos = 0
    for tok in text.split():
        m = _LETTER_RE.fullmatch(tok)
        if not m:
            raise ValueError(f"cannot parse operator {tok!r} at position {text.find(tok, pos)}")
        pos = text.find(tok, pos) + len(tok)
        letters.append((CRE if m.group(2) else ANN, int(m.group(1))))
    return tuple(letters)


def format_word(word: Sequence[Letter]) -> str:
    return " ".join(f"a{p}" + ("'" if k == CRE else "") for k, p in word) or "1"


def _rank(letter: Letter) -> int:
    """Position in the generator order; larger means bigger."""
    kind, p = letter
    return p if kind == ANN else -p


def word_order_key(word: Sequence[Letter]) -> tuple:
    """Degree-lexicographic sort key."""
    return (len(word), tuple(_rank(x) for x in word))


# --------------------------------------------------------------------------
# rewriting

def _reduce_pair(x: Letter, y: Letter) -> list[tuple[int, Word]] | None:
    """Rewrite a reducible adjacent pair; ``None`` if ``xy`` is irreducible."""
    (kx, px), (ky, py) = x, y
    if kx == ANN and ky == ANN and px >= py:
        return [] if px == py else [(-1, (y, x))]
    if kx == CRE and ky == CRE and px <= py:
        return [] if px == py else [(-1, (y, x))]
    if kx == ANN and ky == CRE:
        out = [(-1, (y, x))]
        if px == py:
            out.append((1, ()))
        return out
    return None


def _first_redex(word: Word) -> int:
    for i in range(len(word) - 1):
        if _reduce_pair(word[i], word[i + 1]) is not None:
            return i
    return -1


def is_standard(word: Sequence[Letter]) -> bool:
    return _first_redex(tuple(word)) < 0


def reduce_element(elem: Mapping[Word, Fraction | int]) -> dict[Word, Fraction]:
    """Normal form of a free-algebra element given as ``{word: coefficient}``.

    Uses leftmost reduction; every rule replaces a word by degree-lex smaller
    ones, so the loop terminates.
    """
    pending: dict[Word, Fraction] = defaultdict(Fraction)
    for w, c in elem.items():
        if c:
            pending[tuple(w)] += Fraction(c)
    done: dict[Word, Fraction] = defaultdict(Fraction)
    while pending:
        w, c = pending.popitem()
        if not c:
            continue
        i = _first_redex(w)
        if i < 0:
            done[w] += c
            continue
        for s, repl in _reduce_pair(w[i], w[i + 1]):
            pending[w[:i] + repl + w[i + 2:]] += s * c
    return {w: c for w, c in done.items() if c}


def standard_key(word: Word) -> tuple[int, int]:
    """``(B, I)`` bit patterns of a standard monomial."""
    B = mask_of(p for k, p in word if k == CRE)
    I = mask_of(p for k, p in word if k == ANN)
    return B, I


def standard_word(B: int, I: int) -> Word:
    return tuple((CRE, p) for p in reversed(elements_of(B))) + tuple((ANN, p) for p in elements_of(I))


class NormalForm(dict):
    """``{(B, I): coefficient}`` over standard monomials ``a_B^dagger a_I``."""

    def __str__(self) -> str:
        if not self:
            return "0"
        parts = []
        for (B, I), c in sorted(self.items(), key=lambda kv: (popcount(kv[0][0]) + popcount(kv[0][1]), kv[0])):
            if B == 0 and I == 0:
                mono = "1"
            else:
                mono = " ".join(
                    ([f"a{{{format_mask(B)}}}'"] if B else []) + ([f"a{{{format_mask(I)}}}"] if I else [])
                )
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            coef = "" if mag == 1 and mono != "1" else f"{mag}" + ("*" if mono != "1" else "")
            parts.append(f"{sign} {coef}{mono if mono != '1' or not coef else ''}".rstrip())
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def constant_term(self) -> Fraction:
        return self.get((0, 0), Fraction(0))

    @classmethod
    def parse(cls, text: str) -> "NormalForm":
        out = cls()
        for sign, body in re.findall(r"([+-]?)\s*([^+-]+)", text.replace(" - ", " -").replace(" + ", " +")):
            body = body.strip()
            coef = Fraction(1)
            if "*" in body:
                c, body = body.split("*", 1)
                coef = Fraction(c)
            elif re.fullmatch(r"\d+(/\d+)?", body):
                coef, body = Fraction(body), ""
            B = I = 0
            for m in re.finditer(r"a\{([\d,]+)\}('?)", body):
                if m.group(2):
                    B = parse_mask(m.group(1))
                else:
                    I = parse_mask(m.group(1))
            out[(B, I)] = out.get((B, I), 0) + (-coef if sign == "-" else coef)
        return cls({k: v for k, v in out.items() if v})


def to_normal_form(elem: Mapping[Word, Fraction]) -> NormalForm:
    nf = NormalForm()
    for w, c in elem.items():
        key = standard_key(w)
        nf[key] = nf.get(key, Fraction(0)) + c
    return NormalForm({k: v for k, v in nf.items() if v})


def normal_order(word: Sequence[Letter] | str) -> NormalForm:
    """Standard representation of a Fermi-Dirac word.

    >>> str(normal_order("a1 a1'"))
    "1 - a{1}' a{1}"
    """
    if isinstance(word, str):
        word = parse_word(word)
    return to_normal_form(reduce_element({tuple(word): Fraction(1)}))


def normal_form_element(nf: Mapping[tuple[int, int], Fraction]) -> dict[Word, Fraction]:
    return {standard_word(B, I): Fraction(c) for (B, I), c in nf.items() if c}


def multiply_elements(x: Mapping[Word, Fraction], y: Mapping[Word, Fraction]) -> dict[Word, Fraction]:
    out: dict[Word, Fraction] = defaultdict(Fraction)
    for wx, cx in x.items():
        for wy, cy in y.items():
            out[wx + wy] += cx * cy
    return {w: c for w, c in out.items() if c}


def multiply_normal(a: Mapping, b: Mapping) -> NormalForm:
    return to_normal_form(reduce_element(multiply_elements(normal_form_element(a), normal_form_element(b))))


# --------------------------------------------------------------------------
# Groebner verification

@dataclass(frozen=True)
class Relation:
    lead: Word
    tail: tuple[tuple[Fraction, Word], ...]  # monic: lead + sum(tail) = 0 in the algebra

    def element(self) -> dict[Word, Fraction]:
        out: dict[Word, Fraction] = defaultdict(Fraction)
        out[self.lead] += 1
        for c, w in self.tail:
            out[w] += c
        return dict(out)

    @property
    def family(self) -> str:
        (kx, _), (ky, _) = self.lead
        return {(ANN, ANN): "aa", (CRE, CRE): "cc", (ANN, CRE): "ac"}[(kx, ky)]


def relations(n: int) -> list[Relation]:
    """The anti-commutator relations with their leading words, made monic."""
    rels = []
    for i, j in product(range(1, n + 1), repeat=2):
        if i >= j:
            tail = () if i == j else ((Fraction(1), ((ANN, j), (ANN, i))),)
            rels.append(Relation(((ANN, i), (ANN, j)), tail))
        if i <= j:
            tail = () if i == j else ((Fraction(1), ((CRE, j), (CRE, i))),)
            rels.append(Relation(((CRE, i), (CRE, j)), tail))
        tail = [(Fraction(1), ((CRE, j), (ANN, i)))]
        if i == j:
            tail.append((Fraction(-1), ()))
        rels.append(Relation(((ANN, i), (CRE, j)), tuple(tail)))
    return rels


@dataclass
class CriticalPair:
    left: Relation
    right: Relation
    s_element: dict[Word, Fraction]
    residue: dict[Word, Fraction]

    @property
    def family(self) -> str:
        return f"({self.left.family},{self.right.family})"

    @property
    def overlap(self) -> Word:
        return self.left.lead + self.right.lead[1:]


@dataclass
class GroebnerReport:
    n: int
    pairs: list[CriticalPair] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(not p.residue for p in self.pairs)

    @property
    def families(self) -> dict[str, int]:
        counts: dict[str, int] = defaultdict(int)
        for p in self.pairs:
            counts[p.family] += 1
        return dict(counts)

    def failures(self) -> list[CriticalPair]:
        return [p for p in self.pairs if p.residue]


def verify_groebner(n: int) -> GroebnerReport:
    """Form every S-element of overlapping leading words and reduce it.

    Leading words all have length two, so overlaps are ``xyz`` with
    ``l(f) = xy`` and ``l(f') = yz``; the S-element is ``f z - x f'``.
    """
    if not 1 <= n <= 6:
        raise CapacityError(f"Groebner verification supports 1 <= n <= 6, got {n}")
    rels = relations(n)
    by_first: dict[Letter, list[Relation]] = defaultdict(list)
    for r in rels:
        by_first[r.lead[0]].append(r)
    report = GroebnerReport(n)
    for f in rels:
        x, y = f.lead
        for g in by_first[y]:
            z = g.lead[1]
            s: dict[Word, Fraction] = defaultdict(Fraction)
            for w, c in f.element().items():
                s[w + (z,)] += c
            for w, c in g.element().items():
                s[(x,) + w] -= c
            s = {w: c for w, c in s.items() if c}
            report.pairs.append(CriticalPair(f, g, s, reduce_element(s)))
    return report


# --------------------------------------------------------------------------
# matrices

@dataclass(frozen=True)
class SparseOperatorMatrix:
    """``2**n`` square matrix on the revlex basis, stored as sorted triples."""

    dim: int
    triples: tuple[tuple[int, int, Fraction | int], ...]

    @classmethod
    def from_dict(cls, dim: int, entries: Mapping[tuple[int, int], Fraction | int]) -> "SparseOperatorMatrix":
        return cls(dim, tuple(sorted((r, c, v) for (r, c), v in entries.items() if v)))

    def as_dict(self) -> dict[tuple[int, int], Fraction | int]:
        return {(r, c): v for r, c, v in self.triples}

    def __matmul__(self, other: "SparseOperatorMatrix") -> "SparseOperatorMatrix":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        rows: dict[int, list[tuple[int, Fraction | int]]] = defaultdict(list)
        for r, c, v in other.triples:
            rows[r].append((c, v))
        out: dict[tuple[int, int], Fraction | int] = defaultdict(int)
        for r, k, v in self.triples:
            for c, w in rows.get(k, ()):
                out[(r, c)] += v * w
        return SparseOperatorMatrix.from_dict(self.dim, out)

    def __add__(self, other: "SparseOperatorMatrix") -> "SparseOperatorMatrix":
        out: dict[tuple[int, int], Fraction | int] = defaultdict(int, self.as_dict())
        for r, c, v in other.triples:
            out[(r, c)] += v
        return SparseOperatorMatrix.from_dict(self.dim, out)

    def scale(self, s) -> "SparseOperatorMatrix":
        return SparseOperatorMatrix(self.dim, tuple((r, c, s * v) for r, c, v in self.triples if s * v))

    def to_dense(self, dtype=object) -> np.ndarray:
        M = np.zeros((self.dim, self.dim), dtype=dtype)
        for r, c, v in self.triples:
            M[r, c] = v
        return M

    @classmethod
    def identity(cls, dim: int) -> "SparseOperatorMatrix":
        return cls(dim, tuple((r, r, 1) for r in range(dim)))


def _sign_before(state: int, p: int) -> int:
    """(-1) to the number of occupied orbitals below ``p``."""
    return -1 if popcount(state & ((1 << (p - 1)) - 1)) % 2 else 1


def apply_letter(letter: Letter, state: int) -> tuple[int, int]:
    """Act on the basis state ``e_state``; returns ``(sign, new_state)`` or ``(0, state)``."""
    kind, p = letter
    bit = 1 << (p - 1)
    if kind == CRE:
        if state & bit:
            return 0, state
        return _sign_before(state, p), state | bit
    if not state & bit:
        return 0, state
    return _sign_before(state, p), state & ~bit


def apply_word(word: Sequence[Letter], state: int) -> tuple[int, int]:
    """Apply a word right-to-left to ``e_state``."""
    sign = 1
    for letter in reversed(word):
        s, state = apply_letter(letter, state)
        if not s:
            return 0, state
        sign *= s
    return sign, state


@lru_cache(maxsize=None)
def jw_matrix(letter: Letter | OperatorLetter, n: int) -> SparseOperatorMatrix:
    """Jordan-Wigner matrix of a single creation/annihilation operator.

    Equal to ``sigma_z x ... x sigma_z x a(^dagger) x I x ... x I`` with the
    first tensor factor describing orbital 1, re-indexed to the revlex basis.
    """
    if isinstance(letter, OperatorLetter):
        letter = letter.as_tuple()
    if n > JW_MAX_ORBITALS:
        raise CapacityError(f"Jordan-Wigner matrices are capped at n={JW_MAX_ORBITALS}")
    if not 1 <= letter[1] <= n:
        raise ValueError(f"orbital {letter[1]} outside [1, {n}]")
    entries = {}
    for col in range(1 << n):
        s, row = apply_letter(letter, col)
        if s:
            entries[(row, col)] = s
    return SparseOperatorMatrix.from_dict(1 << n, entries)


def word_matrix(word: Sequence[Letter], n: int) -> SparseOperatorMatrix:
    M = SparseOperatorMatrix.identity(1 << n)
    for letter in word:
        M = M @ jw_matrix(letter, n)
    return M


def vacuum_expectation(word: Sequence[Letter]) -> int:
    """Constant term of the standard representation of ``word``.

    Sum over complete matchings pairing each ``a_p`` with a later ``a_p^dagger``,
    each weighted by ``(-1)^{#crossings}``.
    """
    return _full_contractions(tuple(word))


@lru_cache(maxsize=1 << 16)
def _full_contractions(word: Word) -> int:
    if not word:
        return 1
    if len(word) % 2:
        return 0
    (k0, p0), rest = word[0], word[1:]
    if k0 == CRE:
        return 0
    total = 0
    for pos, (k, p) in enumerate(rest):
        if k == CRE and p == p0:
            # pos letters strictly between the matched pair
            sub = _full_contractions(rest[:pos] + rest[pos + 1:])
            if sub:
                total += (-1 if pos % 2 else 1) * sub
    return total


def matrix_entry(word: Sequence[Letter] | str, I: int, J: int, n: int | None = None) -> Fraction:
    """``e_I^dagger word e_J`` from the fully contracted standard representation."""
    if isinstance(word, str):
        word = parse_word(word)
    bra = tuple((ANN, p) for p in reversed(elements_of(I)))
    ket = tuple((CRE, p) for p in elements_of(J))
    return Fraction(vacuum_expectation(bra + tuple(word) + ket))


def kron_matrix(letter: Letter, n: int) -> np.ndarray:
    """Dense matrix built literally as a Kronecker product, then put in revlex order.

    Independent of ``jw_matrix``: used as its oracle.
    """
    sz = np.array([[1, 0], [0, -1]], dtype=np.int64)
    a = np.array([[0, 1], [0, 0]], dtype=np.int64)
    eye = np.eye(2, dtype=np.int64)
    kind, p = letter
    op = a if kind == ANN else a.T
    M = np.ones((1, 1), dtype=np.int64)
    for q in range(1, n + 1):
        M = np.kron(M, sz if q < p else (op if q == p else eye))
    # kron index has orbital 1 as its most significant bit; revlex has it least significant
    perm = np.array([int(format(r, f"0{n}b")[::-1], 2) if n else 0 for r in range(1 << n)])
    out = np.empty_like(M)
    out[np.ix_(perm, perm)] = M
    return out
