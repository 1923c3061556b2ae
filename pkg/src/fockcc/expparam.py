"""The exponential parameterization ``psi = exp(T(t)) e_[d]`` and its inverse.

Amplitude ``t_{I,B}`` multiplies the operator word

    a_{b_1}^dagger ... a_{b_l}^dagger a_{i_m} ... a_{i_1}

(creations ascending, annihilations descending).  With this convention every
coordinate is a signed sum over even set partitions of ``S = J xor [d]``:

    psi_J = eps(J) * sum_pi sign(pi) * prod_{beta in pi} t_{beta cap [d], beta minus [d]}

where an odd ``S`` receives the formal element 0 as its smallest particle,
``sign`` is the hole/particle concatenation sign, and

    eps(J) = (-1)^(sum_r (h_r - r) + l * (d - m))

with ``H = [d] minus J = {h_1 < ... < h_m}`` and ``l = |J minus [d]|``.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .combinatorics import (
    SENTINEL,
    block_level,
    block_masks,
    elements_of,
    first_n,
    partition_sign,
    popcount,
)
from .errors import CapacityError, ShapeError
from .fd_algebra import ANN, CRE, JW_MAX_ORBITALS, apply_word
from .multipoly import SparsePolynomial, c_var, psi_var, t_var

MASTER_MAX_D = 5
SYMBOLIC_MAX_ORBITALS = 10

Level = tuple[int, int]


def full_grid(d: int, n: int) -> frozenset[Level]:
    return frozenset((m, l) for m in range(d + 1) for l in range(n - d + 1) if m or l)


def _levels(sigma: Iterable[Level] | None, d: int, n: int) -> frozenset[Level]:
    return full_grid(d, n) if sigma is None else frozenset(tuple(p) for p in sigma)


def cluster_variables(d: int, n: int, sigma: Iterable[Level] | None = None) -> list[tuple]:
    """The ``t_{I,B}`` variables with level in ``sigma``, grouped by level."""
    levels = _levels(sigma, d, n)
    D = first_n(d)
    out = []
    for I in range(D + 1):
        for B in range(0, 1 << n, 1 << d):
            lev = (popcount(I), popcount(B))
            if lev != (0, 0) and lev in levels:
                out.append(t_var(I, B))
    return sorted(out, key=lambda v: ((popcount(v[1]), popcount(v[2])), v[1], v[2]))


def operator_word(I: int, B: int) -> tuple:
    """Word multiplied by ``t_{I,B}``."""
    return tuple((CRE, b) for b in elements_of(B)) + tuple((ANN, i) for i in reversed(elements_of(I)))


def coordinate_sign(J: int, d: int) -> int:
    """``eps(J)`` from the module docstring."""
    D = first_n(d)
    H = elements_of(D & ~J)
    ell = popcount(J & ~D)
    e = sum(h - r for r, h in enumerate(H, 1)) + ell * (d - len(H))
    return -1 if e % 2 else 1


def support_elements(J: int, d: int) -> tuple[int, ...]:
    """``J xor [d]`` ascending, with the formal element prepended when odd."""
    elems = tuple(elements_of(J ^ first_n(d)))
    if len(elems) % 2:
        elems = (SENTINEL,) + elems
    return elems


def _restricted_partitions(elems: tuple[int, ...], d: int, levels: frozenset | None) -> Iterator[list[tuple[int, ...]]]:
    """Even partitions whose every block has a level in ``levels``."""
    from itertools import combinations

    if not elems:
        yield []
        return
    first, rest = elems[0], elems[1:]
    for k in range(1, len(rest) + 1, 2):
        for comb_ in combinations(rest, k):
            block = (first,) + comb_
            if levels is not None and block_level(block, d) not in levels:
                continue
            chosen = set(comb_)
            remaining = tuple(e for e in rest if e not in chosen)
            for tail in _restricted_partitions(remaining, d, levels):
                yield [block] + tail


def psi_terms(J: int, d: int, sigma: Iterable[Level] | None = None) -> list[tuple[int, list[tuple[int, int]]]]:
    """``[(sign, [(I, B), ...]), ...]`` for coordinate ``psi_J``."""
    if J == first_n(d):
        return [(1, [])]
    levels = None if sigma is None else frozenset(tuple(p) for p in sigma)
    eps = coordinate_sign(J, d)
    out = []
    for blocks in _restricted_partitions(support_elements(J, d), d, levels):
        out.append((eps * partition_sign(blocks, d), [block_masks(b, d) for b in blocks]))
    return out


def _poly_from_terms(terms) -> SparsePolynomial:
    acc: dict = {}
    for sign, factors in terms:
        exps: dict = {}
        for I, B in factors:
            v = t_var(I, B)
            exps[v] = exps.get(v, 0) + 1
        mono = tuple(sorted(exps.items()))
        acc[mono] = acc.get(mono, 0) + Fraction(sign)
    return SparsePolynomial(acc)


def psi_coordinate(J: int, d: int, n: int, sigma: Iterable[Level] | None = None) -> SparsePolynomial:
    """Coordinate ``psi_J(t)``; ``sigma`` drops every variable outside the level set."""
    if J >> n:
        raise ValueError(f"J={J:#b} is not a subset of [{n}]")
    return _poly_from_terms(psi_terms(J, d, sigma))


def master_polynomial(d: int) -> SparsePolynomial:
    """``psi_{[2d] minus [d]}`` for ``n = 2d``, the template for every coordinate.

    >>> len(master_polynomial(2))
    4
    """
    if not 1 <= d <= MASTER_MAX_D:
        raise CapacityError(f"master polynomials are provided for 1 <= d <= {MASTER_MAX_D}")
    return psi_coordinate(first_n(2 * d) & ~first_n(d), d, 2 * d)


class ParamMap(list):
    """``2**n`` coordinate polynomials indexed by revlex rank."""

    def __init__(self, polys: Sequence[SparsePolynomial], d: int, n: int, sigma: frozenset):
        super().__init__(polys)
        self.d, self.n, self.sigma = d, n, sigma

    @property
    def variables(self) -> list[tuple]:
        return cluster_variables(self.d, self.n, self.sigma)

    def to_json(self) -> dict:
        from .combinatorics import format_mask

        return {format_mask(J): p.to_json() for J, p in enumerate(self)}


def forward_map(d: int, n: int, sigma: Iterable[Level] | None = None) -> ParamMap:
    if n > SYMBOLIC_MAX_ORBITALS:
        raise CapacityError(f"symbolic parameterization is capped at n={SYMBOLIC_MAX_ORBITALS}")
    if not 0 <= d <= n:
        raise ValueError(f"need 0 <= d <= n, got d={d}, n={n}")
    levels = _levels(sigma, d, n)
    return ParamMap([psi_coordinate(J, d, n, levels) for J in range(1 << n)], d, n, levels)


# --------------------------------------------------------------------------
# numeric path (oracle)

def _tvalue_items(tvals: Mapping) -> Iterator[tuple[int, int, complex]]:
    for key, val in tvals.items():
        if len(key) == 3:
            _, I, B = key
        else:
            I, B = key
        yield I, B, val


def cluster_matrix(tvals: Mapping, d: int, n: int, sigma: Iterable[Level] | None = None) -> sp.csr_matrix:
    """Sparse ``T(t)`` on the revlex basis, assembled letter by letter."""
    if n > JW_MAX_ORBITALS:
        raise CapacityError(f"numeric parameterization is capped at n={JW_MAX_ORBITALS}")
    levels = _levels(sigma, d, n)
    rows, cols, vals = [], [], []
    for I, B, v in _tvalue_items(tvals):
        if (popcount(I), popcount(B)) not in levels or v == 0:
            continue
        word = operator_word(I, B)
        # only states containing I and missing B survive
        for col in range(1 << n):
            if col & I != I or col & B:
                continue
            s, row = apply_word(word, col)
            if s:
                rows.append(row)
                cols.append(col)
                vals.append(s * v)
    N = 1 << n
    return sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(N, N))


def symbolic_cluster_matrix(d: int, n: int, sigma: Iterable[Level] | None = None) -> dict[tuple[int, int], SparsePolynomial]:
    """``{(row, col): polynomial}`` entries of ``T(t)``."""
    out: dict = {}
    for v in cluster_variables(d, n, sigma):
        _, I, B = v
        word = operator_word(I, B)
        for col in range(1 << n):
            s, row = apply_word(word, col)
            if s:
                out[(row, col)] = out.get((row, col), SparsePolynomial()) + SparsePolynomial.monomial([v], s)
    return out


def numeric_forward(tvals: Mapping, d: int, n: int, sigma: Iterable[Level] | None = None) -> np.ndarray:
    """``exp(T(t)) e_[d]`` by the terminating series ``sum_k T^k / k!``."""
    T = cluster_matrix(tvals, d, n, sigma)
    v = np.zeros(1 << n, dtype=complex)
    v[first_n(d)] = 1
    out = v.copy()
    for k in range(1, n + 1):
        v = T @ v / k
        if not v.any():
            break
        out += v
    return out


# --------------------------------------------------------------------------
# inverse

def _sub_coordinate(block: Sequence[int], d: int) -> int:
    mask = 0
    for x in block:
        if x != SENTINEL:
            mask |= 1 << (x - 1)
    return mask ^ first_n(d)


def inverse_terms(J: int, d: int) -> list[tuple[int, list[int]]]:
    """``[(coef, [J_1, ..., J_k]), ...]`` with ``x_J = sum coef * prod psi_{J_r}``."""
    if J == first_n(d):
        raise ValueError("the reference coordinate has no amplitude")
    from .combinatorics import even_partitions_of

    out = []
    for blocks in even_partitions_of(support_elements(J, d)):
        k = len(blocks)
        subs = [_sub_coordinate(b, d) for b in blocks]
        coef = (-1) ** (k - 1) * factorial(k - 1) * partition_sign(blocks, d)
        for K in subs:
            coef *= coordinate_sign(K, d)
        out.append((coef, subs))
    return out


def correspondence(J: int, d: int) -> tuple[int, int]:
    """``(I, B)`` with ``J = ([d] minus I) union B``."""
    D = first_n(d)
    return D & ~J, J & ~D


def inverse_coordinate(J: int, d: int, n: int, variables: str = "c") -> SparsePolynomial:
    """``x_J``, the amplitude ``t_{[d] minus J, J minus [d]}`` as a polynomial in the coordinates.

    ``variables="c"`` writes ``c_{I,B}``; ``"psi"`` writes ``psi_J`` with the
    reference coordinate set to 1.
    """
    if J >> n:
        raise ValueError(f"J={J:#b} is not a subset of [{n}]")
    D = first_n(d)
    acc: dict = {}
    for coef, subs in inverse_terms(J, d):
        exps: dict = {}
        for K in subs:
            if K == D:
                continue
            v = psi_var(K) if variables == "psi" else c_var(*correspondence(K, d))
            exps[v] = exps.get(v, 0) + 1
        mono = tuple(sorted(exps.items()))
        acc[mono] = acc.get(mono, 0) + Fraction(coef)
    return SparsePolynomial(acc)


def inverse_map(d: int, n: int, variables: str = "c") -> dict[int, SparsePolynomial]:
    D = first_n(d)
    return {J: inverse_coordinate(J, d, n, variables) for J in range(1 << n) if J != D}


def psi_to_c(J: int, d: int) -> tuple:
    return c_var(*correspondence(J, d))


# --------------------------------------------------------------------------
# EOM factorization

def _check_shape(tau, sigma, d):
    for m, l in tau:
        if m != l + 1:
            raise ShapeError(f"({m},{l}) is not on the sub-diagonal")
    for m, l in sigma:
        if m != l:
            raise ShapeError(f"({m},{l}) is not on the diagonal")


def eom_factorization_check(tau: Iterable[Level], sigma: Iterable[Level], d: int, n: int,
                            trials: int = 10, seed: int = 0, tol: float = 1e-10) -> dict:
    """Check ``exp(T_tau + T_sigma) e = exp(T_sigma) e + T_tau exp(T_sigma) e`` numerically.

    Also checks that the first summand lives on ``|J| = d`` and the second on
    ``|J| = d - 1``.
    """
    tau = frozenset(map(tuple, tau))
    sigma = frozenset(map(tuple, sigma))
    _check_shape(tau, sigma, d)
    rng = np.random.default_rng(seed)
    sizes = np.array([popcount(J) for J in range(1 << n)])
    worst = 0.0
    support_ok = True
    for _ in range(trials):
        tv_tau = {v: complex(*rng.normal(size=2)) for v in cluster_variables(d, n, tau)}
        tv_sig = {v: complex(*rng.normal(size=2)) for v in cluster_variables(d, n, sigma)}
        both = {**tv_tau, **tv_sig}
        lhs = numeric_forward(both, d, n, tau | sigma)
        first = numeric_forward(tv_sig, d, n, sigma)
        second = cluster_matrix(tv_tau, d, n, tau) @ first
        worst = max(worst, float(np.max(np.abs(lhs - first - second))))
        support_ok &= not np.any(np.abs(first[sizes != d]) > tol)
        support_ok &= not np.any(np.abs(second[sizes != d - 1]) > tol)
    return {"passed": bool(worst <= tol and support_ok), "max_error": worst, "support_ok": bool(support_ok)}
