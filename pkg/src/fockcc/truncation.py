"""Level sets of the truncation grid and the varieties they cut out.

A level ``(m, l)`` counts holes in ``[d]`` and particles outside it.  The grid
holds every level except ``(0, 0)``; a level set is any subset of it.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Mapping

import numpy as np

from .combinatorics import elements_of, first_n, level_of, popcount
from .errors import FamilyError, LevelSetParseError
from .expparam import (
    cluster_variables,
    coordinate_sign,
    full_grid,
    inverse_coordinate,
    numeric_forward,
    support_elements,
)
from .multipoly import SparsePolynomial, psi_var

__all__ = [
    "TruncationGrid", "LevelSet", "level_of", "dimension", "preceq", "is_linear",
    "particle_hole_dual", "graph_hypothesis", "recognize_family", "chart_ideal_generators",
    "flag_parameterization", "spinor_parameterization", "pfaffian", "census", "analyze",
]

FLAG = frozenset({(1, 0), (1, 1), (0, 1)})
SPINOR = frozenset({(2, 0), (1, 1), (0, 2)})


@dataclass(frozen=True)
class TruncationGrid:
    d: int
    n: int

    def __post_init__(self):
        if not 0 <= self.d <= self.n:
            raise ValueError(f"need 0 <= d <= n, got d={self.d}, n={self.n}")

    @property
    def points(self) -> frozenset:
        return full_grid(self.d, self.n)

    def __len__(self) -> int:
        return (self.d + 1) * (self.n - self.d + 1) - 1

    def __contains__(self, p) -> bool:
        m, l = p
        return 0 <= m <= self.d and 0 <= l <= self.n - self.d and (m or l)

    def level_sets(self):
        """Every proper nonempty subset of the grid, in bit-pattern order."""
        pts = sorted(self.points)
        for mask in range(1, (1 << len(pts)) - 1):
            yield LevelSet(pts[i] for i in range(len(pts)) if mask >> i & 1)


class LevelSet(frozenset):
    """A set of grid levels; text form ``"1,0;1,1;0,1"``."""

    def __new__(cls, levels: Iterable = ()):
        return super().__new__(cls, (tuple(p) for p in levels))

    @classmethod
    def parse(cls, text: str) -> "LevelSet":
        levels = []
        pos = 0
        for chunk in text.split(";"):
            stripped = chunk.strip()
            if not stripped:
                if text.strip():
                    raise LevelSetParseError("empty level", pos)
                pos += len(chunk) + 1
                continue
            parts = stripped.split(",")
            if len(parts) != 2:
                raise LevelSetParseError(f"expected 'm,l', got {stripped!r}", pos)
            try:
                m, l = int(parts[0]), int(parts[1])
            except ValueError:
                raise LevelSetParseError(f"non-integer level {stripped!r}", pos) from None
            if m < 0 or l < 0:
                raise LevelSetParseError(f"negative level {stripped!r}", pos)
            levels.append((m, l))
            pos += len(chunk) + 1
        return cls(levels)

    def check(self, d: int, n: int) -> "LevelSet":
        grid = TruncationGrid(d, n)
        for p in sorted(self):
            if p not in grid:
                raise ValueError(f"level {p} is outside the grid for d={d}, n={n}")
        return self

    def __str__(self) -> str:
        return ";".join(f"{m},{l}" for m, l in sorted(self))

    def __repr__(self) -> str:
        return f"LevelSet({str(self)!r})"


def _as_levels(sigma) -> LevelSet:
    if isinstance(sigma, str):
        return LevelSet.parse(sigma)
    return sigma if isinstance(sigma, LevelSet) else LevelSet(sigma)


def dimension(sigma, d: int, n: int) -> int:
    return sum(comb(d, m) * comb(n - d, l) for m, l in _as_levels(sigma))


def _parity(p) -> int:
    return (p[0] + p[1]) % 2


def preceq(p, q) -> bool:
    """Excitation order: componentwise, and odd levels never sit below even ones."""
    return p[0] <= q[0] and p[1] <= q[1] and (_parity(p) == 0 or _parity(q) == 1)


def is_linear(sigma, d: int, n: int) -> bool:
    """Closure of ``sigma`` under sums ``p + q`` with ``p, q`` below the sum."""
    sigma = _as_levels(sigma)
    grid = TruncationGrid(d, n)
    for p in sigma:
        for q in sigma:
            s = (p[0] + q[0], p[1] + q[1])
            if s in grid and preceq(p, s) and preceq(q, s) and s not in sigma:
                return False
    return True


def dual_index_set(J: int, n: int) -> int:
    """``{n + 1 - j : j not in J}``."""
    out = 0
    for j in range(1, n + 1):
        if not J >> (j - 1) & 1:
            out |= 1 << (n - j)
    return out


def particle_hole_dual(sigma, d: int, n: int) -> tuple[LevelSet, dict[int, int]]:
    sigma = _as_levels(sigma)
    return LevelSet((l, m) for m, l in sigma), {J: dual_index_set(J, n) for J in range(1 << n)}


def even_partition_witness(sigma, d: int, n: int):
    """A level of ``sigma`` with an even partition over ``sigma`` of length > 1, or None.

    An even partition has at most one odd-level part.  Parts repeat freely.
    Returns ``(target, parts)``.
    """
    sigma = sorted(_as_levels(sigma))
    for target in sigma:
        parts = _decompose(target, sigma)
        if parts:
            return target, parts
    return None


def _decompose(target, sigma):
    """Some even partition of ``target`` over ``sigma`` with at least two parts."""
    def rec(rem, start, parts, odd):
        if rem == (0, 0):
            return list(parts) if len(parts) >= 2 else None
        for i in range(start, len(sigma)):
            p = sigma[i]
            if p[0] > rem[0] or p[1] > rem[1] or odd + _parity(p) > 1:
                continue
            found = rec((rem[0] - p[0], rem[1] - p[1]), i, parts + [p], odd + _parity(p))
            if found:
                return found
        return None

    return rec(target, 0, [], 0)


def graph_hypothesis(sigma, d: int, n: int) -> bool:
    """True when no level of ``sigma`` splits as an even partition of length > 1 over ``sigma``."""
    return even_partition_witness(sigma, d, n) is None


def recognize_family(sigma, d: int, n: int) -> str:
    sigma = _as_levels(sigma)
    if sigma == FLAG:
        return "Flag"
    if sigma == SPINOR:
        return "Spinor"
    if sigma and all(m == l for m, l in sigma):
        return "FixedN-diagonal"
    if sigma and all(m == l + 1 for m, l in sigma):
        return "Ionization"
    if sigma and all(l == m + 1 for m, l in sigma):
        return "ElectronAttachment"
    return "Generic"


def _coordinates_by_size(d: int, n: int) -> list[int]:
    D = first_n(d)
    return sorted((J for J in range(1 << n) if J != D), key=lambda J: (popcount(J ^ D), J))


def chart_ideal_generators(sigma, d: int, n: int, reduced: bool = True) -> dict[int, SparsePolynomial]:
    """Generators of the truncation variety in the chart ``psi_[d] = 1``, keyed by ``J``.

    One generator per coordinate whose level is outside ``sigma``.  With
    ``reduced=False`` these are the inverse coordinates ``x_J(psi)``.  The
    default solves each ``x_J = 0`` for ``psi_J`` (it appears linearly with
    coefficient ``eps(J)``) and substitutes earlier solutions, giving
    ``psi_J - g_J`` with ``g_J`` a polynomial in the coordinates of ``sigma``.
    Both lists generate the same ideal.
    """
    sigma = _as_levels(sigma)
    out: dict[int, SparsePolynomial] = {}
    solved: dict = {}
    for J in _coordinates_by_size(d, n):
        if level_of(J, d) in sigma:
            continue
        x = inverse_coordinate(J, d, n, "psi")
        if not reduced:
            out[J] = x
            continue
        eps = coordinate_sign(J, d)
        v = psi_var(J)
        rest = x - SparsePolynomial.monomial([v], eps)
        g = (rest * (-eps)).substitute(solved)
        solved[v] = g
        out[J] = SparsePolynomial.variable(v) - g
    return dict(sorted(out.items()))


def generator_degrees(sigma, d: int, n: int) -> dict[int, int]:
    return dict(sorted(Counter(g.degree() for g in chart_ideal_generators(sigma, d, n).values()).items()))


# --------------------------------------------------------------------------
# structured parameterizations

def _require(sigma, family, name):
    if _as_levels(sigma) != family:
        raise FamilyError(f"{name} parameterization needs sigma = {sorted(family)}")


def _tget(tvals: Mapping, I: int, B: int):
    for key in (("t", I, B), (I, B)):
        if key in tvals:
            return tvals[key]
    return 0


def flag_matrix(tvals: Mapping, d: int, n: int) -> np.ndarray:
    """``(d+1) x (n+1)`` matrix: row 0 holds ``t_{0,b}``, row ``i`` holds ``t_{i,0}``, ``e_i``, ``t_{i,b}``."""
    M = np.zeros((d + 1, n + 1), dtype=complex)
    for b in range(d + 1, n + 1):
        M[0, b] = _tget(tvals, 0, 1 << (b - 1))
    for i in range(1, d + 1):
        M[i, 0] = _tget(tvals, 1 << (i - 1), 0)
        M[i, i] = 1
        for b in range(d + 1, n + 1):
            M[i, b] = _tget(tvals, 1 << (i - 1), 1 << (b - 1))
    return M


def flag_coordinates(M: np.ndarray, d: int, n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    for J in range(1 << n):
        cols = elements_of(J)
        k = len(cols)
        if k == d + 1:
            psi[J] = np.linalg.det(M[:, cols])
        elif k == d:
            psi[J] = np.linalg.det(M[1:, cols]) if d else 1
        elif k == d - 1:
            psi[J] = np.linalg.det(M[1:, [0] + cols])
    return psi


def flag_parameterization(tvals: Mapping, d: int, n: int, sigma=FLAG) -> dict:
    """Minors of the flag matrix compared against the exponential map."""
    _require(sigma, FLAG, "flag")
    M = flag_matrix(tvals, d, n)
    minors = flag_coordinates(M, d, n)
    direct = numeric_forward(tvals, d, n, FLAG)
    return {"matrix": M, "coordinates": minors, "max_error": float(np.max(np.abs(minors - direct)))}


def pfaffian(A) -> complex:
    """Pfaffian by expansion along the first row; ``Pf([[0, a], [-a, 0]]) = a``."""
    A = np.asarray(A)
    m = A.shape[0]
    if m == 0:
        return 1
    if m % 2:
        return 0
    total = 0
    rest = list(range(1, m))
    for j in range(1, m):
        if A[0, j] == 0:
            continue
        keep = [k for k in rest if k != j]
        total += (-1) ** (j - 1) * A[0, j] * pfaffian(A[np.ix_(keep, keep)])
    return total


def spinor_matrix(tvals: Mapping, d: int, n: int) -> np.ndarray:
    """Skew matrix of ``T(t)`` over the basis ``(-1)^(i-1) a_i``, ``(-1)^d a_b^dagger``."""
    T = np.zeros((n, n), dtype=complex)
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            T[i - 1, j - 1] = -((-1) ** (i + j)) * _tget(tvals, (1 << (i - 1)) | (1 << (j - 1)), 0)
        for b in range(d + 1, n + 1):
            T[i - 1, b - 1] = (-1) ** (i + d) * _tget(tvals, 1 << (i - 1), 1 << (b - 1))
    for b in range(d + 1, n + 1):
        for c in range(b + 1, n + 1):
            T[b - 1, c - 1] = _tget(tvals, 0, (1 << (b - 1)) | (1 << (c - 1)))
    return T - T.T


def spinor_coordinates(T: np.ndarray, d: int, n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    D = first_n(d)
    for I in range(1 << n):
        idx = [p - 1 for p in elements_of(I)]
        if len(idx) % 2 == 0:
            psi[I ^ D] = pfaffian(T[np.ix_(idx, idx)])
    return psi


def spinor_parameterization(tvals: Mapping, d: int, n: int, sigma=SPINOR) -> dict:
    """Sub-Pfaffians of the signed-basis skew matrix compared against the exponential map."""
    _require(sigma, SPINOR, "spinor")
    T = spinor_matrix(tvals, d, n)
    pf = spinor_coordinates(T, d, n)
    direct = numeric_forward(tvals, d, n, SPINOR)
    return {"matrix": T, "coordinates": pf, "max_error": float(np.max(np.abs(pf - direct)))}


# --------------------------------------------------------------------------
# reports

@dataclass
class TruncationReport:
    d: int
    n: int
    sigma: str
    dimension: int
    is_linear: bool
    graph_hypothesis: bool
    family: str
    generator_degrees: dict = field(default_factory=dict)

    def to_json(self) -> str:
        data = asdict(self)
        data["generator_degrees"] = {str(k): v for k, v in self.generator_degrees.items()}
        return json.dumps(data, sort_keys=True)


def analyze(sigma, d: int, n: int, generators: bool = True) -> TruncationReport:
    sigma = _as_levels(sigma).check(d, n)
    return TruncationReport(
        d=d,
        n=n,
        sigma=str(sigma),
        dimension=dimension(sigma, d, n),
        is_linear=is_linear(sigma, d, n),
        graph_hypothesis=graph_hypothesis(sigma, d, n),
        family=recognize_family(sigma, d, n),
        generator_degrees=generator_degrees(sigma, d, n) if generators else {},
    )


def census(d: int, n: int) -> dict:
    """Counts over every proper nonempty level set of the grid."""
    grid = TruncationGrid(d, n)
    total = linear = hyp = 0
    families: Counter = Counter()
    for sigma in grid.level_sets():
        total += 1
        linear += is_linear(sigma, d, n)
        hyp += graph_hypothesis(sigma, d, n)
        families[recognize_family(sigma, d, n)] += 1
    return {"d": d, "n": n, "level_sets": total, "linear": linear, "hypothesis": hyp,
            "families": dict(sorted(families.items()))}
