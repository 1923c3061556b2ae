"""Index sets, the reverse-lexicographic basis order and even set partitions.

Subsets of ``[n] = {1, ..., n}`` are stored as integer bit patterns: orbital
``p`` is bit ``p - 1``.  With this encoding the reverse-lexicographic rank of a
subset is simply its integer value, so ``e_J`` sits at row ``J`` of every
``2**n`` vector in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .errors import CapacityError, ParityError

MAX_ORBITALS = 16

#: Formal element used to pad odd symmetric differences to even size.
SENTINEL = 0


def mask_of(elements: Iterable[int]) -> int:
    mask = 0
    for p in elements:
        if p < 1:
            raise ValueError(f"orbital indices start at 1, got {p}")
        mask |= 1 << (p - 1)
    return mask


def elements_of(mask: int) -> list[int]:
    """Ascending orbital indices of a bit pattern."""
    out = []
    p = 1
    while mask:
        if mask & 1:
            out.append(p)
        mask >>= 1
        p += 1
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def first_n(d: int) -> int:
    """Bit pattern of ``[d]``."""
    return (1 << d) - 1


def format_mask(mask: int) -> str:
    """Serialize as ascending comma-joined integers, the empty set as ``"0"``.

    A lone orbital above 9 is braced (``"{11}"``) so it cannot be read as
    the compact form of ``{1, 1}``.
    """
    elems = elements_of(mask)
    if len(elems) == 1 and elems[0] > 9:
        return f"{{{elems[0]}}}"
    return ",".join(map(str, elems)) if mask else "0"


def parse_mask(text: str) -> int:
    """Inverse of :func:`format_mask`; also accepts compact digits like ``"134"``."""
    text = text.strip()
    if text in ("", "0", "{}"):
        return 0
    braced = text.startswith("{") and text.endswith("}")
    text = text.strip("{}")
    if "," in text or braced:
        return mask_of(int(tok) for tok in text.split(","))
    # compact form (only unambiguous for n <= 9)
    return mask_of(int(ch) for ch in text)


def compact(mask: int) -> str:
    """Compact label: ``{1,3,4} -> "134"``, empty -> ``"0"``."""
    return "".join(map(str, elements_of(mask))) if mask else "0"


@dataclass(frozen=True, order=True)
class OrbitalIndexSet:
    """A subset of ``[n]``; ordering follows the reverse-lexicographic rank."""

    bits: int
    n: int

    def __post_init__(self):
        if not 0 <= self.n <= MAX_ORBITALS:
            raise CapacityError(f"n={self.n} exceeds the cap of {MAX_ORBITALS} orbitals")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"bit pattern {self.bits:#b} is not a subset of [{self.n}]")

    @classmethod
    def from_elements(cls, elements: Iterable[int], n: int) -> "OrbitalIndexSet":
        return cls(mask_of(elements), n)

    @classmethod
    def parse(cls, text: str, n: int) -> "OrbitalIndexSet":
        return cls(parse_mask(text), n)

    @property
    def rank(self) -> int:
        return self.bits

    def __iter__(self) -> Iterator[int]:
        return iter(elements_of(self.bits))

    def __len__(self) -> int:
        return popcount(self.bits)

    def __contains__(self, p: int) -> bool:
        return p >= 1 and bool(self.bits >> (p - 1) & 1)

    def __str__(self) -> str:
        return format_mask(self.bits)


def revlex_order(n: int) -> list[OrbitalIndexSet]:
    """All ``2**n`` subsets of ``[n]`` in reverse-lexicographic order.

    >>> [str(J) for J in revlex_order(2)]
    ['0', '1', '2', '1,2']
    """
    if not 0 <= n <= MAX_ORBITALS:
        raise CapacityError(f"n={n} outside 0..{MAX_ORBITALS}")
    return [OrbitalIndexSet(r, n) for r in range(1 << n)]


def revlex_rank(J: OrbitalIndexSet | Iterable[int]) -> int:
    if isinstance(J, OrbitalIndexSet):
        return J.bits
    return mask_of(J)


@dataclass(frozen=True)
class EvenSetPartition:
    """Blocks of even size, ordered by their minimal element.

    Blocks are tuples of ascending integers; the formal element, when present,
    is ``SENTINEL`` (0).
    """

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for block in self.blocks:
            if not block or len(block) % 2:
                raise ParityError(f"block {block} is not of positive even size")
            if seen.intersection(block):
                raise ValueError("blocks overlap")
            seen.update(block)
        mins = [b[0] for b in self.blocks]
        if mins != sorted(mins):
            object.__setattr__(self, "blocks", tuple(sorted(self.blocks)))

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(x for b in self.blocks for x in b))


def _even_partitions(elems: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for k in range(1, len(rest) + 1, 2):
        for comb in combinations(rest, k):
            chosen = set(comb)
            remaining = tuple(e for e in rest if e not in chosen)
            for tail in _even_partitions(remaining):
                yield ((first,) + comb,) + tail


@lru_cache(maxsize=None)
def even_partitions_of(elems: tuple[int, ...]) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """Canonical even partitions of a sorted tuple (cached, used internally)."""
    if len(elems) % 2:
        raise ParityError(f"cannot split an odd set of size {len(elems)} into even blocks")
    return tuple(_even_partitions(elems))


def even_set_partitions(S: OrbitalIndexSet | Sequence[int]) -> list[EvenSetPartition]:
    """Every partition of ``S`` into blocks of even size, each listed once."""
    elems = tuple(S) if isinstance(S, OrbitalIndexSet) else tuple(sorted(S))
    return [EvenSetPartition(p) for p in even_partitions_of(elems)]


def inversions(seq: Sequence[int]) -> int:
    return sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation taking ``sorted(seq)`` to ``seq``."""
    return -1 if inversions(seq) % 2 else 1


def partition_sign(blocks: EvenSetPartition | Iterable[Sequence[int]], d: int) -> int:
    """Product of the signs of the hole-side and particle-side concatenations.

    Elements ``1..d`` are holes, larger ones (and the formal element) are
    particles; the formal element orders before every particle.
    """
    blocks = list(blocks)
    holes = [x for b in blocks for x in b if 1 <= x <= d]
    particles = [x for b in blocks for x in b if x == SENTINEL or x > d]
    return permutation_sign(holes) * permutation_sign(particles)


def level_of(J: int | OrbitalIndexSet, d: int) -> tuple[int, int]:
    """``(|[d] minus J|, |J minus [d]|)``: holes and particles relative to ``e_[d]``."""
    bits = J.bits if isinstance(J, OrbitalIndexSet) else J
    D = first_n(d)
    return popcount(D & ~bits), popcount(bits & ~D)


def block_level(block: Iterable[int], d: int) -> tuple[int, int]:
    """Level of a block of a partition; the formal element does not count."""
    holes = particles = 0
    for x in block:
        if 1 <= x <= d:
            holes += 1
        elif x > d:
            particles += 1
    return holes, particles


def block_masks(block: Iterable[int], d: int) -> tuple[int, int]:
    """``(I, B)`` bit patterns of the hole and particle parts of a block."""
    I = B = 0
    for x in block:
        if x == SENTINEL:
            continue
        if x <= d:
            I |= 1 << (x - 1)
        else:
            B |= 1 << (x - 1)
    return I, B
