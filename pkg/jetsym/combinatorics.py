"""
Permutation and partition combinatorics behind the closed formulas.

Block shapes are written as non-decreasing tuples of block lengths, e.g.
(1, 1, 2) for two blocks of length one and one of length two.
"""

from collections import Counter
from dataclasses import dataclass
from itertools import combinations, permutations
from math import factorial
from typing import Iterator, List, Sequence, Tuple

from .exceptions import JetsymError


def subset_perms(p: int, q: int) -> List[Tuple[int, ...]]:
    """
    Permutations of 1..p increasing on their first q and last p-q values.

    Each one is determined by the set of its first q images, so there are
    C(p, q) of them.

    Args:
        p: Size of the permuted set
        q: Length of the first block (0 <= q <= p)

    Returns:
        List of permutations in one-line notation
    """
    if not 0 <= q <= p:
        raise JetsymError(f"subset_perms needs 0 <= q <= p, got p={p}, q={q}")
    result = []
    everything = range(1, p + 1)
    for head in combinations(everything, q):
        chosen = set(head)
        tail = tuple(v for v in everything if v not in chosen)
        result.append(head + tail)
    return result


@dataclass(frozen=True)
class CosetSpec:
    """
    Block structure of a jet monomial: d distinct lengths lengths[e],
    each repeated multiplicities[e] times.
    """

    lengths: Tuple[int, ...]
    multiplicities: Tuple[int, ...]

    def __post_init__(self):
        if len(self.lengths) != len(self.multiplicities):
            raise JetsymError("lengths and multiplicities differ in size")
        if any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise JetsymError("lengths must be strictly increasing")
        if any(l < 1 for l in self.lengths) or any(mu < 1 for mu in self.multiplicities):
            raise JetsymError("lengths and multiplicities must be positive")

    @classmethod
    def from_shape(cls, shape: Sequence[int]) -> 'CosetSpec':
        counts = Counter(shape)
        lengths = tuple(sorted(counts))
        return cls(lengths, tuple(counts[l] for l in lengths))

    @property
    def shape(self) -> Tuple[int, ...]:
        out: List[int] = []
        for l, mu in zip(self.lengths, self.multiplicities):
            out.extend([l] * mu)
        return tuple(out)

    @property
    def size(self) -> int:
        return sum(l * mu for l, mu in zip(self.lengths, self.multiplicities))


def stabilizer_order(shape: Sequence[int]) -> int:
    """|H| = prod over lengths of mu! * (lambda!)^mu."""
    counts = Counter(shape)
    total = 1
    for length, mu in counts.items():
        total *= factorial(mu) * factorial(length) ** mu
    return total


def coset_weight(spec: CosetSpec) -> Tuple[int, int]:
    """
    Orders of the stabilizer H and of the coset space F = S_p / H.

    Returns:
        (|H|, |F|) with p the total size of the shape
    """
    h = stabilizer_order(spec.shape)
    return h, factorial(spec.size) // h


def cut_blocks(arrangement: Sequence, shape: Sequence[int]) -> List[Tuple]:
    """Split an arrangement into consecutive blocks of the given lengths."""
    blocks = []
    start = 0
    for length in shape:
        blocks.append(tuple(arrangement[start:start + length]))
        start += length
    return blocks


def orbit_count(spec: CosetSpec) -> int:
    """
    Brute-force |F|: number of distinct unordered block decompositions
    obtained by permuting 1..p.
    """
    shape = spec.shape
    seen = set()
    for arrangement in permutations(range(spec.size)):
        blocks = cut_blocks(arrangement, shape)
        seen.add(frozenset(frozenset(b) for b in blocks))
    return len(seen)


def integer_partitions(total: int, max_part: int = None) -> Iterator[Tuple[int, ...]]:
    """Partitions of `total` as non-decreasing tuples, parts bounded by `max_part`."""
    if max_part is None:
        max_part = total
    if total == 0:
        yield ()
        return

    def rec(remaining: int, largest: int) -> Iterator[Tuple[int, ...]]:
        if remaining == 0:
            yield ()
            return
        for part in range(min(remaining, largest), 0, -1):
            for rest in rec(remaining - part, part):
                yield rest + (part,)

    yield from rec(total, max_part)


def shapes_up_to(total: int, max_part: int) -> Iterator[Tuple[int, ...]]:
    """All shapes of size 0..total with parts at most `max_part`."""
    for size in range(total + 1):
        yield from integer_partitions(size, max_part)


def set_partitions(items: Sequence) -> Iterator[List[Tuple]]:
    """Set partitions of `items`, blocks keeping the input order."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        yield [(first,)] + partition
        for k in range(len(partition)):
            yield partition[:k] + [(first,) + partition[k]] + partition[k + 1:]


def bell_number(k: int) -> int:
    """Number of set partitions of a k-element set (Bell triangle)."""
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[0]


def fdb_coefficient(shape: Sequence[int]) -> int:
    """
    Number of set partitions of a |shape|-element set with the given block
    lengths: k! / prod((lambda!)^mu * mu!).
    """
    return factorial(sum(shape)) // stabilizer_order(shape)
