"""k-subsets of {1..v} as bitmasks, in colexicographic order.

Bit ``p - 1`` of a mask stands for element ``p``.  For subsets of a fixed
size, colex order coincides with numeric order of the masks, which is what
makes ranking cheap and ``enumerate_subsets`` trivially sorted.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator


def binomial(n: int, k: int) -> int:
    """C(n, k), and 0 whenever k < 0 or k > n."""
    if n < 0:
        raise ValueError(f"binomial needs n >= 0, got n={n}")
    if k < 0 or k > n:
        return 0
    return comb(n, k)


@dataclass(frozen=True)
class SubsetCode:
    mask: int
    v: int
    k: int

    def __post_init__(self) -> None:
        if self.mask < 0 or self.mask >> self.v:
            raise ValueError(f"mask {self.mask:#x} uses bits outside 1..{self.v}")
        if self.mask.bit_count() != self.k:
            raise ValueError(f"mask {self.mask:#x} does not have {self.k} elements")

    @classmethod
    def from_elements(cls, elements: Iterable[int], v: int) -> SubsetCode:
        mask = 0
        count = 0
        for e in elements:
            if not 1 <= e <= v:
                raise ValueError(f"element {e} not in 1..{v}")
            bit = 1 << (e - 1)
            if not mask & bit:
                count += 1
            mask |= bit
        return cls(mask, v, count)

    @classmethod
    def unrank(cls, r: int, v: int, k: int) -> SubsetCode:
        total = binomial(v, k)
        if not 0 <= r < total:
            raise ValueError(f"rank {r} out of range for C({v},{k})={total}")
        mask = 0
        # greedy from the top: largest element e with C(e-1, t) <= r
        for t in range(k, 0, -1):
            e = t
            while comb(e, t) <= r:
                e += 1
            r -= comb(e - 1, t)
            mask |= 1 << (e - 1)
        return cls(mask, v, k)

    def elements(self) -> tuple[int, ...]:
        out = []
        m = self.mask
        while m:
            low = m & -m
            out.append(low.bit_length())
            m ^= low
        return tuple(out)

    def rank(self) -> int:
        return sum(comb(e - 1, t) for t, e in enumerate(self.elements(), start=1))

    def __len__(self) -> int:
        return self.k

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.elements())) + "}"


def iter_masks(v: int, k: int) -> Iterator[int]:
    """All k-bit masks below 2**v in increasing (= colex) order (Gosper's hack)."""
    if k < 0 or k > v:
        return
    if k == 0:
        yield 0
        return
    mask = (1 << k) - 1
    limit = 1 << v
    while mask < limit:
        yield mask
        low = mask & -mask
        ripple = mask + low
        mask = (((ripple ^ mask) >> 2) // low) | ripple


def enumerate_subsets(v: int, k: int) -> list[SubsetCode]:
    if k < 0 or k > v:
        return []
    return [SubsetCode(mask, v, k) for mask in iter_masks(v, k)]


def intersect_size(a: SubsetCode, b: SubsetCode) -> int:
    if a.v != b.v:
        raise ValueError(f"subsets over different ground sets (v={a.v} vs v={b.v})")
    return (a.mask & b.mask).bit_count()


def compress(mask: int, support: int) -> int:
    """Relabel the bits of ``mask`` lying in ``support`` onto 1..|support|.

    The i-th smallest element of ``support`` becomes element i, so the map is
    order preserving.  Bits of ``mask`` outside ``support`` are dropped.
    """
    out = 0
    pos = 0
    s = support
    while s:
        low = s & -s
        if mask & low:
            out |= 1 << pos
        pos += 1
        s ^= low
    return out


def expand(mask: int, support: int) -> int:
    """Inverse of :func:`compress` for masks over 1..|support|."""
    out = 0
    pos = 0
    s = support
    while s:
        low = s & -s
        if mask >> pos & 1:
            out |= low
        pos += 1
        s ^= low
    return out


__all__ = [
    "SubsetCode",
    "binomial",
    "compress",
    "enumerate_subsets",
    "expand",
    "intersect_size",
    "iter_masks",
]
