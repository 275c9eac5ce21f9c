"""The incidence graph J(n, m, m+1) and its distance partition about an m-subset.

Vertices are subsets of {1..n} held as bitmasks; a vertex's side is its
popcount.  With the base vertex x an m-subset, the class of distance 2a
consists of the m-subsets meeting x in m - a points, and the class of
distance 2a + 1 of the (m+1)-subsets meeting x in m - a points.  Inside a
class, vertex ``alpha | beta`` (alpha inside x, beta outside) sits at
``rank(alpha) * C(n - m, |beta|) + rank(beta)``, both ranks colex after
relabelling x and its complement onto 1..m and 1..n-m.  That is the order
under which the blocks of the adjacency matrix are literally Kronecker
products of inclusion matrices.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import IO, Sequence

from .exact_linalg import ExactMatrix, extract_block, kron
from .intersection_matrices import build_H, build_W
from .subsets import SubsetCode, binomial, compress, expand, iter_masks


class HypothesisError(ValueError):
    """Raised when parameters miss a validation level without ``exploratory``."""


@dataclass(frozen=True)
class GeometryParams:
    n: int
    m: int
    base_size: int | None = None

    def __post_init__(self) -> None:
        if self.base_size is None:
            object.__setattr__(self, "base_size", self.m)
        if self.m < 0 or self.n < self.m + 1:
            raise ValueError(f"need 0 <= m < n, got n={self.n}, m={self.m}")
        if self.base_size not in (self.m, self.m + 1):
            raise ValueError(f"base_size must be m or m+1, got {self.base_size}")

    @property
    def diameter_ok(self) -> bool:
        """n >= 2m + 1, where the distance from x reaches 2m + 1."""
        return self.n >= 2 * self.m + 1

    @property
    def theorem_ok(self) -> bool:
        """n >= 3m with an m-subset base vertex."""
        return self.n >= 3 * self.m and self.base_size == self.m

    def require(self, level: str = "theorem", exploratory: bool = False) -> None:
        if exploratory:
            return
        if self.base_size != self.m:
            raise HypothesisError("a base vertex of size m+1 is exploratory only")
        if level in ("diameter", "theorem") and not self.diameter_ok:
            raise HypothesisError(f"n={self.n} < 2m+1={2 * self.m + 1}")
        if level == "theorem" and not self.theorem_ok:
            raise HypothesisError(f"n={self.n} < 3m={3 * self.m}")

    @property
    def num_vertices(self) -> int:
        return binomial(self.n, self.m) + binomial(self.n, self.m + 1)


def classify_vertex(x: SubsetCode, z: SubsetCode) -> int:
    """Distance from the m-subset ``x`` to ``z`` in J(n, m, m+1)."""
    m = x.k
    if z.v != x.v:
        raise ValueError("x and z live over different ground sets")
    if z.k not in (m, m + 1):
        raise ValueError(f"|z|={z.k} is not m={m} or m+1={m + 1}")
    meet = (x.mask & z.mask).bit_count()
    return 2 * (m - meet) + (z.k - m)


@dataclass
class DistancePartition:
    params: GeometryParams
    x: SubsetCode
    classes: list[list[int]]
    offsets: list[int] = field(init=False)
    position: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.offsets = [0]
        for cls_ in self.classes:
            self.offsets.append(self.offsets[-1] + len(cls_))
        self.position = {mask: p for p, mask in enumerate(self.vertices)}

    @property
    def vertices(self) -> list[int]:
        return [mask for cls_ in self.classes for mask in cls_]

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.classes]

    @property
    def diameter(self) -> int:
        return max(i for i, c in enumerate(self.classes) if c)

    def __len__(self) -> int:
        return self.offsets[-1]

    def tag(self, i: int | None = None) -> str:
        return "X" if i is None else f"Gamma_{i}(x)"

    def class_of(self, mask: int) -> int:
        p = self.position[mask]
        for i in range(len(self.classes)):
            if p < self.offsets[i + 1]:
                return i
        raise AssertionError("unreachable")

    def split(self, mask: int) -> tuple[int, int]:
        """(alpha, beta) of a vertex, relabelled onto 1..|x| and 1..n-|x|."""
        comp = ((1 << self.params.n) - 1) & ~self.x.mask
        return compress(mask, self.x.mask), compress(mask, comp)


def expected_class_size(n: int, m: int, i: int) -> int:
    a = i // 2
    return binomial(m, m - a) * binomial(n - m, a + (i % 2))


def build_partition(params: GeometryParams, x: SubsetCode | None = None) -> DistancePartition:
    """Distance classes about ``x`` (default {1..base_size}), pair-ordered as in the module doc."""
    n, m = params.n, params.m
    if x is None:
        x = SubsetCode((1 << params.base_size) - 1, n, params.base_size)
    if x.k != params.base_size or x.v != n:
        raise ValueError(f"base vertex must be a {params.base_size}-subset of 1..{n}")
    if params.base_size != m:
        return _bfs_partition(params, x)
    comp = ((1 << n) - 1) & ~x.mask
    classes = []
    for i in range(2 * m + 2):
        a, odd = divmod(i, 2)
        members = [
            expand(alpha, x.mask) | expand(beta, comp)
            for alpha in iter_masks(m, m - a)
            for beta in iter_masks(n - m, a + odd)
        ]
        classes.append(members)
    return DistancePartition(params, x, classes)


def _bfs_partition(params: GeometryParams, x: SubsetCode) -> DistancePartition:
    # exploratory base of size m+1: classes from BFS, colex inside a class
    n, m = params.n, params.m
    masks = list(iter_masks(n, m)) + list(iter_masks(n, m + 1))
    dist = bfs_distances_masks(masks, x.mask)
    classes = [[] for _ in range(max(dist.values()) + 1)]
    for mask in masks:
        classes[dist[mask]].append(mask)
    for c in classes:
        c.sort(key=lambda z: (z.bit_count(), z))
    return DistancePartition(params, x, classes)


def _neighbours(mask: int, n: int, m: int) -> list[int]:
    full = (1 << n) - 1
    out = []
    if mask.bit_count() == m:
        free = full & ~mask
        while free:
            low = free & -free
            out.append(mask | low)
            free ^= low
    else:
        rest = mask
        while rest:
            low = rest & -rest
            out.append(mask ^ low)
            rest ^= low
    return out


def bfs_distances_masks(masks: Sequence[int], source: int) -> dict[int, int]:
    """BFS over the inclusion graph on ``masks`` straight from set operations."""
    n = max(masks).bit_length()
    m = min(z.bit_count() for z in masks)
    allowed = set(masks)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in _neighbours(u, n, m):
            if w in allowed and w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def bfs_distances(adjacency: ExactMatrix, source: int) -> list[int | None]:
    dist: list[int | None] = [None] * adjacency.rows
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adjacency.row(u):
            if dist[w] is None:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def build_graph(
    params: GeometryParams,
    partition: DistancePartition | None = None,
    *,
    exploratory: bool = False,
) -> ExactMatrix:
    """Adjacency matrix of J(n, m, m+1), vertices in partition order."""
    params.require("diameter", exploratory)
    part = partition or build_partition(params)
    pos = part.position
    n, m = params.n, params.m
    data = {}
    for mask, p in pos.items():
        data[p] = {pos[w]: 1 for w in _neighbours(mask, n, m)}
    return ExactMatrix(len(pos), len(pos), (((r, c), 1) for r, row in data.items() for c in row),
                       row_tag=part.tag(), col_tag=part.tag())


def build_dual_idempotents(part: DistancePartition) -> list[ExactMatrix]:
    out = []
    size = len(part)
    for i in range(len(part.classes)):
        lo, hi = part.offsets[i], part.offsets[i + 1]
        out.append(ExactMatrix(size, size, (((p, p), 1) for p in range(lo, hi)),
                               row_tag=part.tag(), col_tag=part.tag()))
    return out


def expected_block(params: GeometryParams, i: int, j: int) -> ExactMatrix:
    """The Kronecker form predicted for block (i, j) of the adjacency matrix."""
    n, m = params.n, params.m
    rows = expected_class_size(n, m, i)
    cols = expected_class_size(n, m, j)
    if abs(i - j) != 1:
        return ExactMatrix.zeros(rows, cols)
    if i > j:
        return expected_block(params, j, i).T
    a = i // 2
    if i % 2 == 0:
        eye = ExactMatrix.identity(binomial(m, m - a))
        return kron(eye, build_W(a, a + 1, n - m))
    eye = ExactMatrix.identity(binomial(n - m, a + 1))
    return kron(build_W(m - a - 1, m - a, m).T, eye)


@dataclass
class BlockVerdict:
    i: int
    j: int
    passed: bool
    form: str
    cell: tuple[int, int] | None = None
    actual: object = None
    expected: object = None


def _first_difference(a: ExactMatrix, b: ExactMatrix) -> tuple[int, int] | None:
    if a.shape != b.shape:
        return (-1, -1)
    ea, eb = a.entries, b.entries
    for key in sorted(set(ea) | set(eb)):
        if ea.get(key, 0) != eb.get(key, 0):
            return key
    return None


def verify_block_structure(
    params: GeometryParams,
    adjacency: ExactMatrix | None = None,
    partition: DistancePartition | None = None,
) -> dict[tuple[int, int], BlockVerdict]:
    params.require("diameter")
    part = partition or build_partition(params)
    A = adjacency if adjacency is not None else build_graph(params, part)
    D = 2 * params.m + 1
    out = {}
    for i in range(D + 1):
        for j in range(D + 1):
            actual = extract_block(A, i, j, part)
            expected = expected_block(params, i, j)
            if abs(i - j) != 1:
                form = "0"
            elif min(i, j) % 2 == 0:
                form = "I (x) W" + ("^t" if i > j else "")
            else:
                form = "W^t (x) I" + ("^t" if i > j else "")
            cell = _first_difference(actual, expected)
            if cell is None:
                out[i, j] = BlockVerdict(i, j, True, form)
            else:
                out[i, j] = BlockVerdict(i, j, False, form, cell, actual[cell] if cell[0] >= 0 else None,
                                         expected[cell] if cell[0] >= 0 else None)
    return out


@dataclass
class DistanceCheck:
    passed: bool
    diameter: int
    mismatches: list[tuple[int, int, int]]  # (vertex mask, class index, BFS distance)
    size_mismatches: list[tuple[int, int, int]]  # (class, actual, expected)


def verify_distance_partition(
    params: GeometryParams,
    adjacency: ExactMatrix | None = None,
    partition: DistancePartition | None = None,
) -> DistanceCheck:
    """classify_vertex against BFS on the adjacency matrix, class sizes, and D(x) = 2m + 1."""
    params.require("diameter")
    part = partition or build_partition(params)
    A = adjacency if adjacency is not None else build_graph(params, part)
    n, m = params.n, params.m
    dist = bfs_distances(A, part.position[part.x.mask])
    mismatches = []
    for mask, p in part.position.items():
        z = SubsetCode(mask, n, mask.bit_count())
        d = classify_vertex(part.x, z)
        if d != dist[p] or part.class_of(mask) != d:
            mismatches.append((mask, d, dist[p]))
    sizes = []
    for i, cls_ in enumerate(part.classes):
        want = expected_class_size(n, m, i)
        if len(cls_) != want:
            sizes.append((i, len(cls_), want))
    diameter = max(d for d in dist if d is not None)
    covered = len(part) == params.num_vertices and None not in dist
    passed = not mismatches and not sizes and covered and diameter == 2 * m + 1
    return DistanceCheck(passed, diameter, mismatches, sizes)


# -- the Johnson graph J(n, m) --------------------------------------------------


def build_johnson_graph(n: int, m: int) -> ExactMatrix:
    """Adjacency of J(n, m) on the m-subsets in colex order (meet in m - 1 points)."""
    if m < 0 or n < m:
        raise ValueError(f"need 0 <= m <= n, got n={n}, m={m}")
    if m == 0:
        return ExactMatrix.zeros(1, 1)
    return build_H(m, m, m - 1, n).retag("J", "J")


def johnson_dual_idempotents(n: int, m: int, x: int = 0) -> list[ExactMatrix]:
    """E_i* of J(n, m) about the x-th m-subset (colex); distance is m - |x & y|."""
    masks = list(iter_masks(n, m))
    base = masks[x]
    size = len(masks)
    diag: dict[int, list[int]] = {}
    for p, y in enumerate(masks):
        diag.setdefault(m - (base & y).bit_count(), []).append(p)
    return [
        ExactMatrix(size, size, (((p, p), 1) for p in diag[d]), row_tag="J", col_tag="J")
        for d in sorted(diag)
    ]


# -- export ---------------------------------------------------------------------


def write_edge_list(adjacency: ExactMatrix, vertices: Sequence[int], fh: IO[str]) -> int:
    """One ``u v`` line per edge (u before v in vertex order), vertices as hex bitmasks."""
    count = 0
    for (r, c), _ in adjacency.items():
        if r < c:
            fh.write(f"{vertices[r]:x} {vertices[c]:x}\n")
            count += 1
    return count


__all__ = [
    "BlockVerdict",
    "DistanceCheck",
    "DistancePartition",
    "GeometryParams",
    "HypothesisError",
    "bfs_distances",
    "build_dual_idempotents",
    "build_graph",
    "build_johnson_graph",
    "build_partition",
    "classify_vertex",
    "expected_block",
    "expected_class_size",
    "johnson_dual_idempotents",
    "verify_block_structure",
    "verify_distance_partition",
    "write_edge_list",
]
