"""Exact sparse matrices, echelon subspaces of matrix space, and span closure.

Everything here is exact: matrix entries are Python ints or
``fractions.Fraction``; echelon spaces work over ``gmpy2.mpq`` internally
for speed and hand back ``Fraction`` values.  A matrix space is stored as
the reduced row echelon basis of the row-major vectorisations
``(r, c) -> r * cols + c``, which makes the basis canonical: two spaces are
equal exactly when their stored bases are identical.
"""

from __future__ import annotations

import bisect
import logging
from collections import deque
from fractions import Fraction
from typing import IO, Iterable, Iterator, Mapping, Sequence

from gmpy2 import mpq

log = logging.getLogger(__name__)

#: Fixed prime for the optional modular pre-pass (2**31 - 1).
DEFAULT_PRIME = 2147483647


def _normalize(x):
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if type(x).__name__ == "mpq":
        num, den = int(x.numerator), int(x.denominator)
        return num if den == 1 else Fraction(num, den)
    if isinstance(x, float):
        raise TypeError("floating point entries are not allowed")
    return _normalize(Fraction(x))


class ExactMatrix:
    """Immutable sparse matrix over the rationals.

    ``row_tag``/``col_tag`` name the index spaces of the two axes.  Products
    and sums refuse to combine axes whose tags are both set and differ;
    ``None`` means "unlabelled" and is compatible with anything.  Tags are
    labels only and take no part in equality.
    """

    __slots__ = ("rows", "cols", "row_tag", "col_tag", "_data")

    def __init__(
        self,
        rows: int,
        cols: int,
        entries: Mapping[tuple[int, int], object] | Iterable[tuple[tuple[int, int], object]] = (),
        *,
        row_tag: str | None = None,
        col_tag: str | None = None,
    ) -> None:
        if rows < 0 or cols < 0:
            raise ValueError(f"negative shape {rows}x{cols}")
        data: dict[int, dict[int, object]] = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for (r, c), x in items:
            if not (0 <= r < rows and 0 <= c < cols):
                raise IndexError(f"entry ({r},{c}) outside {rows}x{cols}")
            x = _normalize(x)
            row = data.setdefault(r, {})
            x = row.get(c, 0) + x
            if x:
                row[c] = x
            else:
                row.pop(c, None)
                if not row:
                    del data[r]
        self.rows = rows
        self.cols = cols
        self.row_tag = row_tag
        self.col_tag = col_tag
        self._data = data

    @classmethod
    def _wrap(cls, rows, cols, data, row_tag=None, col_tag=None) -> ExactMatrix:
        # trusted constructor: data must already be zero-free and normalized
        self = cls.__new__(cls)
        self.rows, self.cols = rows, cols
        self.row_tag, self.col_tag = row_tag, col_tag
        self._data = data
        return self

    @classmethod
    def identity(cls, n: int, tag: str | None = None) -> ExactMatrix:
        return cls._wrap(n, n, {i: {i: 1} for i in range(n)}, tag, tag)

    @classmethod
    def zeros(cls, rows: int, cols: int, *, row_tag=None, col_tag=None) -> ExactMatrix:
        return cls._wrap(rows, cols, {}, row_tag, col_tag)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[object]], *, row_tag=None, col_tag=None) -> ExactMatrix:
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged dense matrix")
        entries = (((i, j), x) for i, r in enumerate(rows) for j, x in enumerate(r) if x)
        return cls(nrows, ncols, entries, row_tag=row_tag, col_tag=col_tag)

    # -- access ---------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def entries(self) -> dict[tuple[int, int], object]:
        return {(r, c): x for r, row in self._data.items() for c, x in row.items()}

    def items(self) -> Iterator[tuple[tuple[int, int], object]]:
        for r in sorted(self._data):
            row = self._data[r]
            for c in sorted(row):
                yield (r, c), row[c]

    def row(self, r: int) -> dict[int, object]:
        return dict(self._data.get(r, {}))

    @property
    def nnz(self) -> int:
        return sum(len(row) for row in self._data.values())

    def __getitem__(self, key: tuple[int, int]):
        r, c = key
        return self._data.get(r, {}).get(c, 0)

    def to_dense(self) -> list[list[object]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for r, row in self._data.items():
            for c, x in row.items():
                out[r][c] = x
        return out

    def is_zero(self) -> bool:
        return not self._data

    def is_integral(self) -> bool:
        return all(isinstance(x, int) for row in self._data.values() for x in row.values())

    def trace(self):
        return sum(row.get(r, 0) for r, row in self._data.items())

    def retag(self, row_tag: str | None = None, col_tag: str | None = None) -> ExactMatrix:
        return ExactMatrix._wrap(self.rows, self.cols, self._data, row_tag, col_tag)

    def submatrix(self, r0: int, r1: int, c0: int, c1: int, *, row_tag=None, col_tag=None) -> ExactMatrix:
        data = {}
        for r in range(r0, r1):
            row = self._data.get(r)
            if not row:
                continue
            sub = {c - c0: x for c, x in row.items() if c0 <= c < c1}
            if sub:
                data[r - r0] = sub
        return ExactMatrix._wrap(r1 - r0, c1 - c0, data, row_tag, col_tag)

    # -- arithmetic -----------------------------------------------------------

    @property
    def T(self) -> ExactMatrix:
        return transpose(self)

    def __matmul__(self, other: ExactMatrix) -> ExactMatrix:
        return mat_mul(self, other)

    def __add__(self, other: ExactMatrix) -> ExactMatrix:
        return _combine(self, other, 1)

    def __sub__(self, other: ExactMatrix) -> ExactMatrix:
        return _combine(self, other, -1)

    def __neg__(self) -> ExactMatrix:
        return self.scale(-1)

    def scale(self, c) -> ExactMatrix:
        c = _normalize(c)
        if not c:
            return ExactMatrix.zeros(self.rows, self.cols, row_tag=self.row_tag, col_tag=self.col_tag)
        data = {r: {k: _normalize(c * x) for k, x in row.items()} for r, row in self._data.items()}
        return ExactMatrix._wrap(self.rows, self.cols, data, self.row_tag, self.col_tag)

    def __mul__(self, c) -> ExactMatrix:
        if isinstance(c, ExactMatrix):
            raise TypeError("use @ for matrix products")
        return self.scale(c)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self.shape == other.shape and self._data == other._data

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        tags = ""
        if self.row_tag or self.col_tag:
            tags = f", {self.row_tag!r} x {self.col_tag!r}"
        return f"ExactMatrix({self.rows}x{self.cols}, nnz={self.nnz}{tags})"


def _check_tag(left: str | None, right: str | None, what: str) -> None:
    if left is not None and right is not None and left != right:
        raise ValueError(f"{what}: index space {left!r} does not match {right!r}")


def _combine(a: ExactMatrix, b: ExactMatrix, sign: int) -> ExactMatrix:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    _check_tag(a.row_tag, b.row_tag, "row")
    _check_tag(a.col_tag, b.col_tag, "column")
    data = {r: dict(row) for r, row in a._data.items()}
    for r, row in b._data.items():
        target = data.setdefault(r, {})
        for c, x in row.items():
            y = target.get(c, 0) + sign * x
            if y:
                target[c] = _normalize(y)
            else:
                target.pop(c, None)
        if not target:
            del data[r]
    return ExactMatrix._wrap(a.rows, a.cols, data, a.row_tag or b.row_tag, a.col_tag or b.col_tag)


def _mul_data(a_data, b_data, mod: int | None = None):
    out = {}
    for r, arow in a_data.items():
        acc: dict[int, object] = {}
        for k, x in arow.items():
            brow = b_data.get(k)
            if brow is None:
                continue
            for c, y in brow.items():
                acc[c] = acc.get(c, 0) + x * y
        if mod is None:
            acc = {c: _normalize(x) for c, x in acc.items() if x}
        else:
            acc = {c: x % mod for c, x in acc.items() if x % mod}
        if acc:
            out[r] = acc
    return out


def mat_mul(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    if a.cols != b.rows:
        raise ValueError(
            f"cannot multiply {a.rows}x{a.cols} [{a.row_tag} x {a.col_tag}] "
            f"by {b.rows}x{b.cols} [{b.row_tag} x {b.col_tag}]"
        )
    if a.col_tag is not None and b.row_tag is not None and a.col_tag != b.row_tag:
        raise ValueError(
            f"cannot multiply: column space {a.col_tag!r} of the left factor "
            f"does not match row space {b.row_tag!r} of the right factor"
        )
    return ExactMatrix._wrap(a.rows, b.cols, _mul_data(a._data, b._data), a.row_tag, b.col_tag)


def transpose(a: ExactMatrix) -> ExactMatrix:
    data: dict[int, dict[int, object]] = {}
    for r, row in a._data.items():
        for c, x in row.items():
            data.setdefault(c, {})[r] = x
    return ExactMatrix._wrap(a.cols, a.rows, data, a.col_tag, a.row_tag)


def _pair_tag(a: str | None, b: str | None) -> str | None:
    if a is None and b is None:
        return None
    return f"({a or '?'})x({b or '?'})"


def kron(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    """Kronecker product; row ``(ar, br)`` sits at ``ar * b.rows + br``."""
    data: dict[int, dict[int, object]] = {}
    for ar, arow in a._data.items():
        for br, brow in b._data.items():
            row = {}
            for ac, x in arow.items():
                base = ac * b.cols
                for bc, y in brow.items():
                    row[base + bc] = x * y
            data[ar * b.rows + br] = {c: _normalize(v) for c, v in row.items()}
    return ExactMatrix._wrap(
        a.rows * b.rows,
        a.cols * b.cols,
        data,
        _pair_tag(a.row_tag, b.row_tag),
        _pair_tag(a.col_tag, b.col_tag),
    )


def direct_sum(blocks: Sequence[ExactMatrix]) -> ExactMatrix:
    data = {}
    r0 = c0 = 0
    for m in blocks:
        for r, row in m._data.items():
            data[r0 + r] = {c0 + c: x for c, x in row.items()}
        r0 += m.rows
        c0 += m.cols
    return ExactMatrix._wrap(r0, c0, data)


# -- blocks over a partition of the index set ----------------------------------


def _class_bounds(partition, i: int) -> tuple[int, int]:
    offsets = partition.offsets
    if not 0 <= i < len(offsets) - 1:
        raise IndexError(f"class index {i} outside 0..{len(offsets) - 2}")
    return offsets[i], offsets[i + 1]


def embed_block(m: ExactMatrix, i: int, j: int, partition) -> ExactMatrix:
    """Place ``m`` at block ``(i, j)`` of a zero matrix over the whole vertex set.

    ``partition`` is anything with an ``offsets`` list (class ``i`` occupies
    ``offsets[i]:offsets[i + 1]``) and a ``tag(i)`` method naming class ``i``.
    """
    r0, r1 = _class_bounds(partition, i)
    c0, c1 = _class_bounds(partition, j)
    if m.shape != (r1 - r0, c1 - c0):
        raise ValueError(
            f"block ({i},{j}) is {r1 - r0}x{c1 - c0}, got a {m.rows}x{m.cols} matrix"
        )
    n = partition.offsets[-1]
    data = {r0 + r: {c0 + c: x for c, x in row.items()} for r, row in m._data.items()}
    return ExactMatrix._wrap(n, n, data, partition.tag(), partition.tag())


def extract_block(a: ExactMatrix, i: int, j: int, partition) -> ExactMatrix:
    r0, r1 = _class_bounds(partition, i)
    c0, c1 = _class_bounds(partition, j)
    return a.submatrix(r0, r1, c0, c1, row_tag=partition.tag(i), col_tag=partition.tag(j))


# -- echelon subspaces ----------------------------------------------------------


class MatrixSpace:
    """Subspace of ``rows x cols`` matrices, kept in reduced row echelon form.

    Basis vectors are keyed by their pivot (first nonzero coordinate under
    the row-major linearisation); each has a 1 at its pivot and a 0 at every
    other pivot.
    """

    def __init__(self, rows: int, cols: int | None = None) -> None:
        self.rows = rows
        self.cols = rows if cols is None else cols
        self._vecs: dict[int, dict[int, mpq]] = {}
        self._pivots: list[int] = []

    def __len__(self) -> int:
        return len(self._pivots)

    def dim(self) -> int:
        return len(self._pivots)

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(self._pivots)

    def _vectorize(self, m: ExactMatrix) -> dict[int, object]:
        if m.shape != (self.rows, self.cols):
            raise ValueError(f"matrix is {m.rows}x{m.cols}, space lives in {self.rows}x{self.cols}")
        cols = self.cols
        vec = {}
        for r, row in m._data.items():
            base = r * cols
            for c, x in row.items():
                vec[base + c] = x if isinstance(x, int) else mpq(x)
        return vec

    def _devectorize(self, vec: Mapping[int, object]) -> ExactMatrix:
        data: dict[int, dict[int, object]] = {}
        for k, x in vec.items():
            r, c = divmod(k, self.cols)
            data.setdefault(r, {})[c] = _normalize(x)
        return ExactMatrix._wrap(self.rows, self.cols, data)

    def _reduce(self, vec: Mapping[int, object]) -> dict[int, object]:
        vecs = self._vecs
        coeffs = [(p, x) for p, x in vec.items() if p in vecs]
        res = dict(vec)
        for p, c in coeffs:
            for k, x in vecs[p].items():
                y = res.get(k, 0) - c * x
                if y:
                    res[k] = y
                else:
                    del res[k]
        return res

    def residue(self, m: ExactMatrix) -> ExactMatrix:
        """``m`` minus its projection along the basis; zero iff ``m`` is in the space."""
        return self._devectorize(self._reduce(self._vectorize(m)))

    def insert(self, m: ExactMatrix) -> bool:
        """Add ``m`` to the space; return whether the dimension grew."""
        return self._insert_vec(self._vectorize(m))

    def _insert_vec(self, vec: Mapping[int, object]) -> bool:
        res = self._reduce(vec)
        if not res:
            return False
        pivot = min(res)
        lead = mpq(res[pivot])
        new = {k: mpq(x) / lead for k, x in res.items()}
        for v in self._vecs.values():
            c = v.get(pivot)
            if c is None:
                continue
            for k, x in new.items():
                y = v.get(k, 0) - c * x
                if y:
                    v[k] = y
                else:
                    del v[k]
        self._vecs[pivot] = new
        bisect.insort(self._pivots, pivot)
        return True

    def extend(self, mats: Iterable[ExactMatrix]) -> int:
        return sum(self.insert(m) for m in mats)

    def contains(self, m: ExactMatrix) -> bool:
        return not self._reduce(self._vectorize(m))

    __contains__ = contains

    def equals(self, other: MatrixSpace) -> bool:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("spaces live in different ambient matrix spaces")
        # reduced echelon bases are canonical
        return self._pivots == other._pivots and all(
            self._vecs[p] == other._vecs[p] for p in self._pivots
        )

    def is_subspace_of(self, other: MatrixSpace) -> bool:
        return self.witness_outside(other) is None

    def witness_outside(self, other: MatrixSpace) -> ExactMatrix | None:
        """First basis matrix of ``self`` that is not in ``other``, if any."""
        for p in self._pivots:
            if other._reduce(self._vecs[p]):
                return self._devectorize(self._vecs[p])
        return None

    def basis(self) -> list[ExactMatrix]:
        return [self._devectorize(self._vecs[p]) for p in self._pivots]

    def copy(self) -> MatrixSpace:
        out = MatrixSpace(self.rows, self.cols)
        out._vecs = {p: dict(v) for p, v in self._vecs.items()}
        out._pivots = list(self._pivots)
        return out

    def __repr__(self) -> str:
        return f"MatrixSpace({self.rows}x{self.cols}, dim={self.dim()})"


def space_insert(s: MatrixSpace, m: ExactMatrix) -> tuple[MatrixSpace, bool]:
    """Functional flavour of :meth:`MatrixSpace.insert`; ``s`` is left untouched."""
    out = s.copy()
    return out, out.insert(m)


def space_contains(s: MatrixSpace, m: ExactMatrix) -> bool:
    return s.contains(m)


def space_equal(s: MatrixSpace, t: MatrixSpace) -> bool:
    return s.equals(t)


def space_dim(s: MatrixSpace) -> int:
    return s.dim()


def span(mats: Iterable[ExactMatrix], rows: int, cols: int | None = None) -> MatrixSpace:
    s = MatrixSpace(rows, cols)
    s.extend(mats)
    return s


class _ModSpace:
    """Reduced echelon space over GF(p), used only to predict a closure."""

    def __init__(self, p: int) -> None:
        self.p = p
        self._vecs: dict[int, dict[int, int]] = {}

    def insert(self, vec: Mapping[int, int]) -> bool:
        p, vecs = self.p, self._vecs
        coeffs = [(k, x) for k, x in vec.items() if k in vecs]
        res = {k: x % p for k, x in vec.items() if x % p}
        for piv, c in coeffs:
            for k, x in vecs[piv].items():
                y = (res.get(k, 0) - c * x) % p
                if y:
                    res[k] = y
                else:
                    res.pop(k, None)
        if not res:
            return False
        pivot = min(res)
        inv = pow(res[pivot], -1, p)
        new = {k: x * inv % p for k, x in res.items()}
        for v in vecs.values():
            c = v.get(pivot)
            if c is None:
                continue
            for k, x in new.items():
                y = (v.get(k, 0) - c * x) % p
                if y:
                    v[k] = y
                else:
                    v.pop(k, None)
        vecs[pivot] = new
        return True


# -- span closure ---------------------------------------------------------------


def _vec_of(data, cols: int) -> dict[int, object]:
    return {r * cols + c: x for r, row in data.items() for c, x in row.items()}


def _check_generators(generators: Sequence[ExactMatrix]) -> int:
    n = generators[0].rows
    for g in generators:
        if g.rows != g.cols or g.rows != n:
            raise ValueError("closure generators must be square and of one common size")
        _check_tag(generators[0].row_tag, g.row_tag, "generator")
    return n


def _modular_steps(generators: Sequence[ExactMatrix], side: str, p: int) -> list[tuple[int, int]]:
    """Run the closure over GF(p); return the inserted products as (generator, parent) steps."""
    n = generators[0].rows
    gens = [{r: {c: x % p for c, x in row.items() if x % p} for r, row in g._data.items()} for g in generators]
    space = _ModSpace(p)
    raw: list[dict] = []
    steps: list[tuple[int, int]] = []
    for gi, g in enumerate(gens):
        if space.insert(_vec_of(g, n)):
            raw.append(g)
            steps.append((gi, -1))
    head = 0
    while head < len(raw):
        elem = raw[head]
        for gi, g in enumerate(gens):
            prod = _mul_data(g, elem, p) if side == "left" else _mul_data(elem, g, p)
            if space.insert(_vec_of(prod, n)):
                raw.append(prod)
                steps.append((gi, head))
        head += 1
    return steps


def closure_with_words(
    generators: Sequence[ExactMatrix],
    *,
    side: str = "left",
    modulus: int | None = None,
) -> tuple[MatrixSpace, list[tuple[int, ...]]]:
    """Span of all nonempty words in ``generators``, plus a word certificate per insertion.

    Worklist: the generators seed the space; then, first in first out, every
    inserted element is multiplied by each generator in index order (on the
    left, or on the right with ``side="right"``) and the product inserted.
    The words list gives, for the k-th successful insertion, the generator
    indices of the product that was inserted, leftmost factor first.

    With ``modulus`` set, the closure is first run over GF(modulus) and the
    products it found are inserted up front; the rational worklist then
    runs in full, so the result never depends on the modular pass.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if not generators:
        return MatrixSpace(0, 0), []
    n = _check_generators(generators)
    tag = generators[0].row_tag
    space = MatrixSpace(n, n)
    items: list[ExactMatrix] = []
    words: list[tuple[int, ...]] = []

    def extend_word(gi: int, parent: tuple[int, ...]) -> tuple[int, ...]:
        return (gi, *parent) if side == "left" else (*parent, gi)

    def product(g: ExactMatrix, m: ExactMatrix) -> ExactMatrix:
        return g @ m if side == "left" else m @ g

    for gi, g in enumerate(generators):
        if space.insert(g):
            items.append(g)
            words.append((gi,))

    if modulus is not None:
        steps = _modular_steps(generators, side, modulus)
        predicted: list[ExactMatrix] = []
        pwords: list[tuple[int, ...]] = []
        for gi, parent in steps:
            if parent < 0:
                m, w = generators[gi], (gi,)
            else:
                m, w = product(generators[gi], predicted[parent]), extend_word(gi, pwords[parent])
            predicted.append(m)
            pwords.append(w)
            if parent >= 0 and space.insert(m):
                items.append(m)
                words.append(w)
        log.debug("modular pre-pass predicted dimension %d", len(steps))

    queue = deque(range(len(items)))
    while queue:
        k = queue.popleft()
        for gi, g in enumerate(generators):
            cand = product(g, items[k])
            if space.insert(cand):
                items.append(cand.retag(tag, tag))
                words.append(extend_word(gi, words[k]))
                queue.append(len(items) - 1)
    return space, words


def algebra_closure(
    generators: Sequence[ExactMatrix],
    *,
    side: str = "left",
    modulus: int | None = None,
) -> MatrixSpace:
    return closure_with_words(generators, side=side, modulus=modulus)[0]


def evaluate_word(generators: Sequence[ExactMatrix], word: Sequence[int]) -> ExactMatrix:
    out = generators[word[0]]
    for gi in word[1:]:
        out = out @ generators[gi]
    return out


# -- Matrix Market ----------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return f"{x.numerator}/{x.denominator}"


def write_matrix_market(m: ExactMatrix, fh: IO[str], comment: str | None = None) -> None:
    """Coordinate format; rational entries are written as ``num/den`` under field ``rational``."""
    field = "integer" if m.is_integral() else "rational"
    fh.write(f"%%MatrixMarket matrix coordinate {field} general\n")
    if comment:
        for line in comment.splitlines():
            fh.write(f"% {line}\n")
    fh.write(f"{m.rows} {m.cols} {m.nnz}\n")
    for (r, c), x in m.items():
        fh.write(f"{r + 1} {c + 1} {_fmt(x)}\n")


def read_matrix_market(fh: IO[str]) -> ExactMatrix:
    header = fh.readline().split()
    if len(header) < 5 or header[0] != "%%MatrixMarket" or header[2] != "coordinate":
        raise ValueError("not a Matrix Market coordinate file")
    line = fh.readline()
    while line.startswith("%"):
        line = fh.readline()
    rows, cols, nnz = map(int, line.split())
    entries = []
    for _ in range(nnz):
        r, c, x = fh.readline().split()
        entries.append(((int(r) - 1, int(c) - 1), Fraction(x)))
    return ExactMatrix(rows, cols, entries)


__all__ = [
    "DEFAULT_PRIME",
    "ExactMatrix",
    "MatrixSpace",
    "algebra_closure",
    "closure_with_words",
    "direct_sum",
    "embed_block",
    "evaluate_word",
    "extract_block",
    "kron",
    "mat_mul",
    "read_matrix_market",
    "space_contains",
    "space_dim",
    "space_equal",
    "space_insert",
    "span",
    "transpose",
    "write_matrix_market",
]
