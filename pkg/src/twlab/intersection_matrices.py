"""Inclusion and intersection matrices over the subsets of a v-set, and the
identities relating them.

Rows and columns are indexed by subsets in colex order (see ``subsets``).

* ``W(i, j, v)``: 1 where the row subset is contained in the column subset.
* ``C(i, j, l, v)``: entry ``binom(|y & z|, l)``; zero for l outside 0..min(i, j).
* ``H(i, j, l, v)``: 1 where ``|y & z| == l``.

The identity suite builds the two sides of every identity independently and
compares them cell by cell.  Products there are taken with numpy ``int64``
only when an a-priori bound rules out overflow; otherwise Python integers
are used, so the check stays exact either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from .exact_linalg import ExactMatrix
from .subsets import binomial, iter_masks

KINDS = ("W", "C", "H")


def subset_tag(v: int, k: int) -> str:
    return f"C({v},{k})"


@dataclass(frozen=True)
class LevelRange:
    """Intersection sizes realised between i-subsets and j-subsets of a v-set."""

    lo: int
    hi: int

    @classmethod
    def of(cls, i: int, j: int, v: int) -> LevelRange:
        return cls(max(0, i + j - v), min(i, j))

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.lo, self.hi + 1))

    def __contains__(self, g: object) -> bool:
        return isinstance(g, int) and self.lo <= g <= self.hi


def level_count(i: int, j: int, v: int) -> int:
    _check_sizes(i, j, v)
    return len(LevelRange.of(i, j, v))


@dataclass(frozen=True)
class IntersectionSpec:
    kind: str
    i: int
    j: int
    v: int
    l: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        _check_sizes(self.i, self.j, self.v)
        if (self.kind == "W") != (self.l is None):
            raise ValueError("W takes no level; C and H need one")

    def build(self) -> ExactMatrix:
        if self.kind == "W":
            return build_W(self.i, self.j, self.v)
        if self.kind == "C":
            return build_C(self.i, self.j, self.l, self.v)
        return build_H(self.i, self.j, self.l, self.v)


def _check_sizes(i: int, j: int, v: int) -> None:
    if v < 0 or not (0 <= i <= v and 0 <= j <= v):
        raise ValueError(f"need 0 <= i, j <= v, got i={i}, j={j}, v={v}")


@lru_cache(maxsize=None)
def _masks(v: int, k: int) -> tuple[int, ...]:
    return tuple(iter_masks(v, k))


def _by_intersection(i: int, j: int, v: int, value: Callable[[int], int]) -> ExactMatrix:
    rows, cols = _masks(v, i), _masks(v, j)
    data = {}
    for r, y in enumerate(rows):
        row = {}
        for c, z in enumerate(cols):
            x = value((y & z).bit_count())
            if x:
                row[c] = x
        if row:
            data[r] = row
    return ExactMatrix._wrap(len(rows), len(cols), data, subset_tag(v, i), subset_tag(v, j))


@lru_cache(maxsize=4096)
def build_W(i: int, j: int, v: int) -> ExactMatrix:
    _check_sizes(i, j, v)
    rows, cols = _masks(v, i), _masks(v, j)
    data = {}
    for r, y in enumerate(rows):
        row = {c: 1 for c, z in enumerate(cols) if not y & ~z}
        if row:
            data[r] = row
    return ExactMatrix._wrap(len(rows), len(cols), data, subset_tag(v, i), subset_tag(v, j))


@lru_cache(maxsize=4096)
def build_C(i: int, j: int, l: int, v: int) -> ExactMatrix:
    _check_sizes(i, j, v)
    if l < 0 or l > min(i, j):
        return ExactMatrix.zeros(binomial(v, i), binomial(v, j), row_tag=subset_tag(v, i), col_tag=subset_tag(v, j))
    return _by_intersection(i, j, v, lambda t: binomial(t, l))


@lru_cache(maxsize=4096)
def build_H(i: int, j: int, l: int, v: int) -> ExactMatrix:
    _check_sizes(i, j, v)
    return _by_intersection(i, j, v, lambda t: 1 if t == l else 0)


def all_ones(i: int, j: int, v: int) -> ExactMatrix:
    _check_sizes(i, j, v)
    r, c = binomial(v, i), binomial(v, j)
    return ExactMatrix._wrap(
        r, c, {a: dict.fromkeys(range(c), 1) for a in range(r)} if c else {}, subset_tag(v, i), subset_tag(v, j)
    )


# -- identity suite -------------------------------------------------------------

_INT64_SAFE = 2**62


class _Dense:
    """Integer matrix for the identity suite, exact in int64 or as Python ints."""

    __slots__ = ("a", "bound")

    def __init__(self, a: np.ndarray, bound: int) -> None:
        self.a = a
        self.bound = bound

    @classmethod
    def of(cls, m: ExactMatrix) -> _Dense:
        a = np.zeros(m.shape, dtype=np.int64)
        for (r, c), x in m.items():
            a[r, c] = x
        return cls(a, max((abs(int(x)) for _, x in m.items()), default=0))

    def __matmul__(self, other: _Dense) -> _Dense:
        bound = self.bound * other.bound * max(1, self.a.shape[1])
        if bound < _INT64_SAFE:
            return _Dense(self.a @ other.a, bound)
        a = self.a.astype(object) @ other.a.astype(object)
        return _Dense(a, bound)

    @property
    def T(self) -> _Dense:
        return _Dense(self.a.T, self.bound)


@lru_cache(maxsize=8192)
def _dense_cached(kind: str, i: int, j: int, l: int | None, v: int) -> _Dense:
    return _Dense.of(IntersectionSpec(kind, i, j, v, l).build())


def _W(i, j, v) -> _Dense:
    return _dense_cached("W", i, j, None, v)


def _C(i, j, l, v) -> _Dense:
    return _dense_cached("C", i, j, l, v)


def _H(i, j, l, v) -> _Dense:
    return _dense_cached("H", i, j, l, v)


def _lincomb(terms: list[tuple[int, _Dense]], shape: tuple[int, int]) -> _Dense:
    bound = sum(abs(c) * m.bound for c, m in terms)
    dtype = np.int64 if bound < _INT64_SAFE else object
    out = np.zeros(shape, dtype=dtype)
    for c, m in terms:
        if c:
            out = out + m.a.astype(dtype) * c
    return _Dense(out, bound)


def _shape(i: int, j: int, v: int) -> tuple[int, int]:
    return binomial(v, i), binomial(v, j)


@dataclass(frozen=True)
class Identity:
    name: str
    params: tuple[str, ...]
    valid: Callable[..., bool]
    lhs: Callable[..., _Dense]
    rhs: Callable[..., _Dense]
    description: str
    erratum_probe: bool = False


def _rhs_iv(i, j, k, l, v, lo):
    terms = [
        (binomial(v - l - i, j - l - i + h) * binomial(k - h, l - h), _C(i, k, h, v))
        for h in range(lo, min(l, i) + 1)
    ]
    return _lincomb(terms, _shape(i, k, v))


IDENTITIES: dict[str, Identity] = {}


def _register(identity: Identity) -> None:
    IDENTITIES[identity.name] = identity


_register(Identity(
    "eq1", ("i", "j", "k", "v"),
    lambda i, j, k, v: i <= j <= k,
    lambda i, j, k, v: _W(i, j, v) @ _W(j, k, v),
    lambda i, j, k, v: _lincomb([(binomial(k - i, j - i), _W(i, k, v))], _shape(i, k, v)),
    "W_{i,j} W_{j,k} = binom(k-i, j-i) W_{i,k}",
))
_register(Identity(
    "eq5", ("i", "j", "l", "v"),
    lambda i, j, l, v: -1 <= l <= min(i, j) + 1,
    lambda i, j, l, v: _C(i, j, l, v),
    lambda i, j, l, v: _lincomb(
        [(binomial(g, l) if l >= 0 else 0, _H(i, j, g, v)) for g in range(max(l, 0), min(i, j) + 1)],
        _shape(i, j, v),
    ),
    "C^l_{i,j} = sum_{g=l}^{min(i,j)} binom(g, l) H^g_{i,j}",
))
_register(Identity(
    "i", ("i", "j", "k", "v"),
    lambda i, j, k, v: True,
    lambda i, j, k, v: _W(i, j, v).T @ _W(i, k, v),
    lambda i, j, k, v: _C(j, k, i, v),
    "W_{i,j}^t W_{i,k} = C^i_{j,k}",
))
_register(Identity(
    "ii", ("i", "j", "k", "l", "v"),
    lambda i, j, k, l, v: j <= k and 0 <= l <= min(i, j),
    lambda i, j, k, l, v: _C(i, j, l, v) @ _W(j, k, v),
    lambda i, j, k, l, v: _lincomb([(binomial(k - l, j - l), _C(i, k, l, v))], _shape(i, k, v)),
    "C^l_{i,j} W_{j,k} = binom(k-l, j-l) C^l_{i,k}",
))
_register(Identity(
    "iii", ("i", "j", "k", "v"),
    lambda i, j, k, v: i <= k and j <= k and i + j <= v,
    lambda i, j, k, v: _W(i, k, v) @ _W(j, k, v).T,
    lambda i, j, k, v: _lincomb(
        [(binomial(v - i - j, k - i - j + l), _C(i, j, l, v)) for l in range(max(0, i + j - k), min(i, j) + 1)],
        _shape(i, j, v),
    ),
    "W_{i,k} W_{j,k}^t = sum_l binom(v-i-j, k-i-j+l) C^l_{i,j}",
))
_register(Identity(
    "iv", ("i", "j", "k", "l", "v"),
    lambda i, j, k, l, v: i <= j and 0 <= l <= min(j, k) and l + i <= v,
    lambda i, j, k, l, v: _W(i, j, v) @ _C(j, k, l, v),
    lambda i, j, k, l, v: _rhs_iv(i, j, k, l, v, max(0, l + i - j)),
    "W_{i,j} C^l_{j,k} = sum_{h=max(0,l+i-j)}^{min(l,i)} binom(v-l-i, j-l-i+h) binom(k-h, l-h) C^h_{i,k}",
))
_register(Identity(
    "iv-printed", ("i", "j", "k", "l", "v"),
    lambda i, j, k, l, v: i <= j and 0 <= l <= min(j, k) and l + i <= v,
    lambda i, j, k, l, v: _W(i, j, v) @ _C(j, k, l, v),
    lambda i, j, k, l, v: _rhs_iv(i, j, k, l, v, max(0, l + j - i)),
    "as 'iv' but with the summation starting at h = max(0, l+j-i)",
    erratum_probe=True,
))
_register(Identity(
    "v", ("i", "j", "k", "l", "s", "v"),
    lambda i, j, k, l, s, v: 0 <= l <= min(i, j) and 0 <= s <= min(j, k) and l + s <= v,
    lambda i, j, k, l, s, v: _C(i, j, l, v) @ _C(j, k, s, v),
    lambda i, j, k, l, s, v: _lincomb(
        [
            (
                binomial(v - l - s, j - l - s + h) * binomial(i - h, l - h) * binomial(k - h, s - h),
                _C(i, k, h, v),
            )
            for h in range(max(0, l + s - j), min(l, s) + 1)
        ],
        _shape(i, k, v),
    ),
    "C^l_{i,j} C^s_{j,k} = sum_h binom(v-l-s, j-l-s+h) binom(i-h, l-h) binom(k-h, s-h) C^h_{i,k}",
))
_register(Identity(
    "6", ("i", "j", "v"),
    lambda i, j, v: i + 1 <= v and j <= i + 1,
    lambda i, j, v: _W(i, i + 1, v) @ _W(j, i + 1, v).T,
    lambda i, j, v: _lincomb([(v - i - j, _C(i, j, j, v)), (1, _C(i, j, j - 1, v))], _shape(i, j, v)),
    "W_{i,i+1} W_{j,i+1}^t = (v-i-j) C^j_{i,j} + C^{j-1}_{i,j}",
))
_register(Identity(
    "7", ("i", "j", "k", "v"),
    lambda i, j, k, v: i <= k and j <= k and i + j <= v,
    lambda i, j, k, v: _W(i, k, v) @ _W(j, k, v).T,
    lambda i, j, k, v: _lincomb(
        [(binomial(v - i - j, k - i - s), _C(i, j, j - s, v)) for s in range(0, min(k - i, j) + 1)],
        _shape(i, j, v),
    ),
    "W_{i,k} W_{j,k}^t = sum_{s=0}^{min(k-i,j)} binom(v-i-j, k-i-s) C^{j-s}_{i,j}",
))

#: Identities whose failure is a real defect (the rest are erratum probes).
CORE_IDENTITIES = tuple(name for name, ident in IDENTITIES.items() if not ident.erratum_probe)


@dataclass
class IdentityVerdict:
    identity: str
    params: dict[str, int]
    passed: bool
    cell: tuple[int, int] | None = None
    lhs: int | None = None
    rhs: int | None = None
    erratum_probe: bool = False

    def to_record(self) -> dict:
        rec = {"identity": self.identity, "params": self.params, "passed": self.passed}
        if self.erratum_probe:
            rec["erratum_probe"] = True
        if not self.passed:
            rec["witness"] = {"cell": list(self.cell), "lhs": self.lhs, "rhs": self.rhs}
        return rec


def is_valid(name: str, **params: int) -> bool:
    ident = _lookup(name)
    if set(params) != set(ident.params):
        raise TypeError(f"identity {name!r} takes parameters {ident.params}, got {sorted(params)}")
    v = params["v"]
    sizes = [params[p] for p in ident.params if p in ("i", "j", "k")]
    if v < 0 or any(not 0 <= x <= v for x in sizes):
        return False
    return bool(ident.valid(**params))


def _lookup(name: str) -> Identity:
    try:
        return IDENTITIES[name]
    except KeyError:
        raise ValueError(f"unknown identity {name!r}; known: {', '.join(IDENTITIES)}") from None


def verify_identity(name: str, **params: int) -> IdentityVerdict:
    """Build both sides of identity ``name`` at ``params`` and compare exactly.

    Raises ``ValueError`` for parameters outside the identity's domain.
    """
    ident = _lookup(name)
    if not is_valid(name, **params):
        raise ValueError(f"parameters {params} outside the domain of identity {name!r}")
    lhs = ident.lhs(**params).a
    rhs = ident.rhs(**params).a
    if lhs.shape != rhs.shape:
        raise AssertionError(f"identity {name}: side shapes differ {lhs.shape} vs {rhs.shape}")
    diff = np.argwhere(lhs != rhs)
    if len(diff) == 0:
        return IdentityVerdict(name, dict(params), True, erratum_probe=ident.erratum_probe)
    r, c = (int(x) for x in diff[0])
    return IdentityVerdict(
        name, dict(params), False, (r, c), int(lhs[r, c]), int(rhs[r, c]), ident.erratum_probe
    )


def parameter_tuples(name: str, v_max: int, v_min: int = 0) -> Iterator[dict[str, int]]:
    ident = _lookup(name)
    names = ident.params
    for v in range(v_min, v_max + 1):
        ranges = []
        for p in names:
            if p == "v":
                ranges.append((v,))
            elif p == "l" and name == "eq5":
                ranges.append(range(-1, v + 2))
            else:
                ranges.append(range(0, v + 1))
        for combo in _product(ranges):
            params = dict(zip(names, combo))
            if is_valid(name, **params):
                yield params


def _product(ranges):
    if not ranges:
        yield ()
        return
    for x in ranges[0]:
        for rest in _product(ranges[1:]):
            yield (x, *rest)


def identity_sweep(v_max: int, names: tuple[str, ...] | None = None, v_min: int = 0) -> Iterator[IdentityVerdict]:
    for name in names or tuple(IDENTITIES):
        for params in parameter_tuples(name, v_max, v_min):
            yield verify_identity(name, **params)


@dataclass
class SweepSummary:
    counts: dict[str, int] = field(default_factory=dict)
    failures: dict[str, int] = field(default_factory=dict)
    first_failure: dict[str, IdentityVerdict] = field(default_factory=dict)

    def add(self, verdict: IdentityVerdict) -> None:
        self.counts[verdict.identity] = self.counts.get(verdict.identity, 0) + 1
        if not verdict.passed:
            self.failures[verdict.identity] = self.failures.get(verdict.identity, 0) + 1
            self.first_failure.setdefault(verdict.identity, verdict)

    def core_failures(self) -> int:
        return sum(n for name, n in self.failures.items() if not IDENTITIES[name].erratum_probe)

    def errata(self) -> list[str]:
        return sorted(name for name in self.failures if IDENTITIES[name].erratum_probe)


__all__ = [
    "CORE_IDENTITIES",
    "IDENTITIES",
    "IdentityVerdict",
    "IntersectionSpec",
    "LevelRange",
    "SweepSummary",
    "all_ones",
    "build_C",
    "build_H",
    "build_W",
    "identity_sweep",
    "is_valid",
    "level_count",
    "parameter_tuples",
    "verify_identity",
]
