"""Terwilliger algebra of J(n, m, m+1) about an m-subset: closure, the block
algebra it should equal, its two bases, dimension counts, the thinness
symmetry criterion, and the even-corner comparison with J(n, m).

The closure of {A, E_0*, ..., E_{2m+1}*} is the only source of truth for
dim T; formula values are recorded next to it and disagreements become
erratum flags rather than exceptions.
"""

from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator

from .exact_linalg import (
    ExactMatrix,
    MatrixSpace,
    algebra_closure,
    embed_block,
    extract_block,
    kron,
)
from .incidence_graph import (
    DistancePartition,
    GeometryParams,
    HypothesisError,
    build_dual_idempotents,
    build_graph,
    build_johnson_graph,
    build_partition,
    johnson_dual_idempotents,
    verify_block_structure,
    verify_distance_partition,
)
from .intersection_matrices import LevelRange, build_C, build_H, level_count

log = logging.getLogger(__name__)

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


def _half_down(i: int) -> int:
    return i // 2


def _half_up(i: int) -> int:
    return (i + 1) // 2


def inner_sizes(m: int, i: int, j: int) -> tuple[int, int]:
    """Subset sizes of the factor inside x for block (i, j): m - floor(i/2), m - floor(j/2)."""
    return m - _half_down(i), m - _half_down(j)


def outer_sizes(i: int, j: int) -> tuple[int, int]:
    """Subset sizes of the factor outside x for block (i, j): ceil(i/2), ceil(j/2)."""
    return _half_up(i), _half_up(j)


def inner_levels(m: int, i: int, j: int) -> LevelRange:
    a, b = inner_sizes(m, i, j)
    return LevelRange.of(a, b, m)


def outer_levels(n: int, m: int, i: int, j: int) -> LevelRange:
    a, b = outer_sizes(i, j)
    return LevelRange.of(a, b, n - m)


@dataclass
class AlgebraInstance:
    params: GeometryParams
    partition: DistancePartition
    A: ExactMatrix
    E: list[ExactMatrix]
    T: MatrixSpace | None = None
    M: MatrixSpace | None = None

    @property
    def generators(self) -> list[ExactMatrix]:
        return [self.A, *self.E]

    @property
    def size(self) -> int:
        return len(self.partition)

    @property
    def D(self) -> int:
        return len(self.partition.classes) - 1

    def block_pairs(self) -> Iterator[tuple[int, int]]:
        for i in range(self.D + 1):
            for j in range(self.D + 1):
                yield i, j

    def nonempty(self, i: int) -> bool:
        return bool(self.partition.classes[i])


def build_instance(
    n: int,
    m: int,
    *,
    exploratory: bool = False,
    adjacency: ExactMatrix | None = None,
) -> AlgebraInstance:
    """Graph, partition and generators for (n, m).

    ``adjacency`` replaces the constructed adjacency matrix (vertex order as
    in the partition); used to run the checks against an external matrix.
    """
    params = GeometryParams(n, m)
    if n < 2 * m + 1:
        params.require("diameter", exploratory)
    part = build_partition(params)
    if adjacency is None:
        A = build_graph(params, part, exploratory=exploratory)
    else:
        if adjacency.shape != (len(part), len(part)):
            raise ValueError(f"adjacency is {adjacency.rows}x{adjacency.cols}, expected {len(part)}x{len(part)}")
        A = adjacency.retag(part.tag(), part.tag())
    return AlgebraInstance(params, part, A, build_dual_idempotents(part))


def compute_T(inst: AlgebraInstance, *, modulus: int | None = None) -> MatrixSpace:
    if inst.T is None:
        inst.T = algebra_closure(inst.generators, modulus=modulus)
    return inst.T


def _block_product(inst: AlgebraInstance, kind: str, i: int, j: int, l: int, s: int) -> ExactMatrix:
    n, m = inst.params.n, inst.params.m
    a, b = inner_sizes(m, i, j)
    c, d = outer_sizes(i, j)
    build = build_C if kind == "C" else build_H
    return embed_block(kron(build(a, b, l, m), build(c, d, s, n - m)), i, j, inst.partition)


def m_generators(inst: AlgebraInstance) -> Iterator[tuple[int, int, int, int, ExactMatrix]]:
    """Every L(C^l (x) C^s) over the full generating range, including dependent ones."""
    n, m = inst.params.n, inst.params.m
    for i, j in inst.block_pairs():
        if not (inst.nonempty(i) and inst.nonempty(j)):
            continue
        a, b = inner_sizes(m, i, j)
        c, d = outer_sizes(i, j)
        if c > n - m or d > n - m:
            continue
        for l in range(min(a, b) + 1):
            for s in range(min(c, d) + 1):
                yield i, j, l, s, _block_product(inst, "C", i, j, l, s)


def compute_M(inst: AlgebraInstance) -> MatrixSpace:
    if inst.M is None:
        space = MatrixSpace(inst.size)
        for *_, mat in m_generators(inst):
            space.insert(mat)
        inst.M = space
    return inst.M


def is_multiplication_closed(space: MatrixSpace) -> bool:
    basis = space.basis()
    return all(space.contains(x @ y) for x in basis for y in basis)


@dataclass
class SpaceVerdict:
    passed: bool
    dim_T: int
    dim_M: int
    exploratory: bool = False
    witness_side: str | None = None  # "T" if the witness lies in T but not M
    witness: ExactMatrix | None = None

    @property
    def label(self) -> str:
        verdict = PASS if self.passed else FAIL
        return f"exploratory:{verdict}" if self.exploratory else verdict


def verify_T_equals_M(inst: AlgebraInstance) -> SpaceVerdict:
    T, M = compute_T(inst), compute_M(inst)
    exploratory = not inst.params.theorem_ok
    if T.equals(M):
        return SpaceVerdict(True, T.dim(), M.dim(), exploratory)
    w = T.witness_outside(M)
    side = "T"
    if w is None:
        w = M.witness_outside(T)
        side = "M"
    return SpaceVerdict(False, T.dim(), M.dim(), exploratory, side, w)


# -- bases ------------------------------------------------------------------------


@dataclass
class BasisMember:
    i: int
    j: int
    g: int  # inner level (g or l)
    r: int  # outer level (r or s)
    matrix: ExactMatrix


@dataclass
class BasisFamily:
    kind: str  # "H" or "C"
    members: list[BasisMember]

    def __len__(self) -> int:
        return len(self.members)


def basis_family(inst: AlgebraInstance, kind: str) -> BasisFamily:
    if kind not in ("H", "C"):
        raise ValueError(f"basis kind must be 'H' or 'C', got {kind!r}")
    n, m = inst.params.n, inst.params.m
    members = []
    for i, j in inst.block_pairs():
        if not (inst.nonempty(i) and inst.nonempty(j)):
            continue
        for g in inner_levels(m, i, j):
            for r in outer_levels(n, m, i, j):
                members.append(BasisMember(i, j, g, r, _block_product(inst, kind, i, j, g, r)))
    return BasisFamily(kind, members)


@dataclass
class BasisVerdict:
    kind: str
    cardinality: int
    dim_T: int
    independent: bool
    spans_T: bool

    @property
    def passed(self) -> bool:
        return self.independent and self.spans_T and self.cardinality == self.dim_T


def verify_basis(inst: AlgebraInstance, family: BasisFamily) -> BasisVerdict:
    T = compute_T(inst)
    fresh = MatrixSpace(inst.size)
    for member in family.members:
        fresh.insert(member.matrix)
    independent = fresh.dim() == len(family)
    return BasisVerdict(family.kind, len(family), T.dim(), independent, fresh.equals(T))


def verify_bases(inst: AlgebraInstance) -> dict[str, BasisVerdict]:
    return {kind: verify_basis(inst, basis_family(inst, kind)) for kind in ("H", "C")}


def change_of_basis_unitriangular(inst: AlgebraInstance) -> bool:
    """Each C-member is an upper unitriangular combination of the H-members of its block.

    The coefficient of an H-member is read off the C-member at one cell of the
    H-member's support; the combination is then rebuilt and compared exactly.
    """
    h_family = basis_family(inst, "H")
    c_family = basis_family(inst, "C")
    by_block: dict[tuple[int, int], list[BasisMember]] = {}
    for member in h_family.members:
        by_block.setdefault((member.i, member.j), []).append(member)
    for cm in c_family.members:
        hs = by_block[cm.i, cm.j]
        rebuilt = ExactMatrix.zeros(inst.size, inst.size)
        for hm in hs:
            cell, _ = next(hm.matrix.items())
            coeff = cm.matrix[cell]
            earlier = (hm.g, hm.r) < (cm.g, cm.r)
            if earlier and coeff:
                return False
            if (hm.g, hm.r) == (cm.g, cm.r) and coeff != 1:
                return False
            if coeff:
                rebuilt = rebuilt + hm.matrix.scale(coeff)
        if rebuilt != cm.matrix:
            return False
    return True


# -- dimensions -------------------------------------------------------------------


def _require_theorem(n: int, m: int) -> None:
    if n < 3 * m:
        raise HypothesisError(f"dimension formulas need n >= 3m, got n={n}, m={m}")


def dim_closed_form(n: int, m: int) -> int:
    _require_theorem(n, m)
    base = (m + 1) * (m + 2) * (m + 3) * (3 * m + 10) // 12
    if n == 3 * m:
        return base - 4
    if n == 3 * m + 1:
        return base - 1
    return base


def dim_sum_GR(n: int, m: int) -> int:
    _require_theorem(n, m)
    return _sum_gr(n, m, range(2 * m + 2))


def _sum_gr(n: int, m: int, classes) -> int:
    total = 0
    for i in classes:
        for j in classes:
            a, b = inner_sizes(m, i, j)
            c, d = outer_sizes(i, j)
            total += level_count(a, b, m) * level_count(c, d, n - m)
    return total


def corner_sum_GR(n: int, m: int) -> int:
    return _sum_gr(n, m, range(0, 2 * m + 1, 2))


# -- thinness and the even corner -------------------------------------------------


@dataclass
class ThinVerdict:
    passed: bool
    checked: int
    witness: tuple[int, int] | None = None  # (basis index, class index)


def verify_thin(inst: AlgebraInstance) -> ThinVerdict:
    """E_i* B E_i* is symmetric for every basis matrix B of T and every class i."""
    checked = 0
    for b, B in enumerate(compute_T(inst).basis()):
        for i in range(inst.D + 1):
            block = extract_block(B, i, i, inst.partition)
            checked += 1
            if block != block.T:
                return ThinVerdict(False, checked, (b, i))
    return ThinVerdict(True, checked)


@dataclass
class CornerVerdict:
    passed: bool
    corner_dim: int
    johnson_dim: int
    index_count: int


def even_corner(inst: AlgebraInstance) -> MatrixSpace:
    space = MatrixSpace(inst.size)
    m = inst.params.m
    for B in compute_T(inst).basis():
        for i in range(m + 1):
            for j in range(m + 1):
                block = extract_block(B, 2 * i, 2 * j, inst.partition)
                if not block.is_zero():
                    space.insert(embed_block(block, 2 * i, 2 * j, inst.partition))
    return space


def johnson_terwilliger(n: int, m: int) -> MatrixSpace:
    A = build_johnson_graph(n, m)
    return algebra_closure([A, *johnson_dual_idempotents(n, m)])


def verify_corner(inst: AlgebraInstance) -> CornerVerdict:
    n, m = inst.params.n, inst.params.m
    corner = even_corner(inst).dim()
    johnson = johnson_terwilliger(n, m).dim()
    return CornerVerdict(corner == johnson, corner, johnson, corner_sum_GR(n, m))


# -- reports ----------------------------------------------------------------------


@dataclass
class AlgebraReport:
    n: int
    m: int
    base_size: int
    dim_T_closure: int | None = None
    dim_M: int | None = None
    dim_sum_GR: int | None = None
    dim_closed_form: int | None = None
    verdicts: dict[str, str] = field(default_factory=dict)
    erratum_flags: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    details: dict[str, object] = field(default_factory=dict)

    CHECKS = (
        "t_eq_m",
        "basis_h",
        "basis_c",
        "thin_symmetry",
        "corner_dim",
        "block_structure",
        "distance_partition",
    )

    @property
    def failed(self) -> list[str]:
        return [name for name, v in self.verdicts.items() if v == FAIL]

    @property
    def ok(self) -> bool:
        return not self.failed

    def to_dict(self, *, timings: bool = False) -> dict:
        return {
            "params": {"n": self.n, "m": self.m, "base_size": self.base_size},
            "dims": {
                "t_closure": self.dim_T_closure,
                "m_span": self.dim_M,
                "sum_gr": self.dim_sum_GR,
                "closed_form": self.dim_closed_form,
            },
            "checks": {name: self.verdicts.get(name, SKIPPED) for name in self.CHECKS},
            "details": self.details,
            "erratum_flags": list(self.erratum_flags),
            "timings_ms": {k: round(v, 3) for k, v in self.timings.items()} if timings else {},
        }

    def to_json(self, *, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings=timings), indent=2, sort_keys=False) + "\n"


def _verdict(ok: bool, exploratory: bool = False) -> str:
    v = PASS if ok else FAIL
    return f"exploratory:{v}" if exploratory else v


def dimension_flags(n: int, m: int, closure: int | None) -> list[str]:
    """Erratum flags comparing the closed form, the counting sum and (if given) the closure."""
    if n < 3 * m:
        return []
    flags = []
    closed, counted = dim_closed_form(n, m), dim_sum_GR(n, m)
    if closed != counted:
        flags.append(f"closed_form_vs_sum_gr: n={n} m={m} closed form {closed} != counting sum {counted}")
    if closure is not None and closure != closed:
        flags.append(f"closed_form_vs_closure: n={n} m={m} closed form {closed} != closure {closure}")
    if closure is not None and closure != counted:
        flags.append(f"sum_gr_vs_closure: n={n} m={m} counting sum {counted} != closure {closure}")
    return flags


@contextmanager
def _timed(report: AlgebraReport, phase: str):
    start = time.perf_counter()
    yield
    report.timings[phase] = (time.perf_counter() - start) * 1000.0


def run_algebra(
    n: int,
    m: int,
    *,
    exploratory: bool = False,
    modulus: int | None = None,
    checks: tuple[str, ...] = AlgebraReport.CHECKS,
    adjacency: ExactMatrix | None = None,
) -> tuple[AlgebraReport, AlgebraInstance]:
    """Build the instance, compute T and M, and run the requested checks."""
    params = GeometryParams(n, m)
    if not exploratory:
        params.require("theorem")
    report = AlgebraReport(n, m, params.base_size)
    hyp = params.theorem_ok
    with _timed(report, "build"):
        inst = build_instance(n, m, exploratory=exploratory, adjacency=adjacency)
    if "distance_partition" in checks and params.diameter_ok:
        with _timed(report, "distance_partition"):
            dc = verify_distance_partition(params, inst.A, inst.partition)
        report.verdicts["distance_partition"] = _verdict(dc.passed)
        report.details["diameter"] = dc.diameter
    if "block_structure" in checks and params.diameter_ok:
        with _timed(report, "block_structure"):
            blocks = verify_block_structure(params, inst.A, inst.partition)
        bad = sorted(k for k, v in blocks.items() if not v.passed)
        report.verdicts["block_structure"] = _verdict(not bad)
        if bad:
            report.details["block_mismatches"] = [list(k) for k in bad]
    with _timed(report, "closure_T"):
        T = compute_T(inst, modulus=modulus)
    report.dim_T_closure = T.dim()
    with _timed(report, "span_M"):
        M = compute_M(inst)
    report.dim_M = M.dim()
    if "t_eq_m" in checks:
        with _timed(report, "t_eq_m"):
            sv = verify_T_equals_M(inst)
        report.verdicts["t_eq_m"] = sv.label
        if not sv.passed:
            report.details["t_eq_m_witness_side"] = sv.witness_side
    if hyp:
        report.dim_sum_GR = dim_sum_GR(n, m)
        report.dim_closed_form = dim_closed_form(n, m)
        report.erratum_flags.extend(dimension_flags(n, m, T.dim()))
    for kind, name in (("H", "basis_h"), ("C", "basis_c")):
        if name in checks:
            with _timed(report, name):
                bv = verify_basis(inst, basis_family(inst, kind))
            report.verdicts[name] = _verdict(bv.passed, not hyp)
            report.details[f"{name}_size"] = bv.cardinality
    if "thin_symmetry" in checks:
        with _timed(report, "thin_symmetry"):
            tv = verify_thin(inst)
        report.verdicts["thin_symmetry"] = _verdict(tv.passed, not hyp)
    if "corner_dim" in checks:
        with _timed(report, "corner_dim"):
            cv = verify_corner(inst)
        report.verdicts["corner_dim"] = _verdict(cv.passed, not hyp)
        report.details["corner"] = {"even_corner": cv.corner_dim, "johnson_T": cv.johnson_dim, "sum_gr": cv.index_count}
    log.info("n=%d m=%d dim T=%d dim M=%d", n, m, report.dim_T_closure, report.dim_M)
    return report, inst


__all__ = [
    "AlgebraInstance",
    "AlgebraReport",
    "BasisFamily",
    "BasisMember",
    "basis_family",
    "build_instance",
    "change_of_basis_unitriangular",
    "compute_M",
    "compute_T",
    "corner_sum_GR",
    "dim_closed_form",
    "dim_sum_GR",
    "dimension_flags",
    "even_corner",
    "is_multiplication_closed",
    "johnson_terwilliger",
    "run_algebra",
    "verify_T_equals_M",
    "verify_bases",
    "verify_basis",
    "verify_corner",
    "verify_thin",
]
