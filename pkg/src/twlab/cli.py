"""Command line front end.

Exit status: 0 when every non-exploratory check passed, 1 when a check
failed (any report is still written), 2 on usage errors, including an
ambient matrix space above the resource cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .exact_linalg import DEFAULT_PRIME, ExactMatrix, read_matrix_market, write_matrix_market
from .incidence_graph import (
    GeometryParams,
    HypothesisError,
    build_dual_idempotents,
    build_graph,
    build_partition,
    verify_block_structure,
    verify_distance_partition,
    write_edge_list,
)
from .intersection_matrices import CORE_IDENTITIES, IDENTITIES, SweepSummary, identity_sweep
from .terwilliger import (
    FAIL,
    AlgebraReport,
    build_instance,
    compute_T,
    dim_closed_form,
    dim_sum_GR,
    run_algebra,
)

log = logging.getLogger("twlab")

DEFAULT_AMBIENT_CAP = 50_000
COMMANDS = ("graph", "identities", "algebra", "basis", "thin", "corner", "dims", "export")
CSV_HEADER = ["m", "n", "sum_gr", "closed_form", "closure", "flag"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    m: int | None = None
    v_max: int = 6
    m_max: int = 1
    n_max: int = 6
    exploratory: bool = False
    out: Path | None = None
    format: str = "json"
    timings: bool = False
    modular: bool = False
    errata: bool = False
    closure: bool = True
    adjacency: Path | None = None
    what: str = "adjacency"
    index: int | None = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")


def ambient_cap() -> int:
    raw = os.environ.get("TWLAB_AMBIENT_CAP")
    if raw is None:
        return DEFAULT_AMBIENT_CAP
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"TWLAB_AMBIENT_CAP must be an integer, got {raw!r}") from None


def _params(cfg: RunConfig, level: str) -> GeometryParams:
    if cfg.n is None or cfg.m is None:
        raise UsageError(f"{cfg.command} needs --n and --m")
    try:
        params = GeometryParams(cfg.n, cfg.m)
        params.require(level, cfg.exploratory)
    except HypothesisError as exc:
        raise UsageError(f"{exc}; pass --exploratory to run anyway") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ambient = params.num_vertices**2
    cap = ambient_cap()
    if ambient > cap:
        raise UsageError(f"ambient size |X|^2 = {ambient} exceeds the cap {cap} (set TWLAB_AMBIENT_CAP)")
    return params


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_adjacency(cfg: RunConfig) -> ExactMatrix | None:
    if cfg.adjacency is None:
        return None
    try:
        with open(cfg.adjacency, encoding="utf-8") as fh:
            return read_matrix_market(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read adjacency {cfg.adjacency}: {exc}") from None


def _report_exit(report: AlgebraReport) -> int:
    return EXIT_FAIL if any(v == FAIL for v in report.verdicts.values()) else EXIT_OK


# -- commands ---------------------------------------------------------------------


def cmd_graph(cfg: RunConfig) -> int:
    params = _params(cfg, "diameter")
    part = build_partition(params)
    A = _load_adjacency(cfg)
    if A is None:
        A = build_graph(params, part, exploratory=cfg.exploratory)
    elif A.shape != (len(part), len(part)):
        raise UsageError(f"adjacency is {A.rows}x{A.cols}, expected {len(part)}x{len(part)}")
    if cfg.format == "matrix-market":
        buf = io.StringIO()
        write_matrix_market(A, buf, comment=f"J({params.n},{params.m},{params.m + 1}) adjacency, class-major order")
        _write(cfg.out, buf.getvalue())
        return EXIT_OK
    if cfg.format == "edges":
        buf = io.StringIO()
        write_edge_list(A, part.vertices, buf)
        _write(cfg.out, buf.getvalue())
        return EXIT_OK
    record: dict[str, object] = {
        "params": {"n": params.n, "m": params.m, "base_size": params.base_size},
        "vertices": len(part),
        "edges": A.nnz // 2,
        "class_sizes": part.sizes,
    }
    ok = True
    if params.diameter_ok:
        dc = verify_distance_partition(params, A, part)
        blocks = verify_block_structure(params, A, part)
        bad = sorted(k for k, v in blocks.items() if not v.passed)
        record["checks"] = {
            "distance_partition": "pass" if dc.passed else "fail",
            "block_structure": "pass" if not bad else "fail",
        }
        record["diameter"] = dc.diameter
        if bad:
            first = blocks[bad[0]]
            record["first_block_mismatch"] = {
                "block": list(bad[0]), "form": first.form, "cell": list(first.cell),
                "actual": str(first.actual), "expected": str(first.expected),
            }
        ok = dc.passed and not bad
    _write(cfg.out, json.dumps(record, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_identities(cfg: RunConfig) -> int:
    if cfg.v_max < 0:
        raise UsageError("--v-max must be >= 0")
    names = tuple(IDENTITIES) if cfg.errata else CORE_IDENTITIES
    summary = SweepSummary()
    lines = []
    for verdict in identity_sweep(cfg.v_max, names):
        summary.add(verdict)
        lines.append(json.dumps(verdict.to_record(), sort_keys=True))
    _write(cfg.out, "\n".join(lines) + "\n")
    for name in names:
        log.info("%-10s %6d instances, %d failed", name, summary.counts.get(name, 0), summary.failures.get(name, 0))
    if summary.errata():
        log.warning("erratum probes failing: %s", ", ".join(summary.errata()))
    return EXIT_FAIL if summary.core_failures() else EXIT_OK


_CHECKS_FOR = {
    "algebra": AlgebraReport.CHECKS,
    "basis": ("basis_h", "basis_c"),
    "thin": ("thin_symmetry",),
    "corner": ("corner_dim",),
}


def cmd_algebra(cfg: RunConfig) -> int:
    _params(cfg, "theorem")
    adjacency = _load_adjacency(cfg)
    try:
        report, _ = run_algebra(
            cfg.n,
            cfg.m,
            exploratory=cfg.exploratory,
            modulus=DEFAULT_PRIME if cfg.modular else None,
            checks=_CHECKS_FOR[cfg.command],
            adjacency=adjacency,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(cfg.out, report.to_json(timings=cfg.timings))
    return _report_exit(report)


def dims_rows(m_max: int, n_max: int, with_closure: bool = True) -> list[list[object]]:
    rows = []
    cap = ambient_cap()
    for m in range(1, m_max + 1):
        for n in range(3 * m, n_max + 1):
            counted, closed = dim_sum_GR(n, m), dim_closed_form(n, m)
            closure = None
            if with_closure and GeometryParams(n, m).num_vertices ** 2 <= cap:
                closure = compute_T(build_instance(n, m)).dim()
            values = {counted, closed} | ({closure} if closure is not None else set())
            if len(values) > 1:
                flag = "erratum?"
            elif closure is None:
                flag = "skipped"
            else:
                flag = "ok"
            rows.append([m, n, counted, closed, "" if closure is None else closure, flag])
    return rows


def cmd_dims(cfg: RunConfig) -> int:
    if cfg.m_max < 1:
        raise UsageError("--m-max must be >= 1")
    rows = dims_rows(cfg.m_max, cfg.n_max, cfg.closure)
    if cfg.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)
        text = buf.getvalue()
    elif cfg.format == "json":
        text = json.dumps([dict(zip(CSV_HEADER, r)) for r in rows], indent=2) + "\n"
    else:
        raise UsageError(f"dims writes csv or json, not {cfg.format}")
    _write(cfg.out, text)
    # a closure/counting-sum mismatch contradicts the basis theorem; the closed form alone does not
    bad = [r for r in rows if r[4] != "" and r[4] != r[2]]
    return EXIT_FAIL if bad else EXIT_OK


def cmd_export(cfg: RunConfig) -> int:
    params = _params(cfg, "diameter")
    if cfg.format not in ("matrix-market", "edges"):
        raise UsageError("export writes matrix-market or edges")
    part = build_partition(params)
    A = build_graph(params, part, exploratory=cfg.exploratory)
    if cfg.what == "adjacency":
        mats = [("adjacency", A)]
    elif cfg.what == "dual":
        E = build_dual_idempotents(part)
        idx = range(len(E)) if cfg.index is None else [cfg.index]
        if cfg.index is not None and not 0 <= cfg.index < len(E):
            raise UsageError(f"--index must be in 0..{len(E) - 1}")
        mats = [(f"E{i}", E[i]) for i in idx]
    elif cfg.what == "t-basis":
        inst = build_instance(params.n, params.m, exploratory=cfg.exploratory)
        mats = [(f"T{k:04d}", B) for k, B in enumerate(compute_T(inst).basis())]
    else:
        raise UsageError(f"unknown export target {cfg.what!r}")
    if cfg.format == "edges":
        if cfg.what != "adjacency":
            raise UsageError("edge lists are only written for the adjacency matrix")
        buf = io.StringIO()
        write_edge_list(A, part.vertices, buf)
        _write(cfg.out, buf.getvalue())
        return EXIT_OK
    if len(mats) == 1:
        buf = io.StringIO()
        write_matrix_market(mats[0][1], buf, comment=mats[0][0])
        _write(cfg.out, buf.getvalue())
        return EXIT_OK
    if cfg.out is None:
        raise UsageError("exporting several matrices needs --out DIR")
    cfg.out.mkdir(parents=True, exist_ok=True)
    for name, mat in mats:
        buf = io.StringIO()
        write_matrix_market(mat, buf, comment=name)
        _write(cfg.out / f"{name}.mtx", buf.getvalue())
    return EXIT_OK


HANDLERS: dict[str, Callable[[RunConfig], int]] = {
    "graph": cmd_graph,
    "identities": cmd_identities,
    "algebra": cmd_algebra,
    "basis": cmd_algebra,
    "thin": cmd_algebra,
    "corner": cmd_algebra,
    "dims": cmd_dims,
    "export": cmd_export,
}


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"twlab {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


# -- self test ---------------------------------------------------------------------


def seed_check() -> list[tuple[str, bool]]:
    """Cheap smoke tests drawn from the directly checkable examples."""
    from .exact_linalg import MatrixSpace, algebra_closure, kron
    from .intersection_matrices import build_C, build_W, level_count
    from .subsets import SubsetCode, binomial, enumerate_subsets, intersect_size

    def s(*xs, v):
        return SubsetCode.from_elements(xs, v)

    I2 = ExactMatrix.identity(2)
    N = ExactMatrix(2, 2, {(0, 1): 1})
    M = ExactMatrix.from_dense([[1, 2], [3, 4]])
    J = ExactMatrix.from_dense([[1, 1], [1, 1]])
    space = MatrixSpace(2)
    space.insert(I2)
    space.insert(J - I2)
    again = MatrixSpace(2)
    again.insert(M)
    checks = [
        ("binomial(4,2) = 6", binomial(4, 2) == 6),
        ("binomial(5,-1) = 0", binomial(5, -1) == 0),
        ("colex C(3,2)", [str(x) for x in enumerate_subsets(3, 2)] == ["{1,2}", "{1,3}", "{2,3}"]),
        ("C(3,0) = [empty]", [x.mask for x in enumerate_subsets(3, 0)] == [0]),
        ("|{1,2} & {2,3}| = 1", intersect_size(s(1, 2, v=4), s(2, 3, v=4)) == 1),
        ("|{1,2} & {3,4}| = 0", intersect_size(s(1, 2, v=4), s(3, 4, v=4)) == 0),
        ("I @ M = M", I2 @ M == M),
        ("N @ N = 0", (N @ N).is_zero()),
        ("I_1 (x) M = M", kron(ExactMatrix.identity(1), M) == M),
        ("insert 7M after M is dependent", not again.insert(M.scale(7))),
        ("J in Span{I, J - I}", space.contains(J)),
        ("closure{I} has dim 1", algebra_closure([ExactMatrix.identity(3)]).dim() == 1),
        ("closure{N} has dim 1", algebra_closure([N]).dim() == 1),
        ("W_{k,k} = I", build_W(2, 2, 4) == ExactMatrix.identity(6)),
        ("C^0 is all ones", all(x == 1 for _, x in build_C(1, 2, 0, 4).items()) and build_C(1, 2, 0, 4).nnz == 24),
        ("level_count(1,1,2) = 2", level_count(1, 1, 2) == 2),
    ]
    return checks


# -- argument parsing --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twlab", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=f"twlab {__version__}")
    parser.add_argument("--seed-check", action="store_true", help="run the built-in smoke tests and exit")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command")

    def common(p: argparse.ArgumentParser, nm: bool = True) -> None:
        if nm:
            p.add_argument("--n", type=int, required=True)
            p.add_argument("--m", type=int, required=True)
            p.add_argument("--exploratory", action="store_true", help="allow parameters below the theorem hypotheses")
        p.add_argument("--out", type=Path, default=None, help="output path (default: stdout)")

    p = sub.add_parser("graph", help="build J(n,m,m+1), check distances and blocks")
    common(p)
    p.add_argument("--format", choices=("json", "matrix-market", "edges"), default="json")
    p.add_argument("--adjacency", type=Path, help="check this Matrix Market adjacency instead of building one")

    p = sub.add_parser("identities", help="exhaustive sweep of the intersection matrix identities")
    common(p, nm=False)
    p.add_argument("--v-max", type=int, default=6)
    p.add_argument("--errata", action="store_true", help="also sweep the erratum probes")

    for name, help_ in (
        ("algebra", "closure T, algebra M, bases, thinness, corner"),
        ("basis", "the two bases of T"),
        ("thin", "symmetry of E_i* T E_i*"),
        ("corner", "even corner of T against the Johnson graph algebra"),
    ):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--timings", action="store_true", help="record per-phase timings (report is no longer byte-stable)")
        p.add_argument("--modular", action="store_true", help="predict the closure over GF(p) first")
        p.add_argument("--adjacency", type=Path, help="use this Matrix Market adjacency instead of building one")

    p = sub.add_parser("dims", help="dimension table: counting sum, closed form, closure")
    common(p, nm=False)
    p.add_argument("--m-max", type=int, default=1)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-closure", dest="closure", action="store_false", help="skip the closure column")

    p = sub.add_parser("export", help="write matrices as Matrix Market or an edge list")
    common(p)
    p.add_argument("--what", choices=("adjacency", "dual", "t-basis"), default="adjacency")
    p.add_argument("--index", type=int, default=None, help="class index for --what dual")
    p.add_argument("--format", choices=("matrix-market", "edges"), default="matrix-market")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.seed_check:
        results = seed_check()
        for name, ok in results:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
        return EXIT_OK if all(ok for _, ok in results) else EXIT_FAIL
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    return run(RunConfig(**fields))


if __name__ == "__main__":
    sys.exit(main())
