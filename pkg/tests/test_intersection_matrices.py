import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twlab.exact_linalg import ExactMatrix, space_dim, span
from twlab.intersection_matrices import (
    CORE_IDENTITIES,
    IDENTITIES,
    IntersectionSpec,
    LevelRange,
    SweepSummary,
    all_ones,
    build_C,
    build_H,
    build_W,
    identity_sweep,
    is_valid,
    level_count,
    parameter_tuples,
    verify_identity,
)

import oracles


@st.composite
def sizes(draw, v_max=6):
    v = draw(st.integers(0, v_max))
    return draw(st.integers(0, v)), draw(st.integers(0, v)), v


def test_small_examples():
    assert build_W(1, 2, 3).to_dense() == [[1, 1, 0], [1, 0, 1], [0, 1, 1]]
    assert build_C(2, 2, 1, 4).to_dense() == [
        [2, 1, 1, 1, 1, 0],
        [1, 2, 1, 1, 0, 1],
        [1, 1, 2, 0, 1, 1],
        [1, 1, 0, 2, 1, 1],
        [1, 0, 1, 1, 2, 1],
        [0, 1, 1, 1, 1, 2],
    ]
    assert build_W(0, 1, 2).to_dense() == [[1, 1]]
    assert build_C(1, 1, 1, 3) == ExactMatrix.identity(3)


def test_tags():
    w = build_W(1, 2, 4)
    assert (w.row_tag, w.col_tag) == ("C(4,1)", "C(4,2)")


def test_zero_convention():
    assert build_C(2, 2, -1, 4).is_zero()
    assert build_C(2, 2, 3, 4).is_zero()
    assert build_H(2, 2, 3, 4).is_zero()


@given(sizes())
@settings(max_examples=50)
def test_builders_match_oracle(s):
    i, j, v = s
    assert build_W(i, j, v).to_dense() == oracles.inclusion(i, j, v)
    for l in range(-1, min(i, j) + 2):
        assert build_C(i, j, l, v).to_dense() == oracles.intersection_binom(i, j, l, v)
        assert build_H(i, j, l, v).to_dense() == oracles.intersection_indicator(i, j, l, v)


@given(sizes())
@settings(max_examples=50)
def test_level_matrices_partition_ones(s):
    i, j, v = s
    total = ExactMatrix.zeros(*build_W(i, j, v).shape)
    for g in range(min(i, j) + 1):
        total = total + build_H(i, j, g, v)
    assert total == all_ones(i, j, v)
    # C^0 is all ones
    assert build_C(i, j, 0, v) == all_ones(i, j, v)


@given(sizes())
@settings(max_examples=50)
def test_transpose_symmetry(s):
    i, j, v = s
    for l in range(min(i, j) + 1):
        assert build_C(i, j, l, v).T == build_C(j, i, l, v)
        assert build_H(i, j, l, v).T == build_H(j, i, l, v)


@given(sizes())
@settings(max_examples=50)
def test_nonzero_levels_are_independent(s):
    i, j, v = s
    levels = LevelRange.of(i, j, v)
    assert len(levels) == level_count(i, j, v) == oracles.level_count(i, j, v)
    hs = [build_H(i, j, g, v) for g in levels]
    assert all(not h.is_zero() for h in hs)
    assert space_dim(span(hs, *hs[0].shape)) == len(hs)
    cs = [build_C(i, j, g, v) for g in levels]
    assert space_dim(span(cs, *cs[0].shape)) == len(cs)


def test_level_count_examples():
    assert level_count(1, 1, 2) == 2
    assert level_count(3, 3, 4) == 2
    assert level_count(2, 3, 4) == 2
    assert level_count(0, 5, 5) == 1


def test_out_of_range_sizes():
    with pytest.raises(ValueError):
        build_W(3, 1, 2)
    with pytest.raises(ValueError):
        IntersectionSpec("C", 1, 1, 2)
    with pytest.raises(ValueError):
        IntersectionSpec("X", 1, 1, 2, 0)
    assert IntersectionSpec("H", 1, 1, 2, 1).build() == build_H(1, 1, 1, 2)


@pytest.mark.parametrize(
    "name, params",
    [
        ("eq1", dict(i=1, j=2, k=3, v=5)),
        ("eq5", dict(i=2, j=3, l=1, v=6)),
        ("i", dict(i=1, j=2, k=2, v=4)),
        ("ii", dict(i=2, j=2, k=3, l=1, v=5)),
        ("iii", dict(i=1, j=2, k=3, v=5)),
        ("iv", dict(i=1, j=2, k=2, l=1, v=5)),
        ("v", dict(i=2, j=2, k=2, l=1, s=1, v=5)),
        ("6", dict(i=2, j=3, v=6)),
        ("7", dict(i=1, j=2, k=3, v=5)),
    ],
)
def test_identity_examples(name, params):
    verdict = verify_identity(name, **params)
    assert verdict.passed, verdict.to_record()
    assert verdict.to_record() == {"identity": name, "params": params, "passed": True}


def test_identity_domain_rejection():
    assert not is_valid("eq1", i=2, j=1, k=3, v=4)
    with pytest.raises(ValueError, match="outside the domain"):
        verify_identity("eq1", i=2, j=1, k=3, v=4)
    with pytest.raises(ValueError, match="unknown identity"):
        verify_identity("viii", i=1, v=2)
    with pytest.raises(TypeError):
        is_valid("eq1", i=1, j=1, v=2)


def test_printed_iv_reports_witness():
    verdict = verify_identity("iv-printed", i=0, j=1, k=1, l=1, v=2)
    assert not verdict.passed and verdict.erratum_probe
    rec = verdict.to_record()
    assert rec["erratum_probe"] is True
    assert rec["witness"]["lhs"] != rec["witness"]["rhs"]
    assert verify_identity("iv", i=0, j=1, k=1, l=1, v=2).passed


def test_sweep_small_all_core_pass():
    summary = SweepSummary()
    for verdict in identity_sweep(5):
        summary.add(verdict)
    assert summary.core_failures() == 0
    assert summary.errata() == ["iv-printed"]
    assert set(summary.counts) == set(IDENTITIES)
    assert set(CORE_IDENTITIES) == set(IDENTITIES) - {"iv-printed"}


def test_parameter_tuples_are_valid_and_deterministic():
    a = list(parameter_tuples("v", 4))
    assert a == list(parameter_tuples("v", 4))
    assert all(is_valid("v", **p) for p in a)
    assert any(p["l"] == -1 for p in parameter_tuples("eq5", 3))
