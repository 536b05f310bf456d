"""Group selection, budget split, window extension and frame assembly."""

import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from slfg.errors import InvalidArgumentError
from slfg.reorganization import (
    SelectionConfig,
    allocate_budget,
    assemble_frames,
    build_plan,
    extend_group,
    score_gap,
    select_groups,
    uniform_subsample,
)
from slfg.sampling import Frame

from oracles import group_at, ranked, reference_allocation, reference_selection, synthetic_index


def cfg(**kw):
    return SelectionConfig(**kw)


def test_dynamic_examples():
    assert select_groups(ranked({4: 0.90, 2: 0.85, 9: 0.60}), cfg()) == [2, 4]
    assert select_groups(ranked({4: 0.90, 2: 0.50, 9: 0.49}), cfg()) == [4]


def test_gap_values():
    assert round(score_gap(0.90, 0.85), 4) == 0.0556
    assert round(score_gap(0.85, 0.60), 3) == 0.294
    assert score_gap(0.5, 0.5) == 0.0
    assert score_gap(0.9, 0.6, "absolute") == pytest.approx(0.3)


def test_fixed_strategies():
    scores = ranked({0: 0.9, 1: 0.89, 2: 0.88, 3: 0.1})
    assert select_groups(scores, cfg(strategy="top1")) == [0]
    assert select_groups(scores, cfg(strategy="topn", topn_n=3)) == [0, 1, 2]
    assert select_groups(scores, cfg(strategy="topn", topn_n=9)) == [0, 1, 2, 3]


def test_selection_preconditions():
    with pytest.raises(InvalidArgumentError):
        select_groups([], cfg())
    with pytest.raises(InvalidArgumentError):
        select_groups(list(reversed(ranked({0: 0.9, 1: 0.1}))), cfg())


def test_selection_matches_exact_reference():
    grid = [Fraction(k, 20) for k in range(1, 21)]
    for theta in (Fraction(1, 20), Fraction(1, 10), Fraction(1, 5)):
        for length in range(1, 4):
            for combo in itertools.combinations_with_replacement(reversed(grid), length):
                scores = ranked({i: float(v) for i, v in enumerate(combo)})
                got = select_groups(scores, cfg(threshold=float(theta)))
                assert len(got) == reference_selection(list(combo), theta)


def test_allocation_examples():
    assert allocate_budget([(0, 16, 0.0), (5, 16, 800.0)], 64, 10).extensions == (16, 16)
    three = allocate_budget([(1, 16, 160.0), (2, 16, 320.0), (3, 16, 480.0)], 64, 10)
    assert three.extensions == (6, 5, 5) and not three.over_budget
    over = allocate_budget([(i, 16, 160.0 * i) for i in range(5)], 64, 10)
    assert over.extensions == (0,) * 5 and over.over_budget


def test_remainder_prefers_longer_then_earlier():
    # ragged last group (4 frames) loses the tie-break to full groups
    # R = 41 - 36 = 5: one each, then the two leftovers go to the full groups
    alloc = allocate_budget([(3, 16, 480.0), (11, 4, 1760.0), (0, 16, 0.0)], 41, 10)
    assert alloc.extensions == (2, 1, 2)
    # a single leftover goes to the earlier of the two full groups
    alloc = allocate_budget([(3, 16, 480.0), (11, 4, 1760.0), (0, 16, 0.0)], 40, 10)
    assert alloc.extensions == (1, 1, 2)


def test_allocation_matches_dealing_reference():
    rng = random.Random(3)
    for _ in range(500):
        n = rng.randint(1, 6)
        starts = rng.sample(range(0, 200), n)
        sizes = [rng.randint(1, 16) for _ in range(n)]
        budget = rng.randint(1, 100)
        sel = [(i, f, s * 10.0) for i, (f, s) in enumerate(zip(sizes, starts))]
        alloc = allocate_budget(sel, budget, 10)
        ref, over = reference_allocation([(f * 10, s) for f, s in zip(sizes, starts)], sum(sizes), budget)
        assert list(alloc.extensions) == ref and alloc.over_budget == over


def test_extension_examples():
    mid = extend_group(group_at(160000, 16, 10000), 4, 10, 1800)
    assert mid.before == (150000, 140000) and mid.after == (320000, 330000)
    first = extend_group(group_at(0, 16, 10000), 4, 10, 1800)
    assert first.before == () and first.after == (160000, 170000, 180000, 190000)
    assert extend_group(group_at(0, 16, 10000), 0, 10, 1800).timestamps == []


def test_extension_skips_occupied_and_spills():
    g = group_at(160000, 16, 10000)
    ext = extend_group(g, 4, 10, 1800, occupied={150000, 320000})
    assert ext.before == (140000, 130000) and ext.after == (330000, 340000)
    last = extend_group(group_at(1760000, 4, 10000), 5, 10, 1799)
    assert last.after == () and len(last.before) == 5


def test_extension_rejects_negative():
    with pytest.raises(InvalidArgumentError):
        extend_group(group_at(0, 1, 10000), -1, 10, 100)


def test_assembly_examples():
    a, b = group_at(0, 16, 10000), group_at(800000, 16, 10000, 5)
    ext = [[Frame(0, t, str(t)) for t in range(160000, 320000, 10000)],
           [Frame(0, t, str(t)) for t in range(640000, 800000, 10000)]]
    frames, sub = assemble_frames([a, b], ext, 64)
    assert len(frames) == 64 and not sub
    stamps = [f.timestamp_ms for f in frames]
    assert stamps == sorted(set(stamps))


def test_overlapping_extensions_appear_once():
    a, b = group_at(0, 4, 10000), group_at(80000, 4, 10000, 1)
    shared = Frame(0, 50000, "x")
    frames, _ = assemble_frames([a, b], [[shared], [shared, Frame(0, 60000, "y")]], 64)
    assert [f.timestamp_ms for f in frames].count(50000) == 1


def test_over_budget_subsample():
    groups = [group_at(i * 160000, 16, 10000, i) for i in range(5)]
    frames, sub = assemble_frames(groups, [[] for _ in groups], 64)
    everything = [f for g in groups for f in g.frames]
    assert sub and len(frames) == 64
    assert frames == [everything[i * 80 // 64] for i in range(64)]
    assert uniform_subsample([1, 2, 3], 5) == [1, 2, 3]


def test_plan_on_fixture_layout():
    index = synthetic_index(1799, 10, 16)
    plan = build_plan(index, ranked({5: 0.9, 6: 0.88, 1: 0.5}), cfg())
    assert plan.selected == (5, 6)
    assert plan.extensions == (16, 16)
    assert len(plan.final_frames) == 64
    assert plan.frame_timestamps_s[0] == 640.0 and plan.frame_timestamps_s[-1] == 1270.0


def test_fixed_strategies_do_not_extend():
    index = synthetic_index(1799, 10, 16)
    plan = build_plan(index, ranked({5: 0.9, 6: 0.88}), cfg(strategy="top1"))
    assert plan.extensions == (0,) and len(plan.final_frames) == 16


@settings(max_examples=200, deadline=None)
@given(
    n_frames=st.integers(1, 300),
    group_size=st.integers(1, 32),
    budget=st.integers(1, 128),
    strategy=st.sampled_from(["top1", "topn", "dynamic"]),
    theta=st.sampled_from([0.05, 0.1, 0.2, 0.5]),
    seed=st.integers(0, 2**16),
)
def test_plan_never_exceeds_budget(n_frames, group_size, budget, strategy, theta, seed):
    index = synthetic_index((n_frames - 1) * 10 + 5, 10, group_size)
    rng = random.Random(seed)
    plan = build_plan(index, ranked({g.group_index: rng.random() for g in index.groups}),
                      cfg(max_frames=budget, strategy=strategy, threshold=theta, topn_n=3))
    stamps = [f.timestamp_ms for f in plan.final_frames]
    assert len(stamps) <= budget
    assert stamps == sorted(set(stamps))
