import random

import pytest

from conftest import arrable_of, make_tuple, trace_relation
from oracles import (cct_oracle, confusion_oracle, first_witness_oracle,
                     join_pairs_oracle, split_runs_oracle)
from vaquery.errors import EmptyRow, IllegalColumnKind, UnknownColumn
from vaquery.model import BoundingBox, FeatureVector, Relation, TRACE_SCHEMA
from vaquery.operators import (BBoxTest, BBPattern, CctOption, Comparison,
                               ComparisonCounter, Direction8, ScalarPairPredicate,
                               SMatchProbe, aggregate, cct, cct_join, cjoin,
                               count_star, direction, element_count,
                               group_count, hash_equi_join, nl_join, project,
                               r2a, select, split_runs)
from vaquery.similarity import MatchCondition, MatchPolarity, Metric

COS = MatchCondition(Metric.COSINE, 0.9)


# --- r2a ---------------------------------------------------------------------

def test_r2a_groups_and_orders():
    rel = trace_relation([
        (2, 1, "person", (0, 0, 1, 1), (1, 0)),
        (1, 1, "person", (0, 0, 1, 1), (1, 0)),
        (2, 2, "person", (0, 0, 1, 1), (0, 1)),
    ])
    ar = r2a(rel, "oid", "fid")
    by_key = {row.key: row for row in ar.rows}
    assert by_key[1].column("fid") == (1, 2)
    assert by_key[2].column("fid") == (2,)


def test_r2a_fig_shape_group_on_oid_order_on_ts():
    # one object in frames 1..k, another only in frame 2
    records = [(f, 1, "person", (0, 0, 1, 1), (1, 0)) for f in range(1, 6)]
    records.append((2, 2, "person", (5, 5, 1, 1), (0, 1)))
    ar = r2a(trace_relation(records), "oid", "ts")
    assert [row.key for row in ar.rows] == [1, 2]
    assert ar.rows[0].column("fid") == (1, 2, 3, 4, 5)
    assert ar.rows[1].column("fid") == (2,)


def test_r2a_empty_relation():
    ar = r2a(Relation(TRACE_SCHEMA, ()), "oid", "fid")
    assert len(ar.rows) == 0
    assert group_count(ar) == 0


def test_r2a_rejects_vector_columns():
    rel = trace_relation([(1, 1, "person", (0, 0, 1, 1), (1, 0))])
    with pytest.raises(IllegalColumnKind):
        r2a(rel, "fv", "fid")
    with pytest.raises(IllegalColumnKind):
        r2a(rel, "oid", "bb")


# --- runs and cct --------------------------------------------------------------

def test_split_runs_matches_oracle():
    for fids in [(1, 2, 3), (2, 13), (1,), (1, 2, 5, 6, 7, 20), ()]:
        got = [(r.start_index, r.end_index) for r in split_runs(fids)]
        expected = [(run[0], run[-1] + 1) for run in split_runs_oracle(fids)]
        assert got == expected


def test_cct_appendix_example_both():
    # oid 1 appears in consecutive frames 1..11; oid 2 in frames 2 and 13
    ar = arrable_of({
        1: {"fid": list(range(1, 12)), "ts": [float(f) for f in range(1, 12)]},
        2: {"fid": [2, 13], "ts": [2.0, 13.0]},
    })
    out = cct(ar, CctOption.BOTH)
    assert out.rows[0].column("fid") == (1, 11)
    assert out.rows[1].column("fid") == (2, 13)
    # oracle agreement
    for row, original in zip(out.rows, ar.rows):
        keep = cct_oracle(original.column("fid"), "both")
        assert row.column("fid") == tuple(original.column("fid")[i] for i in keep)


def test_cct_appendix_example_first():
    ar = arrable_of({
        1: {"fid": list(range(1, 12))},
        2: {"fid": [2, 13]},
    })
    out = cct(ar, CctOption.FIRST)
    assert out.rows[0].column("fid") == (1,)
    assert out.rows[1].column("fid") == (2, 13)


def test_cct_last():
    ar = arrable_of({1: {"fid": [1, 2, 3, 9, 10]}})
    assert cct(ar, CctOption.LAST).rows[0].column("fid") == (3, 10)


def test_cct_singleton_run_unchanged():
    ar = arrable_of({1: {"fid": [5], "ts": [5.0]}})
    for option in CctOption:
        assert cct(ar, option).rows[0].column("fid") == (5,)


def test_cct_both_does_not_duplicate_singletons():
    ar = arrable_of({2: {"fid": [2, 13]}})
    assert cct(ar, CctOption.BOTH).rows[0].column("fid") == (2, 13)


def test_cct_gap_threshold():
    ar = arrable_of({1: {"fid": [1, 3, 5, 10]}})
    assert cct(ar, CctOption.FIRST, gap_threshold=2).rows[0].column("fid") == (1, 10)
    assert cct(ar, CctOption.FIRST, gap_threshold=1).rows[0].column("fid") == (1, 3, 5, 10)


def test_cct_idempotent():
    rng = random.Random(3)
    for _ in range(30):
        fids = sorted(rng.sample(range(40), rng.randint(1, 15)))
        ar = arrable_of({1: {"fid": fids}})
        for option in CctOption:
            once = cct(ar, option)
            twice = cct(once, option)
            assert twice.rows[0].column("fid") == once.rows[0].column("fid")


def test_cct_never_grows_and_first_keeps_one_per_run():
    rng = random.Random(4)
    for _ in range(30):
        fids = sorted(rng.sample(range(60), rng.randint(1, 20)))
        ar = arrable_of({1: {"fid": fids}})
        runs = split_runs_oracle(fids)
        assert len(cct(ar, CctOption.FIRST).rows[0]) == len(runs)
        for option in CctOption:
            assert len(cct(ar, option).rows[0]) <= len(fids)


def test_cct_requires_fid_column():
    ar = arrable_of({1: {"ts": [1.0, 2.0]}})
    with pytest.raises(UnknownColumn):
        cct(ar, CctOption.FIRST)


# --- select / project -----------------------------------------------------------

def test_select_label_on_relation(two_person_trace):
    out = select(two_person_trace, Comparison("label", "=", "person"))
    assert all(r["label"] == "person" for r in out.rows)
    assert len(out.rows) == 4


def test_select_bb_pattern_range():
    pattern = BBPattern(x=(0, 100))
    rel = trace_relation([
        (1, 1, "person", (10, 20, 30, 20), (1, 0)),
        (1, 2, "person", (500, 20, 30, 20), (1, 0)),
    ])
    out = select(rel, BBoxTest("bb", pattern))
    assert [r["oid"] for r in out.rows] == [1]


def test_bb_pattern_exact_and_wildcard():
    p = BBPattern(x=10.0, y=None, w=(25, 35), h=None)
    assert p.matches(BoundingBox(10, 99, 30, 7))
    assert not p.matches(BoundingBox(11, 99, 30, 7))
    assert not p.matches(BoundingBox(10, 99, 36, 7))


def test_bb_pattern_bad_range():
    with pytest.raises(ValueError):
        BBPattern(x=(5, 1))


def test_select_smatch_probe_retains_similar(two_person_trace):
    probe = FeatureVector([1.0, 0.0, 0.0, 0.0])
    counter = ComparisonCounter()
    out = select(two_person_trace, SMatchProbe("fv", probe, MatchCondition(Metric.COSINE, 0.85)),
                 counter)
    assert sorted({r["oid"] for r in out.rows}) == [1]
    assert counter.count == len(two_person_trace.rows)


def test_select_elementwise_on_arrable_drops_empty_rows():
    ar = arrable_of({
        1: {"fid": [1, 2], "label": ["person", "person"]},
        2: {"fid": [2], "label": ["car"]},
    })
    out = select(ar, Comparison("label", "=", "person"))
    assert [row.key for row in out.rows] == [1]
    assert out.rows[0].column("fid") == (1, 2)


def test_select_kind_violation_raised_before_filtering(two_person_trace):
    with pytest.raises(IllegalColumnKind):
        select(two_person_trace, Comparison("fv", "=", 1))
    with pytest.raises(IllegalColumnKind):
        select(two_person_trace, Comparison("label", "<", "n"))


def test_project_subset_and_identity(two_person_trace):
    out = project(two_person_trace, ["oid"])
    assert [set(r) for r in out.rows] == [{"oid"}] * len(two_person_trace.rows)
    same = project(two_person_trace, list(two_person_trace.schema.names()))
    assert same.rows == two_person_trace.rows


def test_project_unknown_column(two_person_trace):
    with pytest.raises(UnknownColumn):
        project(two_person_trace, ["speed"])


# --- joins -----------------------------------------------------------------------

def _arrables_from_vec_groups(groups):
    return arrable_of({k: {"fid": list(range(len(vecs))), "fv": [tuple(v) for v in vecs]}
                       for k, vecs in groups.items()})


def test_nl_join_self_diagonal():
    e = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    groups = {i: [e[i]] * 3 for i in range(4)}
    ar = _arrables_from_vec_groups(groups)
    pairs = nl_join(ar, ar, COS)
    assert {p.key() for p in pairs} == {(i, i) for i in range(4)}
    expected = join_pairs_oracle(groups, groups, "cosine", "similarity_at_least", 0.9)
    assert {p.key() for p in pairs} == expected


def test_nl_join_orthogonal_empty():
    left = _arrables_from_vec_groups({1: [(1, 0)]})
    right = _arrables_from_vec_groups({9: [(0, 1)]})
    assert nl_join(left, right, MatchCondition(Metric.COSINE, 0.5)) == []


def test_nl_join_witness_is_first_match():
    # only the second left element matches the right element
    a, b, c = (1, 0, 0), (0, 1, 0), (0, 1, 0.01)
    left = _arrables_from_vec_groups({1: [a, b]})
    right = _arrables_from_vec_groups({2: [c]})
    pairs = nl_join(left, right, COS)
    assert len(pairs) == 1
    expected = first_witness_oracle([a, b], [c], "cosine", "similarity_at_least", 0.9)
    assert (pairs[0].left_witness, pairs[0].right_witness) == expected == (1, 0)


def test_nl_join_counts_every_pair():
    left = _arrables_from_vec_groups({1: [(1, 0)] * 4, 2: [(0, 1)] * 5})
    right = _arrables_from_vec_groups({3: [(1, 0)] * 6})
    counter = ComparisonCounter()
    nl_join(left, right, COS, counter=counter)
    assert counter.count == 4 * 6 + 5 * 6


def test_cjoin_short_circuits_comparisons():
    v = (0.5, 0.5)
    left = _arrables_from_vec_groups({1: [v] * 100})
    right = _arrables_from_vec_groups({2: [v] * 100})
    nl_counter, c_counter = ComparisonCounter(), ComparisonCounter()
    nl_pairs = nl_join(left, right, COS, counter=nl_counter)
    c_pairs = cjoin(left, right, COS, counter=c_counter)
    assert {p.key() for p in nl_pairs} == {p.key() for p in c_pairs} == {(1, 2)}
    assert nl_counter.count == 10_000
    assert c_counter.count == 1


def test_cjoin_pair_set_equals_nl_join_randomized():
    rng = random.Random(11)
    for _ in range(40):
        dim = rng.randint(2, 5)
        def mk_groups():
            return {k: [tuple(rng.uniform(-1, 1) for _ in range(dim))
                        or (1.0,) for _ in range(rng.randint(1, 6))]
                    for k in range(rng.randint(1, 4))}
        lg, rg = mk_groups(), mk_groups()
        lg = {k: [v if any(v) else (1.0,) * dim for v in vs] for k, vs in lg.items()}
        rg = {k: [v if any(v) else (1.0,) * dim for v in vs] for k, vs in rg.items()}
        th = rng.random()
        metric = rng.choice([Metric.COSINE, Metric.EUCLIDEAN])
        cond = MatchCondition(metric, th)
        left, right = _arrables_from_vec_groups(lg), _arrables_from_vec_groups(rg)
        nl_counter, c_counter = ComparisonCounter(), ComparisonCounter()
        nl = {p.key() for p in nl_join(left, right, cond, counter=nl_counter)}
        cj = {p.key() for p in cjoin(left, right, cond, counter=c_counter)}
        assert nl == cj
        assert c_counter.count <= nl_counter.count
        oracle = join_pairs_oracle(lg, rg, metric.value,
                                   cond.polarity.value, th)
        assert nl == oracle


def test_cct_join_equals_cjoin_when_first_elements_match():
    e1, e2 = (1, 0, 0), (0, 1, 0)
    left = _arrables_from_vec_groups({1: [e1, e1, e1], 2: [e2, e2]})
    right = _arrables_from_vec_groups({7: [e1, e1], 8: [e2, e2, e2]})
    cj = {p.key() for p in cjoin(left, right, COS)}
    ccj = {p.key() for p in cct_join(left, right, COS)}
    assert ccj == cj == {(1, 7), (2, 8)}


def test_cct_join_misses_mid_run_only_match():
    # the only matching left element sits mid-run: kept by cjoin, cut by cct
    probe = (1.0, 0.0, 0.0)
    off = (0.0, 1.0, 0.0)
    left = arrable_of({1: {"fid": [1, 2, 3], "fv": [off, probe, off]}})
    right = arrable_of({2: {"fid": [1], "fv": [probe]}})
    cj = {p.key() for p in cjoin(left, right, COS)}
    ccj = {p.key() for p in cct_join(left, right, COS, CctOption.BOTH)}
    assert cj == {(1, 2)}
    assert ccj == set()
    assert ccj <= cj


def test_cct_join_subset_of_cjoin_randomized():
    rng = random.Random(23)
    for _ in range(30):
        def mk():
            return {k: {"fid": sorted(rng.sample(range(20), n := rng.randint(1, 8))),
                        "fv": [(rng.uniform(0.1, 1), rng.uniform(0.1, 1)) for _ in range(n)]}
                    for k in range(rng.randint(1, 4))}
        left, right = arrable_of(mk()), arrable_of(mk())
        cond = MatchCondition(Metric.COSINE, rng.uniform(0.7, 1.0))
        cj = {p.key() for p in cjoin(left, right, cond)}
        ccj = {p.key() for p in cct_join(left, right, cond)}
        assert ccj <= cj


def test_cct_join_comparison_bound():
    # 3 runs left, 2 runs right, BOTH keeps <= 2 elements per run
    left = arrable_of({1: {"fid": [1, 2, 10, 11, 20], "fv": [(1, 0)] * 5}})
    right = arrable_of({2: {"fid": [1, 2, 3, 30], "fv": [(1, 0)] * 4}})
    counter = ComparisonCounter()
    cct_join(left, right, COS, counter=counter)
    runs_l = len(split_runs_oracle([1, 2, 10, 11, 20]))
    runs_r = len(split_runs_oracle([1, 2, 3, 30]))
    assert counter.count <= 4 * runs_l * runs_r


def test_join_rejects_non_fv_columns():
    ar = arrable_of({1: {"fid": [1], "fv": [(1, 0)]}})
    with pytest.raises(IllegalColumnKind):
        nl_join(ar, ar, COS, on=("fid", "fid"))


def test_join_extra_scalar_predicate():
    # relative time frame: right must start at least 5 seconds after left
    left = arrable_of({1: {"fid": [0], "fv": [(1.0, 0.0)], "ts": [0.0]}})
    right = arrable_of({2: {"fid": [0], "fv": [(1.0, 0.0)], "ts": [3.0]},
                        3: {"fid": [1], "fv": [(1.0, 0.0)], "ts": [9.0]}})
    extra = (ScalarPairPredicate("ts", "<=", "ts", offset=5.0),)
    pairs = {p.key() for p in cjoin(left, right, COS, extra=extra)}
    assert pairs == {(1, 3)}


def test_hash_equi_join_label():
    left = trace_relation([(1, 1, "person", (0, 0, 1, 1), (1, 0)),
                           (2, 2, "person", (0, 0, 1, 1), (1, 0))])
    right = trace_relation([(1, 5, "person", (0, 0, 1, 1), (1, 0)),
                            (2, 6, "person", (0, 0, 1, 1), (1, 0)),
                            (3, 7, "person", (0, 0, 1, 1), (1, 0))])
    out = hash_equi_join(left, right, "label")
    assert len(out.rows) == 6
    assert out.rows[0]["left.oid"] == 1 and out.rows[0]["right.oid"] == 5


def test_hash_equi_join_disjoint_keys():
    left = trace_relation([(1, 1, "person", (0, 0, 1, 1), (1, 0))])
    right = trace_relation([(1, 5, "car", (0, 0, 1, 1), (1, 0))])
    assert hash_equi_join(left, right, "label").rows == ()


def test_hash_equi_join_rejects_feature_vectors(two_person_trace):
    with pytest.raises(IllegalColumnKind):
        hash_equi_join(two_person_trace, two_person_trace, "fv")


# --- direction ---------------------------------------------------------------------

def _single_box_arrable(first, last):
    return arrable_of({1: {"fid": [1, 2], "bb": [first, last]}})


@pytest.mark.parametrize("dx,dy,expected", [
    (0, 4, Direction8.N), (0, -4, Direction8.S),
    (4, 0, Direction8.E), (-4, 0, Direction8.W),
    (4, 4, Direction8.NE), (-4, 4, Direction8.NW),
    (4, -4, Direction8.SE), (-4, -4, Direction8.SW),
    (0, 0, Direction8.STATIONARY),
])
def test_direction_all_sign_combinations(dx, dy, expected):
    ar = _single_box_arrable((10, 20, 5, 5), (10 + dx, 20 + dy, 5, 5))
    assert direction(ar) == [(1, expected)]


def test_direction_northeast_example():
    ar = _single_box_arrable((10, 20, 30, 20), (13, 23, 29, 19))
    assert direction(ar) == [(1, Direction8.NE)]


def test_direction_north_rule():
    ar = _single_box_arrable((0, 0, 5, 5), (0, 10, 5, 5))
    assert direction(ar) == [(1, Direction8.N)]


def test_direction_uses_first_and_last_only():
    ar = arrable_of({1: {"fid": [1, 2, 3],
                         "bb": [(0, 0, 1, 1), (50, -70, 1, 1), (4, 0, 1, 1)]}})
    assert direction(ar) == [(1, Direction8.E)]


def test_direction_epsilon_treats_small_deltas_as_zero():
    ar = _single_box_arrable((0, 0, 1, 1), (0.4, 5, 1, 1))
    assert direction(ar, epsilon=0.5) == [(1, Direction8.N)]


def test_direction_empty_row():
    ar = arrable_of({1: {"fid": [], "bb": []}})
    with pytest.raises(EmptyRow):
        direction(ar)


def test_direction_translation_and_scale_invariance():
    rng = random.Random(9)
    for _ in range(1000):
        x1, y1 = rng.uniform(-100, 100), rng.uniform(-100, 100)
        dx, dy = rng.choice([-3, 0, 5]), rng.choice([-2, 0, 7])
        base = direction(_single_box_arrable((x1, y1, 4, 4), (x1 + dx, y1 + dy, 4, 4)))
        tx, ty = rng.uniform(-50, 50), rng.uniform(-50, 50)
        translated = direction(_single_box_arrable(
            (x1 + tx, y1 + ty, 4, 4), (x1 + dx + tx, y1 + dy + ty, 4, 4)))
        scale = rng.uniform(0.01, 20)
        scaled = direction(_single_box_arrable(
            (x1, y1, 4, 4), (x1 + dx * scale, y1 + dy * scale, 4, 4)))
        assert base[0][1] == translated[0][1] == scaled[0][1]


def test_direction_requires_bbox_column():
    ar = arrable_of({1: {"fid": [1]}})
    with pytest.raises(IllegalColumnKind):
        direction(ar, bb_column="fid")


# --- aggregates ---------------------------------------------------------------------

def test_group_count():
    ar = arrable_of({1: {"fid": [1]}, 2: {"fid": [2]}, 3: {"fid": [9]}})
    assert group_count(ar) == 3


def test_group_count_empty():
    assert group_count(arrable_of({})) == 0


def test_disjoint_appearances_via_cct_first():
    ar = arrable_of({2: {"fid": [2, 13], "ts": [2.0, 13.0]}})
    compressed = cct(ar, CctOption.FIRST)
    assert element_count(compressed, "fid") == len(split_runs_oracle([2, 13]))
    assert element_count(compressed, "fid") == 2


def test_aggregate_functions(two_person_trace):
    assert aggregate(two_person_trace, "count", "oid") == 5
    assert aggregate(two_person_trace, "min", "fid") == 1
    assert aggregate(two_person_trace, "max", "fid") == 3
    assert aggregate(two_person_trace, "sum", "fid") == 11
    assert aggregate(two_person_trace, "avg", "fid") == pytest.approx(11 / 5)
    assert count_star(two_person_trace) == 5


def test_aggregate_arithmetic_rejected_on_vectors(two_person_trace):
    with pytest.raises(IllegalColumnKind):
        aggregate(two_person_trace, "avg", "fv")
    with pytest.raises(IllegalColumnKind):
        aggregate(two_person_trace, "sum", "bb")
