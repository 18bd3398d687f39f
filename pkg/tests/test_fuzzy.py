import itertools
from importlib import resources

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from headpond.fuzzy import (
    ERROR_LABELS,
    HEIGHT_LABELS,
    Engine,
    FuzzyConfigError,
    FuzzyController,
    FuzzyDesign,
    MembershipFunction,
    RuleBase,
    build_rule_table,
    error_partition,
    evaluate_fis,
    export_rules,
    firing_strengths,
    format_rule_table,
    height_partition,
    import_rules,
    parse_rule_table,
)
from headpond.plant import PlantState

DESIGN = FuzzyDesign()
MFS = DESIGN.partitions()
FS1 = build_rule_table(Engine.FS1)

errors = st.floats(-35, 35, allow_nan=False)
heights = st.floats(0, 35, allow_nan=False)


def test_triangle_examples():
    tri = MembershipFunction.triangle(-2, 0, 2)
    assert tri(0) == 1.0
    assert tri(3) == 0.0
    assert tri(1) == 0.5
    assert tri(-1) == 0.5


def test_shoulders_saturate():
    left = MembershipFunction.left_shoulder(0, 10)
    right = MembershipFunction.right_shoulder(0, 10)
    assert left(-50) == 1.0 and left(5) == 0.5 and left(20) == 0.0
    assert right(-5) == 0.0 and right(5) == 0.5 and right(50) == 1.0


def test_breakpoints_must_be_ordered():
    with pytest.raises(FuzzyConfigError):
        MembershipFunction.triangle(1, 0, 2)


@given(errors, st.floats(0.01, 20), st.floats(0.01, 20))
def test_error_partition_is_ruspini(x, neg, pos):
    part = error_partition(neg, pos)
    grades = [part[label](x) for label in ERROR_LABELS]
    assert all(0 <= g <= 1 for g in grades)
    assert sum(grades) == pytest.approx(1.0, abs=1e-12)


@given(heights)
def test_height_partition_is_ruspini(x):
    part = height_partition(35.0)
    assert sum(part[label](x) for label in HEIGHT_LABELS) == pytest.approx(1.0, abs=1e-12)


def test_rule_count_and_uniqueness():
    for engine in Engine:
        rules = build_rule_table(engine)
        assert len(rules) == 81
        keys = {(r.error_i, r.error_0, r.height_i, r.height_0) for r in rules.rules}
        assert keys == set(itertools.product(ERROR_LABELS, ERROR_LABELS, HEIGHT_LABELS, HEIGHT_LABELS))


def test_published_example_rule():
    r = FS1.lookup("NEG", "NEG", "LOW", "LOW")
    assert (r.u_level, r.valve_level) == (4, 4)


def test_surplus_everywhere_stops_everything():
    for h_i, h_0 in itertools.product(HEIGHT_LABELS, HEIGHT_LABELS):
        r = FS1.lookup("POS", "POS", h_i, h_0)
        assert (r.u_level, r.valve_level) == (0, 0)


def test_height_modifiers():
    assert FS1.lookup("ZERO", "ZERO", "MED", "MED").u_level == 2
    assert FS1.lookup("ZERO", "ZERO", "HIGH", "MED").u_level == 1
    assert FS1.lookup("ZERO", "ZERO", "MED", "LOW").valve_level == 3
    assert FS1.lookup("ZERO", "POS", "MED", "LOW").valve_level == 0
    assert FS1.lookup("POS", "NEG", "HIGH", "LOW").u_level == 0


def test_rule_base_rejects_duplicates():
    rules = list(FS1.rules)
    rules[1] = rules[0]
    with pytest.raises(FuzzyConfigError):
        RuleBase(Engine.FS1, tuple(rules), FS1.u_values, FS1.valve_values)


def test_default_singletons():
    assert FS1.u_values == (0.0, 25.0, 50.0, 75.0, 100.0)
    assert FS1.valve_values == (0.0, 0.25, 0.5, 0.75, 1.0)


def test_example_rule_at_membership_peaks():
    # NEG and LOW peaks: error at or below -zero_neg, level 0
    w = firing_strengths(FS1, MFS, (-30.0, -30.0, 0.0, 0.0))
    assert w.max() == 1.0 and np.count_nonzero(w) == 1
    assert evaluate_fis(FS1, MFS, (-30.0, -30.0, 0.0, 0.0)) == (100.0, 1.0)


def test_two_rules_equal_strength_average():
    # E_i halfway between ZERO and POS peaks, all else on single peaks
    e_i = DESIGN.zero_pos / 2
    u, s = evaluate_fis(FS1, MFS, (e_i, 0.0, 17.5, 17.5))
    zz = FS1.lookup("ZERO", "ZERO", "MED", "MED")
    pz = FS1.lookup("POS", "ZERO", "MED", "MED")
    assert u == pytest.approx((FS1.u_values[zz.u_level] + FS1.u_values[pz.u_level]) / 2)
    assert s == pytest.approx((FS1.valve_values[zz.valve_level] + FS1.valve_values[pz.valve_level]) / 2)


def test_scaling_firing_strengths_leaves_output_unchanged():
    inputs = (-3.0, 0.05, 12.0, 20.0)
    w = firing_strengths(FS1, MFS, inputs)
    u = np.array([FS1.u_values[r.u_level] for r in FS1.rules])
    for c in (0.1, 7.0):
        assert (c * w) @ u / (c * w).sum() == pytest.approx(evaluate_fis(FS1, MFS, inputs)[0])


def test_outputs_within_singleton_hull_random():
    rng = np.random.default_rng(7)
    engine = DESIGN.engine(Engine.FS1)
    for k in range(10_000):
        e_i, e_0 = rng.uniform(-35, 35, 2)
        x_i, x_0 = rng.uniform(0, 35, 2)
        if k < 200:
            w = firing_strengths(FS1, MFS, (e_i, e_0, x_i, x_0))
            assert w.sum() == pytest.approx(1.0, abs=1e-12)
        u, s = engine(e_i, e_0, x_i, x_0)
        assert 0.0 <= u <= 100.0
        assert 0.0 <= s <= 1.0


def test_continuity_probe():
    """Along every input axis the output moves at most L times the input step.

    With Ruspini partitions the firing strengths sum to one, so each output
    is a convex blend whose slope is bounded by the output range times the
    steepest grade slope, twice over (the label losing weight and the one
    gaining it).
    """
    engine = DESIGN.engine(Engine.FS1)
    narrowest = min(DESIGN.zero_pos, DESIGN.zero_neg, DESIGN.pond_height / 2)
    L_u = 2 * 100.0 / narrowest
    L_s = 2 * 1.0 / narrowest
    rng = np.random.default_rng(3)
    h = 0.01
    for axis, (lo, hi) in enumerate(((-20, 20), (-20, 20), (0, 35), (0, 35))):
        grid = np.arange(lo, hi, h)
        for _ in range(5):
            base = [rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(0, 35), rng.uniform(0, 35)]
            out = []
            for x in grid:
                point = list(base)
                point[axis] = x
                out.append(engine(*point))
            out = np.array(out)
            assert np.abs(np.diff(out[:, 0])).max() <= L_u * h + 1e-9
            assert np.abs(np.diff(out[:, 1])).max() <= L_s * h + 1e-9


@given(heights, heights, heights, heights, heights, heights)
def test_fs1_fs2_swap_symmetry(x0, x1, x2, r0, r1, r2):
    ctrl = FuzzyController()
    a = ctrl(0.0, PlantState(x0, x1, x2, 0, 0), (r0, r1, r2))
    b = ctrl(0.0, PlantState(x0, x2, x1, 0, 0), (r0, r2, r1))
    assert (a.U1, a.s1) == (b.U2, b.s2)
    assert (a.U2, a.s2) == (b.U1, b.s1)


def test_controller_empty_ponds_full_throttle():
    u = FuzzyController()(0.0, PlantState.zero(), (30, 30, 30))
    assert tuple(u) == (100.0, 100.0, 1.0, 1.0)


def test_controller_overfull_ponds_shut():
    assert DESIGN.zero_pos < 0.5
    u = FuzzyController()(0.0, PlantState(30.5, 31, 32, 0, 0), (30, 30, 30))
    assert tuple(u) == (0.0, 0.0, 0.0, 0.0)


def test_controller_at_targets_symmetric():
    u = FuzzyController()(0.0, PlantState(17.5, 17.5, 17.5, 0, 0), (17.5, 17.5, 17.5))
    assert u.U1 == u.U2 == 50.0
    assert u.s1 == u.s2 == 0.5


def test_design_rejects_nonpositive_width():
    with pytest.raises(FuzzyConfigError):
        FuzzyDesign(zero_pos=0.0)


def test_export_import_round_trip(tmp_path):
    for engine in Engine:
        rules = build_rule_table(engine)
        first = export_rules(rules, tmp_path / f"{engine.value}.txt")
        again = import_rules(first)
        assert again == rules
        second = export_rules(again, tmp_path / f"{engine.value}.2.txt")
        assert first.read_bytes() == second.read_bytes()


def test_export_format():
    text = format_rule_table(FS1)
    data = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    assert len(data) == 81
    assert "NEG,NEG,LOW,LOW,L4,V4" in data
    assert text.startswith("# FS1 rule table: E1,E0,X1,X0 -> U1,S1\n")


def test_parse_rejects_garbage():
    with pytest.raises(FuzzyConfigError):
        parse_rule_table("NEG,NEG,LOW\n")
    bad = format_rule_table(FS1).replace("NEG,NEG,LOW,LOW,L4,V4", "NEG,NEG,LOW,LOW,L9,V4")
    with pytest.raises(FuzzyConfigError):
        parse_rule_table(bad)


@pytest.mark.parametrize("engine", list(Engine))
def test_shipped_tables_match_generator(engine):
    shipped = resources.files("headpond").joinpath(f"data/{engine.value.lower()}_rules.txt").read_text()
    assert shipped == format_rule_table(build_rule_table(engine))
