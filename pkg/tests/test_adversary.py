import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncqsim.adversary import (
    LiftedScheme,
    WeightScheme,
    build_relation,
    c_epsilon,
    cbqp_additive,
    closed_form_degrees,
    compute_bounds,
    load_profile,
    search_progress,
    search_trajectories,
    validate_weight_scheme,
    verify_hybrid_bound,
    verify_lifted_weights,
    verify_polynomial_inequality,
    verify_weight_identity,
)
from ncqsim.errors import EnumerationBudgetExceeded, InvalidParameters, InvalidScheme, MissingState


def test_c_epsilon_value():
    assert c_epsilon() == pytest.approx(0.16910, abs=1e-5)
    assert c_epsilon(0) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(InvalidParameters):
        c_epsilon(0.5)


@pytest.mark.parametrize("kind", ["search", "majority", "parity"])
def test_exhaustive_degrees_at_4(kind):
    rel = build_relation(kind, 4, "exhaustive")
    assert rel.degrees == closed_form_degrees(kind, 4)
    assert rel.exhaustive and all(rel.family.related(x, y) for x, y in rel.R)


def test_sampled_matches_exhaustive_on_ed():
    exact = build_relation("ed", 4, "exhaustive")
    sampled = build_relation("ed", 4, "sampled", samples=50, rng=np.random.default_rng(1))
    assert exact.degrees == sampled.degrees == (4, 2, 1, 1)
    assert not sampled.exhaustive
    with pytest.raises(EnumerationBudgetExceeded):
        sampled.inputs


def test_full_ed_variant():
    assert build_relation("ed", 4, "exhaustive", variant="full").degrees == (12, 2, 3, 1)


def test_collision_has_no_relation():
    with pytest.raises(InvalidParameters):
        build_relation("collision", 4)


def test_relation_pairs_are_one_bit_apart_for_search():
    rel = build_relation("search", 8, "exhaustive")
    for x, y in rel.R:
        assert sum(a != b for a, b in zip(x, y)) == 1 and sum(x) == 0


def test_scheme_validation():
    rel = build_relation("majority", 4, "exhaustive")
    assert validate_weight_scheme(WeightScheme.uniform(), rel).valid
    bad = validate_weight_scheme(WeightScheme.constant(2, 1), rel)
    assert not bad and bad.violations[0][0] == "product<w^2"
    with pytest.raises(InvalidScheme):
        compute_bounds(rel, "pdqp", WeightScheme.constant(2, 1))


def test_loads_for_uniform_search():
    rel = build_relation("search", 8, "exhaustive")
    prof = load_profile(WeightScheme.uniform(), rel)
    # the empty input has wt = N and load 1 per index; each yes-input has wt = v = 1
    assert prof.v_X == pytest.approx(1 / 8) and prof.v_Y == pytest.approx(1)
    assert prof.v_max == pytest.approx(1 / math.sqrt(8))
    assert prof.total_weight == 8


def test_scheme_bound_equals_degree_bound_for_uniform_weights():
    rel = build_relation("search", 16, "exhaustive")
    deg = compute_bounds(rel, "pdqp")
    loads = compute_bounds(rel, "pdqp", WeightScheme.uniform())
    assert deg.product_bound == pytest.approx(loads.product_bound)
    assert loads.form == "loads"


def test_bound_formulas():
    rel = build_relation("majority", 8, "exhaustive")
    c = c_epsilon()
    pd = compute_bounds(rel, "pdqp")
    assert pd.product_bound == pytest.approx(c * math.sqrt(4 * 5))
    assert pd.additive_bound == pytest.approx(2 * math.sqrt(pd.product_bound))
    naq = compute_bounds(rel, "pdqp-naq")
    assert naq.product_bound == pytest.approx(c * c * 5)
    cb = compute_bounds(rel, "cbqp")
    # below 1 a single query already meets Q 2^P >= bound with P = 0
    assert cb.p_at_q1 == pytest.approx(max(0.0, math.log2(pd.product_bound)))
    big = compute_bounds(build_relation("search", 64), "cbqp")
    assert big.p_at_q1 == pytest.approx(math.log2(c * 8))
    assert list(pd.to_row())[:9] == list(pd.COLUMNS)


def test_cbqp_additive_is_exact_minimum():
    total, p1 = cbqp_additive(100.0)
    brute = min(q + max(0, math.log2(100 / q)) for q in range(1, 101))
    assert total == pytest.approx(brute)
    assert p1 == pytest.approx(math.log2(100))
    assert cbqp_additive(0.5) == (1.0, 0.0)


def test_weight_identity_factor_two_form_holds():
    rel = build_relation("search", 8, "exhaustive")
    traj = search_trajectories(8, 2, rel.inputs)
    for t in range(3):
        states = {a: traj[a].at(t) for a in rel.inputs}
        rep = verify_weight_identity(rel, WeightScheme.uniform(), states, factor=2.0)
        assert rep.holds, (t, rep)


def test_weight_identity_missing_state():
    rel = build_relation("search", 4, "exhaustive")
    with pytest.raises(MissingState):
        verify_weight_identity(rel, WeightScheme.uniform(), {})


def test_polynomial_inequality_edges():
    pts = np.array([[1, 0.5, 0.3], [5, 1.0, 2.0], [64, 0.0, 0.0], [3, 1.0, 1.0]])
    assert verify_polynomial_inequality(pts).holds
    assert not verify_polynomial_inequality(np.array([[5, 2.0, 0.1]])).holds


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 40), st.floats(0, 1), st.floats(0, 1))
def test_polynomial_inequality_property(k, r, u):
    s = 2 * r * u
    assert verify_polynomial_inequality(np.array([[k, r, s]])).holds


def test_hybrid_bound_small():
    rep = verify_hybrid_bound(8, 2)
    assert rep.lhs[0] == 0 and rep.holds and rep.rhs == 16


def test_lifted_scheme_respects_weight_product():
    rel = build_relation("majority", 4, "exhaustive")
    lifted = LiftedScheme(WeightScheme.uniform(), rel, 2)
    for x, y in rel.R:
        for I in [(0, 1), (2, 3), (1, 1)]:
            if any(x[i] != y[i] for i in I):
                assert lifted.W_prime(x, y, I) * lifted.W_prime(y, x, I) >= lifted.W(x, y) ** 2


def test_lifted_sampled_and_limits():
    rel = build_relation("search", 8, "exhaustive")
    rep = verify_lifted_weights(rel, WeightScheme.uniform(), 3, samples=50, rng=np.random.default_rng(0))
    assert rep.holds and rep.checked == 50 * len(rel.inputs)
    with pytest.raises(EnumerationBudgetExceeded):
        verify_lifted_weights(rel, WeightScheme.uniform(), 5)


def test_progress_starts_at_total_weight_and_drops():
    trace = search_progress(8, 2)
    assert trace.phi[0] == pytest.approx(8)
    assert trace.phi[1] < trace.phi[0]
