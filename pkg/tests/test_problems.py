from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncqsim.circuit import OracleCall
from ncqsim.errors import InvalidParameters, RegisterSizeMismatch, SecondParallelQuery
from ncqsim.problems import (
    ProblemInstance,
    ProblemKind,
    QuerySession,
    apply_oracle_call,
    apply_parallel_phase_oracle,
    apply_phase_oracle,
    apply_xor_value_oracle,
    evaluate,
    generate_instance,
    index_bits,
)
from ncqsim.state import QuantumState, apply_unitary, born_distribution


def test_parse_aliases():
    assert ProblemKind.parse("element_distinctness") is ProblemKind.ELEMENT_DISTINCTNESS
    assert ProblemKind.parse("Search") is ProblemKind.SEARCH
    with pytest.raises(ValueError):
        ProblemKind.parse("sorting")


@pytest.mark.parametrize(
    "kind, table, answer",
    [
        ("search", [0, 0, 1, 0], True),
        ("search", [0, 0, 0, 0], False),
        ("majority", [1, 1, 0, 0], True),
        ("majority", [1, 0, 0, 0], False),
        ("parity", [1, 1, 1, 0], True),
        ("collision", [0, 1, 2, 3], 1),
        ("collision", [2, 0, 2, 0], 2),
        ("ed", [3, 1, 0, 2], False),
        ("ed", [3, 1, 3, 2], True),
    ],
)
def test_evaluate(kind, table, answer):
    assert evaluate(kind, table) == answer


def test_collision_table_must_be_regular():
    with pytest.raises(InvalidParameters):
        ProblemInstance("collision", 4, (0, 0, 0, 1), 3)


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from(["search", "majority", "parity", "collision", "ed"]),
    st.sampled_from([4, 8, 16]),
    st.integers(0, 2**31 - 1),
)
def test_generated_answers_match_brute_force(kind, N, seed):
    inst = generate_instance(kind, N, None, np.random.default_rng(seed))
    assert inst.answer == evaluate(kind, inst.table)
    assert ProblemInstance.from_json(inst.to_json()) == inst


def test_generator_parameters():
    rng = np.random.default_rng(0)
    assert sum(generate_instance("search", 16, {"marked": 3}, rng).table) == 3
    assert sum(generate_instance("majority", 16, {"s": 9}, rng).table) == 9
    assert generate_instance("collision", 16, {"k": 1}, rng).answer == 1
    assert generate_instance("collision", 16, {"k": 2}, rng).answer == 2
    yes = generate_instance("ed", 16, {"distinct": False}, rng)
    assert max(Counter(yes.table).values()) == 2 and len(set(yes.table)) == 15
    with pytest.raises(InvalidParameters):
        generate_instance("parity", 12, None, rng)
    with pytest.raises(InvalidParameters):
        generate_instance("collision", 5, {"k": 2}, rng)


def _uniform(n, extra=("bit", 1)):
    s = QuantumState.zeros([("idx", n), extra])
    return apply_unitary(s, "H", "idx")


def test_phase_oracle_flips_marked_amplitude():
    inst = ProblemInstance("search", 4, (0, 0, 1, 0), True)
    s = apply_unitary(_uniform(2), "X", "bit")
    out = apply_phase_oracle(s, inst, "idx", "bit")
    amps = out.amplitudes.reshape(4, 2)[:, 1]
    assert np.allclose(amps, [0.5, 0.5, -0.5, 0.5])


def test_xor_oracle_writes_values_and_is_self_inverse():
    inst = ProblemInstance("collision", 4, (2, 0, 2, 0), 2)
    s = _uniform(2, ("val", 2))
    once = apply_xor_value_oracle(s, inst, "idx", "val")
    joint = born_distribution(once, ["idx", "val"]).reshape(4, 4)
    for i, v in enumerate(inst.table):
        assert joint[i, v] == pytest.approx(0.25)
    twice = apply_xor_value_oracle(once, inst, "idx", "val")
    assert np.allclose(twice.amplitudes, s.amplitudes)


def test_register_size_checks():
    inst = ProblemInstance("search", 8, (0,) * 8, False)
    with pytest.raises(RegisterSizeMismatch):
        apply_phase_oracle(_uniform(2), inst, "idx", "bit")
    col = ProblemInstance("collision", 4, (0, 1, 2, 3), 1)
    with pytest.raises(RegisterSizeMismatch):
        apply_xor_value_oracle(_uniform(2), col, "idx", "bit")


def test_parallel_phase_is_product_of_single_queries():
    rng = np.random.default_rng(1)
    inst = generate_instance("parity", 4, None, rng)
    s = QuantumState.from_vector(rng.normal(size=64), [("i0", 2), ("b0", 1), ("i1", 2), ("b1", 1)])
    par = apply_parallel_phase_oracle(s, inst, 2, [("i0", "b0"), ("i1", "b1")])
    seq = apply_phase_oracle(apply_phase_oracle(s, inst, "i0", "b0"), inst, "i1", "b1")
    assert np.allclose(par.amplitudes, seq.amplitudes)
    via_call = apply_oracle_call(s, inst, OracleCall("phase", (("i0", "b0"), ("i1", "b1"))))
    assert np.allclose(via_call.amplitudes, seq.amplitudes)


def test_session_allows_one_round_when_nonadaptive():
    session = QuerySession(nonadaptive=True)
    session.record(4)
    with pytest.raises(SecondParallelQuery):
        session.record(4)
    free = QuerySession()
    free.record(1)
    free.record(1)
    assert free.queries == 2


def test_padding_indices_read_zero():
    inst = ProblemInstance("search", 3, (1, 1, 1), True)
    assert inst.value(3) == 0
    assert index_bits(3) == 2
