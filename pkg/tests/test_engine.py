import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncqsim.algorithms import collision_algorithm
from ncqsim.circuit import Gate, OracleCall, Step, StepCircuit, total_variation
from ncqsim.engine import (
    MStarSpec,
    PurifiedLayout,
    check_fidelity_monotone,
    purified_layout,
    query_states,
    random_circuit,
    run_cbqp,
    run_direct,
    run_purified,
    sample_transcripts,
    transcript_distribution,
)
from ncqsim.errors import (
    CopyOfEntangledRegister,
    DimensionMismatch,
    MalformedCircuit,
    QubitBudgetExceeded,
    SecondParallelQuery,
)
from ncqsim.problems import generate_instance
from ncqsim.state import QuantumState, apply_unitary

H = (Gate("H", ("q",)),)


def h_measure_sample():
    return StepCircuit((("q", 1),), (Step.sample(H, measure="q"), Step.sample(H)))


def test_three_independent_samples():
    c = StepCircuit((("q", 1),), (Step.sample(H), Step.sample(H), Step.sample(H)))
    batch = sample_transcripts(c, None, 20000, np.random.default_rng(0))
    # H three times leaves |+>, H H |0> = |0>: the middle sample is deterministic
    assert set(batch.samples[:, 1]) == {0}
    assert batch.samples[:, 0].mean() == pytest.approx(0.5, abs=0.02)
    assert batch.samples[:, 2].mean() == pytest.approx(0.5, abs=0.02)
    both = np.mean((batch.samples[:, 0] == 1) & (batch.samples[:, 2] == 1))
    assert both == pytest.approx(0.25, abs=0.02)


def test_samples_do_not_disturb_state():
    seen = []
    c = StepCircuit((("q", 2),), (Step.sample((Gate("H", ("q",)),)), Step.sample(), Step.sample()))
    sample_transcripts(c, None, 100, np.random.default_rng(1), observer=lambda i, k, b, a: seen.append(b == a))
    assert seen and all(seen)


def test_collision_samples_lie_in_one_preimage_pair():
    alg = collision_algorithm(16, P=8)
    rng = np.random.default_rng(2)
    inst = generate_instance("collision", 16, {"k": 2}, rng)
    for _ in range(20):
        t = run_direct(alg.circuit, inst, rng)
        idx = {v >> alg.circuit.registers[1][1] for v in t.noncollapsing_samples}
        assert len({inst.table[i] for i in idx}) == 1
        assert len(idx) <= 2
        assert t.q_used == 1


def test_zero_samples_is_plain_query_run():
    inst = generate_instance("search", 4, {"marked": 1}, np.random.default_rng(0))
    c = StepCircuit(
        (("idx", 2), ("bit", 1)),
        (Step.query(OracleCall("phase", (("idx", "bit"),)), (Gate("H", ("idx",)), Gate("X", ("bit",)))),),
        measure_final=("idx",),
    )
    t = run_direct(c, inst, np.random.default_rng(0))
    assert t.p_used == 0 and t.noncollapsing_samples == ()
    assert t.p_used + t.q_used == len(c.steps)


def test_purified_reweight_example():
    c = StepCircuit((("q", 1),), (Step.sample(H, measure="q"), Step.sample()))
    batch = sample_transcripts(c, None, 10, np.random.default_rng(0), "purified")
    entry = batch.reweight_log[0]
    assert entry["r"] == 2
    assert np.allclose(entry["q"], [0.25, 0.25])
    assert np.allclose(entry["d"], [2, 2])
    assert np.allclose(entry["p"], [0.5, 0.5])


def test_layout_schedule():
    layout = purified_layout(h_measure_sample())
    assert layout.copies == 2
    assert [layout.r(i) for i in range(2)] == [2, 1]
    assert np.allclose(PurifiedLayout.reweight(np.array([0.5, 0.0, 0.5]), 3), [4, 0, 4])


def test_single_register_purified_matches_direct_exactly():
    c = StepCircuit((("q", 1),), (Step.sample((Gate("T", ("q",)), Gate("H", ("q",)))),))
    rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
    a = sample_transcripts(c, None, 500, rng_a, "direct").samples
    b = sample_transcripts(c, None, 500, rng_b, "purified").samples
    assert np.array_equal(a, b)


def test_purified_matches_direct_on_random_two_qubit_circuit():
    rng = np.random.default_rng(11)
    while True:
        c, inst = random_circuit(rng, max_qubits=2, max_steps=2)
        if c.workspace_qubits == 2 and len(c.steps) == 2:
            break
    d = sample_transcripts(c, inst, 100_000, rng).distribution()
    p = sample_transcripts(c, inst, 100_000, rng, "purified").distribution()
    assert total_variation(d, p) <= 0.02
    exact = transcript_distribution(c, inst)
    assert sum(exact.values()) == pytest.approx(1)
    assert total_variation(exact, d) <= 0.02


def test_post_selection_without_reweighting_is_wrong():
    c = StepCircuit(
        (("q", 1),),
        (Step.sample((Gate(None, ("q",), {}, np.array([[0.6, -0.8], [0.8, 0.6]])),), measure="q"), Step.sample()),
    )
    rng = np.random.default_rng(3)
    d = sample_transcripts(c, None, 50_000, rng).distribution()
    p = sample_transcripts(c, None, 50_000, rng, "purified", reweight=False).distribution()
    assert total_variation(d, p) > 0.1


def test_purified_cap():
    c = StepCircuit((("q", 3),), tuple(Step.sample() for _ in range(7)))
    with pytest.raises(QubitBudgetExceeded):
        run_purified(c, None, np.random.default_rng(0))


def test_nonadaptive_circuit_rejects_second_round():
    inst = generate_instance("search", 2, {}, np.random.default_rng(0))
    call = OracleCall("phase", (("idx", "bit"),))
    c = StepCircuit((("idx", 1), ("bit", 1)), (Step.query(call), Step.query(call)), nonadaptive=True)
    with pytest.raises(SecondParallelQuery):
        run_direct(c, inst, np.random.default_rng(0))


def test_query_states_needs_measurement_free_circuit():
    with pytest.raises(MalformedCircuit):
        query_states(h_measure_sample(), None)


# copy semantics


def test_copy_of_plus_gives_independent_outcomes():
    c = StepCircuit((("a", 1),), (Step.plain((Gate("H", ("a",)),)), Step.copy_of("a", "b")), measure_final=("a", "b"))
    batch = sample_transcripts(c, None, 40_000, np.random.default_rng(0), "cbqp")
    freq = np.bincount(batch.finals, minlength=4) / batch.shots
    assert np.allclose(freq, 0.25, atol=0.01)
    assert batch.p_used == 1


def test_copy_then_cnot_correlates():
    c = StepCircuit(
        (("a", 1),),
        (Step.copy_of("a", "b"), Step.plain((Gate("H", ("a",)), Gate("CNOT", ("a", "b"))))),
        measure_final=("a", "b"),
    )
    batch = sample_transcripts(c, None, 40_000, np.random.default_rng(0), "cbqp")
    freq = np.bincount(batch.finals, minlength=4) / batch.shots
    assert freq[1] == 0 and freq[2] == 0
    assert freq[0] == pytest.approx(0.5, abs=0.01)


def test_copy_of_entangled_register_rejected():
    c = StepCircuit(
        (("a", 1), ("b", 1)),
        (Step.plain((Gate("H", ("a",)), Gate("CNOT", ("a", "b")))), Step.copy_of("a", "c")),
    )
    with pytest.raises(CopyOfEntangledRegister):
        run_cbqp(c, None, np.random.default_rng(0))


# fidelity monotonicity


def test_identical_and_orthogonal_pairs():
    s = apply_unitary(QuantumState.zeros([("a", 1), ("b", 1)]), "H", "a")
    t = apply_unitary(QuantumState.basis([("a", 1), ("b", 1)], {"b": 1}), "H", "a")
    (same,) = check_fidelity_monotone([(s, s, MStarSpec("a", 2))])
    assert same == pytest.approx((1.0, 1.0))
    (orth,) = check_fidelity_monotone([(s, t, MStarSpec("b", 3))])
    assert orth == pytest.approx((0.0, 0.0), abs=1e-12)


def test_monotone_layout_mismatch():
    s = QuantumState.zeros([("a", 1)])
    t = QuantumState.zeros([("b", 1)])
    with pytest.raises(DimensionMismatch):
        check_fidelity_monotone([(s, t, MStarSpec("a", 2))])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_monotone_on_random_states(seed, r):
    rng = np.random.default_rng(seed)
    regs = [("a", 1), ("b", 1)]
    s1 = QuantumState.from_vector(rng.normal(size=4) + 1j * rng.normal(size=4), regs)
    s2 = QuantumState.from_vector(rng.normal(size=4) + 1j * rng.normal(size=4), regs)
    ((before, after),) = check_fidelity_monotone([(s1, s2, MStarSpec("a", r))])
    assert after >= before - 1e-9
