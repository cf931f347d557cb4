import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from ncqsim.errors import (
    DimensionMismatch,
    NonUnitaryMatrix,
    UnknownRegister,
    ZeroProbabilityBranch,
)
from ncqsim.state import (
    Ensemble,
    ProductState,
    QuantumState,
    apply_unitary,
    born_distribution,
    check_unitary,
    collapse,
    fidelity,
    gate_matrix,
    project,
    reduced_density_matrix,
    reduced_purity,
    tensor_product,
)

REGS = (("a", 1), ("b", 2))


def bell():
    s = apply_unitary(QuantumState.zeros([("a", 1), ("b", 1)]), "H", "a")
    return apply_unitary(s, "CNOT", ["a", "b"])


def test_basis_ordering_is_big_endian():
    s = QuantumState.basis(REGS, {"a": 1, "b": 2})
    assert np.argmax(np.abs(s.amplitudes)) == 0b110
    assert s.decode(6) == {"a": 1, "b": 2}


def test_rejects_unnormalized_and_wrong_size():
    with pytest.raises(ValueError):
        QuantumState(np.array([1.0, 1.0]), (("q", 1),))
    with pytest.raises(DimensionMismatch):
        QuantumState(np.array([1.0, 0, 0]), (("q", 1),))


def test_amplitudes_read_only():
    s = QuantumState.zeros(REGS)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


def test_hadamard_gives_uniform_marginal():
    s = apply_unitary(QuantumState.zeros(REGS), "H", "b")
    assert np.allclose(born_distribution(s, "b"), 0.25)
    assert np.allclose(born_distribution(s, "a"), [1, 0])


def test_qubit_reference_targets():
    s = apply_unitary(QuantumState.zeros(REGS), "X", "b[1]")
    assert s.decode(int(np.argmax(np.abs(s.amplitudes)))) == {"a": 0, "b": 1}


def test_unknown_register():
    with pytest.raises(UnknownRegister):
        apply_unitary(QuantumState.zeros(REGS), "H", "zz")


def test_non_unitary_rejected():
    with pytest.raises(NonUnitaryMatrix):
        apply_unitary(QuantumState.zeros(REGS), np.array([[1, 1], [0, 1]]), "a")
    with pytest.raises(NonUnitaryMatrix):
        check_unitary(np.ones((2, 3)))


def test_uniform_and_diffusion_blocks():
    u = gate_matrix("UNIFORM", 3, size=3, offset=2)
    check_unitary(u)
    assert np.allclose(np.abs(u[:, 0]) ** 2, [0, 0, 1 / 3, 1 / 3, 1 / 3, 0, 0, 0])
    d = gate_matrix("DIFFUSION", 2)
    check_unitary(d)
    assert np.allclose(d @ d, np.eye(4))


def test_joint_born_respects_requested_order():
    s = QuantumState.basis(REGS, {"a": 1, "b": 3})
    assert np.argmax(born_distribution(s, ["a", "b"])) == 0b111
    assert np.argmax(born_distribution(s, ["b", "a"])) == 0b111
    s = QuantumState.basis(REGS, {"a": 1, "b": 0})
    assert np.argmax(born_distribution(s, ["b", "a"])) == 1


def test_project_and_zero_branch():
    s = bell()
    after, p = project(s, "a", 1)
    assert p == pytest.approx(0.5)
    assert np.allclose(born_distribution(after, "b"), [0, 1])
    with pytest.raises(ZeroProbabilityBranch):
        project(QuantumState.zeros(REGS), "a", 1)


def test_collapse_outcome_consistent():
    rng = np.random.default_rng(3)
    after, outcome = collapse(bell(), "a", rng)
    assert outcome.probability == pytest.approx(0.5)
    assert born_distribution(after, "b")[outcome.basis_index] == pytest.approx(1)


def test_purity_and_reduced_state():
    assert reduced_purity(bell(), "a") == pytest.approx(0.5)
    assert np.allclose(reduced_density_matrix(bell(), "a"), np.eye(2) / 2)
    plus = apply_unitary(QuantumState.zeros(REGS), "H", "a")
    assert reduced_purity(plus, "a") == pytest.approx(1.0)


def test_fidelity_conventions():
    zero = QuantumState.zeros([("q", 1)])
    plus = apply_unitary(zero, "H", "q")
    assert fidelity(zero, zero) == pytest.approx(1)
    assert fidelity(zero, plus) == pytest.approx(1 / np.sqrt(2))
    mixed = Ensemble([0.5, 0.5], [zero, apply_unitary(zero, "X", "q")])
    assert fidelity(mixed, zero) == pytest.approx(np.sqrt(0.5))
    assert fidelity(mixed.density_matrix(), mixed) == pytest.approx(1)
    with pytest.raises(DimensionMismatch):
        fidelity(zero, np.eye(4) / 4)


def test_tensor_product_and_permute():
    a = QuantumState.basis([("x", 1)], 1)
    b = QuantumState.basis([("y", 2)], 2)
    ab = tensor_product(a, b)
    assert ab.decode(int(np.argmax(np.abs(ab.amplitudes)))) == {"x": 1, "y": 2}
    ba = ab.permute(["y", "x"])
    assert ba.labels == ("y", "x")
    assert ba.decode(int(np.argmax(np.abs(ba.amplitudes)))) == {"y": 2, "x": 1}


def test_product_state_merges_only_on_demand():
    ps = ProductState(REGS)
    assert len(ps.factors) == 2
    ps.transform(["a"], lambda f: apply_unitary(f, "H", "a"))
    assert len(ps.factors) == 2
    ps.transform(["a", "b"], lambda f: apply_unitary(f, "CNOT", ["a", "b[0]"]))
    assert len(ps.factors) == 1
    before = ps.fingerprint()
    draws = ps.sample(np.random.default_rng(0), 1000)
    assert ps.fingerprint() == before
    assert set(np.unique(draws)) == {0b000, 0b110}


def test_wide_product_sample_does_not_overflow():
    ps = ProductState([(f"r{i}", 16) for i in range(5)])
    ps.transform(["r4"], lambda f: apply_unitary(f, "X", "r4[0]"))
    v = ps.sample(np.random.default_rng(0))
    assert v == 1 << 15


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_unitary_preserves_norm_and_fidelity(seed):
    rng = np.random.default_rng(seed)
    u = unitary_group.rvs(8, random_state=rng)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    w = rng.normal(size=8) + 1j * rng.normal(size=8)
    s1 = QuantumState.from_vector(v, REGS)
    s2 = QuantumState.from_vector(w, REGS)
    t1, t2 = apply_unitary(s1, u, ["a", "b"]), apply_unitary(s2, u, ["a", "b"])
    assert np.linalg.norm(t1.amplitudes) == pytest.approx(1)
    assert fidelity(t1, t2) == pytest.approx(fidelity(s1, s2), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_marginals_sum_to_joint(seed):
    rng = np.random.default_rng(seed)
    s = QuantumState.from_vector(rng.normal(size=8) + 1j * rng.normal(size=8), REGS)
    joint = born_distribution(s, ["a", "b"]).reshape(2, 4)
    assert np.allclose(joint.sum(axis=1), born_distribution(s, "a"))
    assert np.allclose(joint.sum(axis=0), born_distribution(s, "b"))
