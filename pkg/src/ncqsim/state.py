"""Dense statevectors over labelled qubit registers.

Basis ordering is big-endian throughout: the first register holds the most
significant bits of a basis index, and inside a register the first qubit is
the most significant one.

Fidelity uses the square-root convention ``F(a, b) = max |<phi_a|phi_b>|``
over purifications, so ``F = |<a|b>|`` for pure states (not its square).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NonUnitaryMatrix,
    QubitBudgetExceeded,
    UnknownRegister,
    ZeroProbabilityBranch,
)

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10

_QUBIT_REF = re.compile(r"^(?P<label>[^\[\]]+)\[(?P<k>\d+)\]$")


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized amplitude vector over an ordered list of registers.

    Instances are treated as immutable: every operation returns a new state
    and the amplitude buffer is flagged read-only.
    """

    amplitudes: np.ndarray
    registers: tuple[tuple[str, int], ...]
    norm_tolerance: float = NORM_TOL

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        regs = tuple((str(lbl), int(k)) for lbl, k in self.registers)
        n = sum(k for _, k in regs)
        if amps.size != 2**n:
            raise DimensionMismatch(
                f"{amps.size} amplitudes do not match {n} qubits in {regs}"
            )
        labels = [lbl for lbl, _ in regs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate register labels in {labels}")
        if any(k < 1 for _, k in regs):
            raise ValueError("registers must hold at least one qubit")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.norm_tolerance:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "registers", regs)

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, registers: Iterable[tuple[str, int]]) -> "QuantumState":
        regs = tuple(registers)
        n = sum(k for _, k in regs)
        amps = np.zeros(2**n, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps, regs)

    @classmethod
    def basis(cls, registers, values: dict[str, int] | int) -> "QuantumState":
        regs = tuple(registers)
        n = sum(k for _, k in regs)
        if isinstance(values, dict):
            index = 0
            for lbl, k in regs:
                index = (index << k) | int(values.get(lbl, 0))
        else:
            index = int(values)
        amps = np.zeros(2**n, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps, regs)

    @classmethod
    def from_vector(cls, vector, registers=None) -> "QuantumState":
        """Wrap a (not necessarily normalized) vector; default one register."""
        vec = np.asarray(vector, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("zero vector")
        if registers is None:
            n = int(round(np.log2(vec.size)))
            registers = (("q", n),)
        return cls(vec / norm, tuple(registers))

    # layout -----------------------------------------------------------
    @property
    def num_qubits(self) -> int:
        return sum(k for _, k in self.registers)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(2**k for _, k in self.registers)

    def register_size(self, label: str) -> int:
        for lbl, k in self.registers:
            if lbl == label:
                return k
        raise UnknownRegister(label)

    def register_axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownRegister(label) from None

    def qubit_offset(self, label: str) -> int:
        offset = 0
        for lbl, k in self.registers:
            if lbl == label:
                return offset
            offset += k
        raise UnknownRegister(label)

    def resolve_qubits(self, targets) -> list[int]:
        """Global qubit positions for a label, ``"label[k]"`` or qubit ints."""
        if isinstance(targets, (str, int, np.integer)):
            targets = [targets]
        qubits: list[int] = []
        for t in targets:
            if isinstance(t, (int, np.integer)):
                if not 0 <= int(t) < self.num_qubits:
                    raise UnknownRegister(f"qubit {t}")
                qubits.append(int(t))
                continue
            m = _QUBIT_REF.match(t)
            if m:
                lbl, k = m.group("label"), int(m.group("k"))
                if k >= self.register_size(lbl):
                    raise UnknownRegister(t)
                qubits.append(self.qubit_offset(lbl) + k)
            else:
                off = self.qubit_offset(t)
                qubits.extend(range(off, off + self.register_size(t)))
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated target qubits in {targets}")
        return qubits

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per register."""
        return self.amplitudes.reshape(self.dims)

    @cached_property
    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        p.flags.writeable = False
        return p

    @cached_property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probabilities)
        c /= c[-1]
        return c

    def sample_index(self, rng: np.random.Generator, size=None):
        """Born-rule sample(s) of the full basis index; the state is untouched."""
        u = rng.random(size)
        return np.minimum(np.searchsorted(self.cdf, u, side="right"), self.cdf.size - 1)

    def decode(self, index: int) -> dict[str, int]:
        out = {}
        for lbl, k in reversed(self.registers):
            out[lbl] = int(index) & ((1 << k) - 1)
            index = int(index) >> k
        return dict(reversed(list(out.items())))

    def with_amplitudes(self, amps: np.ndarray) -> "QuantumState":
        return QuantumState(amps, self.registers, self.norm_tolerance)

    def relabel(self, mapping: dict[str, str]) -> "QuantumState":
        regs = tuple((mapping.get(lbl, lbl), k) for lbl, k in self.registers)
        return QuantumState(self.amplitudes, regs, self.norm_tolerance)

    def permute(self, labels: Sequence[str]) -> "QuantumState":
        """Reorder registers; ``labels`` must be a permutation of the layout."""
        if sorted(labels) != sorted(self.labels):
            raise UnknownRegister(f"{labels} is not a permutation of {self.labels}")
        axes = [self.register_axis(lbl) for lbl in labels]
        amps = np.transpose(self.tensor(), axes).reshape(-1)
        regs = tuple((lbl, self.register_size(lbl)) for lbl in labels)
        return QuantumState(amps, regs, self.norm_tolerance)

    def fingerprint(self) -> bytes:
        return self.amplitudes.tobytes()


def tensor_product(*states: QuantumState) -> QuantumState:
    amps = np.array([1.0 + 0j])
    regs: tuple = ()
    for s in states:
        amps = np.kron(amps, s.amplitudes)
        regs = regs + s.registers
    return QuantumState(amps, regs)


@dataclass(frozen=True)
class MeasurementOutcome:
    register_label: str | tuple[str, ...]
    basis_index: int
    probability: float


@dataclass
class Ensemble:
    """Probability-weighted mixture of pure states sharing one layout."""

    weights: np.ndarray
    states: list[QuantumState] = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.states):
            raise DimensionMismatch("weights and states differ in length")
        if abs(self.weights.sum() - 1) > 1e-9 or np.any(self.weights < 0):
            raise ValueError("ensemble weights must be a probability vector")

    def density_matrix(self) -> np.ndarray:
        dim = self.states[0].amplitudes.size
        rho = np.zeros((dim, dim), dtype=np.complex128)
        for w, s in zip(self.weights, self.states):
            rho += w * np.outer(s.amplitudes, s.amplitudes.conj())
        return rho


# gates ----------------------------------------------------------------

_S2 = 1 / np.sqrt(2)
_SINGLE = {
    "I": np.eye(2),
    "H": np.array([[_S2, _S2], [_S2, -_S2]]),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
}
_TWO = {
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "CZ": np.diag([1, 1, 1, -1]),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}
GATE_NAMES = tuple(_SINGLE) + tuple(_TWO) + ("UNIFORM", "DIFFUSION")


def _uniform_vector(n_qubits: int, size: int | None, offset: int) -> np.ndarray:
    dim = 2**n_qubits
    size = dim if size is None else int(size)
    if size < 1 or offset < 0 or offset + size > dim:
        raise ValueError(f"uniform block [{offset}, {offset + size}) outside {dim}")
    v = np.zeros(dim)
    v[offset : offset + size] = 1 / np.sqrt(size)
    return v


@lru_cache(maxsize=256)
def _named_matrix(name: str, n_qubits: int, size, offset) -> np.ndarray:
    name = name.upper()
    if name in _SINGLE:
        m = _SINGLE[name].astype(np.complex128)
        out = np.array([[1.0 + 0j]])
        for _ in range(n_qubits):
            out = np.kron(out, m)
        return out
    if name in _TWO:
        if n_qubits != 2:
            raise ValueError(f"{name} acts on exactly 2 qubits, got {n_qubits}")
        return _TWO[name].astype(np.complex128)
    if name == "UNIFORM":
        # Householder reflection sending |0> to the uniform block state
        s = _uniform_vector(n_qubits, size, offset)
        e0 = np.zeros_like(s)
        e0[0] = 1.0
        v = e0 - s
        if np.linalg.norm(v) < 1e-15:
            return np.eye(s.size, dtype=np.complex128)
        return (np.eye(s.size) - 2 * np.outer(v, v) / (v @ v)).astype(np.complex128)
    if name == "DIFFUSION":
        s = _uniform_vector(n_qubits, size, offset)
        return (2 * np.outer(s, s) - np.eye(s.size)).astype(np.complex128)
    raise ValueError(f"unknown gate {name!r}")


def gate_matrix(name: str, n_qubits: int, size=None, offset=0) -> np.ndarray:
    """Matrix of a named gate acting on ``n_qubits`` qubits.

    One-qubit gates are broadcast as a tensor power over all target qubits.
    ``UNIFORM`` prepares the uniform superposition over basis states
    ``[offset, offset+size)`` from ``|0>``; ``DIFFUSION`` is the reflection
    ``2|s><s| - I`` about that same state.
    """
    return _named_matrix(name, int(n_qubits), size, int(offset))


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> None:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NonUnitaryMatrix(f"matrix of shape {u.shape} is not square")
    err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if err > tol:
        raise NonUnitaryMatrix(f"U^dagger U deviates from identity by {err:.3e}")


def apply_unitary(state: QuantumState, u, targets, params: dict | None = None) -> QuantumState:
    """Apply ``u`` (matrix or gate name) to ``targets`` and return a new state.

    ``targets`` is a register label, a list of labels, ``"label[k]"`` qubit
    references, or global qubit indices. Register order in ``targets`` fixes
    the order of the gate's tensor factors.
    """
    qubits = state.resolve_qubits(targets)
    k = len(qubits)
    if isinstance(u, str):
        params = params or {}
        u = gate_matrix(u, k, params.get("size"), params.get("offset", 0))
    else:
        u = np.asarray(u, dtype=np.complex128)
        check_unitary(u)
    if u.shape != (2**k, 2**k):
        raise DimensionMismatch(f"gate of shape {u.shape} on {k} qubits")
    n = state.num_qubits
    psi = state.amplitudes.reshape([2] * n)
    psi = np.moveaxis(psi, qubits, range(k)).reshape(2**k, -1)
    psi = (u @ psi).reshape([2] * n)
    psi = np.moveaxis(psi, range(k), qubits).reshape(-1)
    return state.with_amplitudes(psi)


def _as_labels(register_label) -> tuple[str, ...]:
    if isinstance(register_label, str):
        return (register_label,)
    return tuple(register_label)


def born_distribution(state: QuantumState, register_label) -> np.ndarray:
    """Outcome distribution of measuring one register (or several, jointly)."""
    labels = _as_labels(register_label)
    axes = [state.register_axis(lbl) for lbl in labels]
    probs = state.probabilities.reshape(state.dims)
    others = tuple(a for a in range(len(state.dims)) if a not in axes)
    marg = probs.sum(axis=others) if others else probs
    # remaining axes are in layout order; reorder to the requested order
    remaining = sorted(axes)
    marg = np.transpose(marg, [remaining.index(a) for a in axes])
    out = marg.reshape(-1).copy()
    return out / out.sum()


def project(state: QuantumState, register_label, index: int) -> tuple[QuantumState, float]:
    """Project ``register_label`` onto basis ``index``; returns (state, prob)."""
    labels = _as_labels(register_label)
    axes = [state.register_axis(lbl) for lbl in labels]
    sizes = [state.dims[a] for a in axes]
    digits = np.unravel_index(int(index), sizes)
    mask_shape = [1] * len(state.dims)
    psi = state.tensor().copy()
    for a, d, size in zip(axes, digits, sizes):
        keep = np.zeros(size, dtype=bool)
        keep[d] = True
        shape = list(mask_shape)
        shape[a] = size
        psi = psi * keep.reshape(shape)
    psi = psi.reshape(-1)
    prob = float(np.vdot(psi, psi).real)
    if not prob > 0.0:
        raise ZeroProbabilityBranch(f"outcome {index} on {labels} has zero weight")
    return state.with_amplitudes(psi / np.sqrt(prob)), prob


def collapse(state: QuantumState, register_label, rng: np.random.Generator):
    """Collapsing computational-basis measurement of ``register_label``."""
    probs = born_distribution(state, register_label)
    idx = int(rng.choice(probs.size, p=probs))
    new, prob = project(state, register_label, idx)
    return new, MeasurementOutcome(register_label, idx, prob)


def reduced_density_matrix(state: QuantumState, register_label) -> np.ndarray:
    labels = _as_labels(register_label)
    rest = [lbl for lbl in state.labels if lbl not in labels]
    ordered = state.permute(list(labels) + rest)
    d = int(np.prod([2 ** ordered.register_size(lbl) for lbl in labels]))
    m = ordered.amplitudes.reshape(d, -1)
    return m @ m.conj().T


def reduced_purity(state: QuantumState, register_label) -> float:
    """Tr(rho^2) of the reduced state of ``register_label``."""
    labels = _as_labels(register_label)
    rest = [lbl for lbl in state.labels if lbl not in labels]
    ordered = state.permute(list(labels) + rest)
    d = int(np.prod([2 ** ordered.register_size(lbl) for lbl in labels]))
    sv = np.linalg.svd(ordered.amplitudes.reshape(d, -1), compute_uv=False)
    return float(np.sum(sv**4))


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    # round-off eigenvalues of order 1e-17 would otherwise leave sqrt residue near 1e-9
    vals = np.where(vals > 1e-14 * max(vals.max(), 1.0), vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def _as_operand(x):
    if isinstance(x, QuantumState):
        return x.amplitudes, True
    if isinstance(x, Ensemble):
        return x.density_matrix(), False
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 1:
        return arr / np.linalg.norm(arr), True
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr, False
    raise DimensionMismatch(f"cannot interpret array of shape {arr.shape} as a state")


def fidelity(a, b) -> float:
    """Square-root fidelity between pure states and/or density operators."""
    x, x_pure = _as_operand(a)
    y, y_pure = _as_operand(b)
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"dimensions {x.shape[0]} and {y.shape[0]} differ")
    if x_pure and y_pure:
        f = abs(np.vdot(x, y))
    elif x_pure:
        f = np.sqrt(max(np.vdot(x, y @ x).real, 0.0))
    elif y_pure:
        f = np.sqrt(max(np.vdot(y, x @ y).real, 0.0))
    else:
        f = np.linalg.svd(_psd_sqrt(x) @ _psd_sqrt(y), compute_uv=False).sum()
    return float(min(max(f, 0.0), 1.0))


# product of independent factors ------------------------------------------


class ProductState:
    """A workspace held as a tensor product of independent dense factors.

    Registers start in separate factors; factors merge only when a gate spans
    them. Sampling a product state draws each factor independently, which is
    exact because the factors are unentangled by construction.
    """

    def __init__(self, layout: Sequence[tuple[str, int]], factors=None, max_factor_qubits: int = 24):
        self.layout = tuple((str(l), int(k)) for l, k in layout)
        self.max_factor_qubits = max_factor_qubits
        if factors is None:
            factors = [QuantumState.zeros([reg]) for reg in self.layout]
        self.factors: list[QuantumState] = list(factors)

    def copy(self) -> "ProductState":
        return ProductState(self.layout, self.factors, self.max_factor_qubits)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.layout)

    def factor_index(self, label: str) -> int:
        for i, f in enumerate(self.factors):
            if label in f.labels:
                return i
        raise UnknownRegister(label)

    def merged(self, labels: Iterable[str]) -> tuple[int, QuantumState]:
        """Merge the factors holding ``labels``; returns (position, factor)."""
        idx = sorted({self.factor_index(l) for l in labels})
        if len(idx) == 1:
            return idx[0], self.factors[idx[0]]
        joined = tensor_product(*(self.factors[i] for i in idx))
        if joined.num_qubits > self.max_factor_qubits:
            raise QubitBudgetExceeded(
                f"merged factor needs {joined.num_qubits} qubits (cap {self.max_factor_qubits})"
            )
        for i in reversed(idx[1:]):
            del self.factors[i]
        self.factors[idx[0]] = joined
        return idx[0], joined

    def transform(self, labels: Iterable[str], fn) -> None:
        """Replace the factor holding ``labels`` by ``fn(factor)``."""
        pos, factor = self.merged(list(labels))
        self.factors[pos] = fn(factor)

    def add_register(self, state: QuantumState) -> None:
        self.layout = self.layout + state.registers
        self.factors.append(state)

    def born(self, register_label) -> np.ndarray:
        labels = _as_labels(register_label)
        _, factor = self.merged(labels)
        return born_distribution(factor, labels)

    def project(self, register_label, index: int) -> float:
        labels = _as_labels(register_label)
        pos, factor = self.merged(labels)
        new, prob = project(factor, labels, index)
        self.factors[pos] = new
        return prob

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Full-workspace basis index sampled without disturbing the state."""
        n = 1 if size is None else size
        values = {}
        for f in self.factors:
            idx = f.sample_index(rng, n)
            for lbl, k in reversed(f.registers):
                values[lbl] = idx & ((1 << k) - 1)
                idx = idx >> k
        # wide layouts overflow int64, fall back to Python ints
        dtype = np.int64 if sum(k for _, k in self.layout) <= 62 else object
        out = np.zeros(n, dtype=dtype)
        for lbl, k in self.layout:
            out = (out << k) | values[lbl].astype(dtype)
        return int(out[0]) if size is None else out

    def to_state(self) -> QuantumState:
        return tensor_product(*self.factors).permute(self.labels)

    def fingerprint(self) -> tuple:
        return tuple((f.registers, f.fingerprint()) for f in self.factors)
