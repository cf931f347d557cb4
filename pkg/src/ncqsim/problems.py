"""Problem instances and oracle gates.

Boolean problems (search, majority, parity) are accessed through the phase
oracle ``|i, b> -> (-1)^(x(i) b) |i, b>``; function problems (collision,
element distinctness) through the XOR value oracle ``|i, y> -> |i, y ^ f(i)>``.
Every oracle application on one (index, target) pair costs one query.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .circuit import OracleCall
from .errors import InvalidParameters, RegisterSizeMismatch, SecondParallelQuery
from .state import QuantumState


class ProblemKind(str, Enum):
    SEARCH = "search"
    MAJORITY = "majority"
    PARITY = "parity"
    COLLISION = "collision"
    ELEMENT_DISTINCTNESS = "ed"

    @classmethod
    def parse(cls, value) -> "ProblemKind":
        if isinstance(value, cls):
            return value
        aliases = {"element_distinctness": "ed", "elementdistinctness": "ed"}
        v = str(value).lower().replace("-", "_")
        return cls(aliases.get(v, v))

    @property
    def is_boolean(self) -> bool:
        return self in (ProblemKind.SEARCH, ProblemKind.MAJORITY, ProblemKind.PARITY)


def index_bits(n: int) -> int:
    """Qubits needed to address ``n`` items (at least one)."""
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def evaluate(kind, table) -> object:
    """Brute-force ground truth for a table."""
    kind = ProblemKind.parse(kind)
    t = [int(v) for v in table]
    n = len(t)
    if kind is ProblemKind.SEARCH:
        return any(v == 1 for v in t)
    if kind is ProblemKind.MAJORITY:
        return sum(t) >= n / 2
    if kind is ProblemKind.PARITY:
        return sum(t) % 2 == 1
    if kind is ProblemKind.COLLISION:
        counts = {}
        for v in t:
            counts[v] = counts.get(v, 0) + 1
        return max(counts.values())
    return len(set(t)) < n


@dataclass(frozen=True)
class ProblemInstance:
    kind: ProblemKind
    N: int
    table: tuple[int, ...]
    answer: object
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind.parse(self.kind))
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))
        if len(self.table) != self.N:
            raise InvalidParameters(f"table has {len(self.table)} entries, N={self.N}")
        if self.kind is ProblemKind.COLLISION:
            counts = {}
            for v in self.table:
                counts[v] = counts.get(v, 0) + 1
            if len(set(counts.values())) != 1 or max(counts.values()) not in (1, 2):
                raise InvalidParameters("collision tables must be exactly 1-to-1 or 2-to-1")

    @property
    def value_bits(self) -> int:
        return 1 if self.kind.is_boolean else index_bits(self.N)

    def value(self, i: int) -> int:
        return self.table[i] if 0 <= i < self.N else 0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "N": self.N,
            "table": list(self.table),
            "answer": self.answer,
            "params": dict(sorted(self.params.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemInstance":
        return cls(ProblemKind.parse(d["kind"]), int(d["N"]), tuple(d["table"]), d["answer"], dict(d.get("params", {})))

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        return cls.from_dict(json.loads(text))


def generate_instance(kind, N: int, params: dict | None = None, rng=None) -> ProblemInstance:
    """Uniformly random instance of ``kind`` on ``N`` inputs.

    Parameters by kind: search ``marked`` (default 1); majority and parity
    ``s`` (Hamming weight, default uniform random bits); collision ``k`` in
    {1, 2} (default 2); ed ``distinct`` (bool, default a fair coin). Element
    distinctness no-instances are permutations, yes-instances have exactly
    one colliding pair.
    """
    kind = ProblemKind.parse(kind)
    params = dict(params or {})
    rng = np.random.default_rng() if rng is None else rng
    if N < 1:
        raise InvalidParameters("N must be positive")
    if kind is ProblemKind.SEARCH:
        marked = int(params.get("marked", 1))
        if not 0 <= marked <= N:
            raise InvalidParameters(f"cannot mark {marked} of {N} items")
        table = np.zeros(N, dtype=int)
        table[rng.choice(N, size=marked, replace=False)] = 1
    elif kind in (ProblemKind.MAJORITY, ProblemKind.PARITY):
        if not is_power_of_two(N):
            raise InvalidParameters(f"{kind.value} needs N a power of two, got {N}")
        if params.get("s") is None:
            table = rng.integers(0, 2, size=N)
        else:
            s = int(params["s"])
            if not 0 <= s <= N:
                raise InvalidParameters(f"Hamming weight {s} outside [0, {N}]")
            table = np.zeros(N, dtype=int)
            table[rng.choice(N, size=s, replace=False)] = 1
    elif kind is ProblemKind.COLLISION:
        k = int(params.get("k", 2))
        if k not in (1, 2) or (k == 2 and N % 2):
            raise InvalidParameters(f"collision needs k in {{1, 2}} and even N for k=2 (k={k}, N={N})")
        if k == 1:
            table = rng.permutation(N)
        else:
            order = rng.permutation(N)
            images = rng.choice(N, size=N // 2, replace=False)
            table = np.empty(N, dtype=int)
            table[order[0::2]] = images
            table[order[1::2]] = images
    else:
        if N < 2:
            raise InvalidParameters("element distinctness needs N >= 2")
        distinct = params.get("distinct")
        if distinct is None:
            distinct = bool(rng.integers(0, 2))
        table = rng.permutation(N)
        if not distinct:
            p, q = rng.choice(N, size=2, replace=False)
            table[q] = table[p]
    table = tuple(int(v) for v in table)
    return ProblemInstance(kind, N, table, evaluate(kind, table), params)


# oracles --------------------------------------------------------------


class QuerySession:
    """Per-run query bookkeeping; enforces a single round when non-adaptive."""

    def __init__(self, nonadaptive: bool = False):
        self.nonadaptive = nonadaptive
        self.rounds = 0
        self.queries = 0

    def record(self, queries: int) -> None:
        if self.nonadaptive and self.rounds >= 1:
            raise SecondParallelQuery("non-adaptive runs allow a single round of queries")
        self.rounds += 1
        self.queries += queries


def _check_index_register(state: QuantumState, instance: ProblemInstance, label: str) -> None:
    need = index_bits(instance.N)
    got = state.register_size(label)
    if got != need:
        raise RegisterSizeMismatch(f"index register {label!r} has {got} qubits, N={instance.N} needs {need}")


def _values(instance: ProblemInstance, dim: int) -> np.ndarray:
    vals = np.zeros(dim, dtype=np.int64)
    vals[: instance.N] = instance.table
    return vals


def _phase_exponent(state: QuantumState, instance: ProblemInstance, index_reg: str, bit_reg: str) -> np.ndarray:
    if not instance.kind.is_boolean:
        raise InvalidParameters("the phase oracle needs a boolean table")
    _check_index_register(state, instance, index_reg)
    if state.register_size(bit_reg) != 1:
        raise RegisterSizeMismatch(f"bit register {bit_reg!r} must hold one qubit")
    x = _values(instance, state.dims[state.register_axis(index_reg)])
    ia, ba = state.register_axis(index_reg), state.register_axis(bit_reg)
    shape_x = [1] * len(state.dims)
    shape_x[ia] = x.size
    shape_b = [1] * len(state.dims)
    shape_b[ba] = 2
    return x.reshape(shape_x) * np.arange(2).reshape(shape_b)


def apply_phase_oracle(state: QuantumState, instance: ProblemInstance, index_reg: str, bit_reg: str) -> QuantumState:
    """One phase-oracle query on the (index, bit) register pair."""
    s = _phase_exponent(state, instance, index_reg, bit_reg)
    psi = state.tensor() * np.where(s % 2 == 1, -1.0, 1.0)
    return state.with_amplitudes(psi.reshape(-1))


def apply_parallel_phase_oracle(
    state: QuantumState,
    instance: ProblemInstance,
    Q: int,
    reg_pairs,
    session: QuerySession | None = None,
) -> QuantumState:
    """``Q`` simultaneous phase queries: phase ``(-1)^s`` with ``s = sum_j x(i_j) b_j``."""
    reg_pairs = [tuple(p) for p in reg_pairs]
    if len(reg_pairs) != Q:
        raise InvalidParameters(f"{len(reg_pairs)} register pairs given for Q={Q}")
    if session is not None:
        session.record(Q)
    s = 0
    for idx, bit in reg_pairs:
        s = s + _phase_exponent(state, instance, idx, bit)
    psi = state.tensor() * np.where(np.asarray(s) % 2 == 1, -1.0, 1.0)
    return state.with_amplitudes(psi.reshape(-1))


def apply_xor_value_oracle(state: QuantumState, instance: ProblemInstance, index_reg: str, value_reg: str) -> QuantumState:
    """One value query ``|i>|y> -> |i>|y XOR f(i)>``; self-inverse.

    The value register must hold ``instance.value_bits`` qubits: one for
    boolean tables, ``ceil(log2 N)`` for function tables.
    """
    _check_index_register(state, instance, index_reg)
    if state.register_size(value_reg) != instance.value_bits:
        raise RegisterSizeMismatch(
            f"value register {value_reg!r} has {state.register_size(value_reg)} qubits, needs {instance.value_bits}"
        )
    ia, va = state.register_axis(index_reg), state.register_axis(value_reg)
    di, dv = state.dims[ia], state.dims[va]
    f = _values(instance, di)
    psi = np.moveaxis(state.tensor(), (ia, va), (0, 1))
    src = np.arange(dv)[None, :] ^ f[:, None]
    out = psi[np.arange(di)[:, None], src]
    out = np.moveaxis(out, (0, 1), (ia, va))
    return state.with_amplitudes(out.reshape(-1))


def apply_oracle_call(state: QuantumState, instance: ProblemInstance, call: OracleCall) -> QuantumState:
    """Apply every pair of ``call`` to ``state`` (no round bookkeeping)."""
    if call.kind == "phase":
        if len(call.pairs) == 1:
            return apply_phase_oracle(state, instance, *call.pairs[0])
        return apply_parallel_phase_oracle(state, instance, len(call.pairs), call.pairs)
    for idx, val in call.pairs:
        state = apply_xor_value_oracle(state, instance, idx, val)
    return state
