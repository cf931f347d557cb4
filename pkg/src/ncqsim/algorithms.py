"""Query algorithms as step circuits plus classical decision rules.

Every builder returns an ``AlgorithmSpec`` whose circuit declares its query
budget ``Q`` (oracle pairs, so a parallel round of ``k`` pairs costs ``k``)
and its non-collapsing budget ``P``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .circuit import Gate, OracleCall, RunTranscript, Step, StepCircuit
from .engine import query_states
from .errors import InvalidParameters, NotPerfectSquare
from .problems import ProblemInstance, ProblemKind, index_bits, is_power_of_two
from .state import apply_unitary, born_distribution


class Model(str, Enum):
    PDQP = "pdqp"
    PDQP_NAQ = "pdqp-naq"
    CBQP = "cbqp"

    @classmethod
    def parse(cls, value) -> "Model":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower().replace("_", "-"))


@dataclass(frozen=True)
class Decision:
    answer: object
    confident: bool = True


@dataclass
class AlgorithmSpec:
    problem: ProblemKind
    model: Model
    N: int
    Q: int
    P: int
    circuit: StepCircuit
    decision_rule: Callable[[RunTranscript, ProblemInstance], Decision]
    params: dict = field(default_factory=dict)

    def decide(self, transcript: RunTranscript, instance: ProblemInstance) -> Decision:
        return self.decision_rule(transcript, instance)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem.value,
            "model": self.model.value,
            "N": self.N,
            "Q": self.Q,
            "P": self.P,
            "params": dict(sorted(self.params.items())),
            "circuit": self.circuit.to_dict(),
        }


def ceil_tol(x: float, tol: float = 1e-9) -> int:
    """Ceiling that ignores floating-point fuzz (27 ** (1/3) is 3.0000000000000004)."""
    r = round(x)
    return int(r) if abs(x - r) < tol else math.ceil(x)


def account_complexity(spec: AlgorithmSpec) -> tuple[int, int, int, int]:
    """(Q, P, Q + P, Q * P) from the declared budgets."""
    return spec.Q, spec.P, spec.Q + spec.P, spec.Q * spec.P


def _field(value: int, shift: int, bits: int) -> int:
    return (int(value) >> shift) & ((1 << bits) - 1)


# collision -----------------------------------------------------------------


def collision_algorithm(N: int, P: int = 10) -> AlgorithmSpec:
    """Decide whether ``f`` is 1-to-1 or 2-to-1 with one query.

    Query every index in superposition, collapse the value register, then
    take ``P`` non-collapsing samples of the index register. Two or more
    distinct indices mean a collision pair; this errs on a 2-to-1 function
    with probability exactly ``2^(1-P)`` and never on a permutation.
    """
    if N < 2 or not is_power_of_two(N):
        raise InvalidParameters(f"collision needs N >= 2 a power of two, got {N}")
    if P < 2:
        raise InvalidParameters(f"collision needs P >= 2, got {P}")
    n = index_bits(N)
    steps = [Step.query(OracleCall("xor", (("idx", "val"),)), (Gate("H", ("idx",)),))]
    steps.append(Step.sample(measure=("val",)))
    steps += [Step.sample() for _ in range(P - 1)]
    circuit = StepCircuit((("idx", n), ("val", n)), tuple(steps), nonadaptive=True)

    def decide(t: RunTranscript, instance) -> Decision:
        seen = {_field(v, n, n) for v in t.noncollapsing_samples}
        return Decision(2 if len(seen) >= 2 else 1)

    return AlgorithmSpec(ProblemKind.COLLISION, Model.PDQP, N, 1, P, circuit, decide)


# search ------------------------------------------------------------------


def _search_registers(N: int):
    return (("idx", index_bits(N)), ("bit", 1))


def _prepare(N: int) -> tuple[Gate, ...]:
    return (Gate("UNIFORM", ("idx",), {"size": N}), Gate("X", ("bit",)))


def _diffusion(N: int) -> Gate:
    return Gate("DIFFUSION", ("idx",), {"size": N})


def grover_steps(N: int, Q: int) -> list[Step]:
    """Uniform preparation then ``Q`` phase queries, with a diffusion before
    every query after the first (the last diffusion is left to the caller)."""
    call = OracleCall("phase", (("idx", "bit"),))
    steps = []
    for t in range(Q):
        gates = _prepare(N) if t == 0 else (_diffusion(N),)
        steps.append(Step.query(call, gates))
    return steps


def grover_circuit(N: int, Q: int) -> StepCircuit:
    """Measurement-free Grover search with ``Q`` queries over ``N`` items."""
    steps = grover_steps(N, Q)
    if Q == 0:
        steps = [Step.sample(_prepare(N))]
    else:
        steps.append(Step.sample((_diffusion(N),)))
    return StepCircuit(_search_registers(N), tuple(steps), declared_P=len(steps) - Q)


def _search_decide(idx_shift: int, bits: int):
    def decide(t: RunTranscript, instance: ProblemInstance) -> Decision:
        # candidates are checked against the table classically
        for v in t.noncollapsing_samples:
            if instance.value(_field(v, idx_shift, bits)) == 1:
                return Decision(True)
        return Decision(False)

    return decide


def pdqp_search_algorithm(N: int, c: float = 1.0, Q: int | None = None, P: int | None = None) -> AlgorithmSpec:
    """Partial Grover search followed by repeated non-collapsing sampling.

    ``T = ceil(c N^(1/3))`` Grover iterations amplify a marked item to
    probability ``sin^2((2T+1) theta)``, then ``ceil(c N^(1/3) ln N)``
    non-collapsing samples of the index register look for it. ``Q`` and
    ``P`` override the two budgets. Any ``N >= 2`` works: the index register
    holds a uniform superposition over exactly ``N`` basis states.
    """
    if N < 2:
        raise InvalidParameters(f"search needs N >= 2, got {N}")
    if c <= 0:
        raise InvalidParameters("c must be positive")
    root = N ** (1 / 3)
    T = ceil_tol(c * root) if Q is None else int(Q)
    P = ceil_tol(c * root * math.log(N)) if P is None else int(P)
    if T < 0 or P < 1:
        raise InvalidParameters(f"need Q >= 0 and P >= 1 (Q={T}, P={P})")
    steps = grover_steps(N, T)
    first = (_diffusion(N),) if T else _prepare(N)
    steps.append(Step.sample(first))
    steps += [Step.sample() for _ in range(P - 1)]
    circuit = StepCircuit(_search_registers(N), tuple(steps))
    return AlgorithmSpec(
        ProblemKind.SEARCH, Model.PDQP, N, T, P, circuit, _search_decide(1, index_bits(N)), {"c": c}
    )


def grover_success_probability(N: int, T: int, marked: int = 1) -> float:
    theta = math.asin(math.sqrt(marked / N))
    return math.sin((2 * T + 1) * theta) ** 2


# non-adaptive partition ------------------------------------------------------


def _block_layout(kind: ProblemKind, N: int, B: int):
    n = index_bits(N)
    vbits = 1 if kind.is_boolean else n
    vname = "bit" if kind.is_boolean else "val"
    regs = []
    for j in range(B):
        regs += [(f"idx{j}", n), (f"{vname}{j}", vbits)]
    return tuple(regs), n, vbits, vname


def _collect(t: RunTranscript, B: int, n: int, vbits: int) -> dict[int, int]:
    width = n + vbits
    total = B * width
    known: dict[int, int] = {}
    for v in t.noncollapsing_samples:
        v = int(v)
        for j in range(B):
            shift = total - (j + 1) * width
            known[_field(v, shift + vbits, n)] = _field(v, shift, vbits)
    return known


def nonadaptive_partition_algorithm(kind, N: int, c: float = 3.0, P: int | None = None) -> AlgorithmSpec:
    """One parallel query round over ``sqrt(N)`` blocks, then sampling.

    Block ``j`` holds a uniform superposition over its ``sqrt(N)`` indices and
    receives one query, so the workspace becomes a product over blocks of
    ``sum_i |i>|x(i)>``. Each of the ``P = ceil(c sqrt(N) ln N)`` samples
    reveals one (index, value) pair per block. Search answers yes on any
    sampled 1; majority, parity and element distinctness are exact once every
    index has been seen, and otherwise answer from partial data with
    ``confident=False``.
    """
    kind = ProblemKind.parse(kind)
    if kind is ProblemKind.COLLISION:
        raise InvalidParameters("the partition algorithm does not cover collision")
    B = math.isqrt(N)
    if N < 4 or B * B != N:
        raise NotPerfectSquare(f"N={N} is not a perfect square >= 4")
    if P is None:
        P = ceil_tol(c * B * math.log(N))
    if P < 1:
        raise InvalidParameters(f"P must be positive, got {P}")
    registers, n, vbits, vname = _block_layout(kind, N, B)
    prep, pairs, post = [], [], []
    for j in range(B):
        prep.append(Gate("UNIFORM", (f"idx{j}",), {"size": B, "offset": j * B}))
        if kind.is_boolean:
            prep.append(Gate("H", (f"{vname}{j}",)))
            post.append(Gate("H", (f"{vname}{j}",)))
        pairs.append((f"idx{j}", f"{vname}{j}"))
    oracle = OracleCall("phase" if kind.is_boolean else "xor", tuple(pairs))
    steps = [Step.query(oracle, tuple(prep)), Step.sample(tuple(post))]
    steps += [Step.sample() for _ in range(P - 1)]
    circuit = StepCircuit(registers, tuple(steps), nonadaptive=True)

    def decide(t: RunTranscript, instance) -> Decision:
        known = _collect(t, B, n, vbits)
        complete = len(known) == N
        vals = list(known.values())
        if kind is ProblemKind.SEARCH:
            found = any(v == 1 for v in vals)
            return Decision(found, found or complete)
        if kind is ProblemKind.MAJORITY:
            if complete:
                return Decision(sum(vals) >= N / 2)
            return Decision(bool(vals) and sum(vals) >= len(vals) / 2, False)
        if kind is ProblemKind.PARITY:
            return Decision(sum(vals) % 2 == 1, complete)
        dup = len(set(vals)) < len(vals)
        return Decision(dup, dup or complete)

    return AlgorithmSpec(kind, Model.PDQP_NAQ, N, B, P, circuit, decide, {"c": c})


# dispatch -----------------------------------------------------------------


def build_algorithm(problem, model, N: int, c: float | None = None, Q: int | None = None, P: int | None = None) -> AlgorithmSpec:
    """The implemented algorithm for ``(problem, model)``.

    Under ``pdqp`` search uses the partial-Grover algorithm and the other
    boolean problems and element distinctness fall back to the partition
    algorithm (a non-adaptive algorithm is also a valid adaptive one).
    Collision uses its single-query algorithm under both PDQP models.
    There is no copy-model algorithm.
    """
    kind = ProblemKind.parse(problem)
    model = Model.parse(model)
    if model is Model.CBQP:
        raise InvalidParameters("no copy-model algorithm is implemented; use `bound` for cbqp")
    if kind is ProblemKind.COLLISION:
        spec = collision_algorithm(N, 10 if P is None else P)
    elif kind is ProblemKind.SEARCH and model is Model.PDQP:
        spec = pdqp_search_algorithm(N, 1.0 if c is None else c, Q, P)
    else:
        if Q is not None and Q != math.isqrt(N):
            raise InvalidParameters(f"the partition algorithm uses Q = sqrt(N) = {math.isqrt(N)}")
        spec = nonadaptive_partition_algorithm(kind, N, 3.0 if c is None else c, P)
    spec.model = model
    return spec


def decode_samples(spec: AlgorithmSpec, transcript: RunTranscript) -> list[dict[str, int]]:
    """Per-register view of every non-collapsing sample."""
    return [spec.circuit.decode(v) for v in transcript.noncollapsing_samples]


def sample_marked_probability(spec: AlgorithmSpec, instance: ProblemInstance) -> float:
    """Exact probability that one search sample lands on a marked index."""
    traj = query_states(spec.circuit, instance)
    state = traj.after[-1] if traj.after else None
    if state is None:
        return float(np.mean(instance.table))
    state = apply_unitary(state, "DIFFUSION", "idx", {"size": spec.N})
    probs = born_distribution(state, "idx")[: spec.N]
    return float(np.dot(probs, instance.table))
