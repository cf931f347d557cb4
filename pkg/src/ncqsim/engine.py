"""Executors for step circuits.

Three semantics share one driver:

* direct: the workspace evolves step by step; a non-collapsing sample is a
  Born sample of the whole workspace that leaves the state untouched.
* purified: ``R`` parallel copies of the workspace, one retired per step.
  Unitaries act on every active copy, collapsing measurements post-select on
  all active copies agreeing and reweight outcome ``n`` by ``1/a_n^(r-1)``.
  Retired sample copies are measured together at the very end.
* copy (CBQP): a copy step appends a fresh register holding the pure reduced
  state of its source; there are no non-collapsing samples.

Shots are batched: a run only branches where a collapsing measurement has
several realised outcomes, and each branch carries the indices of the shots
that took it. Samples inside a branch are drawn in one vectorised call.
"""

from __future__ import annotations

import copy as _copy
import re
from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from .circuit import COPY, QUERY, SAMPLE, Gate, OracleCall, RunTranscript, Step, StepCircuit, TranscriptBatch
from .errors import (
    CopyOfEntangledRegister,
    DimensionMismatch,
    MalformedCircuit,
    QubitBudgetExceeded,
    ReweightNotStochastic,
    UnknownRegister,
)
from .problems import ProblemInstance, QuerySession, apply_oracle_call, generate_instance
from .state import (
    Ensemble,
    ProductState,
    QuantumState,
    apply_unitary,
    born_distribution,
    fidelity,
    project,
    reduced_purity,
)

PURIFIED_QUBIT_CAP = 20
A_MIN = 1e-12
STOCHASTIC_TOL = 1e-9
PURITY_TOL = 1e-9

_QUBIT_REF = re.compile(r"^(?P<label>[^\[\]]+)\[(?P<k>\d+)\]$")


def _normalize_targets(layout, targets) -> tuple[list[str], list[str]]:
    """Rewrite targets as label / ``label[k]`` strings; also return base labels."""
    if isinstance(targets, (str, int, np.integer)):
        targets = [targets]
    out, labels = [], []
    for t in targets:
        if isinstance(t, (int, np.integer)):
            q = int(t)
            offset = 0
            for lbl, k in layout:
                if q < offset + k:
                    out.append(f"{lbl}[{q - offset}]")
                    break
                offset += k
            else:
                raise UnknownRegister(f"qubit {t}")
            base = out[-1].split("[", 1)[0]
        else:
            out.append(t)
            m = _QUBIT_REF.match(t)
            base = m.group("label") if m else t
        if base not in labels:
            labels.append(base)
    return out, labels


def _copy_label(target: str, c: int) -> str:
    m = _QUBIT_REF.match(target)
    if m:
        return f"{m.group('label')}#{c}[{m.group('k')}]"
    return f"{target}#{c}"


def _draw(probs: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), cdf.size - 1)


# runners ----------------------------------------------------------------


class _DirectRunner:
    """Stepwise semantics on a product-of-factors workspace."""

    def __init__(self, circuit: StepCircuit, instance, max_factor_qubits: int = 24):
        self.circuit = circuit
        self.instance = instance
        self.max_factor_qubits = max_factor_qubits

    def initial(self):
        return ProductState(self.circuit.registers, max_factor_qubits=self.max_factor_qubits)

    def apply_gates(self, ps: ProductState, i: int, step: Step) -> ProductState:
        ps = ps.copy()
        for g in step.gates:
            targets, labels = _normalize_targets(ps.layout, g.targets)
            ps.transform(labels, lambda f, g=g, t=targets: apply_unitary(f, g.operator, t, g.params))
        return ps

    def measure_distribution(self, ps: ProductState, i: int, step: Step) -> np.ndarray:
        return ps.born(step.measure)

    def project(self, ps: ProductState, i: int, step: Step, n: int) -> ProductState:
        ps = ps.copy()
        ps.project(step.measure, n)
        return ps

    def query(self, ps: ProductState, i: int, step: Step) -> ProductState:
        # a parallel call is a product of per-pair gates, so apply pair by pair
        ps = ps.copy()
        for pair in step.oracle.pairs:
            call = OracleCall(step.oracle.kind, (pair,))
            ps.transform(pair, lambda f, c=call: apply_oracle_call(f, self.instance, c))
        return ps

    def sample(self, ps: ProductState, i: int, rng, size: int):
        return ps.sample(rng, size)

    def copy_register(self, ps: ProductState, i: int, step: Step) -> ProductState:
        src, new = step.copy
        ps = ps.copy()
        _, factor = ps.merged([src])
        k = factor.register_size(src)
        if factor.labels == (src,):
            vec = factor.amplitudes
        else:
            purity = reduced_purity(factor, src)
            if purity < 1 - PURITY_TOL:
                raise CopyOfEntangledRegister(f"register {src!r} has reduced purity {purity:.6f}")
            rest = [l for l in factor.labels if l != src]
            m = factor.permute([src] + rest).amplitudes.reshape(2**k, -1)
            u, _, _ = np.linalg.svd(m, full_matrices=False)
            vec = u[:, 0]
        ps.add_register(QuantumState(vec, ((new, k),)))
        return ps

    def finish(self, ps: ProductState, rng, size: int):
        if not self.circuit.measure_final:
            return None, None
        probs = ps.born(self.circuit.measure_final)
        return None, _draw(probs, rng, size)


@dataclass(frozen=True)
class PurifiedLayout:
    """Register layout of the purified circuit.

    ``copies`` parallel workspaces labelled ``label#c``; at step ``i``
    (0-based) copies ``i..copies-1`` are active, so ``r_i = copies - i``.
    """

    base: tuple[tuple[str, int], ...]
    copies: int

    @property
    def registers(self) -> tuple[tuple[str, int], ...]:
        return tuple((f"{l}#{c}", k) for c in range(self.copies) for l, k in self.base)

    @property
    def total_qubits(self) -> int:
        return self.copies * sum(k for _, k in self.base)

    def active(self, i: int) -> range:
        return range(i, self.copies)

    def r(self, i: int) -> int:
        return self.copies - i

    @staticmethod
    def reweight(a: np.ndarray, r: int) -> np.ndarray:
        """``d_n = 1 / a_n^(r-1)`` for realisable outcomes, 0 elsewhere."""
        d = np.zeros_like(a, dtype=float)
        ok = a > A_MIN
        d[ok] = 1.0 / a[ok] ** (r - 1)
        return d


def purified_layout(circuit: StepCircuit) -> PurifiedLayout:
    copies = len(circuit.steps) + (1 if circuit.measure_final else 0)
    return PurifiedLayout(circuit.registers, max(copies, 1))


class _PurifiedRunner:
    def __init__(self, circuit: StepCircuit, instance, reweight: bool = True, cap: int = PURIFIED_QUBIT_CAP):
        self.circuit = circuit
        self.instance = instance
        self.reweight = reweight
        self.layout = purified_layout(circuit)
        if self.layout.total_qubits > cap:
            raise QubitBudgetExceeded(
                f"purified circuit needs {self.layout.total_qubits} qubits (cap {cap})"
            )
        self.log: list[dict] = []

    def initial(self):
        return QuantumState.zeros(self.layout.registers)

    def apply_gates(self, state: QuantumState, i: int, step: Step) -> QuantumState:
        base = self.circuit.registers
        for g in step.gates:
            targets, _ = _normalize_targets(base, g.targets)
            for c in self.layout.active(i):
                state = apply_unitary(state, g.operator, [_copy_label(t, c) for t in targets], g.params)
        return state

    def _labels(self, i: int, step: Step) -> list[list[str]]:
        return [[f"{l}#{c}" for l in step.measure] for c in self.layout.active(i)]

    def measure_distribution(self, state: QuantumState, i: int, step: Step) -> np.ndarray:
        per_copy = self._labels(i, step)
        r = len(per_copy)
        a = born_distribution(state, per_copy[0])
        dim = a.size
        joint = born_distribution(state, [l for labels in per_copy for l in labels])
        diag = np.arange(dim) * sum(dim**k for k in range(r))
        q = joint[diag]
        if self.reweight:
            d = PurifiedLayout.reweight(a, r)
            p = d * q
            total = p.sum()
            if abs(total - 1.0) > STOCHASTIC_TOL:
                raise ReweightNotStochastic(f"step {i}: reweighted outcomes sum to {total!r}")
        else:
            d = np.ones_like(a)
            p = q / q.sum()
        self.log.append({"step": i, "r": r, "a": a, "q": q, "d": d, "p": p})
        return p

    def project(self, state: QuantumState, i: int, step: Step, n: int) -> QuantumState:
        per_copy = self._labels(i, step)
        dim = born_distribution(state, per_copy[0]).size
        index = n * sum(dim**k for k in range(len(per_copy)))
        new, _ = project(state, [l for labels in per_copy for l in labels], index)
        return new

    def query(self, state: QuantumState, i: int, step: Step) -> QuantumState:
        for c in self.layout.active(i):
            pairs = tuple((f"{a}#{c}", f"{b}#{c}") for a, b in step.oracle.pairs)
            state = apply_oracle_call(state, self.instance, OracleCall(step.oracle.kind, pairs))
        return state

    def sample(self, state, i, rng, size):
        return None

    def copy_register(self, state, i, step):
        raise MalformedCircuit("copy steps have no purified semantics here")

    def finish(self, state: QuantumState, rng, size: int):
        base = self.circuit.labels
        sample_copies = [i for i, s in enumerate(self.circuit.steps) if s.kind == SAMPLE]
        labels = [f"{l}#{c}" for c in sample_copies for l in base]
        final_labels = []
        if self.circuit.measure_final:
            final_labels = [f"{l}#{self.layout.copies - 1}" for l in self.circuit.measure_final]
        if not labels and not final_labels:
            return None, None
        joint = _draw(born_distribution(state, labels + final_labels), rng, size)
        fbits = sum(self.circuit.registers[self.circuit.labels.index(l)][1] for l in self.circuit.measure_final or ())
        finals = joint & ((1 << fbits) - 1) if final_labels else None
        rest = joint >> fbits
        w = self.circuit.workspace_qubits
        cols = [(rest >> (w * (len(sample_copies) - 1 - j))) & ((1 << w) - 1) for j in range(len(sample_copies))]
        samples = np.stack(cols, axis=1) if cols else None
        return samples, finals


# driver ------------------------------------------------------------------


def _execute(runner, circuit: StepCircuit, shots: int, rng: np.random.Generator, observer=None) -> TranscriptBatch:
    steps = circuit.steps
    sdtype = np.int64 if circuit.workspace_qubits <= 62 else object
    samples = np.zeros((shots, circuit.num_samples), dtype=sdtype)
    collapses = np.zeros((shots, circuit.num_measurements), dtype=np.int64)
    finals = np.full(shots, -1, dtype=np.int64)

    def walk(state, i, measured, rows, s_col, m_col, session):
        while i < len(steps):
            step = steps[i]
            if not measured:
                state = runner.apply_gates(state, i, step)
                if step.measure is not None:
                    probs = runner.measure_distribution(state, i, step)
                    outcomes = _draw(probs, rng, rows.size)
                    collapses[rows, m_col] = outcomes
                    for n in np.unique(outcomes):
                        branch = runner.project(state, i, step, int(n))
                        walk(branch, i, True, rows[outcomes == n], s_col, m_col + 1, _copy.copy(session))
                    return
            measured = False
            if step.kind == SAMPLE:
                before = state.fingerprint() if observer else None
                drawn = runner.sample(state, i, rng, rows.size)
                if drawn is not None:
                    samples[rows, s_col] = drawn
                if observer:
                    observer(i, SAMPLE, before, state.fingerprint())
                s_col += 1
            elif step.kind == QUERY:
                session.record(step.oracle.queries)
                state = runner.query(state, i, step)
            elif step.kind == COPY:
                state = runner.copy_register(state, i, step)
            i += 1
        late_samples, late_finals = runner.finish(state, rng, rows.size)
        if late_samples is not None:
            samples[rows] = late_samples
        if late_finals is not None:
            finals[rows] = late_finals

    if shots > 0:
        walk(runner.initial(), 0, False, np.arange(shots), 0, 0, QuerySession(circuit.nonadaptive))
    p_used = circuit.num_copies if circuit.num_copies else circuit.num_samples
    log = getattr(runner, "log", [])
    return TranscriptBatch(samples, collapses, finals, circuit.num_queries, p_used, log)


def sample_transcripts(
    circuit: StepCircuit,
    instance: ProblemInstance | None,
    shots: int,
    rng: np.random.Generator,
    semantics: str = "direct",
    reweight: bool = True,
    cap: int = PURIFIED_QUBIT_CAP,
    observer=None,
) -> TranscriptBatch:
    """Run ``shots`` independent executions of ``circuit``.

    ``semantics`` is 'direct', 'purified' or 'cbqp'. ``reweight=False``
    replaces the purified reweighting by plain post-selection, which breaks
    the equivalence with direct semantics (useful as a fault injection).
    ``observer(step, kind, before, after)`` sees state fingerprints around
    every non-collapsing sample.
    """
    if semantics == "direct":
        circuit.validate("pdqp")
        runner = _DirectRunner(circuit, instance)
    elif semantics == "purified":
        circuit.validate("pdqp")
        runner = _PurifiedRunner(circuit, instance, reweight, cap)
    elif semantics == "cbqp":
        circuit.validate("cbqp")
        runner = _DirectRunner(circuit, instance)
    else:
        raise ValueError(f"unknown semantics {semantics!r}")
    return _execute(runner, circuit, shots, rng, observer)


def run_direct(circuit: StepCircuit, instance, rng) -> RunTranscript:
    return sample_transcripts(circuit, instance, 1, rng, "direct").transcript(0)


def run_purified(circuit: StepCircuit, instance, rng, reweight: bool = True, cap: int = PURIFIED_QUBIT_CAP) -> RunTranscript:
    return sample_transcripts(circuit, instance, 1, rng, "purified", reweight, cap).transcript(0)


def run_cbqp(circuit: StepCircuit, instance, rng) -> RunTranscript:
    return sample_transcripts(circuit, instance, 1, rng, "cbqp").transcript(0)


# exact references ----------------------------------------------------------


def transcript_distribution(circuit: StepCircuit, instance=None, prune: float = 1e-15) -> dict:
    """Exact transcript distribution under direct semantics, by enumeration."""
    circuit.validate("pdqp")
    runner = _DirectRunner(circuit, instance)
    steps = circuit.steps
    out: dict = {}

    def rec(ps, i, measured, weight, samples, colls):
        while i < len(steps):
            step = steps[i]
            if not measured:
                ps = runner.apply_gates(ps, i, step)
                if step.measure is not None:
                    probs = runner.measure_distribution(ps, i, step)
                    for n in np.flatnonzero(probs > prune):
                        branch = runner.project(ps, i, step, int(n))
                        rec(branch, i, True, weight * probs[n], samples, colls + (int(n),))
                    return
            measured = False
            if step.kind == SAMPLE:
                probs = ps.to_state().probabilities
                for v in np.flatnonzero(probs > prune):
                    rec(ps, i + 1, False, weight * probs[v], samples + (int(v),), colls)
                return
            ps = runner.query(ps, i, step)
            i += 1
        if circuit.measure_final:
            probs = ps.born(circuit.measure_final)
            for f in np.flatnonzero(probs > prune):
                key = (samples, colls, int(f))
                out[key] = out.get(key, 0.0) + weight * probs[f]
        else:
            key = (samples, colls, None)
            out[key] = out.get(key, 0.0) + weight

    rec(runner.initial(), 0, False, 1.0, (), ())
    return out


@dataclass
class QueryTrajectory:
    """Measurement-free states around every query round.

    ``before[t]`` enters query ``t+1``; ``after[t]`` is right after it.
    """

    before: list
    after: list

    def at(self, t: int) -> QuantumState:
        """State at query time ``t``: ``t=0`` enters the first query, ``t>=1`` follows query ``t``."""
        if t == 0:
            return self.before[0]
        return self.after[t - 1]


def query_states(circuit: StepCircuit, instance) -> QueryTrajectory:
    if any(s.measure is not None for s in circuit.steps):
        raise MalformedCircuit("query_states needs a circuit without collapsing measurements")
    runner = _DirectRunner(circuit, instance)
    ps = runner.initial()
    before, after = [], []
    for i, step in enumerate(circuit.steps):
        ps = runner.apply_gates(ps, i, step)
        if step.kind == QUERY:
            before.append(ps.to_state())
            ps = runner.query(ps, i, step)
            after.append(ps.to_state())
    return QueryTrajectory(before, after)


# fidelity monotonicity under the purified measurement -----------------------


@dataclass(frozen=True)
class MStarSpec:
    """The purified measurement acting on ``copies`` copies of ``register``."""

    register: str | tuple[str, ...]
    copies: int


def _density(x) -> tuple[np.ndarray, tuple]:
    if isinstance(x, QuantumState):
        return np.outer(x.amplitudes, x.amplitudes.conj()), x.registers
    if isinstance(x, Ensemble):
        return x.density_matrix(), x.states[0].registers
    raise TypeError(f"expected QuantumState or Ensemble, got {type(x).__name__}")


def _mstar(rho: np.ndarray, registers, labels, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (sigma^{(x)r}, sum_n d_n P_n^{(x)r} sigma^{(x)r} P_n^{(x)r})."""
    dims = [2**k for _, k in registers]
    names = [l for l, _ in registers]
    axes = [names.index(l) for l in labels]
    dim = rho.shape[0]
    # outcome of each basis state of one copy
    digits = np.unravel_index(np.arange(dim), dims)
    outcome = np.zeros(dim, dtype=np.int64)
    for a in axes:
        outcome = outcome * dims[a] + digits[a]
    n_out = int(np.prod([dims[a] for a in axes]))
    a_n = np.bincount(outcome, weights=np.real(np.diag(rho)), minlength=n_out)
    d_n = PurifiedLayout.reweight(a_n, r)
    big = rho
    for _ in range(r - 1):
        big = np.kron(big, rho)
    per_copy = outcome[np.stack(np.unravel_index(np.arange(dim**r), [dim] * r))]
    joint_outcome = per_copy[0]
    same = np.all(per_copy == joint_outcome, axis=0)
    weight = np.where(same, np.sqrt(d_n[joint_outcome]), 0.0)
    after = weight[:, None] * big * weight[None, :]
    # projectors with different n never mix: zero the cross-outcome blocks
    after = after * (joint_outcome[:, None] == joint_outcome[None, :])
    return big, after


def check_fidelity_monotone(pairs) -> list[tuple[float, float]]:
    """(F_before, F_after) for each ``(sigma1, sigma2, MStarSpec)``.

    ``F_before`` compares ``sigma^{(x)r}``; ``F_after`` compares the states
    after the purified measurement, each reweighted by its own outcome
    probabilities. Both states must share one register layout.
    """
    results = []
    for s1, s2, spec in pairs:
        rho1, regs1 = _density(s1)
        rho2, regs2 = _density(s2)
        if regs1 != regs2:
            raise DimensionMismatch(f"layouts {regs1} and {regs2} differ")
        labels = (spec.register,) if isinstance(spec.register, str) else tuple(spec.register)
        b1, a1 = _mstar(rho1, regs1, labels, spec.copies)
        b2, a2 = _mstar(rho2, regs2, labels, spec.copies)
        results.append((fidelity(b1, b2), fidelity(a1, a2)))
    return results


# random circuit family ------------------------------------------------------


def expected_tv_noise(dist: dict, shots: int) -> float:
    """Mean TV distance between two independent empirical samples of ``dist``."""
    p = np.fromiter(dist.values(), dtype=float)
    return float(np.sum(np.sqrt(p * (1 - p) / (np.pi * shots))))


def random_circuit(rng: np.random.Generator, max_qubits: int = 3, max_steps: int = 3):
    """Random Haar-unitary step circuit with at least one collapse.

    Returns ``(circuit, instance)``. With two or more qubits the workspace is
    an index register plus one phase bit queried against a random search
    instance; single-qubit circuits make no queries.
    """
    l = int(rng.integers(1, max_qubits + 1))
    n_steps = int(rng.integers(1, max_steps + 1))
    if l == 1:
        registers = (("q", 1),)
        instance = None
    else:
        registers = (("idx", l - 1), ("bit", 1))
        n = 2 ** (l - 1)
        instance = generate_instance("search", n, {"marked": int(rng.integers(0, 2))}, rng)
    labels = [lbl for lbl, _ in registers]
    steps = []
    for i in range(n_steps):
        u = unitary_group.rvs(2**l, random_state=rng)
        measure = None
        if rng.random() < 0.6 or (i == n_steps - 1 and not any(s.measure for s in steps)):
            measure = (labels[int(rng.integers(0, len(labels)))],)
        gates = (Gate(None, tuple(labels), {}, u),)
        if instance is not None and rng.random() < 0.4:
            steps.append(Step.query(OracleCall("phase", (("idx", "bit"),)), gates, measure))
        else:
            steps.append(Step.sample(gates, measure))
    final = None
    if rng.random() < 0.5:
        final = (labels[int(rng.integers(0, len(labels)))],)
    return StepCircuit(registers, tuple(steps), measure_final=final), instance


def equivalence_family(
    count: int,
    rng: np.random.Generator,
    shots: int = 100_000,
    max_noise: float = 0.012,
    max_qubits: int = 3,
    max_steps: int = 3,
) -> list:
    """``count`` random circuits whose transcript space is small enough that
    two independent ``shots``-sample estimates agree to about ``max_noise``
    in total variation.
    """
    family = []
    while len(family) < count:
        circuit, instance = random_circuit(rng, max_qubits, max_steps)
        if circuit.num_samples + circuit.num_queries < 1:
            continue
        exact = transcript_distribution(circuit, instance)
        if expected_tv_noise(exact, shots) <= max_noise:
            family.append((circuit, instance))
    return family


__all__ = [
    "MStarSpec",
    "PurifiedLayout",
    "QueryTrajectory",
    "check_fidelity_monotone",
    "equivalence_family",
    "expected_tv_noise",
    "purified_layout",
    "query_states",
    "random_circuit",
    "run_cbqp",
    "run_direct",
    "run_purified",
    "sample_transcripts",
    "transcript_distribution",
]
