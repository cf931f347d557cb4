"""Step circuits, oracle calls and run transcripts.

A step is ``U`` (a sequence of gates), then an optional collapsing
measurement, then exactly one of: a non-collapsing sample of the whole
workspace, an oracle query, or (copy semantics only) a copy of a register.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import MalformedCircuit

SAMPLE = "sample"
QUERY = "query"
COPY = "copy"
PLAIN = "plain"
STEP_KINDS = (SAMPLE, QUERY, COPY, PLAIN)

ORACLE_KINDS = ("phase", "xor")


@dataclass(frozen=True)
class Gate:
    """A named gate (see ``state.GATE_NAMES``) or an explicit matrix."""

    name: str | None
    targets: tuple
    params: dict = field(default_factory=dict)
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if (self.name is None) == (self.matrix is None):
            raise MalformedCircuit("a gate needs exactly one of name or matrix")
        targets = self.targets
        if isinstance(targets, (str, int)):
            targets = (targets,)
        object.__setattr__(self, "targets", tuple(targets))
        if self.matrix is not None:
            object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.complex128))

    @property
    def operator(self):
        return self.name if self.name is not None else self.matrix

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"targets": list(self.targets)}
        if self.name is not None:
            d["name"] = self.name
            if self.params:
                d["params"] = dict(sorted(self.params.items()))
        else:
            d["matrix"] = {"re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        if "matrix" in d:
            m = np.array(d["matrix"]["re"]) + 1j * np.array(d["matrix"]["im"])
            return cls(None, tuple(d["targets"]), {}, m)
        return cls(d["name"], tuple(d["targets"]), dict(d.get("params", {})))


@dataclass(frozen=True)
class OracleCall:
    """One round of oracle access; several pairs form a parallel query."""

    kind: str
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if self.kind not in ORACLE_KINDS:
            raise MalformedCircuit(f"unknown oracle kind {self.kind!r}")
        pairs = tuple((str(a), str(b)) for a, b in self.pairs)
        if not pairs:
            raise MalformedCircuit("an oracle call needs at least one register pair")
        object.__setattr__(self, "pairs", pairs)

    @property
    def queries(self) -> int:
        return len(self.pairs)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "pairs": [list(p) for p in self.pairs]}

    @classmethod
    def from_dict(cls, d: dict) -> "OracleCall":
        return cls(d["kind"], tuple(tuple(p) for p in d["pairs"]))


@dataclass(frozen=True)
class Step:
    gates: tuple[Gate, ...] = ()
    measure: tuple[str, ...] | None = None
    kind: str = SAMPLE
    oracle: OracleCall | None = None
    copy: tuple[str, str] | None = None

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if isinstance(self.measure, str):
            object.__setattr__(self, "measure", (self.measure,))
        elif self.measure is not None:
            object.__setattr__(self, "measure", tuple(self.measure))
        if self.kind not in STEP_KINDS:
            raise MalformedCircuit(f"unknown step kind {self.kind!r}")
        if (self.kind == QUERY) != (self.oracle is not None):
            raise MalformedCircuit("query steps, and only query steps, carry an oracle call")
        if (self.kind == COPY) != (self.copy is not None):
            raise MalformedCircuit("copy steps, and only copy steps, carry a copy spec")

    @classmethod
    def sample(cls, gates=(), measure=None) -> "Step":
        return cls(tuple(gates), measure, SAMPLE)

    @classmethod
    def query(cls, oracle: OracleCall, gates=(), measure=None) -> "Step":
        return cls(tuple(gates), measure, QUERY, oracle)

    @classmethod
    def copy_of(cls, source: str, new: str, gates=(), measure=None) -> "Step":
        return cls(tuple(gates), measure, COPY, None, (source, new))

    @classmethod
    def plain(cls, gates=(), measure=None) -> "Step":
        return cls(tuple(gates), measure, PLAIN)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind, "gates": [g.to_dict() for g in self.gates]}
        if self.measure is not None:
            d["measure"] = list(self.measure)
        if self.oracle is not None:
            d["oracle"] = self.oracle.to_dict()
        if self.copy is not None:
            d["copy"] = list(self.copy)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Step":
        return cls(
            tuple(Gate.from_dict(g) for g in d.get("gates", [])),
            tuple(d["measure"]) if "measure" in d else None,
            d["kind"],
            OracleCall.from_dict(d["oracle"]) if "oracle" in d else None,
            tuple(d["copy"]) if "copy" in d else None,
        )


@dataclass(frozen=True)
class StepCircuit:
    registers: tuple[tuple[str, int], ...]
    steps: tuple[Step, ...]
    nonadaptive: bool = False
    measure_final: tuple[str, ...] | None = None
    declared_Q: int | None = None
    declared_P: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "registers", tuple((str(l), int(k)) for l, k in self.registers))
        object.__setattr__(self, "steps", tuple(self.steps))
        if isinstance(self.measure_final, str):
            object.__setattr__(self, "measure_final", (self.measure_final,))
        elif self.measure_final is not None:
            object.__setattr__(self, "measure_final", tuple(self.measure_final))
        if self.declared_Q is None:
            object.__setattr__(self, "declared_Q", self.num_queries)
        if self.declared_P is None:
            object.__setattr__(self, "declared_P", self.num_samples + self.num_copies)

    @property
    def workspace_qubits(self) -> int:
        return sum(k for _, k in self.registers)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.registers)

    @property
    def num_queries(self) -> int:
        return sum(s.oracle.queries for s in self.steps if s.kind == QUERY)

    @property
    def num_query_steps(self) -> int:
        return sum(1 for s in self.steps if s.kind == QUERY)

    @property
    def num_samples(self) -> int:
        return sum(1 for s in self.steps if s.kind == SAMPLE)

    @property
    def num_copies(self) -> int:
        return sum(1 for s in self.steps if s.kind == COPY)

    @property
    def num_measurements(self) -> int:
        return sum(1 for s in self.steps if s.measure is not None)

    def decode(self, index: int) -> dict[str, int]:
        """Split a full-workspace basis index into per-register values."""
        out = {}
        index = int(index)
        for lbl, k in reversed(self.registers):
            out[lbl] = index & ((1 << k) - 1)
            index >>= k
        return {lbl: out[lbl] for lbl in self.labels}

    def validate(self, model: str = "pdqp") -> None:
        """Check the circuit is well formed for ``model`` ('pdqp' or 'cbqp')."""
        known = dict(self.registers)
        if len(known) != len(self.registers):
            raise MalformedCircuit("duplicate register labels")
        allowed = {SAMPLE, QUERY} if model == "pdqp" else {QUERY, COPY, PLAIN}
        for i, step in enumerate(self.steps):
            if step.kind not in allowed:
                raise MalformedCircuit(f"step {i}: kind {step.kind!r} not allowed under {model}")
            for g in step.gates:
                for t in g.targets:
                    if isinstance(t, str):
                        base = t.split("[", 1)[0]
                        if base not in known:
                            raise MalformedCircuit(f"step {i}: unknown register {t!r}")
            for lbl in step.measure or ():
                if lbl not in known:
                    raise MalformedCircuit(f"step {i}: cannot measure unknown register {lbl!r}")
            if step.oracle is not None:
                for a, b in step.oracle.pairs:
                    if a not in known or b not in known:
                        raise MalformedCircuit(f"step {i}: oracle on unknown register")
            if step.copy is not None:
                src, new = step.copy
                if src not in known:
                    raise MalformedCircuit(f"step {i}: cannot copy unknown register {src!r}")
                if new in known:
                    raise MalformedCircuit(f"step {i}: copy target {new!r} already exists")
                known[new] = known[src]
        for lbl in self.measure_final or ():
            if lbl not in known:
                raise MalformedCircuit(f"final measurement of unknown register {lbl!r}")
        if self.declared_Q != self.num_queries:
            raise MalformedCircuit(f"declared_Q={self.declared_Q} but circuit makes {self.num_queries} queries")
        used_p = self.num_samples if model == "pdqp" else self.num_copies
        if self.declared_P != used_p:
            raise MalformedCircuit(f"declared_P={self.declared_P} but circuit has {used_p}")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "registers": [[l, k] for l, k in self.registers],
            "steps": [s.to_dict() for s in self.steps],
            "nonadaptive": self.nonadaptive,
            "declared_Q": self.declared_Q,
            "declared_P": self.declared_P,
        }
        if self.measure_final is not None:
            d["measure_final"] = list(self.measure_final)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "StepCircuit":
        return cls(
            tuple((l, k) for l, k in d["registers"]),
            tuple(Step.from_dict(s) for s in d["steps"]),
            bool(d.get("nonadaptive", False)),
            tuple(d["measure_final"]) if "measure_final" in d else None,
            d.get("declared_Q"),
            d.get("declared_P"),
        )

    @classmethod
    def from_json(cls, text: str) -> "StepCircuit":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class RunTranscript:
    noncollapsing_samples: tuple[int, ...]
    collapsing_outcomes: tuple[int, ...]
    final_outcome: int | None
    q_used: int
    p_used: int

    def key(self) -> tuple:
        return (self.noncollapsing_samples, self.collapsing_outcomes, self.final_outcome)


@dataclass
class TranscriptBatch:
    """Transcripts of many independent shots of one circuit.

    ``samples`` has one column per non-collapsing sample (or is empty),
    ``collapses`` one column per collapsing measurement, and ``finals`` holds
    -1 when the circuit has no final measurement.
    """

    samples: np.ndarray
    collapses: np.ndarray
    finals: np.ndarray
    q_used: int
    p_used: int
    reweight_log: list = field(default_factory=list)

    @property
    def shots(self) -> int:
        return len(self.finals)

    def transcript(self, i: int) -> RunTranscript:
        final = self.finals[i]
        return RunTranscript(
            tuple(int(v) for v in self.samples[i]),
            tuple(int(v) for v in self.collapses[i]),
            None if final < 0 else int(final),
            self.q_used,
            self.p_used,
        )

    def transcripts(self) -> list[RunTranscript]:
        return [self.transcript(i) for i in range(self.shots)]

    def counts(self) -> Counter:
        rows = zip(
            map(tuple, self.samples.tolist()),
            map(tuple, self.collapses.tolist()),
            (None if f < 0 else int(f) for f in self.finals.tolist()),
        )
        return Counter(rows)

    def distribution(self) -> dict:
        n = self.shots
        return {k: c / n for k, c in self.counts().items()}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
