"""Monte Carlo experiments, budget searches, scaling fits and property suites.

Trial ``t`` at size ``N`` always draws from ``default_rng([seed, N, t])``,
so results do not depend on how trials are spread over workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binomtest, unitary_group

from .adversary import (
    WeightScheme,
    build_relation,
    search_trajectories,
    verify_hybrid_bound,
    verify_lifted_weights,
    verify_polynomial_inequality,
    verify_weight_identity,
)
from .algorithms import Model, build_algorithm, ceil_tol
from .circuit import OracleCall, total_variation
from .engine import (
    MStarSpec,
    check_fidelity_monotone,
    equivalence_family,
    sample_transcripts,
)
from .errors import BudgetCapReached, InvalidParameters
from .problems import ProblemKind, apply_oracle_call, generate_instance
from .state import QuantumState, apply_unitary

CSV_COLUMNS = ("problem", "model", "N", "Q", "P", "trials", "successes", "rate", "ci_lo", "ci_hi", "seed")

DEFAULT_PARAMS = {
    ProblemKind.SEARCH: {"marked": 1},
    ProblemKind.COLLISION: {"k": 2},
}


@dataclass
class ExperimentSpec:
    problem: str
    model: str = "pdqp"
    N: list = field(default_factory=lambda: [16])
    trials: int = 1000
    seed: int = 0
    target: float = 2 / 3
    out: str = "csv"
    Q: int | None = None
    P: int | None = None
    c: float | None = None
    params: dict | None = None
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.N, int):
            self.N = [self.N]
        if self.trials < 1:
            raise InvalidParameters("trials must be at least 1")
        if self.out not in ("csv", "json"):
            raise InvalidParameters(f"unknown output format {self.out!r}")
        ProblemKind.parse(self.problem)
        Model.parse(self.model)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise InvalidParameters(f"unknown config keys {sorted(extra)}")
        return cls(**d)

    def instance_params(self) -> dict:
        if self.params is not None:
            return dict(self.params)
        return dict(DEFAULT_PARAMS.get(ProblemKind.parse(self.problem), {}))


@dataclass
class ResultRow:
    problem: str
    model: str
    N: int
    Q: int
    P: int
    trials: int
    successes: int
    rate: float
    ci_lo: float
    ci_hi: float
    seed: int
    runtime: float = 0.0  # wall-clock seconds, kept out of serialized output

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


@dataclass
class FitResult:
    exponent: float
    intercept: float
    residual: float
    N: list
    values: list


@dataclass
class ExperimentResult:
    rows: list
    fit: FitResult | None = None
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            writer.writerow({k: _fmt(v) for k, v in r.as_dict().items()})
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"rows": [r.as_dict() for r in self.rows]}
        if self.fit is not None:
            doc["fit"] = asdict(self.fit)
        if self.meta:
            doc["meta"] = self.meta
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


# trials --------------------------------------------------------------------


def _trial_block(args) -> int:
    problem, model, N, Q, P, c, params, seed, start, stop = args
    spec = build_algorithm(problem, model, N, c, Q, P)
    wins = 0
    for t in range(start, stop):
        rng = np.random.default_rng([seed, N, t])
        instance = generate_instance(problem, N, params, rng)
        transcript = sample_transcripts(spec.circuit, instance, 1, rng).transcript(0)
        wins += spec.decide(transcript, instance).answer == instance.answer
    return wins


def run_trials(problem, model, N, trials, seed, Q=None, P=None, c=None, params=None, workers=1) -> int:
    """Number of correct answers over ``trials`` fresh instances."""
    if workers <= 1 or trials < 2 * workers:
        return _trial_block((problem, model, N, Q, P, c, params, seed, 0, trials))
    edges = np.linspace(0, trials, workers + 1).astype(int)
    jobs = [(problem, model, N, Q, P, c, params, seed, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_trial_block, jobs))


def _row(spec: ExperimentSpec, N: int, Q: int | None, P: int | None) -> ResultRow:
    alg = build_algorithm(spec.problem, spec.model, N, spec.c, Q, P)
    t0 = time.perf_counter()
    wins = run_trials(
        spec.problem, spec.model, N, spec.trials, spec.seed, Q, P, spec.c, spec.instance_params(), spec.workers
    )
    lo, hi = wilson_interval(wins, spec.trials)
    return ResultRow(
        alg.problem.value, Model.parse(spec.model).value, N, alg.Q, alg.P, spec.trials, int(wins),
        wins / spec.trials, lo, hi, spec.seed, time.perf_counter() - t0,
    )


def estimate_success(spec: ExperimentSpec) -> ExperimentResult:
    """Success rate with a Wilson 95% interval for every ``N`` in the spec."""
    return ExperimentResult([_row(spec, N, spec.Q, spec.P) for N in spec.N])


# budgets and fits --------------------------------------------------------------


@dataclass
class BudgetResult:
    N: int
    Q: int
    P_star: int
    row: ResultRow
    probes: dict

    @property
    def total(self) -> int:
        return self.Q + self.P_star


def minimal_budget(
    problem,
    model,
    N: int,
    target: float = 2 / 3,
    seed: int = 0,
    trials: int = 300,
    Q: int | None = None,
    c: float | None = None,
    params: dict | None = None,
    p_cap: int = 4096,
    workers: int = 1,
) -> BudgetResult:
    """Smallest ``P`` whose estimated success reaches ``target``.

    Doubles ``P`` until the target is met, then binary-searches the last gap.
    Every probe reuses the same trial seeds, so neighbouring budgets see the
    same instances. Raises ``BudgetCapReached`` past ``p_cap``.
    """
    kind = ProblemKind.parse(problem)
    spec = ExperimentSpec(kind.value, Model.parse(model).value, [N], trials, seed, target, c=c,
                          params=params, workers=workers)
    probes: dict = {}

    def ok(P: int) -> bool:
        if P not in probes:
            probes[P] = _row(spec, N, Q, P)
        return probes[P].rate >= target

    lo_fail = 1 if kind is ProblemKind.COLLISION else 0
    P = lo_fail + 1
    while not ok(P):
        lo_fail = P
        P *= 2
        if P > p_cap:
            raise BudgetCapReached(f"no P <= {p_cap} reaches success {target} for {kind.value} N={N}")
    hi = P
    while hi - lo_fail > 1:
        mid = (lo_fail + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo_fail = mid
    row = probes[hi]
    return BudgetResult(N, row.Q, hi, row, {p: r.rate for p, r in sorted(probes.items())})


def fit_exponent(N, values) -> FitResult:
    """Least-squares slope of ``ln(value)`` against ``ln(N)``; needs two points."""
    N = [float(n) for n in N]
    values = [float(v) for v in values]
    if len(N) < 2 or len(N) != len(values):
        raise InvalidParameters("a fit needs at least two (N, value) points")
    coef, res, *_ = np.polyfit(np.log(N), np.log(values), 1, full=True)
    residual = float(res[0]) if len(res) else 0.0
    return FitResult(float(coef[0]), float(coef[1]), residual, N, values)


def scaling_experiment(spec: ExperimentSpec, Q_of_N=None) -> ExperimentResult:
    """Minimal ``P`` at every ``N`` and the fitted exponent of ``Q + P*``."""
    budgets = []
    for N in spec.N:
        Q = Q_of_N(N) if Q_of_N else spec.Q
        budgets.append(
            minimal_budget(spec.problem, spec.model, N, spec.target, spec.seed, spec.trials, Q, spec.c,
                           spec.params, workers=spec.workers)
        )
    fit = fit_exponent([b.N for b in budgets], [b.total for b in budgets]) if len(budgets) >= 2 else None
    meta = {"target": spec.target, "budgets": {str(b.N): {"Q": b.Q, "P_star": b.P_star, "probes": {str(k): v for k, v in b.probes.items()}} for b in budgets}}
    return ExperimentResult([b.row for b in budgets], fit, meta)


# property suites ------------------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    checks: int
    violations: int
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass
class SuiteReport:
    seed: int
    results: list

    @property
    def checks(self) -> int:
        return sum(r.checks for r in self.results)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "ok": self.ok,
            "checks": self.checks,
            "suites": [
                {"name": r.name, "checks": r.checks, "violations": r.violations, "passed": r.passed, "detail": r.detail}
                for r in self.results
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [
            f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.checks} checks, {r.violations} violations"
            for r in self.results
        ]
        lines.append(f"{'OK' if self.ok else 'FAILED'}: {self.checks} checks")
        return "\n".join(lines) + "\n"


def suite_equivalence(rng, circuits=50, shots=100_000, tol=0.02, mutate=False) -> SuiteResult:
    family = equivalence_family(circuits, rng, shots)
    worst, bad = 0.0, 0
    for circuit, instance in family:
        d = sample_transcripts(circuit, instance, shots, rng, "direct").distribution()
        p = sample_transcripts(circuit, instance, shots, rng, "purified", reweight=not mutate).distribution()
        tv = total_variation(d, p)
        worst = max(worst, tv)
        bad += tv > tol
    return SuiteResult("equivalence", len(family), bad, {"max_tv": round(worst, 6), "tol": tol, "shots": shots})


def suite_reweight(rng, circuits=50, shots=2000, tol=1e-9) -> SuiteResult:
    family = equivalence_family(circuits, rng, 100_000)
    checks = bad = 0
    worst = 0.0
    for circuit, instance in family:
        batch = sample_transcripts(circuit, instance, shots, rng, "purified")
        for entry in batch.reweight_log:
            err = float(np.max(np.abs(entry["p"] - entry["a"])))
            worst = max(worst, err)
            checks += 1
            bad += err > tol
    return SuiteResult("reweight", checks, bad, {"max_abs_err": float(f"{worst:.3e}"), "tol": tol})


def random_monotone_pairs(n: int, rng, qubits: int = 2, max_copies: int = 3) -> list:
    """Pairs of states prepared by one random circuit against two inputs that
    differ in a single bit, with a random purified-measurement spec."""
    pairs = []
    regs = (("idx", qubits - 1), ("bit", 1))
    N = 2 ** (qubits - 1)
    for _ in range(n):
        u1 = unitary_group.rvs(2**qubits, random_state=rng)
        u2 = unitary_group.rvs(2**qubits, random_state=rng)
        x = generate_instance("search", N, {"marked": int(rng.integers(0, N + 1))}, rng)
        flip = int(rng.integers(N))
        table = list(x.table)
        table[flip] ^= 1
        y = type(x)(x.kind, N, tuple(table), any(table))
        states = []
        for inst in (x, y):
            s = apply_unitary(QuantumState.zeros(regs), u1, ["idx", "bit"])
            s = apply_oracle_call(s, inst, OracleCall("phase", (("idx", "bit"),)))
            states.append(apply_unitary(s, u2, ["idx", "bit"]))
        reg = ("idx", "bit")[int(rng.integers(2))]
        pairs.append((states[0], states[1], MStarSpec(reg, int(rng.integers(1, max_copies + 1)))))
    return pairs


def suite_monotone(rng, n=1000, tol=1e-9) -> SuiteResult:
    results = check_fidelity_monotone(random_monotone_pairs(n, rng))
    gaps = [after - before for before, after in results]
    return SuiteResult("monotone", n, int(sum(g < -tol for g in gaps)), {"min_gap": float(f"{min(gaps):.3e}")})


def suite_polynomial(rng, n=1_000_000) -> SuiteResult:
    rep = verify_polynomial_inequality(n, rng)
    return SuiteResult("polynomial", rep.checked, rep.violations, {"worst_gap": float(f"{rep.worst:.3e}")})


def suite_hybrid(cases=((16, 2), (32, 3))) -> SuiteResult:
    checks = bad = 0
    detail = {}
    for N, Q in cases:
        rep = verify_hybrid_bound(N, Q)
        checks += len(rep.lhs)
        bad += sum(v > rep.rhs * (1 + 1e-12) for v in rep.lhs)
        detail[f"N={N},Q={Q}"] = {"lhs": [round(v, 9) for v in rep.lhs], "rhs": rep.rhs}
    return SuiteResult("hybrid", checks, bad, detail)


def suite_weight_identity(N=8, times=(0, 1, 2), factor=1.0) -> SuiteResult:
    rel = build_relation("search", N, "exhaustive")
    scheme = WeightScheme.uniform()
    traj = search_trajectories(N, max(times), rel.inputs)
    bad, detail = 0, {}
    for t in times:
        rep = verify_weight_identity(rel, scheme, {a: traj[a].at(t) for a in rel.inputs}, factor=factor)
        bad += not rep.holds
        detail[f"t={t}"] = {"lhs": round(float(rep.lhs), 9), "rhs": round(float(rep.rhs), 9)}
    name = "weight-identity" if factor == 1.0 else f"weight-identity-x{factor:g}"
    return SuiteResult(name, len(times), bad, detail)


def suite_lifted(N=8, k=2) -> SuiteResult:
    checks = bad = 0
    detail = {}
    for kind in ("search", "majority"):
        rep = verify_lifted_weights(build_relation(kind, N, "exhaustive"), WeightScheme.uniform(), k)
        checks += rep.checked
        bad += len(rep.violations)
        detail[kind] = {"checks": rep.checked, "min_slack": round(rep.min_slack, 12)}
    return SuiteResult("lifted", checks, bad, detail)


SUITES = ("equivalence", "reweight", "monotone", "polynomial", "hybrid", "weight-identity", "weight-identity-x2", "lifted")


def verify_all(seed: int = 0, suites=None, mutate: bool = False, shots: int = 100_000, circuits: int = 50) -> SuiteReport:
    """Run the selected property suites (all by default).

    ``mutate`` disables the purified reweighting, which the equivalence suite
    must detect. Each suite gets its own RNG stream derived from ``seed``.
    """
    selected = SUITES if suites is None else tuple(suites)
    unknown = set(selected) - set(SUITES)
    if unknown:
        raise InvalidParameters(f"unknown suites {sorted(unknown)}")
    results = []
    for i, name in enumerate(SUITES):
        if name not in selected:
            continue
        rng = np.random.default_rng([seed, i])
        if name == "equivalence":
            results.append(suite_equivalence(rng, circuits, shots, mutate=mutate))
        elif name == "reweight":
            results.append(suite_reweight(rng, circuits))
        elif name == "monotone":
            results.append(suite_monotone(rng))
        elif name == "polynomial":
            results.append(suite_polynomial(rng))
        elif name == "hybrid":
            results.append(suite_hybrid())
        elif name == "weight-identity":
            results.append(suite_weight_identity())
        elif name == "weight-identity-x2":
            results.append(suite_weight_identity(factor=2.0))
        else:
            results.append(suite_lifted())
    return SuiteReport(seed, results)


def default_Q(problem, model, N: int) -> int | None:
    """The query budget minimal-budget searches hold fixed."""
    kind, model = ProblemKind.parse(problem), Model.parse(model)
    if kind is ProblemKind.SEARCH and model is Model.PDQP:
        return ceil_tol(N ** (1 / 3))
    if kind is ProblemKind.COLLISION:
        return None
    return math.isqrt(N)
