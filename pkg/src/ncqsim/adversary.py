"""Adversary lower bounds with query/measurement trade-offs.

Relations ``R`` between no-inputs ``X`` and yes-inputs ``Y`` are built by
brute force (or by exact per-input counting on sampled inputs when full
enumeration is out of reach). Weight schemes, loads, the three bound
formulas and numerical checks of the supporting inequalities live here.

Bound formulas, with ``C_eps = sqrt((1 - 2 sqrt(eps (1 - eps))) / 2)``:

* pdqp:      ``Q P   >= C_eps sqrt(m m' / (l l'))``  (or ``C_eps / v_max``)
* pdqp-naq:  ``Q P   >= C_eps^2 max(m/l, m'/l')``
* cbqp:      ``Q 2^P >= C_eps sqrt(m m' / (l l'))``
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .algorithms import grover_circuit
from .engine import query_states
from .errors import (
    EnumerationBudgetExceeded,
    InvalidParameters,
    InvalidScheme,
    MissingState,
    QubitBudgetExceeded,
)
from .problems import ProblemInstance, ProblemKind, evaluate
from .state import QuantumState, born_distribution, fidelity

ENUMERATION_BUDGET = 500_000
PAIRWISE_BUDGET = 2_000_000


def c_epsilon(eps: float = 1 / 3) -> float:
    if not 0 <= eps < 0.5:
        raise InvalidParameters(f"eps must lie in [0, 1/2), got {eps}")
    return math.sqrt((1 - 2 * math.sqrt(eps * (1 - eps))) / 2)


# relation families ------------------------------------------------------------


def _differs(x, y) -> list[int]:
    return [i for i, (a, b) in enumerate(zip(x, y)) if a != b]


class _Family:
    """Inputs and relation for one problem; neighbours are exact generators."""

    variant = "standard"

    def __init__(self, N: int):
        self.N = N

    def sizes(self) -> tuple[int, int]:
        raise NotImplementedError

    def related(self, x, y) -> bool:
        raise NotImplementedError


class _SearchFamily(_Family):
    def sizes(self):
        return 1, self.N

    def enumerate_x(self):
        yield (0,) * self.N

    def enumerate_y(self):
        for j in range(self.N):
            y = [0] * self.N
            y[j] = 1
            yield tuple(y)

    def sample_x(self, rng):
        return (0,) * self.N

    def sample_y(self, rng):
        y = [0] * self.N
        y[int(rng.integers(self.N))] = 1
        return tuple(y)

    def related(self, x, y):
        return True

    def neighbours_x(self, x):
        return list(self.enumerate_y())

    def neighbours_y(self, y):
        return [(0,) * self.N]


class _WeightFamily(_Family):
    """Hamming weight N/2 against N/2 + 1, related by one flipped bit."""

    def __init__(self, N: int):
        if N < 4 or N % 2:
            raise InvalidParameters(f"needs even N >= 4, got {N}")
        super().__init__(N)
        self.h = N // 2

    def sizes(self):
        return math.comb(self.N, self.h), math.comb(self.N, self.h + 1)

    def _weight(self, w):
        for ones in itertools.combinations(range(self.N), w):
            x = [0] * self.N
            for i in ones:
                x[i] = 1
            yield tuple(x)

    def enumerate_x(self):
        return self._weight(self.h)

    def enumerate_y(self):
        return self._weight(self.h + 1)

    def _sample(self, rng, w):
        x = np.zeros(self.N, dtype=int)
        x[rng.choice(self.N, size=w, replace=False)] = 1
        return tuple(int(v) for v in x)

    def sample_x(self, rng):
        return self._sample(rng, self.h)

    def sample_y(self, rng):
        return self._sample(rng, self.h + 1)

    def related(self, x, y):
        return len(_differs(x, y)) == 1

    def neighbours_x(self, x):
        return [x[:i] + (1,) + x[i + 1 :] for i in range(self.N) if x[i] == 0]

    def neighbours_y(self, y):
        return [y[:i] + (0,) + y[i + 1 :] for i in range(self.N) if y[i] == 1]


class _EDFamily(_Family):
    """Permutations against tables with exactly one colliding pair.

    ``cyclic``: ``y`` replaces one value ``x(i)`` by ``x(i) + 1 mod N``, so
    the duplicated value of every ``y`` is its missing value plus one.
    ``full``: ``y`` differs from ``x`` in any single position.
    """

    def __init__(self, N: int, variant: str = "cyclic"):
        if N < 3:
            raise InvalidParameters(f"element distinctness relation needs N >= 3, got {N}")
        if variant not in ("cyclic", "full"):
            raise InvalidParameters(f"unknown variant {variant!r}")
        super().__init__(N)
        self.variant = variant

    def sizes(self):
        N = self.N
        pairs = math.comb(N, 2) * math.factorial(N - 2)
        ny = N * pairs if self.variant == "cyclic" else N * (N - 1) * pairs
        return math.factorial(N), ny

    def enumerate_x(self):
        return itertools.permutations(range(self.N))

    def _dup_missing(self):
        N = self.N
        for u in range(N):
            dups = [(u + 1) % N] if self.variant == "cyclic" else [d for d in range(N) if d != u]
            for d in dups:
                yield d, u

    def enumerate_y(self):
        N = self.N
        for d, u in self._dup_missing():
            rest = [v for v in range(N) if v not in (d, u)]
            for p, q in itertools.combinations(range(N), 2):
                others = [i for i in range(N) if i not in (p, q)]
                for perm in itertools.permutations(rest):
                    y = [0] * N
                    y[p] = y[q] = d
                    for i, v in zip(others, perm):
                        y[i] = v
                    yield tuple(y)

    def sample_x(self, rng):
        return tuple(int(v) for v in rng.permutation(self.N))

    def sample_y(self, rng):
        N = self.N
        u = int(rng.integers(N))
        d = (u + 1) % N if self.variant == "cyclic" else int(rng.choice([v for v in range(N) if v != u]))
        p, q = (int(v) for v in rng.choice(N, size=2, replace=False))
        rest = [v for v in range(N) if v not in (d, u)]
        rest = [rest[int(k)] for k in rng.permutation(len(rest))]
        y = [0] * N
        y[p] = y[q] = d
        it = iter(rest)
        for i in range(N):
            if i not in (p, q):
                y[i] = next(it)
        return tuple(y)

    def related(self, x, y):
        diff = _differs(x, y)
        if len(diff) != 1:
            return False
        if self.variant == "full":
            return True
        i = diff[0]
        return y[i] == (x[i] + 1) % self.N

    def neighbours_x(self, x):
        N = self.N
        out = []
        for i in range(N):
            news = [(x[i] + 1) % N] if self.variant == "cyclic" else [v for v in range(N) if v != x[i]]
            out += [x[:i] + (v,) + x[i + 1 :] for v in news]
        return out

    def neighbours_y(self, y):
        N = self.N
        missing = (set(range(N)) - set(y)).pop()
        d = next(v for v in y if y.count(v) == 2)
        if self.variant == "cyclic" and d != (missing + 1) % N:
            return []
        return [y[:i] + (missing,) + y[i + 1 :] for i in range(N) if y[i] == d]


def _family(kind: ProblemKind, N: int, variant: str | None) -> _Family:
    if kind is ProblemKind.SEARCH:
        return _SearchFamily(N)
    if kind in (ProblemKind.MAJORITY, ProblemKind.PARITY):
        return _WeightFamily(N)
    if kind is ProblemKind.ELEMENT_DISTINCTNESS:
        return _EDFamily(N, variant or "cyclic")
    raise InvalidParameters(f"no relation for {kind.value}")


# relations ------------------------------------------------------------------


@dataclass
class RelationInstance:
    """``R`` between ``X`` and ``Y`` plus its degree statistics.

    ``m``/``m_prime``: minimum number of partners of an ``X``/``Y`` input;
    ``l``/``l_prime``: maximum number of partners differing at one index.
    ``X``, ``Y`` and ``R`` are ``None`` when the degrees come from sampled
    inputs.
    """

    kind: ProblemKind
    N: int
    m: int
    m_prime: int
    l: int
    l_prime: int
    exhaustive: bool
    variant: str = "standard"
    X: list | None = None
    Y: list | None = None
    R: list | None = None
    samples: int = 0
    family: _Family | None = field(default=None, repr=False)

    @property
    def degrees(self) -> tuple[int, int, int, int]:
        return self.m, self.m_prime, self.l, self.l_prime

    def partners(self, a) -> list:
        """Inputs related to ``a`` (from either side)."""
        if self.R is not None:
            if not hasattr(self, "_index"):
                idx: dict = {}
                for x, y in self.R:
                    idx.setdefault(x, []).append(y)
                    idx.setdefault(y, []).append(x)
                self._index = idx
            return self._index.get(a, [])
        fam = self.family
        return fam.neighbours_y(a) if evaluate_relation_side(self.kind, a, fam) else fam.neighbours_x(a)

    @property
    def inputs(self) -> list:
        if self.X is None:
            raise EnumerationBudgetExceeded("relation was sampled; inputs are not enumerated")
        return list(self.X) + list(self.Y)


def evaluate_relation_side(kind: ProblemKind, a, family: _Family) -> bool:
    """True when ``a`` belongs to the yes side ``Y`` of the relation."""
    if kind is ProblemKind.SEARCH:
        return any(a)
    if kind in (ProblemKind.MAJORITY, ProblemKind.PARITY):
        return sum(a) > family.N // 2
    return len(set(a)) < len(a)


def _degree_stats(a, partners) -> tuple[int, int]:
    per_index = [0] * len(a)
    for b in partners:
        for i in _differs(a, b):
            per_index[i] += 1
    return len(partners), max(per_index) if partners else 0


def build_relation(
    kind,
    N: int,
    mode: str = "auto",
    samples: int = 200,
    rng: np.random.Generator | None = None,
    variant: str | None = None,
    budget: int = ENUMERATION_BUDGET,
) -> RelationInstance:
    """Relation and degrees ``(m, m', l, l')`` for search, majority, parity or ED.

    ``mode`` is 'exhaustive', 'sampled' or 'auto' (exhaustive when
    ``|X| + |Y| <= budget``). Exhaustive mode builds ``R`` by testing every
    pair when ``|X| |Y|`` is small and from exact neighbour generators
    otherwise. Sampled mode counts partners exactly for ``samples`` random
    inputs on each side.

    Majority uses ``X = {|x| = N/2}`` and ``Y = {|y| = N/2 + 1}`` (strict
    majority on the yes side); parity uses the same sets.
    """
    kind = ProblemKind.parse(kind)
    fam = _family(kind, N, variant)
    nx, ny = fam.sizes()
    if mode == "auto":
        mode = "exhaustive" if nx + ny <= budget else "sampled"
    if mode == "exhaustive":
        if nx + ny > budget:
            raise EnumerationBudgetExceeded(f"|X| + |Y| = {nx + ny} exceeds {budget}")
        X = list(fam.enumerate_x())
        Y = list(fam.enumerate_y())
        if len(X) * len(Y) <= PAIRWISE_BUDGET:
            R = [(x, y) for x in X for y in Y if fam.related(x, y)]
        else:
            yset = set(Y)
            R = [(x, y) for x in X for y in fam.neighbours_x(x) if y in yset]
        px: dict = {x: [] for x in X}
        py: dict = {y: [] for y in Y}
        for x, y in R:
            px[x].append(y)
            py[y].append(x)
        sx = [_degree_stats(x, p) for x, p in px.items()]
        sy = [_degree_stats(y, p) for y, p in py.items()]
        return RelationInstance(
            kind, N, min(s[0] for s in sx), min(s[0] for s in sy), max(s[1] for s in sx),
            max(s[1] for s in sy), True, fam.variant, X, Y, R, 0, fam,
        )
    if mode != "sampled":
        raise InvalidParameters(f"unknown mode {mode!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    sx = [_degree_stats(x, fam.neighbours_x(x)) for x in (fam.sample_x(rng) for _ in range(samples))]
    sy = [_degree_stats(y, fam.neighbours_y(y)) for y in (fam.sample_y(rng) for _ in range(samples))]
    return RelationInstance(
        kind, N, min(s[0] for s in sx), min(s[0] for s in sy), max(s[1] for s in sx),
        max(s[1] for s in sy), False, fam.variant, None, None, None, samples, fam,
    )


def closed_form_degrees(kind, N: int) -> tuple[int, int, int, int]:
    kind = ProblemKind.parse(kind)
    if kind is ProblemKind.SEARCH:
        return N, 1, 1, 1
    if kind in (ProblemKind.MAJORITY, ProblemKind.PARITY):
        return N // 2, N // 2 + 1, 1, 1
    if kind is ProblemKind.ELEMENT_DISTINCTNESS:
        return N, 2, 1, 1
    raise InvalidParameters(f"no relation for {kind.value}")


# weight schemes ---------------------------------------------------------------


@dataclass
class WeightScheme:
    """``w(x, y)`` on pairs of ``R`` and ``w'(a, b, i)`` in both directions.

    ``w_prime(x, y, i)`` and ``w_prime(y, x, i)`` are the two directed
    weights of a pair at a differing index.
    """

    w: Callable
    w_prime: Callable
    name: str = "custom"

    @classmethod
    def uniform(cls) -> "WeightScheme":
        return cls(lambda x, y: 1.0, lambda a, b, i: 1.0, "uniform")

    @classmethod
    def constant(cls, w: float, w_prime: float) -> "WeightScheme":
        return cls(lambda x, y: w, lambda a, b, i: w_prime, f"constant({w},{w_prime})")

    @classmethod
    def from_dicts(cls, w: dict, w_prime: dict) -> "WeightScheme":
        """Missing entries read as 0, which makes the scheme invalid there."""
        return cls(lambda x, y: w.get((x, y), 0.0), lambda a, b, i: w_prime.get((a, b, i), 0.0), "table")


@dataclass
class SchemeReport:
    valid: bool
    checked: int
    violations: list

    def __bool__(self):
        return self.valid


def validate_weight_scheme(scheme: WeightScheme, relation: RelationInstance, tol: float = 1e-12) -> SchemeReport:
    """Check positivity of ``w`` and ``w'`` and ``w'(x,y,i) w'(y,x,i) >= w(x,y)^2``."""
    if relation.R is None:
        raise EnumerationBudgetExceeded("validation needs an enumerated relation")
    violations, checked = [], 0
    for x, y in relation.R:
        w = scheme.w(x, y)
        checked += 1
        if not w > 0:
            violations.append(("w<=0", x, y, None, w))
            continue
        for i in _differs(x, y):
            a, b = scheme.w_prime(x, y, i), scheme.w_prime(y, x, i)
            checked += 1
            if not a > 0:
                violations.append(("w'(x,y,i)<=0", x, y, i, a))
            if not b > 0:
                violations.append(("w'(y,x,i)<=0", x, y, i, b))
            if a * b < w * w * (1 - tol):
                violations.append(("product<w^2", x, y, i, (a * b, w * w)))
    return SchemeReport(not violations, checked, violations)


@dataclass
class LoadProfile:
    wt: dict
    v: dict
    v_X: float
    v_Y: float
    total_weight: float = 0.0  # sum of w over R, i.e. Phi(0)

    @property
    def v_max(self) -> float:
        return math.sqrt(self.v_X * self.v_Y)

    def ratio(self, x, i) -> float:
        """``wt(x) / v(x, i)``; infinite when nothing differs at ``i``."""
        v = self.v.get((x, i), 0.0)
        return math.inf if v == 0 else self.wt[x] / v


def load_profile(scheme: WeightScheme, relation: RelationInstance) -> LoadProfile:
    if relation.R is None:
        raise EnumerationBudgetExceeded("loads need an enumerated relation")
    wt: dict = {}
    v: dict = {}
    total = 0.0
    for x, y in relation.R:
        w = scheme.w(x, y)
        total += w
        wt[x] = wt.get(x, 0.0) + w
        wt[y] = wt.get(y, 0.0) + w
        for i in _differs(x, y):
            v[(x, i)] = v.get((x, i), 0.0) + scheme.w_prime(x, y, i)
            v[(y, i)] = v.get((y, i), 0.0) + scheme.w_prime(y, x, i)
    xs = set(relation.X)
    v_X = max((val / wt[a] for (a, i), val in v.items() if a in xs), default=0.0)
    v_Y = max((val / wt[a] for (a, i), val in v.items() if a not in xs), default=0.0)
    return LoadProfile(wt, v, v_X, v_Y, total)


# bounds ----------------------------------------------------------------------


@dataclass
class BoundReport:
    problem: str
    model: str
    N: int
    m: int
    m_prime: int
    l: int
    l_prime: int
    adversary_value: float
    product_bound: float
    additive_bound: float
    c_eps: float
    form: str
    p_at_q1: float | None = None

    COLUMNS = ("problem", "model", "N", "m", "m_prime", "l", "l_prime", "product_bound", "additive_bound")

    def to_row(self) -> dict:
        row = {c: getattr(self, c) for c in self.COLUMNS}
        row.update(adversary_value=self.adversary_value, c_eps=self.c_eps, form=self.form)
        if self.p_at_q1 is not None:
            row["p_at_q1"] = self.p_at_q1
        return row


def cbqp_additive(product: float) -> tuple[float, float]:
    """Smallest ``Q + P`` with ``Q >= 1`` and ``Q 2^P >= product``; also ``P`` at ``Q = 1``."""
    if product <= 1:
        return 1.0, 0.0
    best = min(q + max(0.0, math.log2(product / q)) for q in range(1, int(math.ceil(product)) + 1))
    return best, math.log2(product)


def compute_bounds(relation: RelationInstance, model, scheme: WeightScheme | None = None, eps: float = 1 / 3) -> BoundReport:
    """Product-form and additive lower bounds for ``model``.

    With no scheme the uniform weights give the degree form
    ``sqrt(m m' / (l l'))``; with a scheme the value is ``1 / v_max`` (and
    ``max(1/v_X, 1/v_Y)`` for the non-adaptive model). The additive bound is
    ``2 sqrt(product)`` for the PDQP models and the exact minimum of ``Q + P``
    under ``Q 2^P >= product`` for the copy model.
    """
    model = str(getattr(model, "value", model)).lower().replace("_", "-")
    if model not in ("pdqp", "pdqp-naq", "cbqp"):
        raise InvalidParameters(f"unknown model {model!r}")
    m, mp, l, lp = relation.degrees
    c = c_epsilon(eps)
    if scheme is None:
        adv = math.sqrt(m * mp / (l * lp))
        naq = max(m / l, mp / lp)
        form = "degrees"
    else:
        report = validate_weight_scheme(scheme, relation)
        if not report.valid:
            raise InvalidScheme(f"{len(report.violations)} violations, first {report.violations[0]}")
        prof = load_profile(scheme, relation)
        adv = 1 / prof.v_max
        naq = max(1 / prof.v_X, 1 / prof.v_Y)
        form = "loads"
    p_at_q1 = None
    if model == "pdqp":
        product = c * adv
        additive = 2 * math.sqrt(product)
    elif model == "pdqp-naq":
        adv = naq
        product = c * c * naq
        additive = 2 * math.sqrt(product)
    else:
        product = c * adv
        additive, p_at_q1 = cbqp_additive(product)
    return BoundReport(
        relation.kind.value, model, relation.N, m, mp, l, lp, adv, product, additive, c, form, p_at_q1
    )


# inequality checks --------------------------------------------------------------


def _query_amplitudes(state: QuantumState, index_reg: str, bit_reg: str | None, N: int) -> np.ndarray:
    """``|alpha_i|``: norm of the component whose query index is ``i`` (and
    whose phase bit is 1, when a bit register is given)."""
    if bit_reg is None:
        probs = born_distribution(state, index_reg)
        return np.sqrt(probs[:N])
    joint = born_distribution(state, [index_reg, bit_reg]).reshape(-1, 2)
    return np.sqrt(joint[:N, 1])


@dataclass
class WeightIdentityReport:
    lhs: float
    rhs: float
    factor: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def verify_weight_identity(
    relation: RelationInstance,
    scheme: WeightScheme,
    states: dict,
    index_reg: str = "idx",
    bit_reg: str | None = "bit",
    factor: float = 1.0,
    rtol: float = 1e-9,
) -> WeightIdentityReport:
    """Compare ``sum 2 w(x,y) |a_{x,i}| |a_{y,i}|`` over ``R`` and differing
    ``i`` against ``factor * v_max * Phi(0)``.

    ``factor=1`` is the tight form; ``factor=2`` is what the weighted
    adversary argument guarantees for arbitrary states (AM-GM with the
    optimal constant gives ``2 sqrt(v_X v_Y) Phi(0)``).
    """
    if relation.R is None:
        raise EnumerationBudgetExceeded("weight identity needs an enumerated relation")
    prof = load_profile(scheme, relation)
    amps = {}
    for a in relation.inputs:
        if a not in states:
            raise MissingState(a)
        amps[a] = _query_amplitudes(states[a], index_reg, bit_reg, relation.N)
    lhs = 0.0
    for x, y in relation.R:
        w = scheme.w(x, y)
        for i in _differs(x, y):
            lhs += 2 * w * amps[x][i] * amps[y][i]
    rhs = factor * prof.v_max * prof.total_weight
    return WeightIdentityReport(lhs, rhs, factor, lhs <= rhs * (1 + rtol))


@dataclass
class PolynomialReport:
    checked: int
    violations: int
    worst: float

    @property
    def holds(self) -> bool:
        return self.violations == 0


def sample_polynomial_points(n: int, rng: np.random.Generator, k_max: int = 64) -> np.ndarray:
    """``n`` random ``(k, r, s)`` with ``k in [1, k_max]``, ``0 <= r <= 1``, ``0 <= s <= 2r``."""
    k = rng.integers(1, k_max + 1, size=n)
    r = rng.random(n)
    s = 2 * r * rng.random(n)
    return np.column_stack([k, r, s])


def verify_polynomial_inequality(samples, rng: np.random.Generator | None = None, tol: float = 1e-12) -> PolynomialReport:
    """Check ``k s >= r^k - (r - s)^k`` on an ``(n, 3)`` array or ``n`` random points."""
    if isinstance(samples, (int, np.integer)):
        samples = sample_polynomial_points(int(samples), rng or np.random.default_rng(0))
    pts = np.asarray(samples, dtype=float).reshape(-1, 3)
    k, r, s = pts[:, 0], pts[:, 1], pts[:, 2]
    gap = k * s - (r**k - (r - s) ** k)
    return PolynomialReport(len(pts), int(np.sum(gap < -tol)), float(gap.min()) if len(pts) else 0.0)


@dataclass
class HybridReport:
    N: int
    Q: int
    lhs: list
    rhs: float

    @property
    def holds(self) -> bool:
        return all(v <= self.rhs * (1 + 1e-12) for v in self.lhs)


def _search_instance(table) -> ProblemInstance:
    return ProblemInstance(ProblemKind.SEARCH, len(table), tuple(table), evaluate("search", table))


def search_trajectories(N: int, Q: int, inputs: Iterable) -> dict:
    """Measurement-free Grover trajectories for each input table."""
    circuit = grover_circuit(N, Q)
    return {tuple(x): query_states(circuit, _search_instance(x)) for x in inputs}


def verify_hybrid_bound(N: int, Q: int, max_qubits: int = 20) -> HybridReport:
    """``sum_x || psi_t - psi_t^x ||^2`` for ``t = 0..Q`` on Grover search.

    ``psi_t`` runs against the empty input and ``psi_t^x`` against the input
    with only ``x`` marked; ``t = 0`` is the state entering the first query.
    """
    if math.ceil(math.log2(N)) + 1 > max_qubits:
        raise QubitBudgetExceeded(f"N={N} needs more than {max_qubits} qubits")
    if Q == 0:
        return HybridReport(N, 0, [0.0], 0.0)
    empty = (0,) * N
    marked = [tuple(int(j == x) for j in range(N)) for x in range(N)]
    traj = search_trajectories(N, Q, [empty] + marked)
    lhs = []
    for t in range(Q + 1):
        ref = traj[empty].at(t).amplitudes
        lhs.append(float(sum(np.linalg.norm(ref - traj[m].at(t).amplitudes) ** 2 for m in marked)))
    return HybridReport(N, Q, lhs, 4.0 * Q * Q)


# lifted (non-adaptive) weights ---------------------------------------------------


@dataclass
class LiftedScheme:
    """Scheme for the ``k``-fold lifted function over index tuples.

    ``W(kx, ky) = w(x, y)``; the lifted directed weight at a tuple ``I`` is the
    largest ``w'`` over the positions of ``I`` where ``x`` and ``y`` differ,
    which keeps ``W'(x,y,I) W'(y,x,I) >= W^2``.
    """

    base: WeightScheme
    relation: RelationInstance
    k: int

    def W(self, x, y) -> float:
        return self.base.w(x, y)

    def W_prime(self, a, b, I) -> float:
        vals = [self.base.w_prime(a, b, i) for i in I if a[i] != b[i]]
        return max(vals) if vals else 0.0

    def WT(self, a) -> float:
        return sum(self.base.w(*self._pair(a, b)) for b in self.relation.partners(a))

    def V(self, a, I) -> float:
        total = 0.0
        for b in self.relation.partners(a):
            if any(a[i] != b[i] for i in I):
                total += self.W_prime(a, b, I)
        return total

    def _pair(self, a, b):
        return (a, b) if a in self._xs else (b, a)

    @property
    def _xs(self):
        if not hasattr(self, "_xset"):
            self._xset = set(self.relation.X)
        return self._xset


@dataclass
class LiftedReport:
    k: int
    checked: int
    violations: list
    min_slack: float

    @property
    def holds(self) -> bool:
        return not self.violations


def verify_lifted_weights(
    relation: RelationInstance,
    scheme: WeightScheme,
    k: int,
    samples: int | None = None,
    rng: np.random.Generator | None = None,
    max_tuples: int = 4096,
) -> LiftedReport:
    """Check ``WT/V(I) >= (1/k) min_j wt(x)/v(x, i_j)`` for every input.

    ``samples=None`` enumerates all ``N^k`` index tuples; otherwise that many
    random tuples are drawn per input.
    """
    if k < 1 or k > 4:
        raise EnumerationBudgetExceeded(f"k={k} outside 1..4")
    N = relation.N
    if samples is None and N**k > max_tuples:
        raise EnumerationBudgetExceeded(f"{N}^{k} index tuples exceed {max_tuples}")
    lifted = LiftedScheme(scheme, relation, k)
    prof = load_profile(scheme, relation)
    rng = np.random.default_rng(0) if rng is None else rng
    violations, checked, min_slack = [], 0, math.inf
    for a in relation.inputs:
        wt_a = lifted.WT(a)
        tuples = (
            itertools.product(range(N), repeat=k)
            if samples is None
            else (tuple(int(v) for v in rng.integers(0, N, size=k)) for _ in range(samples))
        )
        for I in tuples:
            checked += 1
            V = lifted.V(a, I)
            lhs = math.inf if V == 0 else wt_a / V
            rhs = min(prof.ratio(a, i) for i in I) / k
            if math.isinf(lhs):
                continue
            slack = lhs - rhs
            min_slack = min(min_slack, slack)
            if lhs < rhs * (1 - 1e-12):
                violations.append((a, I, lhs, rhs))
    return LiftedReport(k, checked, violations, min_slack)


# progress measure -----------------------------------------------------------------


@dataclass
class ProgressTrace:
    phi: list

    @property
    def drops(self) -> list:
        return [self.phi[t - 1] - self.phi[t] for t in range(1, len(self.phi))]


def progress_trace(relation: RelationInstance, scheme: WeightScheme, states_by_time: list[dict]) -> ProgressTrace:
    """``Phi(t) = sum_R w(x, y) F(rho_x, rho_y)`` for each time slice."""
    if relation.R is None:
        raise EnumerationBudgetExceeded("progress traces need an enumerated relation")
    phi = []
    for states in states_by_time:
        total = 0.0
        for x, y in relation.R:
            if x not in states or y not in states:
                raise MissingState((x, y))
            total += scheme.w(x, y) * fidelity(states[x], states[y])
        phi.append(total)
    return ProgressTrace(phi)


def search_progress(N: int, Q: int, scheme: WeightScheme | None = None) -> ProgressTrace:
    """Progress measure of Grover search on the search relation, ``t = 0..Q``."""
    rel = build_relation("search", N, "exhaustive")
    scheme = scheme or WeightScheme.uniform()
    traj = search_trajectories(N, Q, rel.inputs)
    return progress_trace(rel, scheme, [{a: traj[a].at(t) for a in rel.inputs} for t in range(Q + 1)])
