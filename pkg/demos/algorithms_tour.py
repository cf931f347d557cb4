"""Query/sample trade-offs of the implemented algorithms.

Collision: one query, then P samples of the index register; a 2-to-1 function
shows two preimages except with probability 2^(1-P).

Search: a few Grover iterations followed by repeated sampling. With
Q ~ N^(1/3) iterations the marked item has probability ~ N^(-1/3), so about
N^(1/3) ln N samples find it. The minimal total budget grows like N^(1/3).

Partition: one parallel round over sqrt(N) blocks, then coupon-collector
sampling, costs ~ sqrt(N) ln N samples.

    python3 demos/algorithms_tour.py
"""

from ncqsim.algorithms import grover_success_probability, pdqp_search_algorithm
from ncqsim.bench import ExperimentSpec, default_Q, estimate_success, scaling_experiment

print("collision, N = 16, 3000 two-to-one instances per row")
for P in (2, 3, 4, 6, 8):
    row = estimate_success(ExperimentSpec("collision", "pdqp", [16], trials=3000, P=P, seed=1)).rows[0]
    print(f"  P={P:2d}  error {1 - row.rate:.4f}  (2^(1-P) = {2.0 ** (1 - P):.4f})")

print("\npartial Grover, one marked item")
for N in (27, 64, 125, 216):
    spec = pdqp_search_algorithm(N)
    p = grover_success_probability(N, spec.Q)
    print(f"  N={N:4d}  Q={spec.Q}  P={spec.P:3d}  marked probability per sample {p:.3f}"
          f"  miss after P samples {(1 - p) ** spec.P:.2e}")

print("\nminimal sample budget at success 2/3 (Q fixed at ceil(N^(1/3)))")
res = scaling_experiment(
    ExperimentSpec("search", "pdqp", [27, 64, 125, 216], trials=400, seed=0),
    lambda N: default_Q("search", "pdqp", N),
)
for r in res.rows:
    print(f"  N={r.N:4d}  Q={r.Q}  P*={r.P}  success {r.rate:.3f} [{r.ci_lo:.3f}, {r.ci_hi:.3f}]")
print(f"  fitted exponent of Q+P*: {res.fit.exponent:.3f} (residual {res.fit.residual:.1e})")

print("\nnon-adaptive partition algorithm, default P = ceil(3 sqrt(N) ln N)")
for kind in ("search", "majority", "ed"):
    rows = estimate_success(ExperimentSpec(kind, "pdqp-naq", [16, 64], trials=200, seed=2)).rows
    print("  " + "   ".join(f"{kind:8s} N={r.N}: Q={r.Q} P={r.P} success {r.rate:.3f}" for r in rows))

