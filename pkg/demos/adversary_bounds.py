"""Lower bounds from the weighted adversary with a sample budget.

For each problem we build the relation between no- and yes-inputs by brute
force, read off its degrees (m, m', l, l'), and turn them into lower bounds
on Q*P, on Q*2^P for the copy model, and on Q+P. The last part runs the
weight inequality used in the progress argument on real Grover states: the
tight form breaks after one Grover iteration while the factor-2 form holds.

    python3 demos/adversary_bounds.py
"""

from ncqsim.adversary import (
    WeightScheme,
    build_relation,
    compute_bounds,
    search_progress,
    search_trajectories,
    verify_weight_identity,
)
from ncqsim.algorithms import build_algorithm

print(f"{'problem':9s} {'N':>3s} {'degrees':>14s} {'model':9s} {'Q*P >=':>8s} {'Q+P >=':>8s} {'achieved':>8s}")
for kind in ("search", "majority", "parity", "ed"):
    for N in (16, 64):
        rel = build_relation(kind, N)
        for model in ("pdqp", "pdqp-naq", "cbqp"):
            b = compute_bounds(rel, model)
            achieved = "-" if model == "cbqp" else str(sum(getattr(build_algorithm(kind, model, N), k) for k in "QP"))
            print(f"{kind:9s} {N:3d} {str(rel.degrees):>14s} {model:9s} {b.product_bound:8.3f} "
                  f"{b.additive_bound:8.3f} {achieved:>8s}")

print("\ncopy model, search: Q 2^P >= C sqrt(N), so one query needs P >= log2(C sqrt N)")
for N in (64, 256, 1024, 4096):
    b = compute_bounds(build_relation("search", N), "cbqp")
    print(f"  N={N:5d}  P at Q=1 >= {b.p_at_q1:.3f}")

print("\nprogress measure Phi(t) of Grover search, N = 8:", [round(v, 3) for v in search_progress(8, 3).phi])

rel = build_relation("search", 8, "exhaustive")
traj = search_trajectories(8, 2, rel.inputs)
print("\nweight inequality on Grover states, N = 8")
for t in range(3):
    states = {a: traj[a].at(t) for a in rel.inputs}
    tight = verify_weight_identity(rel, WeightScheme.uniform(), states)
    loose = verify_weight_identity(rel, WeightScheme.uniform(), states, factor=2.0)
    print(f"  t={t}: LHS {tight.lhs:.3f}   v_max Phi(0) = {tight.rhs:.3f} ({'ok' if tight.holds else 'VIOLATED'})"
          f"   2 v_max Phi(0) = {loose.rhs:.3f} ({'ok' if loose.holds else 'VIOLATED'})")
