"""Kernel search against branch and bound on a 40 x 15 instance.

Four features carry signal, eleven are noise and two labels are flipped.
Both methods get the same budget; the script prints objective, %BS, the
selected features and the upper bounds DAKS found.

On this instance the kernel search picks the right three features but keeps
one point too many as an outlier, paying an extra 2C.  The first round finds
the support while that point is still fixed out; once its code is released,
each bucket sub-problem must take a new feature, which the budget of three
forbids, so the support is not solved again with the corrected codes.
"""
import time

import numpy as np

from rampfs import DaksParams, HyperParams, SvmInstance, run_algorithm1, run_daks
from rampfs.formulations import build_rlfs
from rampfs.milp import solve_milp

r = np.random.default_rng(20_000)
y = np.where(np.arange(40) % 2 == 0, 1.0, -1.0)
X = r.random((40, 15))
X[:, :4] += 0.4 * y[:, None] * r.random(4)
y[r.choice(40, 2, replace=False)] *= -1
inst, hp = SvmInstance(X, y), HyperParams(C=10.0, B=3)

t = time.perf_counter()
a1 = run_algorithm1(inst, hp)
prob = build_rlfs(inst, hp, a1.bounds)
ex = solve_milp(prob, warm_start=prob.layout.from_solution(a1.solution))
exact = prob.layout.to_solution(ex.x)
t_e = time.perf_counter() - t

t = time.perf_counter()
res = run_daks(inst, hp, DaksParams(t_limit=20, t_fea=10, t_inc=15, t_easy=5))
t_h = time.perf_counter() - t

print(f"exact: objective {ex.objective:.4f} in {t_e:.1f} s, features {exact.selected.tolist()}, outliers {np.flatnonzero(exact.z).tolist()}")
print(f"DAKS : objective {res.solution.objective:.4f} in {t_h:.1f} s, "
      f"features {res.solution.selected.tolist()}, outliers {np.flatnonzero(res.solution.z).tolist()}, "
      f"stop: {res.stop_reason}")
print(f"%BS = {100 * (res.solution.objective - ex.objective) / ex.objective:+.2f}%")
print("upper bounds found by DAKS:", [round(u, 4) for u in res.ub_history])
