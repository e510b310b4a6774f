"""A planted outlier: the ramp loss caps its cost, the hinge loss does not.

Twelve points on a line are separable at x = 0.5, except one positive point
placed far on the negative side.  Its hinge loss grows with the weight, so
the l1-SVM drops the feature altogether (w = 0); the exact ramp-loss model
pays the fixed 2C for that point, flags it with z = 1 and keeps x = 0.5.
"""
import numpy as np

from rampfs import HyperParams, SvmInstance, run_algorithm1, svm_l1
from rampfs.formulations import build_rlfs
from rampfs.milp import solve_milp

x = np.array([0.0, 0.1, 0.2, 0.3, 0.35, 0.4, 0.6, 0.65, 0.7, 0.8, 0.9, -3.0])
y = np.array([-1, -1, -1, -1, -1, -1, 1, 1, 1, 1, 1, 1.0])
inst, hp = SvmInstance(x[:, None], y), HyperParams(C=1.0, B=1)

hinge = svm_l1(inst, hp.C)
a1 = run_algorithm1(inst, hp)
prob = build_rlfs(inst, hp, a1.bounds)
res = solve_milp(prob, warm_start=prob.layout.from_solution(a1.solution))
ramp = prob.layout.to_solution(res.x)

for name, sol in (("l1-SVM", hinge), ("ramp loss", ramp)):
    w, b = sol.w[0], sol.b
    errors = int(np.sum(np.sign(w * x + b + 1e-12) != y))
    print(f"{name:9s}  w = {w:7.3f}  b = {b:7.3f}  threshold x = {-b / w if w else float('nan'):6.3f}"
          f"  training errors = {errors}")
print("points flagged as outliers (z = 1):", np.flatnonzero(ramp.z).tolist())
print(f"objective {res.objective:.4f}, status {res.status.value}, {res.nodes} nodes")
