"""Ten-fold cross-validation on a 120-row slice of the breast-cancer data.

5% of each training fold's labels are flipped; the test folds are untouched.
Compares the plain l1-SVM with the budgeted ramp-loss model (DAKS, B = 4)
and prints the same table the ``cv`` command writes.  Takes a few minutes.
"""
from rampfs import DaksParams, run_tfcv
from rampfs.data import load_wdbc, stratified_subsample

ds = stratified_subsample(load_wdbc(), 120, seed=0)
params = DaksParams(t_limit=10, t_fea=5, t_inc=8, t_easy=2)

plain = run_tfcv(ds, [1.0], [30], "label-noise", "svm-l1", seed=0)
ramp = run_tfcv(ds, [1.0], [4], "label-noise", "daks", params, seed=0)
print(plain.to_csv("SVM-l1"), end="")
print(ramp.to_csv("RL-FS-M").split("\n", 1)[1], end="")
