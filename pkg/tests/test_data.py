import numpy as np
import pytest

from rampfs.bigm import svm_l1
from rampfs.data import (
    Dataset,
    LabelError,
    ParseError,
    budget_grid,
    grid_from_bmax,
    inject_label_noise,
    inject_svm_outliers,
    load_csv,
    load_wdbc,
    scale_features,
    stratified_folds,
    stratified_subsample,
)
from rampfs.formulations import SvmInstance


def ds_from(X, y, tag="t"):
    return Dataset(SvmInstance(np.asarray(X, float), np.asarray(y, float)), None, tag)


def random_ds(n=40, d=3, seed=0):
    r = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    X = r.random((n, d)) + 0.5 * y[:, None] * r.random(d)
    return ds_from(X, y)


# ---------------------------------------------------------------- CSV

def test_load_small_csv(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0.1,0.2,1\n0.3,0.4,-1\n0.5,0.6,1\n")
    ds = load_csv(p)
    assert (ds.n, ds.d) == (3, 2)
    assert ds.y.tolist() == [1.0, -1.0, 1.0]


def test_load_zero_one_labels_with_header(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("label,f1,f2\n0,1,2\n1,3,4\n")
    ds = load_csv(p, label_col=0)
    assert ds.y.tolist() == [-1.0, 1.0]
    assert ds.feature_names == ("f1", "f2")
    assert ds.X.tolist() == [[1, 2], [3, 4]]


def test_single_class_rejected(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("1,1\n2,1\n")
    with pytest.raises(LabelError):
        load_csv(p)


def test_bad_labels_rejected(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("1,2\n2,1\n")
    with pytest.raises(LabelError):
        load_csv(p)


def test_parse_error_location(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,2,1\n3,x,-1\n")
    with pytest.raises(ParseError) as err:
        load_csv(p)
    assert (err.value.row, err.value.column) == (2, 2)
    p.write_text("1,2,1\n3,-1\n")
    with pytest.raises(ParseError) as err:
        load_csv(p)
    assert err.value.row == 2


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv")


def test_wdbc_shape():
    ds = load_wdbc()
    assert (ds.n, ds.d) == (569, 30)
    assert int(np.sum(ds.y == 1)) == 212  # malignant cases


# ---------------------------------------------------------------- scaling

def test_scaling_identity_on_unit_range():
    X = np.array([[0.0, 1.0], [0.5, 0.0], [1.0, 0.25]])
    tr, _, _ = scale_features(ds_from(X, [1, -1, 1]))
    assert np.allclose(tr.X, X)


def test_scaling_constant_column_and_unclipped_test():
    X = np.array([[2.0, 5.0], [4.0, 5.0]])
    test = ds_from([[6.0, 5.0], [3.0, 5.0]], [1, -1])
    tr, te, params = scale_features(ds_from(X, [1, -1]), test)
    assert np.allclose(tr.X[:, 1], 0.0)
    assert te.X[0, 0] == pytest.approx(2.0)
    assert np.allclose(params.apply(X), tr.X)


# ---------------------------------------------------------------- folds

def test_folds_one_per_class():
    ds = random_ds(20)
    plan = stratified_folds(ds, seed=3)
    assert len(plan.folds) == 10
    for f in plan.folds:
        assert sorted(ds.y[f].tolist()) == [-1.0, 1.0]


def test_folds_partition_and_proportions():
    r = np.random.default_rng(4)
    y = np.where(r.random(97) < 0.3, 1.0, -1.0)
    ds = ds_from(r.random((97, 2)), y)
    plan = stratified_folds(ds, seed=1)
    allidx = np.concatenate(plan.folds)
    assert sorted(allidx.tolist()) == list(range(97))
    share = np.mean(y == 1)
    for f in plan.folds:
        assert abs(np.sum(y[f] == 1) - share * len(f)) <= 1.0 + 1e-9
    train, test = plan.split(0)
    assert set(train.tolist()).isdisjoint(test.tolist())


def test_folds_seed_deterministic():
    ds = random_ds(30)
    a, b = stratified_folds(ds, 5), stratified_folds(ds, 5)
    assert all(np.array_equal(x, y) for x, y in zip(a.folds, b.folds))
    c = stratified_folds(ds, 6)
    assert not all(np.array_equal(x, y) for x, y in zip(a.folds, c.folds))


def test_folds_follow_row_permutation():
    ds = random_ds(30, seed=2)
    perm = np.random.default_rng(0).permutation(ds.n)
    pds = ds.subset(perm)
    a = stratified_folds(ds, 7)
    b = stratified_folds(pds, 7)
    for fa, fb in zip(a.folds, b.folds):
        assert sorted(perm[fb].tolist()) == fa.tolist()


# ---------------------------------------------------------------- perturbations

def test_label_noise_counts_and_involution():
    ds = random_ds(100)
    assert inject_label_noise(ds, 0.0, 1) is ds
    noisy = inject_label_noise(ds, 0.05, 1)
    assert int(np.sum(noisy.y != ds.y)) == 5
    assert np.array_equal(noisy.X, ds.X)
    back = inject_label_noise(noisy, 0.05, 1)
    assert np.array_equal(back.y, ds.y)
    assert np.array_equal(inject_label_noise(ds, 0.05, 1).y, noisy.y)


def test_label_noise_rounds_up():
    ds = random_ds(41)
    assert int(np.sum(inject_label_noise(ds, 0.05, 0).y != ds.y)) == 3


def test_label_noise_follows_row_permutation():
    ds = random_ds(60, seed=5)
    perm = np.random.default_rng(1).permutation(ds.n)
    a = inject_label_noise(ds, 0.1, 3)
    b = inject_label_noise(ds.subset(perm), 0.1, 3)
    assert np.array_equal(a.y[perm], b.y)


def test_svm_outliers_two_per_class():
    # hand-solved separable l1-SVM: the points at -1 and 2 are the most interior
    X = np.array([[0.0], [-1.0], [1.0], [2.0]])
    y = np.array([-1, -1, 1, 1.0])
    ds = ds_from(X, y)
    assert inject_svm_outliers(ds, 0.0, 1.0, 0) is ds
    out = inject_svm_outliers(ds, 0.5, 1.0, 0)
    assert out.y.tolist() == [-1.0, 1.0, 1.0, -1.0]


def test_svm_outliers_are_most_interior():
    ds = random_ds(60, seed=7)
    out = inject_svm_outliers(ds, 0.1, 1.0, 2)
    margin = svm_l1(ds.inst, 1.0).margins(ds.X, ds.y)
    assert np.array_equal(out.X, ds.X)
    for cls in (1.0, -1.0):
        members = ds.y == cls
        flipped = members & (out.y != ds.y)
        kept = members & (out.y == ds.y)
        assert flipped.sum() == int(np.ceil(0.1 * members.sum()))
        assert margin[flipped].min() >= margin[kept].max() - 1e-12


# ---------------------------------------------------------------- budget grid

def test_grid_from_published_maxima():
    assert grid_from_bmax(34) == [34, 23, 17, 11, 7]
    assert grid_from_bmax(29) == [29, 19, 15, 10, 6]
    assert grid_from_bmax(1) == [1]
    with pytest.raises(ValueError):
        grid_from_bmax(0)


def test_budget_grid_with_custom_fit():
    ds = random_ds(40, d=6)
    calls = []

    def fit(inst, C, B):
        calls.append((inst.n, C, B))
        return svm_l1(inst, C)

    grid, info = budget_grid(ds, [0.1, 1.0], seed=0, fit=fit, samples=3)
    assert len(calls) == 6 and all(B == 6 for _, _, B in calls)
    assert all(n == 36 for n, _, _ in calls)
    assert grid == grid_from_bmax(info["B_max"])
    assert grid == sorted(set(grid), reverse=True)


def test_subsample_stratified():
    ds = load_wdbc()
    sub = stratified_subsample(ds, 200, seed=0)
    assert sub.n == 200
    assert abs(np.mean(sub.y == 1) - np.mean(ds.y == 1)) < 0.01
    again = stratified_subsample(ds, 200, seed=0)
    assert again.checksum() == sub.checksum()
