"""Acceptance criteria, one test each.

Every test prints a single ``[ACCEPT n] PASS|FAIL`` line (visible with or
without ``-s``) and then asserts the same condition, so the pytest verdict
and the printed summary always agree.
"""

import time
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import blobs, corpus_to_dataset
from oracles import central_difference, nb_oracle_log_posterior, relative_error, same_structure, tree_oracle
from qcbench import bench
from qcbench.classifiers.kernel import fit_svm_ovo, train_smo
from qcbench.classifiers.lbfgs import lbfgs_minimize
from qcbench.classifiers.neural import layer_shapes, mlp_loss_and_gradient, n_params
from qcbench.classifiers.simple import fit_nbc
from qcbench.classifiers.tree import build_tree, fit_gbc, fit_rf
from qcbench.corpus import corpus_stats, default_taxonomy, generate_synthetic_corpus, synthetic_stopwords
from qcbench.dataset import Dataset
from qcbench.eval import ConfusionMatrix, compare_setups, compute_metrics, stratified_kfold


@pytest.fixture
def accept(capsys):
    started = time.perf_counter()

    def record(number, ok, detail, limit_s):
        elapsed = time.perf_counter() - started
        ok = bool(ok) and elapsed < limit_s
        with capsys.disabled():
            print(f"\n[ACCEPT {number}] {'PASS' if ok else 'FAIL'} {detail} ({elapsed:.2f}s, limit {limit_s:g}s)")
        assert ok, f"criterion {number}: {detail}"

    return record


def test_01_naive_bayes_oracle(accept):
    rng = np.random.default_rng(1)
    worst, agree = 0.0, True
    for _ in range(100):
        p, C = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        n = int(rng.integers(C, 7))
        X = rng.integers(0, 4, size=(n, p)).astype(float)
        y = np.concatenate([np.arange(C), rng.integers(0, C, n - C)])
        q = rng.integers(0, 3, size=p).astype(float)
        m = fit_nbc(Dataset.from_dense(X, y, C), alpha=0.1)
        got = m.predict_log_proba(sp.csr_matrix(q[None, :]))[0]
        want = np.array(nb_oracle_log_posterior(X, y, C, 0.1, q))
        worst = max(worst, float(np.max(np.abs(got - want))))
        agree &= int(m.predict_matrix(sp.csr_matrix(q[None, :]))[0]) == int(np.argmax(want))
    accept(1, agree and worst <= 1e-9, f"100 instances, max |log-posterior diff| = {worst:.2e}", 5)


def test_02_decision_tree_oracle(accept):
    rng = np.random.default_rng(2)
    matches = 0
    for _ in range(50):
        n, p, C = int(rng.integers(1, 7)), int(rng.integers(1, 4)), int(rng.integers(2, 4))
        X = rng.choice([-1.0, 0.0, 0.5, 1.0, 2.0], size=(n, p))
        y = rng.integers(0, C, n)
        matches += same_structure(build_tree(sp.csr_matrix(X), y, n_classes=C), tree_oracle(X, y, C))
    accept(2, matches == 50, f"{matches}/50 trees identical to exhaustive search", 5)


def test_03_mlp_gradient_check(accept):
    rng = np.random.default_rng(3)
    X = sp.csr_matrix(rng.normal(size=(3, 4)))
    y = np.array([0, 1, 2])
    shapes = layer_shapes(4, (5,), 3)
    worst = 0.0
    for _ in range(10):
        theta = rng.normal(size=n_params(shapes))
        _, g = mlp_loss_and_gradient(theta, shapes, X, y, 1e-4)
        num = central_difference(lambda t: mlp_loss_and_gradient(t, shapes, X, y, 1e-4)[0], theta, 1e-5)
        worst = max(worst, relative_error(g, num))
    accept(3, worst <= 1e-5, f"10 points, max relative error {worst:.2e}", 5)


def test_04_lbfgs(accept):
    c = np.array([3.0, -1.0, 0.5, 2.0])
    a = lbfgs_minimize(lambda x: (float((x - c) @ (x - c)), 2 * (x - c)), np.zeros(4), tol=1e-10)
    err_a = float(np.max(np.abs(a.x - c)))

    def rosen(x):
        return (100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2,
                np.array([-400 * x[0] * (x[1] - x[0] ** 2) - 2 * (1 - x[0]), 200 * (x[1] - x[0] ** 2)]))

    b = lbfgs_minimize(rosen, np.array([-1.2, 1.0]), tol=1e-10, max_iter=200)
    err_b = float(np.max(np.abs(b.x - 1.0)))
    d = np.array([1.0, 10.0, 100.0])
    q = lbfgs_minimize(lambda x: (0.5 * float(x @ (d * x)), d * x), np.ones(3), tol=1e-6, max_iter=50)
    g_c = float(np.max(np.abs(q.grad)))
    ok = err_a <= 1e-8 and err_b <= 1e-5 and b.n_iter <= 200 and g_c <= 1e-6 and q.n_iter <= 50
    accept(4, ok, f"bowl err {err_a:.1e}; Rosenbrock err {err_b:.1e} in {b.n_iter} it; "
                  f"diag(1,10,100) |g| {g_c:.1e} in {q.n_iter} it", 2)


def test_05_svm(accept):
    X, lab = blobs(30, [(0.0, 0.0), (1.5, 1.5)], 0.7, 5)
    y = np.where(lab == 0, 1.0, -1.0)
    Xs = sp.csr_matrix(X)
    C, tol = 1.0, 1e-3
    m = train_smo(Xs, y, C=C, gamma=1.0, tol=tol)
    alpha = np.zeros(y.size)
    alpha[m.support_index] = np.abs(m.dual_coef)
    unbound = (alpha > 1e-8) & (alpha < C - 1e-8)
    resid = np.abs(y - m.decision_function(Xs))[unbound]
    feasible = bool(np.all(alpha >= 0) and np.all(alpha <= C) and abs(float(alpha @ y)) <= 1e-6)
    consistent = bool(np.all(resid <= tol + 1e-6))
    Xsep, lsep = blobs(30, [(-2.0, -2.0), (2.0, 2.0)], 0.5, 6)
    ysep = np.where(lsep == 0, 1.0, -1.0)
    sep = train_smo(sp.csr_matrix(Xsep), ysep, C=1.0, gamma=0.5)
    acc2 = float(np.mean(sep.predict_sign(sp.csr_matrix(Xsep)) == ysep))
    X3, y3 = blobs(30, [(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)], 0.6, 7)
    ds3 = Dataset.from_dense(X3, y3)
    acc3 = float(np.mean(fit_svm_ovo(ds3).predict_matrix(ds3.X) == y3))
    ok = feasible and consistent and acc2 == 1.0 and acc3 >= 0.95
    accept(5, ok, f"feasible={feasible}, |sum a y|={abs(float(alpha @ y)):.1e}, unbound consistent={consistent}, "
                  f"separable acc {acc2:.3f}, 3-class acc {acc3:.3f}", 30)


def test_06_ensembles(accept):
    tax = default_taxonomy()
    ds = corpus_to_dataset(generate_synthetic_corpus(tax, seed=0, scale=0.05), tax)
    dev = np.array(fit_gbc(ds, n_stages=100).train_deviance)
    monotone = dev.size == 100 and bool(np.all(np.diff(dev) <= 1e-12))
    a = fit_rf(ds, n_trees=500, seed=11).votes(ds.X)
    b = fit_rf(ds, n_trees=500, seed=11).votes(ds.X)
    identical = bool(np.array_equal(a, b))
    accept(6, monotone and identical, f"GBC deviance {dev[0]:.4f} -> {dev[-1]:.4f} monotone={monotone}; "
                                      f"RF(500) vote-identical={identical}", 60)


def test_07_fold_protocol(accept):
    tax = default_taxonomy()
    recs = generate_synthetic_corpus(tax, seed=0, scale=1.0)
    y = np.array([tax.coarse_classes.index(r.coarse) for r in recs])
    folds = stratified_kfold(y, 10, seed=0)
    sizes = folds.sizes()
    imbalance = max(int(np.ptp(np.bincount(folds.fold_of[y == c], minlength=10))) for c in range(6))
    train_sizes = {folds.train_indices(f).size for f in range(10)}
    ok = len(recs) == 3500 and sizes.tolist() == [350] * 10 and imbalance <= 1 and train_sizes == {3150}
    accept(7, ok, f"fold sizes {sorted(set(sizes.tolist()))}, train {sorted(train_sizes)}, "
                  f"per-class imbalance {imbalance}", 1)


@pytest.mark.slow
def test_08_end_to_end_compare(accept):
    tax = default_taxonomy()
    recs = generate_synthetic_corpus(tax, seed=0, scale=0.25)
    stats = corpus_stats(recs, tax)
    baseline = max(stats.per_coarse.values()) / stats.total
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        doc = compare_setups(recs, synthetic_stopwords(), k=10, seed=0).to_dict()
    g = doc["grid"]
    shape_ok = (list(g) == ["remove", "keep"] and all(list(g[m]) == ["mlp", "svm", "nbc", "sgd", "gbc", "knn", "rf"]
                                                     for m in g))
    cells = [g[m][k][metric] for m in g for k in g[m] for metric in ("accuracy", "f1")]
    worst = min(g[m][k]["accuracy"] for m in g for k in g[m])
    ref = doc["paper_reference"]["keep"]
    ref_ok = ref["sgd"]["accuracy"] == 0.832 and ref["mlp"]["f1"] == 0.810
    ok = shape_ok and len(cells) == 28 and worst >= baseline + 0.15 and ref_ok
    accept(8, ok, f"2x7x2 grid={shape_ok and len(cells) == 28}, lowest accuracy {worst:.3f} vs baseline "
                  f"{baseline:.3f} + 0.15, references attached={ref_ok}", 600)


@pytest.mark.slow
def test_09_complexity_slopes(accept):
    runs = [
        ("nbc", "train", "n", (500, 1000, 2000, 4000), None),
        ("knn", "predict", "n", (500, 1000, 2000, 4000), None),
        ("svm", "train", "n", (500, 1000, 2000, 4000), None),
        ("rf", "train", "n_trees", (5, 10, 20, 40), {"n": 1000, "p": 2000}),
    ]
    parts, ok = [], True
    for kind, phase, axis, sizes, fixed in runs:
        res = bench.run_scaling(kind, phase, axis, sizes, repeats=3, seed=0, fixed=fixed)
        v = bench.check_asymptotics(res)
        ok &= v.passed and max(res.sizes) <= 4000 and len(res.sizes) == len(sizes)
        parts.append(f"{kind} {phase}/{axis} slope {res.slope:.2f} r2 {res.r_squared:.2f} "
                     f"in [{v.interval[0]:.2f}, {v.interval[1]:.2f}]")
    accept(9, ok, "; ".join(parts), 600)


def test_10_metric_oracle(accept):
    rep = compute_metrics(ConfusionMatrix(np.array([[5, 1], [2, 2]])))
    ok = abs(rep.accuracy - 0.7) < 1e-12 and abs(rep.macro_f1 - 0.6703) <= 5e-4
    accept(10, ok, f"accuracy {rep.accuracy:.4f}, macro F1 {rep.macro_f1:.4f}", 1)
