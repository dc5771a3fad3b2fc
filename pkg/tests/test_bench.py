import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcbench import bench as B
from qcbench.errors import BenchmarkError


def fake_result(kind, phase, axis, slope, r2=0.99):
    sizes = (500, 1000, 2000, 4000)
    times = tuple(1e-3 * (s / 500) ** slope for s in sizes)
    return B.ScalingResult(kind, phase, axis, sizes, times, slope, r2)


class _ConstantModel:
    def predict_matrix(self, X):
        return np.zeros(X.shape[0], dtype=np.int64)


_WORK = np.random.default_rng(0).random(20_000)


def constant_fit(ds, params, seed):
    np.sort(_WORK)  # fixed cost, independent of the dataset
    return _ConstantModel()


class TestComplexityTable:
    @pytest.mark.parametrize("kind, phase, axis, expected", [
        ("nbc", "train", "n", (1, 1)), ("nbc", "predict", "p", (1, 1)), ("knn", "predict", "n", (1, 1)),
        ("svm", "train", "n", (2, 3)), ("rf", "train", "n", (2, 2)), ("rf", "train", "n_trees", (1, 1)),
        ("gbc", "predict", "n_trees", (1, 1)), ("mlp", "predict", "n", (1, 1)), ("sgd", "train", "p", (1, 1)),
        ("svm", "predict", "n", (1, 1)), ("knn", "train", "n", (0, 0)), ("sgd", "predict", "n", (0, 0)),
    ])
    def test_exponents(self, kind, phase, axis, expected):
        assert B.COMPLEXITY[kind].expected_exponent(phase, axis) == expected

    def test_every_cell_present(self):
        assert set(B.COMPLEXITY) == {"mlp", "svm", "nbc", "sgd", "gbc", "knn", "rf"}
        assert not B.COMPLEXITY["sgd"].predict.claimed and not B.COMPLEXITY["knn"].train.claimed

    def test_unknown_phase(self):
        with pytest.raises(BenchmarkError):
            B.COMPLEXITY["nbc"].cell("serve")


class TestCheckAsymptotics:
    def test_nbc_pass(self):
        assert B.check_asymptotics(fake_result("nbc", "train", "n", 1.05)).passed

    def test_far_off_fails(self):
        assert not B.check_asymptotics(fake_result("nbc", "train", "n", 2.4)).passed

    def test_low_r2_fails(self):
        assert not B.check_asymptotics(fake_result("nbc", "train", "n", 1.0, r2=0.5)).passed

    @pytest.mark.parametrize("slope, ok", [(2.2, True), (1.7, True), (3.3, True), (1.6, False), (3.4, False)])
    def test_svm_interval(self, slope, ok):
        v = B.check_asymptotics(fake_result("svm", "train", "n", slope))
        assert v.passed is ok and v.interval == (1.7, 3.3)

    def test_flat_expectation_ignores_r2(self):
        v = B.check_asymptotics(fake_result("knn", "train", "n", 0.05, r2=0.01))
        assert v.passed and not v.r2_applies and not v.claimed

    def test_metadata_mismatch(self):
        with pytest.raises(BenchmarkError):
            B.check_asymptotics(fake_result("nbc", "train", "n", 1.0), B.COMPLEXITY["knn"])

    def test_custom_tolerance(self):
        assert not B.check_asymptotics(fake_result("nbc", "train", "n", 1.2), tolerance=0.1).passed


class TestFitSlope:
    @given(st.floats(-1.0, 3.0), st.floats(1e-6, 1.0))
    def test_recovers_power_law(self, k, c):
        sizes = np.array([100, 200, 400, 800, 1600])
        slope, r2 = B.fit_slope(sizes, c * sizes ** k)
        assert slope == pytest.approx(k, abs=1e-9)

    def test_monotone_rule(self):
        assert B.is_monotone([2, 1, 3, 4])
        assert not B.is_monotone([1, 3, 2, 4])


class TestRunScaling:
    def test_constant_work_is_flat(self):
        res = B.run_scaling("dummy", "train", "n", (500, 1000, 2000, 4000), repeats=5, fit_fn=constant_fit)
        assert -0.2 <= res.slope <= 0.2

    def test_report_fields_and_pins(self):
        res = B.run_scaling("sgd", "predict", "p", (200, 400, 800), repeats=2, fixed={"n": 120},
                            min_measure_s=0.002)
        doc = B.bench_report(res)
        for key in ("classifier", "phase", "axis", "sizes", "times_s", "slope", "r2", "expected", "verdict"):
            assert key in doc
        assert doc["hyperparameters"]["epochs"] == 5 and doc["fixed"]["n"] == 120
        assert len(doc["dataset_seeds"]) == len(doc["sizes"]) and all(t > 0 for t in doc["times_s"])
        assert doc["claimed_by_paper"] is False

    def test_dataset_seeds_reproducible(self):
        a = B.run_scaling("nbc", "train", "n", (50, 100, 200), repeats=1, min_measure_s=0.001)
        b = B.run_scaling("nbc", "train", "n", (50, 100, 200), repeats=1, min_measure_s=0.001)
        assert a.dataset_seeds == b.dataset_seeds

    def test_tree_axis_records_sizes(self):
        res = B.run_scaling("rf", "train", "n_trees", (1, 2, 4), repeats=1, fixed={"n": 60, "p": 50},
                            min_measure_s=0.001)
        assert res.sizes == (1, 2, 4) and "n_trees" not in res.fixed

    @pytest.mark.parametrize("kwargs, pattern", [
        ({"sizes": (10, 20)}, "at least 3"),
        ({"sizes": (10, 30, 20)}, "strictly increasing"),
        ({"axis": "q"}, "axis"),
        ({"phase": "serve"}, "phase"),
    ])
    def test_bad_arguments(self, kwargs, pattern):
        args = {"kind": "nbc", "phase": "train", "axis": "n", "sizes": (10, 20, 40)}
        args.update(kwargs)
        with pytest.raises(BenchmarkError, match=pattern):
            B.run_scaling(**args)

    def test_knn_infeasible(self):
        with pytest.raises(BenchmarkError, match="exceeds"):
            B.run_scaling("knn", "train", "n", (5, 10, 20), repeats=1)

    def test_tree_axis_only_for_ensembles(self):
        with pytest.raises(BenchmarkError):
            B.run_scaling("nbc", "train", "n_trees", (1, 2, 3))


class TestGenerator:
    def test_shape_and_norm(self):
        ds = B.make_sparse_classification(50, 300, density=0.05, seed=1)
        assert ds.X.shape == (50, 300) and ds.n_classes == 6
        np.testing.assert_allclose(np.sqrt(ds.X.multiply(ds.X).sum(axis=1)).A.ravel(), 1.0)
        assert ds.X.getnnz(axis=1).max() <= 15

    def test_deterministic(self):
        a = B.make_sparse_classification(30, 100, seed=3)
        b = B.make_sparse_classification(30, 100, seed=3)
        assert (a.X != b.X).nnz == 0 and np.array_equal(a.labels, b.labels)

    def test_bad_size(self):
        with pytest.raises(BenchmarkError):
            B.make_sparse_classification(0, 10)


def test_markdown():
    doc = B.bench_report(fake_result("knn", "train", "n", 0.0, r2=0.0))
    md = B.render_bench_markdown([doc])
    assert "not claimed in the published table" in md and "| pass |" in md
