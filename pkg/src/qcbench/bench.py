"""Timing curves for each classifier phase and their log-log slopes, checked
against the published asymptotic costs.

``run_scaling`` varies one size axis (training rows ``n``, features ``p``, or
the tree count ``n_trees``) while holding the others fixed, times the phase
on a monotonic clock, and fits ``log(time) = slope * log(size) + c`` by least
squares.  ``check_asymptotics`` compares the slope with the exponent read off
the complexity table.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import model_api
from .dataset import Dataset
from .errors import BenchmarkError

AXES = ("n", "p", "n_trees")
PHASES = ("train", "predict")

# Symbols the benchmark does not scan are held constant.  Two symbols are
# tied to scanned axes: the generator keeps the density fixed, so the mean
# nonzero count per row grows with p, and the support-vector count grows
# with n (at most linearly).
SUBSTITUTIONS = {"mbar": {"p": 1}, "n_sv": {"n": 1}}


@dataclass(frozen=True)
class Cell:
    formula: str  # as published, e.g. "O(n^2 p + n^3)"
    terms: tuple = ()  # monomials as {symbol: power}
    claimed: bool = True
    batch_n: bool = False  # n counts predicted rows rather than training rows
    intervals: dict = field(default_factory=dict)  # explicit acceptance interval per axis

    def exponent_range(self, axis: str) -> tuple[float, float]:
        powers = []
        for term in self.terms:
            total = 0.0
            for sym, power in term.items():
                if sym == axis:
                    total += power
                total += power * SUBSTITUTIONS.get(sym, {}).get(axis, 0)
            powers.append(total)
        if not powers:
            return (0.0, 0.0)
        return (min(powers), max(powers))


@dataclass(frozen=True)
class ComplexityModel:
    classifier: str
    train: Cell
    predict: Cell

    def cell(self, phase: str) -> Cell:
        if phase not in PHASES:
            raise BenchmarkError(f"unknown phase {phase!r}")
        return getattr(self, phase)

    def expected_exponent(self, phase: str, axis: str) -> tuple[float, float]:
        return self.cell(phase).exponent_range(axis)


def _t(**powers):
    return powers


COMPLEXITY = {
    "mlp": ComplexityModel("mlp", Cell("O(n p h^k i)", (_t(n=1, p=1, h=1, i=1),)),
                           Cell("O(n p h^k)", (_t(n=1, p=1, h=1),), batch_n=True)),
    "sgd": ComplexityModel("sgd", Cell("O(i n mbar)", (_t(i=1, n=1, mbar=1),)),
                           Cell("(blank)", (_t(p=1),), claimed=False)),
    "svm": ComplexityModel("svm", Cell("O(n^2 p + n^3)", (_t(n=2, p=1), _t(n=3)), intervals={"n": (1.7, 3.3)}),
                           Cell("O(n_sv p)", (_t(n_sv=1, p=1),))),
    "nbc": ComplexityModel("nbc", Cell("O(n p)", (_t(n=1, p=1),)), Cell("O(p)", (_t(p=1),))),
    "gbc": ComplexityModel("gbc", Cell("O(n p n_trees)", (_t(n=1, p=1, n_trees=1),)),
                           Cell("O(p n_trees)", (_t(p=1, n_trees=1),))),
    "knn": ComplexityModel("knn", Cell("(blank)", (), claimed=False), Cell("O(n p)", (_t(n=1, p=1),))),
    "rf": ComplexityModel("rf", Cell("O(n^2 p n_trees)", (_t(n=2, p=1, n_trees=1),)),
                          Cell("O(p n_trees)", (_t(p=1, n_trees=1),))),
}

# Iteration counts are pinned so the iteration symbol stays constant.
PINNED = {
    "sgd": {"epochs": 5},
    "mlp": {"max_iter": 15, "tol": 0.0, "hidden_units": (32,)},
    "gbc": {"n_stages": 10},
    "rf": {"n_trees": 10},
    "svm": {"cache_mb": 512.0},
}
TREE_PARAM = {"rf": "n_trees", "gbc": "n_stages"}
DEFAULT_FIXED = {"n": 1000, "p": 2000, "n_trees": 10}


def make_sparse_classification(n: int, p: int, n_classes: int = 6, density: float = 0.02, noise: float = 0.1,
                               seed: int = 0) -> Dataset:
    """Seeded sparse rows with class structure, L2-normalized like TF-IDF rows.

    Each row has ``round(density * p)`` nonzeros (at least one).  Half of
    them come from the features owned by the row's class (``f % n_classes``),
    the rest uniformly.  A ``noise`` fraction of labels is redrawn at random.
    """
    if n < 1 or p < 1:
        raise BenchmarkError("n and p must be >= 1")
    rng = np.random.default_rng(seed)
    nnz = max(1, int(round(density * p)))
    labels = rng.permutation(np.arange(n) % n_classes)
    own = nnz // 2
    rows = np.empty((n, nnz), dtype=np.int64)
    for i, c in enumerate(labels):
        block = np.arange(c, p, n_classes)
        k = min(own, block.size)
        a = rng.choice(block, size=k, replace=False) if k else np.empty(0, np.int64)
        b = rng.integers(0, p, size=nnz - k)
        rows[i] = np.concatenate([a, b])
    data = rng.uniform(0.5, 1.5, size=(n, nnz))
    X = sp.csr_matrix((data.ravel(), rows.ravel(), np.arange(0, n * nnz + 1, nnz)), shape=(n, p))
    X.sum_duplicates()
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    X = sp.csr_matrix(sp.diags(1.0 / norms) @ X)
    flip = rng.random(n) < noise
    labels = labels.copy()
    labels[flip] = rng.integers(0, n_classes, size=int(flip.sum()))
    return Dataset(X, labels, n_classes)


def fit_slope(sizes, times) -> tuple[float, float]:
    """Least-squares slope of log(time) on log(size) and its r^2."""
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.asarray(times, dtype=np.float64))
    if x.size < 2:
        raise BenchmarkError("need at least two sizes to fit a slope")
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return float(slope), r2


def is_monotone(times, allowed_inversions_at_start: int = 1) -> bool:
    """Non-decreasing, except possibly between the two smallest sizes."""
    t = np.asarray(times)
    bad = np.flatnonzero(np.diff(t) < 0)
    return bool(np.all(bad < allowed_inversions_at_start))


@dataclass
class ScalingResult:
    classifier: str
    phase: str
    axis: str
    sizes: tuple
    median_times: tuple
    slope: float
    r_squared: float
    raw_times: tuple = ()  # per size, the per-call times of every repeat
    inner_loops: tuple = ()
    dropped: tuple = ()
    fixed: dict = field(default_factory=dict)
    hyperparameters: dict = field(default_factory=dict)
    dataset_seeds: tuple = ()
    repeats: int = 0
    query_size: int = 0
    density: float = 0.0

    @property
    def monotone(self) -> bool:
        return is_monotone(self.median_times)

    def to_dict(self, verdict: "AsymptoticVerdict | None" = None) -> dict:
        out = {
            "classifier": self.classifier, "phase": self.phase, "axis": self.axis,
            "sizes": list(self.sizes), "times_s": list(self.median_times),
            "slope": self.slope, "r2": self.r_squared,
            "expected": None, "verdict": None,
            "raw_times_s": [list(r) for r in self.raw_times], "inner_loops": list(self.inner_loops),
            "dropped_sizes": list(self.dropped), "monotone": self.monotone,
            "fixed": dict(self.fixed), "repeats": self.repeats, "query_size": self.query_size,
            "density": self.density, "dataset_seeds": list(self.dataset_seeds),
            "hyperparameters": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.hyperparameters.items()},
        }
        if verdict is not None:
            out["expected"] = verdict.expected_dict()
            out["verdict"] = "pass" if verdict.passed else "fail"
            out["claimed_by_paper"] = verdict.claimed
        return out


def _dataset_seed(seed: int, axis: str, size: int) -> int:
    return int(np.random.SeedSequence([int(seed) % 2**63, AXES.index(axis), int(size)]).generate_state(1)[0])


def _time_call(fn, inner: int) -> float:
    t0 = time.perf_counter()
    for _ in range(inner):
        fn()
    return (time.perf_counter() - t0) / inner


def run_scaling(kind: str, phase: str, axis: str, sizes: Sequence[int], repeats: int = 3, seed: int = 0,
                fixed: dict | None = None, hyperparameters: dict | None = None, query_size: int = 200,
                density: float = 0.05, min_measure_s: float = 0.02,
                fit_fn: Callable | None = None) -> ScalingResult:
    """Median time of ``phase`` at each size of ``axis``.

    Each size gets its own seeded dataset and one untimed warm-up call.
    Calls shorter than ``min_measure_s`` are repeated in an inner loop (the
    same count for every repeat of that size) and the per-call mean is kept.
    ``fit_fn(dataset, hyperparameters, seed)`` replaces ``model_api.fit``,
    which lets a test plug in a fixture classifier.
    """
    if phase not in PHASES:
        raise BenchmarkError(f"phase must be one of {PHASES}")
    if axis not in AXES:
        raise BenchmarkError(f"axis must be one of {AXES}")
    sizes = [int(s) for s in sizes]
    if len(sizes) < 3:
        raise BenchmarkError("need at least 3 sizes")
    if any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] < 1:
        raise BenchmarkError("sizes must be positive and strictly increasing")
    if repeats < 1:
        raise BenchmarkError("repeats must be >= 1")
    if axis == "n_trees" and fit_fn is None and kind not in TREE_PARAM:
        raise BenchmarkError(f"axis n_trees applies only to {', '.join(TREE_PARAM)}")
    user_fixed = dict(fixed or {})
    fixed = {**DEFAULT_FIXED, **user_fixed}
    if fit_fn is None:
        hp = model_api.resolve_hyperparameters(kind, {**PINNED.get(kind, {}), **(hyperparameters or {})})
        def fit_fn(ds, params, s):
            return model_api.fit(kind, ds, params, s)
    else:
        hp = dict(hyperparameters or {})
    cell_batch = kind in COMPLEXITY and COMPLEXITY[kind].cell(phase).batch_n and axis == "n"
    resolution = time.get_clock_info("perf_counter").resolution

    kept, medians, raws, loops, dropped, seeds = [], [], [], [], [], []
    for size in sizes:
        n = fixed["n"]
        p = fixed["p"]
        params = dict(hp)
        q = query_size
        if axis == "n":
            if cell_batch:
                q = size
            else:
                n = size
        elif axis == "p":
            p = size
        else:
            params[TREE_PARAM.get(kind, "n_trees")] = size
        if kind == "knn" and params.get("k", 1) > n:
            raise BenchmarkError(f"k={params['k']} exceeds n={n}")
        if kind in TREE_PARAM and axis != "n_trees" and "n_trees" in user_fixed:
            params[TREE_PARAM[kind]] = int(user_fixed["n_trees"])
        ds_seed = _dataset_seed(seed, axis, size)
        data = make_sparse_classification(n + q, p, density=density, seed=ds_seed)
        train = data.subset(np.arange(n))
        queries = data.subset(np.arange(n, n + q)).X
        if phase == "train":
            call = (lambda: fit_fn(train, params, seed))
        else:
            model = fit_fn(train, params, seed)
            call = (lambda: model.predict_matrix(queries))
        t_warm = _time_call(call, 1)
        inner = 1 if t_warm >= min_measure_s else int(math.ceil(min_measure_s / max(t_warm, resolution)))
        times = [_time_call(call, inner) for _ in range(repeats)]
        if min(times) * inner <= 10 * resolution:
            dropped.append(size)
            continue
        kept.append(size)
        medians.append(float(np.median(times)))
        raws.append(tuple(times))
        loops.append(inner)
        seeds.append(ds_seed)
    if len(kept) < 2:
        raise BenchmarkError(f"only {len(kept)} sizes were measurable; dropped {dropped}")
    slope, r2 = fit_slope(kept, medians)
    fixed_used = {a: v for a, v in fixed.items() if a != axis}
    return ScalingResult(kind, phase, axis, tuple(kept), tuple(medians), slope, r2, tuple(raws), tuple(loops),
                         tuple(dropped), fixed_used, params if axis != "n_trees" else hp, tuple(seeds), repeats,
                         query_size, density)


@dataclass(frozen=True)
class AsymptoticVerdict:
    passed: bool
    slope: float
    r_squared: float
    interval: tuple
    exponent_range: tuple
    formula: str
    claimed: bool
    min_r2: float
    r2_applies: bool

    def expected_dict(self) -> dict:
        return {"formula": self.formula, "exponent_range": list(self.exponent_range),
                "interval": list(self.interval), "min_r2": self.min_r2 if self.r2_applies else None,
                "claimed_by_paper": self.claimed}


def check_asymptotics(result: ScalingResult, model: ComplexityModel | None = None, tolerance: float = 0.35,
                      min_r2: float = 0.9) -> AsymptoticVerdict:
    """Pass iff the slope lies in the expected interval and the fit is good.

    The interval is the exponent range widened by ``tolerance`` unless the
    cell carries an explicit interval for the axis.  A flat expectation
    (exponent 0) has no trend for r^2 to measure, so r^2 is not required there.
    """
    model = model if model is not None else COMPLEXITY.get(result.classifier)
    if model is None:
        raise BenchmarkError(f"no complexity model for {result.classifier!r}")
    if model.classifier != result.classifier:
        raise BenchmarkError(f"result is for {result.classifier!r} but the model is for {model.classifier!r}")
    if result.axis not in AXES:
        raise BenchmarkError(f"unknown axis {result.axis!r}")
    cell = model.cell(result.phase)
    lo, hi = cell.exponent_range(result.axis)
    interval = cell.intervals.get(result.axis, (lo - tolerance, hi + tolerance))
    r2_applies = not (lo == 0.0 and hi == 0.0)
    ok = interval[0] <= result.slope <= interval[1] and (not r2_applies or result.r_squared >= min_r2)
    return AsymptoticVerdict(bool(ok), result.slope, result.r_squared, tuple(interval), (lo, hi), cell.formula,
                             cell.claimed, min_r2, r2_applies)


def bench_report(result: ScalingResult, tolerance: float = 0.35, min_r2: float = 0.9) -> dict:
    verdict = check_asymptotics(result, tolerance=tolerance, min_r2=min_r2) if result.classifier in COMPLEXITY else None
    return result.to_dict(verdict)


def render_bench_markdown(docs: Sequence[dict]) -> str:
    lines = ["| classifier | phase | axis | sizes | slope | r² | expected | interval | verdict |",
             "|---|---|---|---|---|---|---|---|---|"]
    for d in docs:
        exp = d.get("expected") or {}
        interval = exp.get("interval")
        ivl = f"[{interval[0]:.2f}, {interval[1]:.2f}]" if interval else "-"
        note = "" if exp.get("claimed_by_paper", True) else " (not claimed in the published table)"
        lines.append(f"| {d['classifier']} | {d['phase']} | {d['axis']} | {','.join(map(str, d['sizes']))} "
                     f"| {d['slope']:.3f} | {d['r2']:.3f} | {exp.get('formula', '-')}{note} | {ivl} "
                     f"| {d.get('verdict') or '-'} |")
    return "\n".join(lines) + "\n"
