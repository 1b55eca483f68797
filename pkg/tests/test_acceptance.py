"""Acceptance gate.

Every criterion prints exactly one ``CRITERION <n> PASS|FAIL: ...`` line and
the lines are repeated in the pytest terminal summary. Tolerances and run
sizes are fixed here; a failing criterion is a real finding, not a flaky test.
"""

import itertools
import math
import os
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from strengthcurve._random import derive_seed
from strengthcurve.cli import RunConfig, build_estimator, main
from strengthcurve.curves import LearningCurve, LearningCurvePoint, learning_curve, min_data_to_plateau
from strengthcurve.dataset import kfold, split_train_test
from strengthcurve.forest import best_split
from strengthcurve.metrics import confidence_interval, error_distribution, fit_gaussian, mse, r_squared, rmse
from strengthcurve.polynomial import PolynomialRegression
from strengthcurve.synth import SynthConfig, generate

from test_forest import brute_force_split
from test_neural import finite_difference_gradient, random_model, relative_error

RESULTS = {}
SEEDS = range(5)


def record(n, ok, detail):
    line = f"CRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def _close(got, want, rtol):
    if want == 0:
        return abs(got) <= rtol
    return abs(got - want) <= rtol * abs(want)


# 1. metric oracles


def test_criterion_1_metric_oracles():
    t0 = time.perf_counter()
    checks = [
        ("mse identity", mse([1, 2], [1, 2]), 0.0),
        ("mse single", mse([3], [1]), 4.0),
        ("mse 14/3", mse([1, 2, 3], [2, 4, 6]), 14 / 3),
        ("rmse 0", rmse(0.0), 0.0),
        ("rmse 4", rmse(4.0), 2.0),
        ("rmse 14/3", rmse(14 / 3), math.sqrt(14 / 3)),
        ("r2 perfect", r_squared([1.0, 2.0, 5.0], [1.0, 2.0, 5.0]), 1.0),
        ("r2 mean", r_squared([7 / 3] * 3, [1.0, 2.0, 4.0]), 0.0),
        ("r2 11/14", r_squared([1, 2, 3], [1, 2, 4]), 11 / 14),
        ("error sign", float(error_distribution([5], [3])[0]), 2.0),
    ]
    checks += [(f"error zero {i}", float(v), 0.0) for i, v in enumerate(error_distribution([1, 2], [1, 2]))]
    for name, errors, (mu, sigma) in (
        ("gauss zeros", [0.0, 0.0, 0.0], (0.0, 0.0)),
        ("gauss [-1,1]", [-1.0, 1.0], (0.0, 1.0)),
        ("gauss [2,2,2,6]", [2.0, 2.0, 2.0, 6.0], (3.0, math.sqrt(3))),
    ):
        g = fit_gaussian(errors)
        checks += [(f"{name} mu", g.mu, mu), (f"{name} sigma", g.sigma, sigma)]
    zero = fit_gaussian([1.0, 1.0])
    checks += [("ci sigma0 90", confidence_interval(zero, 0.90), 0.0), ("ci sigma0 95", confidence_interval(zero, 0.95), 0.0)]
    bad = [name for name, got, want in checks if not _close(got, want, 1e-9)]

    unit = fit_gaussian([-1.0, 1.0])
    q95, q90 = confidence_interval(unit, 0.95), confidence_interval(unit, 0.90)
    quant_ok = abs(q95 - 1.9600) <= 1e-4 and abs(q90 - 1.6449) <= 1e-4
    elapsed = time.perf_counter() - t0
    record(
        1,
        not bad and quant_ok and elapsed < 1.0,
        f"{len(checks) - len(bad)}/{len(checks)} examples within 1e-9 rel; "
        f"z90={q90:.6f} z95={q95:.6f} (tol 1e-4); {elapsed:.3f}s (<1s)" + (f"; mismatched: {bad}" if bad else ""),
    )


# 2. gradient check


def test_criterion_2_gradient_check():
    worst = 0.0
    for config in range(100):
        rng = np.random.default_rng(10_000 + config)
        n_hidden = int(rng.integers(1, 10))
        model = random_model(rng, n_inputs=6, n_hidden=n_hidden)
        x, y = rng.normal(size=6) * rng.uniform(0.5, 3.0), rng.normal(30, 10)
        analytic = model.gradient(x, y).flat()
        worst = max(worst, float(relative_error(analytic, finite_difference_gradient(model, x, y, step=1e-5)).max()))
    record(2, worst < 1e-5, f"100 configurations, worst per-entry relative error {worst:.3e} (<1e-5)")


# 3. polynomial exact recovery


def _monomial_value(z, exps):
    return np.prod([z[:, i] ** e for i, e in enumerate(exps)], axis=0)


def test_criterion_3_polynomial_recovery():
    rng = np.random.default_rng(2024)
    n_train, n_val, d = 200, 100, 6
    raw = rng.uniform(0, 10, size=(n_train + n_val, d)) * rng.uniform(0.1, 5, size=d)
    mean, std = raw[:n_train].mean(axis=0), raw[:n_train].std(axis=0)
    z = (raw - mean) / std
    exps = [e for e in itertools.product(range(4), repeat=d) if sum(e) <= 3]
    coef = rng.normal(size=len(exps))
    y = sum(c * _monomial_value(z, e) for c, e in zip(coef, exps))
    model = PolynomialRegression(degree=3).fit(raw[:n_train], y[:n_train])
    train = mse(model.predict(raw[:n_train]), y[:n_train])
    val = mse(model.predict(raw[n_train:]), y[n_train:])
    record(3, train < 1e-8 and val < 1e-8, f"{len(exps)} terms, 200 rows: train MSE {train:.3e}, validation MSE {val:.3e} (<1e-8)")


# 4. split brute force


def test_criterion_4_split_brute_force():
    rng = np.random.default_rng(4)
    agree = 0
    for trial in range(200):
        n = int(rng.integers(2, 9))
        if trial % 2:
            X = rng.integers(0, 4, size=(n, 2)).astype(float)
            y = rng.integers(0, 3, size=n).astype(float)
        else:
            X, y = rng.normal(size=(n, 2)), rng.normal(size=n)
        got, want = best_split(X, y), brute_force_split(X, y)
        if got is None or want is None:
            agree += got is None and want is None
        else:
            agree += got[0] == want[0] and got[1] == want[1] and math.isclose(got[2], want[2], rel_tol=1e-9, abs_tol=1e-12)
    record(4, agree == 200, f"{agree}/200 random datasets (<=8 rows, 2 features) match exhaustive enumeration")


# shared synthetic pipeline for 5-7


def _pipeline(n, noise, seed, models, curves_for):
    ds = generate(SynthConfig(n=n, seed=seed, noise_std=noise))
    plan = split_train_test(ds, 0.7, derive_seed(seed, 0))
    folds = kfold(plan, 5, derive_seed(seed, 1))
    cfg = RunConfig()
    X, y = ds.X, ds.y
    tr, te = np.array(plan.train_indices), np.array(plan.test_indices)
    test_mse, curves = {}, {}
    for name in models:
        est = build_estimator(name, cfg, derive_seed(seed, 2)).fit(X[tr], y[tr])
        test_mse[name] = mse(est.predict(X[te]), y[te])
    for name in curves_for:
        est = build_estimator(name, cfg, 0)
        curves[name] = learning_curve(est, X, y, folds, 0.10, derive_seed(seed, 3), label=name)
    return test_mse, curves


def _spearman(a, b):
    return float(spearmanr(a, b)[0])


# 5. learning-curve shape


def test_criterion_5_learning_curve_shape():
    t0 = time.perf_counter()
    rows, failures = [], []
    for seed in SEEDS:
        _, curves = _pipeline(1000, 3.0, seed, (), ("pr", "ann", "rf"))
        for name, c in curves.items():
            rv = _spearman(c.sizes, c.column("val_mse_mean"))
            rt = _spearman(c.sizes, c.column("train_mse_mean"))
            rows.append((name, seed, rv, rt))
            if not (rv <= -0.6 and rt >= 0.3):
                failures.append(f"{name}/seed{seed}(val {rv:+.2f}, train {rt:+.2f})")
    elapsed = time.perf_counter() - t0
    summary = "; ".join(
        f"{m}: val {min(r[2] for r in rows if r[0] == m):+.2f}..{max(r[2] for r in rows if r[0] == m):+.2f}, "
        f"train {min(r[3] for r in rows if r[0] == m):+.2f}..{max(r[3] for r in rows if r[0] == m):+.2f}"
        for m in ("pr", "ann", "rf")
    )
    record(
        5,
        not failures and elapsed < 120,
        f"need val rho<=-0.6 and train rho>=+0.3 per model and seed; {summary}; {elapsed:.0f}s (<120s)"
        + (f"; failing: {', '.join(failures)}" if failures else ""),
    )


# 6 and 7 share the n=2000 runs


@pytest.fixture(scope="module")
def flexibility_runs():
    t0 = time.perf_counter()
    runs = {seed: _pipeline(2000, 2.0, seed, ("pr", "ann", "rf"), ("pr", "rf")) for seed in SEEDS}
    return runs, time.perf_counter() - t0


def test_criterion_6_flexibility_ordering(flexibility_runs):
    runs, elapsed = flexibility_runs
    wins = sum(r["rf"] < r["pr"] and r["rf"] < r["ann"] for r, _ in runs.values())
    med = {m: float(np.median([r[m] for r, _ in runs.values()])) for m in ("pr", "ann", "rf")}
    per_seed = ", ".join(f"s{s}:pr={r['pr']:.2f}/ann={r['ann']:.2f}/rf={r['rf']:.2f}" for s, (r, _) in runs.items())
    ok = wins >= 4 and med["rf"] < med["pr"] and med["rf"] < med["ann"] and elapsed < 300
    record(
        6,
        ok,
        f"RF best on {wins}/5 seeds (need >=4); median test MSE pr={med['pr']:.3f} ann={med['ann']:.3f} "
        f"rf={med['rf']:.3f}; {per_seed}; {elapsed:.0f}s (<300s)",
    )


def _curve(sizes, means, final_std):
    pts = tuple(
        LearningCurvePoint(s, 0.0, m, final_std if i == len(sizes) - 1 else 0.0, (0.0,), (m,))
        for i, (s, m) in enumerate(zip(sizes, means))
    )
    return LearningCurve("constructed", pts, 0.1, 0)


def test_criterion_7_plateau_metric(flexibility_runs):
    runs, _ = flexibility_runs
    constructed = [
        ("flat", min_data_to_plateau(_curve([100, 200, 300], [4.0, 4.0, 4.0], 0.5)), 100),
        # bound 2.85 + 0.1 = 2.95; 3.0 is not below it, so the first qualifying size is 400
        ("decaying", min_data_to_plateau(_curve([100, 200, 300, 400, 500], [10, 5, 3.0, 2.9, 2.85], 0.1)), 400),
        ("only final", min_data_to_plateau(_curve([10, 20, 30], [9.0, 8.0, 7.0], 0.0)), 30),
    ]
    hand_ok = all(got == want for _, got, want in constructed)
    plateaus = {s: (min_data_to_plateau(c["pr"]), min_data_to_plateau(c["rf"])) for s, (_, c) in runs.items()}
    smaller = sum(pr < rf for pr, rf in plateaus.values())
    record(
        7,
        hand_ok and smaller >= 4,
        "constructed curves " + ", ".join(f"{n}={g} (want {w})" for n, g, w in constructed)
        + f"; PR plateau < RF on {smaller}/5 seeds (need >=4): "
        + ", ".join(f"s{s}:{pr}/{rf}" for s, (pr, rf) in plateaus.items()),
    )


# 8. CLI determinism


def _snapshot(d):
    return {name: open(os.path.join(d, name), "rb").read() for name in sorted(os.listdir(d))}


def test_criterion_8_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "run"
    argv = ["learning-curve", "--model", "all", "--synth", "n=300", "seed=21", "--seed", "5", "--out", str(out)]
    snaps = {}
    for workers in (1, 1, 8, 8):
        assert main(argv + ["--workers", str(workers)]) == 0
        snaps.setdefault(workers, []).append(_snapshot(out))
    repeat_ok = all(a == b for a, b in snaps.values())
    cross_ok = snaps[1][0] == snaps[8][0]
    elapsed = time.perf_counter() - t0
    record(
        8,
        repeat_ok and cross_ok and elapsed < 120,
        f"{len(snaps[1][0])} output files; repeat identical at 1 and 8 workers: {repeat_ok}; "
        f"1 vs 8 workers identical: {cross_ok}; {elapsed:.0f}s (<120s)",
    )


# 9. CI coverage


def test_criterion_9_ci_coverage():
    rng = np.random.default_rng(9)
    sample = rng.normal(12.0, 3.5, size=10_000)
    fresh = rng.normal(12.0, 3.5, size=10_000)
    g = fit_gaussian(sample)
    parts, ok = [], True
    for level in (0.90, 0.95):
        half = confidence_interval(g, level)
        for name, data in (("fit", sample), ("fresh", fresh)):
            cov = float(np.mean(np.abs(data - g.mu) <= half))
            ok &= abs(cov - level) <= 0.02
            parts.append(f"{int(level * 100)}% {name} {cov * 100:.2f}%")
    record(9, ok, "coverage on 10,000 normal samples (tol +/-2pp): " + ", ".join(parts))
