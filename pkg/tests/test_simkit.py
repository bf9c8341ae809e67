import csv
import io
import json
import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal, norm

from robust_slp.errors import ConfigError
from robust_slp.geometry import ml_detect, psk_constellation
from robust_slp.precoder import SlpInstance, draw_instance, solve_slp
from robust_slp.robustcons import Method, RobustParams, residual
from robust_slp.simkit import (
    MetricsReport,
    ScenarioConfig,
    angular_infimum,
    benchmark_runtime,
    binomial_std,
    build_grid,
    curve_crossing,
    median_of_means,
    run_feasibility,
    run_power_sweep,
    run_ser,
    run_validation,
    validate_chance,
    validate_worst_case,
    version_string,
)
from robust_slp.uncertainty import q_covariance

from conftest import random_instance


def small(**kw):
    base = dict(N=3, K=2, gamma_db=(5.0, 10.0), methods=("NR", "W"), epsilon=(0.01, 0.05),
                realizations=6, slots=3, workers=1, seed=9)
    base.update(kw)
    return ScenarioConfig(**base)


# -- config ------------------------------------------------------------------

def test_config_defaults():
    cfg = ScenarioConfig(workers=1)
    assert cfg.xi2 == (0.004,)
    assert cfg.slots == 50
    assert cfg.gamma_linear == (10.0,)
    assert cfg.sigma2_per_user() == (1.0,) * 4


@pytest.mark.parametrize("kw,key,text", [
    (dict(K=5, N=4), "K", "K <= N"),
    (dict(upsilon=(0.7,)), "upsilon", "(0, 1/2]"),
    (dict(upsilon=(0.0,)), "upsilon", "(0, 1/2]"),
    (dict(realizations=0), "realizations", ">= 1"),
    (dict(modulation=2), "modulation", ">= 3"),
    (dict(sigma2=(1.0, 2.0, 3.0)), "sigma2", "K=4"),
    (dict(sigma2=(0.0,)), "sigma2", "> 0"),
    (dict(sweep="gamma"), "sweep", "violation_prob"),
    (dict(solves=10), "solves", "30"),
    (dict(methods=("bogus",)), "methods", "unknown method"),
    (dict(robust_method="NR"), "robust_method", "robust"),
    (dict(epsilon=(-1.0,)), "epsilon", ">= 0"),
    (dict(gamma_db=("x",)), "gamma_db", "numbers"),
    (dict(seed=-1), "seed", ">= 0"),
])
def test_config_errors_name_key(kw, key, text):
    with pytest.raises(ConfigError) as info:
        ScenarioConfig(**kw)
    assert info.value.key == key
    assert str(info.value).startswith(f"{key}:")
    assert text in str(info.value)


def test_ini_round_trip():
    cfg = small(methods=("NR", "A2", "B"), xi2=(0.004, 0.05), upsilon=(0.05, 0.1), sigma2=(1.0, 0.5))
    again = ScenarioConfig.from_ini(cfg.to_ini())
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


def test_ini_parsing(tmp_path):
    text = """
[scenario]
N = 6   # antennas
K = 5
[sinr]
gamma_db = 0, 5, 10
[methods]
methods = NonRobust, WorstCase
[uncertainty]
epsilon = 0.01
"""
    path = tmp_path / "c.ini"
    path.write_text(text)
    cfg = ScenarioConfig.load(path)
    assert (cfg.N, cfg.K) == (6, 5)
    assert cfg.gamma_db == (0.0, 5.0, 10.0)
    assert cfg.methods == (Method.NON_ROBUST, Method.WORST_CASE)


@pytest.mark.parametrize("text,key", [
    ("[scenario]\nantennas = 4\n", "antennas"),
    ("[plots]\nx = 1\n", "plots"),
    ("[scenario]\nN = four\n", "N"),
    ("[counts]\nslots = 1.5\n", "slots"),
    ("N = 4\n", "file"),
])
def test_ini_errors(text, key):
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_ini(text)
    assert info.value.key == key


def test_hash_ignores_workers():
    assert small(workers=1).config_hash() == small(workers=3).config_hash()
    assert small(seed=1).config_hash() != small(seed=2).config_hash()


def test_from_dict_unknown_key():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"N": 4, "colour": "red"})


def test_grid_requires_uncertainty():
    with pytest.raises(ConfigError) as info:
        build_grid(small(epsilon=(0.0,)))
    assert info.value.key == "epsilon"
    with pytest.raises(ConfigError):
        build_grid(small(methods=("A2",), xi2=(0.0,)))


def test_grid_order():
    cfg = small(methods=("NR", "W", "A1"), epsilon=(0.01, 0.02), xi2=(0.01,), upsilon=(0.05, 0.1))
    g = build_grid(cfg)
    assert len(g) == 2 * (1 + 2 + 2)
    assert [p.method for p in g[:5]] == [Method.NON_ROBUST] + [Method.WORST_CASE] * 2 + [Method.SAFE_APPROX_1] * 2


# -- reports -----------------------------------------------------------------

def test_report_csv_and_json():
    rep = MetricsReport("demo", ("a", "b", "mean_wall_time"), metadata={"seed": 1})
    rep.add(a=1, b=math.nan, mean_wall_time=0.5)
    rep.add(a='x,"y"', b=0.1, mean_wall_time=0.25)
    text = rep.to_csv()
    assert text.splitlines()[0] == "a,b"
    assert "\r\n" in text
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[2] == ['x,"y"', "0.1"]
    doc = json.loads(rep.to_json())
    assert doc["records"][0]["b"] is None
    back = MetricsReport.from_json(rep.to_json())
    assert math.isnan(back.records[0]["b"])
    with pytest.raises(KeyError):
        rep.add(a=1)


def test_version_string():
    assert version_string().startswith("robust-slp v")


# -- engines -----------------------------------------------------------------

def test_power_sweep_reproducible_and_consistent():
    cfg = small()
    a, b = run_power_sweep(cfg), run_power_sweep(cfg)
    assert a.numeric_fields() == b.numeric_fields()
    assert a.to_csv() == b.to_csv()
    assert a.metadata["config_hash"] == cfg.config_hash()
    assert len(a.records) == 2 * 3
    for r in a.records:
        assert r["trials"] == 18
        assert r["optimal_count"] + r["infeasible_count"] + r["failed_count"] == r["trials"]
        assert 0 <= r["feasibility_rate"] <= 1
        assert round(r["feasibility_rate"] * r["trials"]) == r["optimal_count"]


def test_power_sweep_workers_do_not_change_results():
    cfg = small(realizations=4, slots=2)
    assert run_power_sweep(cfg).to_csv() == run_power_sweep(cfg.replace(workers=2)).to_csv()


def test_power_averaging_in_watts():
    cfg = small(gamma_db=(10.0,), methods=("NR",), realizations=3, slots=2)
    rep = run_power_sweep(cfg)
    from robust_slp.simkit.engines import realization_channel, slot_symbols

    powers = []
    for r in range(3):
        for j in range(2):
            inst = SlpInstance.from_complex(realization_channel(cfg, r), slot_symbols(cfg, r, j),
                                            psk_constellation(8), 1.0, 10.0)
            powers.append(solve_slp(inst, "NR").power)
    assert rep.records[0]["avg_power_dbw"] == pytest.approx(10 * math.log10(np.mean(powers)), abs=1e-9)


def test_larger_radius_costs_power():
    rep = run_power_sweep(small(gamma_db=(0.0, 10.0, 20.0), epsilon=(0.01, 0.05, 0.1), realizations=10))
    for g in (0.0, 10.0, 20.0):
        wc = [r["avg_power_dbw"] for r in rep.select(gamma_db=g, method="WorstCase")]
        assert np.all(np.diff(wc) > 0)
        nr = rep.select(gamma_db=g, method="NonRobust")[0]["avg_power_dbw"]
        assert wc[0] > nr


def test_tiny_radius_matches_nonrobust():
    rep = run_power_sweep(small(epsilon=(1e-8,)))
    for g in (5.0, 10.0):
        nr = rep.select(gamma_db=g, method="NonRobust")[0]["avg_power_dbw"]
        wc = rep.select(gamma_db=g, method="WorstCase")[0]["avg_power_dbw"]
        assert wc == pytest.approx(nr, abs=1e-6)


def test_ser_nonrobust_high_sinr_perfect_csi():
    cfg = ScenarioConfig(N=4, K=4, gamma_db=(20.0,), methods=("NR",), xi2=(0.0,),
                         realizations=25, slots=10, noise_draws=100, workers=1, seed=3)
    rep = run_ser(cfg)
    r = rep.records[0]
    assert r["detections"] >= 100_000
    assert r["ser"] < 1e-3


@pytest.mark.parametrize("method", ["NR", "W"])
def test_noiseless_reception_is_correct(method):
    # the design power scales with sigma, so SER does not shrink as sigma -> 0;
    # the noise-free received point itself must sit in the right CI region
    const = psk_constellation(8)
    r = np.random.default_rng(8)
    for _ in range(20):
        inst = draw_instance(r, 4, 3, const, 1.0, 10.0)
        params = RobustParams(epsilon=0.05) if method == "W" else None
        out = solve_slp(inst, method, params)
        y = np.einsum("kij,j->ki", inst.H_hat, out.u_tilde)
        assert list(ml_detect(const, y)) == list(inst.symbols)


def test_ser_conservative_method_is_lower():
    cfg = ScenarioConfig(N=4, K=4, gamma_db=(10.0,), methods=("A2", "B"), xi2=(0.004,),
                         realizations=20, slots=10, noise_draws=20, workers=1, seed=5)
    rep = run_ser(cfg)
    a2 = rep.select(method="SafeApprox2")[0]
    b = rep.select(method="SphereBounding")[0]
    se = math.sqrt(a2["ser"] * (1 - a2["ser"]) / a2["detections"] + b["ser"] * (1 - b["ser"]) / b["detections"])
    assert b["ser"] <= a2["ser"] + 3 * se
    assert a2["infeasible_count"] + a2["optimal_count"] == a2["trials"]


def test_feasibility_rows_and_limits():
    cfg = ScenarioConfig(N=4, K=4, gamma_db=(5.0,), methods=("A1", "A2"), xi2=(1e-6,),
                         upsilon=(0.05, 0.1, 0.2), realizations=15, workers=1)
    rep = run_feasibility(cfg)
    assert len(rep.records) == 2 * 3
    assert {(r["method"], r["upsilon"]) for r in rep.records} == {
        (m, u) for m in ("SafeApprox1", "SafeApprox2") for u in (0.05, 0.1, 0.2)}
    assert all(r["trials"] == 15 for r in rep.records)
    assert all(r["feasibility_rate"] == 1.0 for r in rep.records)
    assert run_feasibility(cfg).to_csv() == rep.to_csv()


def test_feasibility_variance_sweep_order():
    cfg = ScenarioConfig(N=3, K=3, methods=("A2",), xi2=(0.001, 0.01, 0.1), realizations=4,
                         workers=1, sweep="variance")
    rep = run_feasibility(cfg)
    assert rep.column("xi2") == [0.001, 0.01, 0.1]
    rates = rep.column("feasibility_rate")
    assert rates[0] >= rates[-1]
    assert rep.records[0]["sweep"] == "variance"


def test_curve_crossing():
    x = [0.0, 1.0, 2.0, 3.0]
    assert curve_crossing(x, [0, 1, 3, 5], [1, 2, 2, 2]) == pytest.approx(1.5)
    assert math.isnan(curve_crossing(x, [0, 0, 0, 0], [1, 1, 1, 1]))
    # a single tie is where the difference vanishes
    assert curve_crossing(x, [0, 2, 3, 5], [1, 2, 2, 2]) == pytest.approx(1.0)
    # a tie run: the interpolated difference is zero on [1, 2]
    assert curve_crossing(x, [0, 2, 2, 5], [1, 2, 2, 2]) == pytest.approx(1.5)
    # the last sign change counts
    x5 = [0.0, 1.0, 2.0, 3.0, 4.0]
    assert curve_crossing(x5, [0, 2, 0, 1, 1], [1, 1, 1, 0, 0]) == pytest.approx(2.5)


def test_median_of_means():
    assert median_of_means([1, 1, 1, 1, 100, 1, 1, 1, 1, 1]) == 1.0


def test_benchmark_shape_and_determinism():
    cfg = ScenarioConfig(k_grid=(2, 3), solves=30, workers=1, xi2=(0.001,))
    rep = benchmark_runtime(cfg)
    assert [(r["K"], r["method"]) for r in rep.records] == [
        (2, "NonRobust"), (2, "SafeApprox2"), (3, "NonRobust"), (3, "SafeApprox2")]
    assert "mean_wall_time" in rep.to_csv().splitlines()[0]
    again = benchmark_runtime(cfg)
    assert rep.column("mean_solver_iterations") == again.column("mean_solver_iterations")
    assert all(r["runtime_ratio"] == 1.0 for r in rep.select(method="NonRobust"))


def test_single_solve_is_deterministic(rng):
    inst = random_instance(rng, N=6, K=6)
    a = solve_slp(inst, "A2", RobustParams.gaussian(1e-3, 0.05))
    b = solve_slp(inst, "A2", RobustParams.gaussian(1e-3, 0.05))
    assert a.iterations == b.iterations


# -- validation oracles ------------------------------------------------------

def exact_violation(u, inst, k, xi2):
    """1 - P{q >= w} for q ~ N(0, C) via the bivariate normal CDF."""
    a = inst.A[k]
    w = residual(a, inst.H_hat[k], inst.s[k], inst.sigma[k], inst.gamma[k])(u)
    C = q_covariance(a, u, xi2)
    return 1.0 - multivariate_normal(mean=np.zeros(2), cov=C).cdf(-w)


def test_validate_chance_matches_bivariate_normal(rng):
    inst = random_instance(rng, N=4, K=2, gamma_db=5)
    xi2 = 0.05
    u = solve_slp(inst, "NR").u_tilde * 1.3
    rep = validate_chance(u, inst, RobustParams.gaussian(xi2, 0.05), 100_000, np.random.default_rng(1))
    for k in range(2):
        p = exact_violation(u, inst, k, xi2)
        assert abs(rep.per_user[k] - p) <= 4 * binomial_std(p, 100_000) + 1e-4
    assert rep.worst == rep.per_user.max()
    assert rep.half_width == pytest.approx(1.96 * binomial_std(rep.worst, 100_000))


def test_validate_chance_rises_when_shrunk(rng):
    inst = random_instance(rng, N=4, K=4)
    p = RobustParams.gaussian(0.004, 0.05)
    u = solve_slp(inst, "NR").u_tilde * 1.2
    full = validate_chance(u, inst, p, 20_000, np.random.default_rng(2)).worst
    half = validate_chance(0.5 * u, inst, p, 20_000, np.random.default_rng(2)).worst
    assert half > full


def _qpsk_designs(method, ups, count):
    const = psk_constellation(4)
    r = np.random.default_rng(21)
    p = RobustParams.gaussian(0.004, ups)
    while count:
        inst = draw_instance(r, 4, 4, const, 1.0, 10.0)
        out = solve_slp(inst, method, p)
        if out.optimal:
            yield validate_chance(out.u_tilde, inst, p, 50_000, r)
            count -= 1


@pytest.mark.parametrize("method", [Method.SAFE_APPROX_1, Method.SPHERE_BOUNDING])
def test_chance_guarantee_for_qpsk(method):
    # with orthogonal CI rows (QPSK) whitening keeps the componentwise order,
    # so these approximations must hold
    ups = 0.05
    for rep in _qpsk_designs(method, ups, 5):
        assert rep.worst <= ups + 3 * binomial_std(ups, 50_000)


def test_safe_approx_2_qpsk_union_bound():
    # each A2 row alone fails with probability Phi(-psi); the two QPSK rows
    # are independent, so a user fails with at most 1 - (1 - Phi(-psi))^2,
    # which exceeds upsilon for small upsilon
    ups = 0.05
    row = norm.sf(Method.SAFE_APPROX_2.coefficient(ups))
    bound = 1.0 - (1.0 - row) ** 2
    assert bound > ups
    for rep in _qpsk_designs(Method.SAFE_APPROX_2, ups, 5):
        assert rep.worst <= bound + 3 * binomial_std(bound, 50_000)


def test_validate_worst_case(rng):
    inst = random_instance(rng)
    out = solve_slp(inst, "W", RobustParams(epsilon=0.05))
    rep = validate_worst_case(out.u_tilde, inst, 0.05, 10_000, np.random.default_rng(3))
    assert rep.min_margin >= -1e-6
    assert np.all(rep.sampled_inf >= rep.analytic_inf - 1e-12)
    assert np.all(rep.approach > 0.5)


def test_validate_worst_case_zero_radius(rng):
    inst = random_instance(rng)
    u = solve_slp(inst, "NR").u_tilde
    rep = validate_worst_case(u, inst, 0.0, 100, np.random.default_rng(0))
    C = np.vstack([inst.A[k] @ inst.H_hat[k] for k in range(inst.K)])
    d = np.concatenate([inst.sigma[k] * math.sqrt(inst.gamma[k]) * inst.A[k] @ inst.s[k] for k in range(inst.K)])
    assert rep.min_margin == pytest.approx(np.min(C @ u - d), abs=1e-14)


def test_angular_infimum_single_antenna():
    const = psk_constellation(8)
    r = np.random.default_rng(4)
    for _ in range(20):
        inst = draw_instance(r, 1, 1, const, 1.0, 10.0)
        eps = 0.05
        out = solve_slp(inst, "W", RobustParams(epsilon=eps))
        rep = validate_worst_case(out.u_tilde, inst, eps, 2000, r)
        np.testing.assert_allclose(rep.grid_inf, rep.analytic_inf, atol=1e-8)
        a = inst.A[0]
        inf = angular_infimum(out.u_tilde, a[0], eps)
        assert inf == pytest.approx(-eps * np.linalg.norm(out.u_tilde), abs=1e-8)
    with pytest.raises(ValueError):
        angular_infimum(np.ones(4), a[0], eps)


def test_run_validation_rows():
    cfg = ScenarioConfig(N=3, K=2, methods=("NR", "W", "A2"), realizations=2, validation_samples=500,
                         workers=1)
    rep = run_validation(cfg)
    assert len(rep.records) == 4
    wc = rep.select(method="WorstCase")
    assert all(r["metric"] == "min_margin" and r["passed"] for r in wc if r["status"] == "Optimal")
    assert run_validation(cfg).to_csv() == rep.to_csv()
    with pytest.raises(ConfigError):
        run_validation(cfg.replace(methods=("NR",)))
