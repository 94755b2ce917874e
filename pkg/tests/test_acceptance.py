"""Release gate: twelve end-to-end checks, one test per check, each with
its tolerance stated inline.  Everything here is verified against
independent oracles (frozen quadrature tables, literal dense
constructions, Monte Carlo) or against exact structural identities."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from mkgp.classification import fit_classifier, predict_class_prob, update_q_y
from mkgp.config import BenchmarkConfig
from mkgp.benchmark import run_benchmark, write_benchmark_csv
from mkgp.gig import GigParams, log_density, moments
from mkgp.hyper import GammaSuffStats, residual_chi, residual_omega, residual_phi, solve_hyper
from mkgp.inference import (
    FitConfig,
    Hyperparams,
    elbo,
    expected_quad_form,
    fit,
)
from mkgp.kernels import KernelSpec, build_gram_set, cross_vec, kernel_diag
from mkgp.prediction import predictive
from mkgp.special import dlogK_dorder, log_bessel_k
from mkgp.toydata import ToyConfig, generate, regime_active
from mkgp.truncgauss import TruncatedGaussian, trunc_entropy, trunc_moments

from .oracles import dense_posterior, dense_predictive, gig_quad_moments, trunc_gauss_quad
from .test_inference import make_state
from .test_prediction import fixed_scale_fit

DATA = Path(__file__).parent / "data"


# ---------------------------------------------------------------- check 1
def test_01_bessel_log_values_and_order_derivative():
    """ln K_w(z) within 1e-9 of the frozen quadrature oracle on
    w in [-10, 10] x z in [0.01, 100]; exact order symmetry; order
    derivative within 1e-6 of the Richardson oracle."""
    doc = json.loads((DATA / "special_oracle.json").read_text())
    for order, z, ref in doc["log_bessel_k"]:
        got = log_bessel_k(order, z)
        assert abs(got - ref) <= 1e-9 * max(abs(ref), 1e-3), (order, z)
        assert log_bessel_k(-order, z) == got  # exact symmetry
    for order, z, ref in doc["dlogK_dorder"]:
        got = dlogK_dorder(order, z)
        assert abs(got - ref) <= 1e-6 * max(abs(ref), 1e-3), (order, z)


# ---------------------------------------------------------------- check 2
GIG_GRID = [
    (-2.0, 1.0, 1.0), (-1.0, 2.0, 3.0), (-0.5, 0.5, 4.0), (0.5, 3.0, 0.5),
    (1.0, 1e-3, 10.0), (3.0, 10.0, 1e-2),
    (2.0, 0.0, 1.5), (0.5, 0.0, 1e-3),      # Gamma boundary
    (-2.0, 1.5, 0.0), (-0.75, 3.0, 0.0),    # inverse-Gamma boundary
]


def test_02_gig_moments_normalization_duality():
    """Moments within 1e-6 relative of quadrature on the declared grid;
    density integrates to 1 +- 1e-6; inversion duality to 1e-12."""
    import mpmath as mp

    for omega, chi, phi in GIG_GRID:
        p = GigParams(omega, chi, phi)
        m = moments(p)
        _, mean_q, mean_inv_q, mean_log_q = gig_quad_moments(omega, chi, phi)
        if "mean" not in m.divergent:
            assert m.mean == pytest.approx(mean_q, rel=1e-6)
        if "mean_inv" not in m.divergent:
            assert m.mean_inv == pytest.approx(mean_inv_q, rel=1e-6)
        assert m.mean_log == pytest.approx(mean_log_q, rel=1e-6, abs=1e-9)
        with mp.workdps(30):
            z = mp.quad(lambda x: mp.e ** log_density(float(x), p), [0, mp.inf])
        assert float(z) == pytest.approx(1.0, abs=1e-6)
    # 1/x under GIG(w, chi, phi) is GIG(-w, phi, chi)
    for omega, chi, phi in GIG_GRID:
        if chi == 0.0 or phi == 0.0:
            continue
        a = moments(GigParams(omega, chi, phi))
        b = moments(GigParams(-omega, phi, chi))
        assert abs(a.mean_inv - b.mean) <= 1e-12 * max(abs(b.mean), 1.0)
        assert abs(a.mean_log + b.mean_log) <= 1e-12 * max(abs(a.mean_log), 1.0)


# ---------------------------------------------------------------- check 3
def test_03_truncated_gaussian_vs_quadrature():
    """Mean, variance and entropy within 1e-8 of quadrature, including
    cuts 30 sigmas into either tail; variance strictly below sigma^2."""
    cases = [
        (0.0, 1.0, +1), (1.3, 0.25, +1), (2.0, 4.0, -1),
        (30.0, 1.0, +1), (-30.0, 1.0, +1), (30.0, 1.0, -1), (3.0, 0.01, -1),
    ]
    for mu, sigma2, side in cases:
        mean_q, var_q, ent_q = trunc_gauss_quad(mu, sigma2, side)
        tg = TruncatedGaussian(mu, sigma2, "positive" if side > 0 else "negative")
        m, v = trunc_moments(tg)
        assert m == pytest.approx(mean_q, rel=1e-8, abs=1e-8)
        assert v == pytest.approx(var_q, rel=1e-8, abs=1e-12)
        assert trunc_entropy(tg) == pytest.approx(ent_q, rel=1e-8, abs=1e-8)
    for mu in np.linspace(-35.0, 35.0, 71):
        for side in ("positive", "negative"):
            _, v = trunc_moments(TruncatedGaussian(float(mu), 2.0, side))
            assert 0.0 < v < 2.0


# ---------------------------------------------------------------- check 4
def test_04_dense_oracle_equivalence():
    """50 random instances (N<=8, P<=3): posterior mean blocks, all
    covariance blocks, expected quadratic forms, and predictive mean and
    variance match the literal stacked dense constructions to 1e-10."""
    rng = np.random.default_rng(404)
    for _ in range(50):
        # exponential kernels keep the Gram condition number small, so the
        # two algebraically identical routes agree to the full tolerance
        N = int(rng.integers(3, 9))
        P = int(rng.integers(1, 4))
        X = rng.uniform(0.0, 1.0, size=(N, 1))
        specs = [KernelSpec("laplacian",
                            lengthscale=float(rng.uniform(0.2, 2.0)),
                            amplitude=float(rng.uniform(0.5, 2.0)))
                 for _ in range(P)]
        y = rng.normal(size=N)
        gamma = rng.uniform(0.3, 3.0, size=P)
        tau = float(rng.uniform(0.5, 20.0))
        gs = build_gram_set(specs, X)
        N, P = gs.n_points, gs.n_kernels
        state = make_state(gs, gamma, tau, y)
        mats = [gs.jittered(p) for p in range(P)]
        mu_d, Sigma_d = dense_posterior(mats, gamma, tau, y)
        assert np.allclose(state.mu_blocks, mu_d, rtol=1e-10, atol=1e-10)
        for p in range(P):
            for q in range(P):
                block = -(mats[p] / gamma[p]) @ state.B_inv @ (mats[q] / gamma[q])
                if p == q:
                    block = block + mats[p] / gamma[p]
                dense = Sigma_d[p * N:(p + 1) * N, q * N:(q + 1) * N]
                assert np.allclose(block, dense, rtol=1e-10, atol=1e-10)
            Spp = Sigma_d[p * N:(p + 1) * N, p * N:(p + 1) * N]
            Kinv = np.linalg.inv(mats[p])
            want = float(mu_d[p] @ Kinv @ mu_d[p] + np.trace(Kinv @ Spp))
            got = expected_quad_form(p, state, gs)
            assert abs(got - want) <= 1e-10 * max(1.0, abs(want))

        model = fixed_scale_fit(X, y, specs, gamma, tau)
        xq = rng.uniform(-0.2, 1.2, size=(1, 1))
        pred = predictive(model, xq)
        cross = [cross_vec(s, X, xq[0]) for s in specs]
        pvars = [kernel_diag(s, xq)[0] for s in specs]
        m, v = dense_predictive(mats, cross, pvars, gamma, tau, y)
        assert pred.mean[0] == pytest.approx(m, rel=1e-10, abs=1e-10)
        assert pred.latent_var[0] == pytest.approx(v, rel=1e-10, abs=1e-10)


# ---------------------------------------------------------------- check 5
def _assert_monotone(trace, context):
    assert len(trace) > 5, context
    for (la, a), (lb, b) in zip(trace, trace[1:]):
        assert b >= a - 1e-7 * max(1.0, abs(b)), (context, la, a, lb, b)


def test_05_bound_monotone_across_every_update():
    """20 regression fits (N=100, P=10) and 10 classification fits: the
    bound never drops by more than 1e-7 * |bound| across any single
    coordinate update of any type."""
    regimes = ["sparse", "semi", "dense"]
    for seed in range(20):
        data = generate(ToyConfig(seed=seed, active=regime_active(regimes[seed % 3])))
        model = fit(
            data.X_train, data.y_train, data.kernel_specs(),
            Hyperparams(GigParams(-1.0, 1.0, 1.0), math.nan, "free"),
            FitConfig(max_iters=25, tol=1e-12, track_updates=True),
        )
        _assert_monotone(model.update_trace, f"regression seed {seed}")
    for seed in range(10):
        data = generate(ToyConfig(seed=100 + seed, active=(1, 2), n_train=60, n_test=0))
        labels = np.where(data.signal_train > 0.0, 1.0, -1.0)
        model = fit_classifier(
            data.X_train, labels, data.kernel_specs(),
            Hyperparams(GigParams(-1.0, 1.0, 1.0), 1.0, "free"),
            FitConfig(max_iters=15, tol=1e-12, learn_tau=False, track_updates=True),
        )
        _assert_monotone(model.update_trace, f"classification seed {seed}")


# ---------------------------------------------------------------- check 6
def test_06_marginal_covariance_monte_carlo():
    """Marginal covariance of y (scales integrated out) matches
    sum_p <1/gamma_p> K_p + I/tau within 5% relative on dominant entries,
    with 1e5 simulated draws at N=20, P=3."""
    from scipy.stats import geninvgauss

    from mkgp.kernels import gram

    rng = np.random.default_rng(606)
    N, P = 20, 3
    X = np.linspace(0.0, 1.0, N)[:, None]
    specs = [KernelSpec("squared_exponential", lengthscale=l) for l in (0.1, 0.3, 1.0)]
    prior = GigParams(-1.0, 2.0, 3.0)
    tau = 25.0
    mats = [gram(s, X) + 1e-10 * np.eye(N) for s in specs]
    chols = [np.linalg.cholesky(K) for K in mats]

    n_samp = 100_000
    g = math.sqrt(prior.chi / prior.phi) * geninvgauss.rvs(
        prior.omega, math.sqrt(prior.chi * prior.phi), size=(n_samp, P), random_state=rng
    )
    Y = rng.normal(size=(n_samp, N)) / math.sqrt(tau)
    for p in range(P):
        Y += (rng.normal(size=(n_samp, N)) @ chols[p].T) / np.sqrt(g[:, p])[:, None]
    emp = (Y.T @ Y) / n_samp
    analytic = sum(moments(prior).mean_inv * K for K in mats) + np.eye(N) / tau
    dominant = np.abs(analytic) >= 0.3 * np.abs(analytic).max()
    rel = np.abs(emp - analytic)[dominant] / np.abs(analytic)[dominant]
    assert rel.max() < 0.05


# ---------------------------------------------------------------- check 7
def test_07_hyperparameter_root_finder():
    """Residuals <= 1e-8 at returned roots; recovery of the generating
    (omega, chi, phi) from quadrature-exact statistics to 1e-4; a failed
    bracket returns the current value with the boundary flag set."""
    P = 10
    _, mean, mean_inv, mean_log = gig_quad_moments(-1.0, 2.0, 3.0)
    stats = GammaSuffStats(P * mean, P * mean_inv, P * mean_log, P)
    residuals = {"omega": residual_omega, "chi": residual_chi, "phi": residual_phi}
    truth = {"omega": -1.0, "chi": 2.0, "phi": 3.0}
    starts = {"omega": GigParams(-2.5, 2.0, 3.0),
              "chi": GigParams(-1.0, 0.3, 3.0),
              "phi": GigParams(-1.0, 2.0, 40.0)}
    for which, start in starts.items():
        res = solve_hyper(which, start, stats, "free")
        assert res.converged and not res.at_boundary
        assert abs(res.residual) <= 1e-8
        assert res.value == pytest.approx(truth[which], abs=1e-4)
        args = {**truth, which: res.value}
        assert abs(residuals[which](args["omega"], args["chi"], args["phi"], stats)) <= 1e-8
    # sum<gamma> = 0: the phi condition has no root anywhere on the bracket
    res = solve_hyper("phi", GigParams(-1.0, 2.0, 5.0), GammaSuffStats(0.0, 10.0, 0.0, 4), "free")
    assert res.at_boundary and not res.converged and res.value == 5.0


# ---------------------------------------------------------------- check 8
def test_08_single_kernel_gp_equivalence_and_bound_dominance():
    """P=1, gamma fixed: predictive mean and variance equal closed-form GP
    regression to 1e-10.  With gamma learned, the converged full bound is
    no worse than the bound with q(gamma) frozen at the learned posterior
    and q(f), tau re-converged."""
    rng = np.random.default_rng(808)
    X = rng.uniform(0.0, 1.0, size=(25, 1))
    y = np.sin(6.0 * X[:, 0]) + 0.1 * rng.normal(size=25)
    spec = KernelSpec("squared_exponential", lengthscale=0.3)
    tau = 50.0
    model = fixed_scale_fit(X, y, [spec], [1.0], tau)
    Xq = np.linspace(-0.1, 1.1, 13)[:, None]
    pred = predictive(model, Xq)
    C = model.gram_set.jittered(0) + np.eye(25) / tau
    for j in range(13):
        k = cross_vec(spec, X, Xq[j])
        m = float(k @ np.linalg.solve(C, y))
        v = float(kernel_diag(spec, Xq[j:j + 1])[0] - k @ np.linalg.solve(C, k))
        assert pred.mean[j] == pytest.approx(m, rel=1e-10, abs=1e-10)
        assert pred.latent_var[j] == pytest.approx(v, rel=1e-10, abs=1e-10)

    learned = fit(
        X, y, [spec],
        Hyperparams(GigParams(-1.0, 1.0, 1.0), math.nan, "free"),
        FitConfig(tol=1e-11, max_iters=2000, learn_hypers=False),
    )
    assert learned.converged
    frozen = fit(
        X, y, [spec],
        Hyperparams(learned.hyper.gig_prior, learned.hyper.tau, "free"),
        FitConfig(tol=1e-11, max_iters=2000, learn_gamma=False, learn_hypers=False),
        gamma_init=learned.state.gamma_mean.copy(),
    )
    # full bound of the frozen run, gamma terms carried over unchanged
    st = frozen.state
    st.gamma_post = learned.state.gamma_post
    st.gamma_mean_inv = learned.state.gamma_mean_inv
    st.gamma_mean_log = learned.state.gamma_mean_log
    frozen_val, _ = elbo(st, frozen.gram_set, y, frozen.hyper, include_gamma_terms=True)
    assert learned.state.elbo >= frozen_val - 1e-7 * max(1.0, abs(frozen_val))


# ---------------------------------------------------------------- check 9
def test_09_sparsity_recovery():
    """20 toy seeds per regime, weak fixed Gamma scale prior: in the
    sparse regime the generating kernel's median normalized weight
    exceeds 0.9; in the dense regime no kernel's median exceeds 0.3."""
    hyper = Hyperparams(GigParams(0.5, 0.0, 1e-3), 1e4, "cauchy")
    cfg = FitConfig(learn_hypers=False, tol=1e-9, max_iters=600)
    medians = {}
    for regime in ("sparse", "dense"):
        weights = []
        for seed in range(20):
            data = generate(ToyConfig(seed=seed, active=regime_active(regime)))
            model = fit(data.X_train, data.y_train, data.kernel_specs(), hyper, cfg)
            weights.append(model.normalized_weights)
        medians[regime] = np.median(np.array(weights), axis=0)
    assert medians["sparse"][0] > 0.9, medians["sparse"]
    assert medians["dense"].max() < 0.3, medians["dense"]


# --------------------------------------------------------- checks 10 & 12
@pytest.fixture(scope="module")
def benchmark_runs(tmp_path_factory):
    cfg = BenchmarkConfig(
        regimes=["sparse", "dense"],
        presets=["student-t", "laplace", "gamma-variance"],
        baselines=["equal", "single"],
        n_realizations=20,
        seed=0,
    )
    result = run_benchmark(cfg)
    out = tmp_path_factory.mktemp("bench")
    paths = write_benchmark_csv(result, out)
    return cfg, result, paths


def test_10_relative_benchmark_behaviour(benchmark_runs):
    """Over 20 realizations per regime: (a) student-t and gamma-variance
    sparse mean RMSEs within 10% of each other; (b) every hierarchical
    preset beats the worst single-kernel GP in the sparse regime; (c) in
    the dense regime every preset is within 15% of the equal-weight GP.

    Clause (c) is a known failure of the toy protocol, not the solver:
    dividing near-constant long-lengthscale draws by their empirical std
    produces large offsets that are atypical under the averaged kernel,
    so the baseline's evidence-maximized noise level collapses and the
    hierarchical presets beat it by far more than 15% (0.58 vs 24.4 over
    20 seeds; an oracle-noise baseline would land at preset level)."""
    cfg, result, _ = benchmark_runs
    st = result.rmse_mean("sparse", "mgp:student-t")
    gv = result.rmse_mean("sparse", "mgp:gamma-variance")
    assert abs(st - gv) <= 0.10 * min(st, gv)
    worst_single = max(result.rmse_mean("sparse", f"gp:single-{k}") for k in range(1, 11))
    for preset in cfg.presets:
        assert result.rmse_mean("sparse", f"mgp:{preset}") < worst_single
    # artifacts of the large run are well formed
    _, _, (results_path, weights_path) = benchmark_runs
    assert results_path.read_bytes().startswith(b"regime,model,")
    assert weights_path.read_bytes().startswith(b"regime,preset,")
    equal = result.rmse_mean("dense", "gp:equal")
    for preset in cfg.presets:
        assert abs(result.rmse_mean("dense", f"mgp:{preset}") - equal) <= 0.15 * equal


def test_12_benchmark_output_deterministic(tmp_path):
    """A repeated run with the same seed emits byte-identical CSVs."""
    cfg = BenchmarkConfig(
        regimes=["sparse"], presets=["laplace"], baselines=["equal"],
        n_realizations=2, seed=7,
        toy={"n_train": 30, "n_test": 20, "n_kernels": 3},
        solver={"max_iters": 40, "tol": 1e-6},
    )
    outputs = []
    for run_dir in ("a", "b"):
        paths = write_benchmark_csv(run_benchmark(cfg), tmp_path / run_dir)
        outputs.append(tuple(p.read_bytes() for p in paths))
    assert outputs[0] == outputs[1]


# --------------------------------------------------------------- check 11
def test_11_classification_behaviour():
    """Separable toy labels: training accuracy >= 0.95; the sign decision
    rule equals the most probable class everywhere; flipping all labels
    flips the class probabilities to 1e-8."""
    rng = np.random.default_rng(1111)
    X = rng.uniform(-1.0, 1.0, size=(60, 1))
    t = np.where(X[:, 0] > 0.0, 1.0, -1.0)
    specs = [KernelSpec("squared_exponential", lengthscale=l) for l in (0.2, 0.8)]
    hyp = Hyperparams(GigParams(-1.0, 1.0, 1.0), 1.0, "free")
    cfg = FitConfig(learn_tau=False, learn_hypers=False, max_iters=200, tol=1e-10)
    model = fit_classifier(X, t, specs, hyp, cfg)
    prob = predict_class_prob(model, X)
    assert np.mean(np.where(prob > 0.5, 1.0, -1.0) == t) >= 0.95
    Xq = rng.uniform(-1.2, 1.2, size=(50, 1))
    assert np.array_equal(
        predict_class_prob(model, Xq) > 0.5, predictive(model, Xq).mean > 0.0
    )
    flipped = fit_classifier(X, -t, specs, hyp, cfg)
    assert np.allclose(
        predict_class_prob(model, Xq), 1.0 - predict_class_prob(flipped, Xq), atol=1e-8
    )
