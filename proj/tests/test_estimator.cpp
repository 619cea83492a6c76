#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "funglm/estimator.hpp"

using namespace funglm;

namespace {

ModelTruth default_truth(int T = 128, double R = 2.0, const char* family = "gaussian",
                         double a = 0.25) {
    return make_truth(builtin_family(family), make_gp_model(T, 2.0, R, 0), a, 3.0);
}

EstimatorOptions default_opts() {
    EstimatorOptions o;
    o.alpha = 2.0;
    o.beta_exp = 3.0;
    return o;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("schedule examples") {
    Sched s = schedule(4096, 2.0, 3.0, 0.155);
    CHECK(s.m == 3);
    CHECK(s.N == 4);
    CHECK_THROWS_AS(schedule(4096, 2.0, 3.0, 0.2), std::invalid_argument);

    // monotone in n
    int prev_m = 0;
    for (long n : {128L, 256L, 512L, 2048L, 8192L, 32768L}) {
        Sched t = schedule(n, 2.0, 3.0, 0.155);
        CHECK(t.m >= prev_m);
        CHECK(t.N >= t.m + 1);
        prev_m = t.m;
    }

    // the default zeta sits strictly inside the window
    const double z = default_zeta(2.0, 3.0);
    CHECK(z > 1.0 / 7.0);
    CHECK(z < 1.0 / 6.0);
}

TEST_CASE("simulate_dataset: zero slope gives lambda = a everywhere") {
    GPModel gp = make_gp_model(64, 2.0, 1.0, 16);
    ModelTruth t = make_truth_with_b(builtin_family("gaussian"), gp, 0.0, 3.0,
                                     Eigen::VectorXd::Zero(16));
    Rng rng(3);
    Dataset d = simulate_dataset(t, 50, rng);
    CHECK(d.lambda.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("simulate_dataset: conditional mean and lambda variance") {
    ModelTruth t = default_truth(64, 1.0);
    Rng rng(7);
    Dataset d = simulate_dataset(t, 2, rng);
    // fixed X_1: resample y many times, mean → λ_1 (gaussian family: ψ̈ = 1)
    const int reps = 4000;
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) sum += t.family.sample(d.lambda(0), rng);
    CHECK(std::fabs(sum / reps - d.lambda(0)) <= 4.0 / std::sqrt(double(reps)));

    // empirical variance of λ_i over i ≈ Σ θ_k b_k²
    Rng rng2(11);
    Dataset big = simulate_dataset(t, 4000, rng2);
    const double target = t.gp.theta.cwiseProduct(t.b.cwiseAbs2()).sum();
    const double mean = big.lambda.mean();
    const double var = (big.lambda.array() - mean).square().sum() / (big.lambda.size() - 1);
    const double se = target * std::sqrt(2.0 / (big.lambda.size() - 1.0));
    CHECK(std::fabs(var - target) <= 4.0 * se);
}

TEST_CASE("estimate_known: ISE decomposition identity and tail") {
    ModelTruth t = default_truth();
    Rng rng(13);
    Dataset d = simulate_dataset(t, 500, rng);
    EstimateResult est = estimate_known(d, t, default_opts());
    double coef_part = 0.0;
    for (int k = 1; k <= est.m; ++k) {
        const double diff = est.ghat(k) - t.b(k - 1);
        coef_part += diff * diff;
    }
    CHECK(std::fabs(est.ise - (coef_part + est.tail_sq)) < 1e-10);

    double tail = 0.0;
    for (int k = est.m; k < t.b.size(); ++k) tail += t.b(k) * t.b(k);
    CHECK(est.tail_sq == doctest::Approx(tail).epsilon(1e-12));
}

TEST_CASE("estimate_known: zero slope ISE shrinks with n") {
    GPModel gp = make_gp_model(64, 2.0, 2.0, 16);
    ModelTruth t = make_truth_with_b(builtin_family("gaussian"), gp, 0.0, 3.0,
                                     Eigen::VectorXd::Zero(16));
    auto med_ise = [&](int n) {
        std::vector<double> v(30);
        for (int r = 0; r < 30; ++r) {
            Rng rng(100 + r);
            Dataset d = simulate_dataset(t, n, rng);
            v[r] = estimate_known(d, t, default_opts()).ise;
        }
        return median_of(v);
    };
    CHECK(med_ise(4000) < med_ise(500));
}

TEST_CASE("estimate_known with N = m is least squares on scores (gaussian)") {
    ModelTruth t = default_truth();
    Rng rng(17);
    Dataset d = simulate_dataset(t, 400, rng);
    EstimatorOptions o = default_opts();
    o.m_override = 3;
    o.N_override = 3;
    EstimateResult est = estimate_known(d, t, o);

    Eigen::MatrixXd X(400, 4);
    X.col(0).setOnes();
    X.rightCols(3) = d.sample.scores.leftCols(3);
    Eigen::VectorXd ls = (X.transpose() * X).ldlt().solve(X.transpose() * d.y);
    CHECK((est.ghat - ls).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("estimate_unknown: score-Gram identity and sign-flip invariance") {
    ModelTruth t = default_truth();
    Rng rng(19);
    Dataset d = simulate_dataset(t, 800, rng);
    EstimatorOptions o = default_opts();
    EstimateResult est = estimate_unknown(d, o, &t);
    REQUIRE(est.diag.has_value());
    CHECK(est.diag->score_gram_dev < 1e-8);
    CHECK(std::isfinite(est.diag->delta_op));

    // flipping estimated eigenfunctions leaves β̂ unchanged
    EstimatorOptions flip = o;
    flip.flip_signs = {1, 2};
    EstimateResult est2 = estimate_unknown(d, flip, &t);
    CHECK((est.beta_hat.values - est2.beta_hat.values).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(est.ise == doctest::Approx(est2.ise).epsilon(1e-8));
}

TEST_CASE("estimate_unknown tracks estimate_known within a constant factor") {
    ModelTruth t = default_truth(128, 2.0);
    std::vector<double> ratio(30);
    for (int r = 0; r < 30; ++r) {
        Rng rng(400 + r);
        Dataset d = simulate_dataset(t, 1000, rng);
        EstimateResult ku = estimate_known(d, t, default_opts());
        EstimateResult uk = estimate_unknown(d, default_opts(), &t);
        ratio[r] = uk.ise / ku.ise;
    }
    CHECK(median_of(ratio) <= 3.0);
}

TEST_CASE("estimate_unknown without truth fits cold-start and skips ISE") {
    ModelTruth t = default_truth(64, 2.0, "poisson");
    Rng rng(21);
    Dataset d = simulate_dataset(t, 600, rng);
    EstimatorOptions o = default_opts();
    o.family = builtin_family("poisson");
    EstimateResult est = estimate_unknown(d, o, nullptr);
    CHECK(std::isfinite(est.fit.grad_norm));
    CHECK(std::isnan(est.ise));
    CHECK(est.beta_hat.values.allFinite());
    // same design with truth supplied (warm start) reaches the same maximizer
    EstimateResult warm = estimate_unknown(d, default_opts(), &t);
    CHECK((est.ghat - warm.ghat).cwiseAbs().maxCoeff() < 1e-7);

    EstimatorOptions missing = default_opts();
    CHECK_THROWS_AS(estimate_unknown(d, missing, nullptr), std::invalid_argument);
}

TEST_CASE("ISE decomposition identity holds in every replication") {
    ModelTruth t = default_truth(64, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        Rng rng(3000 + rep);
        Dataset d = simulate_dataset(t, 300, rng);
        EstimateResult est = estimate_known(d, t, default_opts());
        double coef_part = 0.0;
        for (int k = 1; k <= est.m; ++k) {
            const double diff = est.ghat(k) - t.b(k - 1);
            coef_part += diff * diff;
        }
        CHECK(std::fabs(est.ise - (coef_part + est.tail_sq)) < 1e-10);
    }
}

TEST_CASE("tv bound stays below 1/2 in most replications at n=4096") {
    ModelTruth t = default_truth(128, 2.0);
    const Sched s = schedule(4096, 2.0, 3.0, default_zeta(2.0, 3.0));
    int below = 0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        Rng rng(5000 + r);
        Dataset d = simulate_dataset(t, 4096, rng);
        if (tv_hellinger_chain(t, d.sample, s.N).tv_bound < 0.5) ++below;
    }
    CHECK(below >= 18);  // ≥ 90%
}

TEST_CASE("estimate_unknown: zero slope shrinks with n") {
    GPModel gp = make_gp_model(64, 2.0, 2.0, 16);
    ModelTruth t = make_truth_with_b(builtin_family("gaussian"), gp, 0.0, 3.0,
                                     Eigen::VectorXd::Zero(16));
    auto med_ise = [&](int n) {  // β ≡ 0, so ISE = Σ_{k≤m} ĝ_k²
        std::vector<double> v(24);
        for (int r = 0; r < 24; ++r) {
            Rng rng(8000 + r);
            Dataset d = simulate_dataset(t, n, rng);
            v[r] = estimate_unknown(d, default_opts(), &t).ise;
        }
        return median_of(v);
    };
    CHECK(med_ise(2000) < med_ise(300));
}

TEST_CASE("estimate_unknown: rank shortfall raises") {
    ModelTruth t = default_truth(64, 2.0);
    Rng rng(23);
    Dataset d = simulate_dataset(t, 5, rng);
    EstimatorOptions o = default_opts();
    o.m_override = 2;
    o.N_override = 8;  // larger than n − 1 = 4 ⇒ θ̃_8 = 0
    CHECK_THROWS_AS(estimate_unknown(d, o, &t), std::runtime_error);
}

TEST_CASE("tv_hellinger_chain") {
    GPModel gp = make_gp_model(64, 2.0, 2.0, 16);
    Rng rng(29);

    SUBCASE("no tail coefficients, no gap") {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(16);
        b(0) = 0.5;
        ModelTruth t = make_truth_with_b(builtin_family("gaussian"), gp, 0.0, 3.0, b);
        Dataset d = simulate_dataset(t, 100, rng);
        TvChain tv = tv_hellinger_chain(t, d.sample, 4);
        CHECK(tv.h2_sum == 0.0);
        CHECK(tv.tv_bound == 0.0);
    }

    SUBCASE("matches a direct evaluation and decreases with N") {
        ModelTruth t = make_truth(builtin_family("gaussian"), gp, 0.1, 3.0);
        Dataset d = simulate_dataset(t, 200, rng);
        TvChain tv4 = tv_hellinger_chain(t, d.sample, 4);
        TvChain tv8 = tv_hellinger_chain(t, d.sample, 8);
        CHECK(tv4.h2_sum >= 0.0);
        CHECK(tv8.h2_sum <= tv4.h2_sum);
        CHECK(tv4.tv_bound == doctest::Approx(std::sqrt(tv4.h2_sum)).epsilon(1e-12));

        double manual = 0.0;
        for (int i = 0; i < 200; ++i) {
            double delta = 0.0;
            for (int k = 4; k < 16; ++k) delta += d.sample.scores(i, k) * t.b(k);
            const double lam = d.lambda(i);
            manual += delta * delta * t.family.psi2(lam) * (1.0 + std::fabs(delta)) *
                      t.family.growth(std::fabs(delta));
        }
        CHECK(tv4.h2_sum == doctest::Approx(manual).epsilon(1e-9));
    }
}

TEST_CASE("tv bound median decreases when n doubles") {
    ModelTruth t = default_truth(128, 2.0);
    auto med_tv = [&](int n) {
        std::vector<double> v(20);
        for (int r = 0; r < 20; ++r) {
            Rng rng(700 + r);
            Dataset d = simulate_dataset(t, n, rng);
            Sched s = schedule(n, 2.0, 3.0, default_zeta(2.0, 3.0));
            v[r] = tv_hellinger_chain(t, d.sample, s.N).tv_bound;
        }
        return median_of(v);
    };
    CHECK(med_tv(2048) < med_tv(1024));
}

TEST_CASE("txxn diagnostics trends across n") {
    ModelTruth t = default_truth(64, 2.0);
    EstimatorOptions o = default_opts();
    auto medians = [&](int n) {
        std::vector<double> del2(24), z2(24), agap(24), projm(24);
        for (int r = 0; r < 24; ++r) {
            Rng rng(900 + r);
            Dataset d = simulate_dataset(t, n, rng);
            TxxnRecord rec = txxn_diagnostics(t, d, o);
            del2[r] = rec.delta * rec.delta;
            z2[r] = rec.max_znorm2 / std::log(double(n));
            agap[r] = rec.a_gap;
            projm[r] = rec.proj_m / rec.rho_n;
        }
        return std::array<double, 4>{median_of(del2), median_of(z2), median_of(agap),
                                     median_of(projm)};
    };
    auto m500 = medians(500);
    auto m1000 = medians(1000);
    auto m2000 = medians(2000);

    // ‖Δ‖² halves under n-doubling (±30%)
    const double r1 = m500[0] / m1000[0];
    const double r2 = m1000[0] / m2000[0];
    CHECK(r1 > 1.4);
    CHECK(r1 < 2.6);
    CHECK(r2 > 1.4);
    CHECK(r2 < 2.6);

    // max ‖Z_i‖² / log n stays bounded
    CHECK(m2000[1] < 3.0 * m500[1] + 1.0);

    // ‖S̃ Ã S̃ − A‖ decreasing in n
    CHECK(m2000[2] < m500[2]);

    // ‖(H̃_m − H_m)β‖² / ρ_n decreasing in n
    CHECK(m2000[3] < m500[3]);
}

TEST_CASE("truth construction rejects violated envelopes") {
    GPModel gp = make_gp_model(64, 2.0, 1.0, 16);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(16);
    b(2) = 1.0;  // exceeds R·3^{−β}
    CHECK_THROWS_AS(make_truth_with_b(builtin_family("gaussian"), gp, 0.0, 3.0, b),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_truth(builtin_family("gaussian"), gp, 5.0, 3.0),  // |a| > R
                    std::invalid_argument);
    CHECK_THROWS_AS(make_truth(builtin_family("gaussian"), gp, 0.0, 2.0),  // β too small
                    std::invalid_argument);
}
