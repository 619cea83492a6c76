#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "funglm/gp.hpp"
#include "funglm/spectral.hpp"

using namespace funglm;

TEST_CASE("degenerate spectrum gives paths equal to the mean") {
    Grid grid = make_grid(32);
    Eigen::VectorXd mu_v(32);
    for (int i = 0; i < 32; ++i) mu_v(i) = std::sin(2.0 * i);
    GridFunction mu = make_grid_function(grid, mu_v);
    GPModel m = make_gp_model_with_theta(32, 2.0, 1.0, Eigen::VectorXd::Zero(8), mu);
    Rng rng(1);
    SampleSet s = sample_paths(m, 5, rng);
    for (int i = 0; i < 5; ++i)
        CHECK((s.paths.col(i) - mu_v).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ff checks: R=1 fails spacing, R=2 passes at alpha=2") {
    GPModel weak = make_gp_model(128, 2.0, 1.0);
    CHECK(weak.envelope_ok);
    CHECK_FALSE(weak.spacing_ok);  // θ1−θ2 = 0.75 < (α/R)·1 = 2
    CHECK(weak.increment_ok);      // equality at C = R = 1

    GPModel good = make_gp_model(128, 2.0, 2.0);
    CHECK(good.envelope_ok);
    CHECK(good.spacing_ok);
    CHECK(good.increment_ok);
}

TEST_CASE("score variance and path norm match the spectrum (alpha=2, R=1, n=2000)") {
    GPModel m = make_gp_model(128, 2.0, 1.0);
    Rng rng(11);
    const int n = 2000;
    SampleSet s = sample_paths(m, n, rng);

    // scores reproduce √θ_j η_{i,j}: empirical var of z_{·,1} ≈ θ_1 = 1
    const double v = s.scores.col(0).squaredNorm() / n;
    const double se = m.theta(0) * std::sqrt(2.0 / (n - 1.0));
    CHECK(std::fabs(v - m.theta(0)) <= 4.0 * se);

    // E‖Z‖² = Σ θ_j
    Eigen::VectorXd z2(n);
    for (int i = 0; i < n; ++i)
        z2(i) = (s.paths.col(i) - m.mu.values).squaredNorm() / m.grid.size;
    const double mean_z2 = z2.mean();
    const double sd = std::sqrt((z2.array() - mean_z2).square().sum() / (n - 1.0));
    CHECK(std::fabs(mean_z2 - m.theta.sum()) <= 4.0 * sd / std::sqrt(double(n)));
}

TEST_CASE("scores of distinct components are uncorrelated") {
    GPModel m = make_gp_model(64, 2.0, 1.0);
    Rng rng(3);
    const int n = 4000;
    SampleSet s = sample_paths(m, n, rng);
    for (int j : {0, 1}) {
        for (int k : {2, 5}) {
            Eigen::VectorXd a = s.scores.col(j), b = s.scores.col(k);
            const double corr = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
            CHECK(std::fabs(corr) <= 4.0 / std::sqrt(double(n)));
        }
    }
}

TEST_CASE("sample_mean basics") {
    GPModel m = make_gp_model(32, 2.0, 1.0);
    Rng rng(5);
    SampleSet s = sample_paths(m, 2, rng);
    // two mirrored paths average to zero
    s.paths.col(1) = -s.paths.col(0);
    CHECK(norm(sample_mean(s)) < 1e-14);
}

TEST_CASE("sample_mean converges to mu at the MC rate (mu = phi_2, n = 4000)") {
    const int T = 64;
    BasisSet basis = cosine_basis(T, 2);
    GridFunction mu = basis.function(1);
    GPModel m = make_gp_model(T, 2.0, 1.0, 16, mu);
    Rng rng(17);
    const int n = 4000;
    SampleSet s = sample_paths(m, n, rng);
    GridFunction xbar = sample_mean(s);
    const double err2 = norm2(make_grid_function(m.grid, xbar.values - mu.values));
    // E‖X̄−μ‖² = Σθ/n; allow mean + 4 sd of the squared norm
    const double mean_err2 = m.theta.sum() / n;
    const double sd = std::sqrt(2.0 * m.theta.squaredNorm()) / n;
    CHECK(err2 <= mean_err2 + 4.0 * sd);
}

TEST_CASE("sample covariance: identical paths, coordinates, rank, psd") {
    GPModel m2 = make_gp_model_with_theta(16, 2.0, 1.0, (Eigen::VectorXd(2) << 1.0, 0.25).finished());
    Rng rng(23);

    SampleSet dup = sample_paths(m2, 2, rng);
    dup.paths.col(1) = dup.paths.col(0);
    CHECK(sample_covariance(dup).cwiseAbs().maxCoeff() < 1e-12);

    const int n = 5000;
    SampleSet s = sample_paths(m2, n, rng);
    Eigen::MatrixXd K = sample_covariance(s);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // basis coordinates ⟨φ_j, K̃ φ_k⟩ ≈ diag(θ) at 4 MC stderr
    Eigen::MatrixXd coords =
        m2.basis.functions.transpose() * K * m2.basis.functions / (16.0 * 16.0);
    for (int j = 0; j < 2; ++j) {
        const double se = m2.theta(j) * std::sqrt(2.0 / (n - 1.0));
        CHECK(std::fabs(coords(j, j) - m2.theta(j)) <= 4.0 * se);
    }
    const double se01 = std::sqrt(m2.theta(0) * m2.theta(1) / (n - 1.0));
    CHECK(std::fabs(coords(0, 1)) <= 4.0 * se01);

    // rank ≤ n−1 and eigenvalues nonnegative after clamping
    GPModel m8 = make_gp_model(32, 2.0, 1.0, 16);
    SampleSet tiny = sample_paths(m8, 5, rng);
    SpectralDecomp d = eigendecompose(sample_covariance(tiny), m8.grid);
    for (int k = 4; k < d.count(); ++k) CHECK(d.eigenvalues(k) <= 1e-10 * d.eigenvalues(0));
    CHECK(d.eigenvalues.minCoeff() >= 0.0);
}

TEST_CASE("max_quad tail bound") {
    Rng rng(31);
    const int n = 100, K = 200;
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(n, K);

    SUBCASE("zero weights never exceed") {
        MaxQuadResult r = max_quad_tail_check(zero, n, 1.0, 50, rng);
        CHECK(r.empirical == 0.0);
    }
    SUBCASE("negative weights rejected") {
        Eigen::MatrixXd bad = zero;
        bad(0, 0) = -1.0;
        CHECK_THROWS_AS(max_quad_tail_check(bad, n, 1.0, 10, rng), std::invalid_argument);
    }
    SUBCASE("tau = k^{-2}: empirical below 2e^{-x}") {
        Eigen::VectorXd tk(K);
        for (int k = 1; k <= K; ++k) tk(k - 1) = 1.0 / (double(k) * k);
        Eigen::MatrixXd tau = tk.transpose().replicate(n, 1);
        MaxQuadResult r1 = max_quad_tail_check(tau, n, 1.0, 5000, rng);
        CHECK(r1.bound == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
        CHECK(r1.empirical <= r1.bound + 3.0 * r1.se);
        MaxQuadResult r0 = max_quad_tail_check(tau, n, 0.0, 200, rng);
        CHECK(r0.bound == 2.0);
        CHECK(r0.empirical <= 1.0);
    }
}

TEST_CASE("sample covariance moment table at n=50") {
    Rng rng(37);
    auto rows = sample_cov_moment_report(50, 20000, rng);
    for (const auto& r : rows) {
        INFO(r.name << " estimate " << r.estimate << " target " << r.target);
        CHECK(r.pass);
    }
}
