#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "funglm/spectral.hpp"

using namespace funglm;

namespace {

GPModel model_t2(int T = 64, int J = 16) {
    Eigen::VectorXd th(J);
    for (int j = 1; j <= J; ++j) th(j - 1) = std::pow(j, -2.0);
    return make_gp_model_with_theta(T, 2.0, 1.0, th);
}

}  // namespace

TEST_CASE("eigendecompose recovers a constructed spectrum") {
    const int T = 64;
    BasisSet b = cosine_basis(T, 5);
    Eigen::VectorXd th(5);
    for (int j = 1; j <= 5; ++j) th(j - 1) = std::pow(j, -2.0);
    Eigen::MatrixXd K = b.functions * th.asDiagonal() * b.functions.transpose();
    SpectralDecomp d = eigendecompose(K, b.grid);
    for (int j = 0; j < 5; ++j) {
        CHECK(std::fabs(d.eigenvalues(j) - th(j)) < 1e-8);
        const double align =
            std::fabs(d.eigenfunctions.col(j).dot(b.functions.col(j)) / T);
        CHECK(align == doctest::Approx(1.0).epsilon(1e-8));
    }
    for (int j = 5; j < T; ++j) CHECK(std::fabs(d.eigenvalues(j)) < 1e-10);

    // reconstruction reproduces the kernel
    CHECK((kernel_matrix(d) - K).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("zero kernel decomposes to zero eigenvalues") {
    Grid g = make_grid(8);
    SpectralDecomp d = eigendecompose(Eigen::MatrixXd::Zero(8, 8), g);
    CHECK(d.eigenvalues.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-node grid closed form") {
    Grid g = make_grid(2);
    Eigen::MatrixXd K(2, 2);
    K << 2.0, 0.0, 0.0, 1.0;
    SpectralDecomp d = eigendecompose(K, g);
    // operator is K/2: eigenvalues 1 and 1/2, eigenfunctions √2·e_i
    CHECK(d.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(d.eigenvalues(1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(norm2(d.eigenfunction(0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("asymmetric or non-finite kernels are rejected") {
    Grid g = make_grid(4);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(4, 4);
    K(0, 1) = 1.0;
    CHECK_THROWS_AS(eigendecompose(K, g), std::invalid_argument);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(4, 4);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(eigendecompose(bad, g), std::invalid_argument);
}

TEST_CASE("delta_norm: zero, rank-one, frobenius ordering") {
    GPModel m = model_t2();
    Eigen::MatrixXd K = kernel_matrix(m);
    DeltaNorm z = delta_norm(K, K, m.grid);
    CHECK(z.op_norm == 0.0);
    CHECK(z.frobenius == 0.0);

    const double c = 0.37;
    Eigen::MatrixXd Kt =
        K + c * m.basis.functions.col(0) * m.basis.functions.col(0).transpose();
    DeltaNorm r = delta_norm(K, Kt, m.grid);
    CHECK(r.op_norm == doctest::Approx(c).epsilon(1e-12));
    CHECK(r.op_norm <= r.frobenius * (1.0 + 1e-10) + 1e-14);

    CHECK_THROWS_AS(delta_norm(K, Eigen::MatrixXd::Zero(3, 3), m.grid), std::invalid_argument);
}

TEST_CASE("perturbation_report: identical decompositions") {
    GPModel m = model_t2();
    Eigen::MatrixXd K = kernel_matrix(m);
    SpectralDecomp ref = decomp_from_model(m);
    PerturbationReport rep = perturbation_report(ref, ref, K, K, 3);
    CHECK(rep.delta == 0.0);
    for (const auto& rec : rep.records) {
        CHECK(rec.fk_norm2 < 1e-20);
        CHECK(rec.lam_norm2 < 1e-20);
        CHECK(rec.evalue_ok);
        CHECK(rec.gap_ok);
        CHECK(*rec.fk2_ok);
        CHECK(*rec.rjk_ok);
    }
}

TEST_CASE("perturbation_report: small symmetric noise keeps every bound") {
    GPModel m = model_t2(64, 8);
    Eigen::MatrixXd K = kernel_matrix(m);
    SpectralDecomp ref = decomp_from_model(m);

    Rng rng(101);
    Eigen::MatrixXd noise(64, 64);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j <= i; ++j) noise(i, j) = noise(j, i) = 0.001 * rng.gaussian();
    Eigen::MatrixXd Kt_raw = K + noise;
    // project to PSD so eigendecompose accepts it
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kt_raw);
    Eigen::MatrixXd Kt = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                         es.eigenvectors().transpose();

    SpectralDecomp pert = eigendecompose(Kt, m.grid);
    PerturbationReport rep = perturbation_report(ref, pert, K, Kt, 3);
    for (const auto& rec : rep.records) {
        CHECK(rec.evalue_ok);
        CHECK(rec.gap_ok);  // δ ~ 1e-3 is far below the gaps of j^{-2}
        CHECK(*rec.fk2_ok);
        CHECK(*rec.rjk_ok);
        // ‖f_k‖² = 2 − 2|⟨φ_k, φ̃_k⟩|
        const double align =
            ref.eigenfunctions.col(rec.k - 1).dot(pert.eigenfunctions.col(rec.k - 1)) / 64.0;
        CHECK(std::fabs(rec.fk_norm2 - (2.0 - 2.0 * std::fabs(align))) < 1e-10);
    }
}

TEST_CASE("perturbation_report is invariant under eigenfunction sign flips") {
    GPModel m = model_t2(32, 8);
    Eigen::MatrixXd K = kernel_matrix(m);
    Rng rng(7);
    Eigen::MatrixXd noise(32, 32);
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j <= i; ++j) noise(i, j) = noise(j, i) = 0.002 * rng.gaussian();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K + noise);
    Eigen::MatrixXd Kt = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                         es.eigenvectors().transpose();
    SpectralDecomp ref = decomp_from_model(m);
    SpectralDecomp pert = eigendecompose(Kt, m.grid);

    PerturbationReport a = perturbation_report(ref, pert, K, Kt, 3);
    SpectralDecomp flipped = pert;
    flipped.eigenfunctions.col(1) *= -1.0;
    PerturbationReport b = perturbation_report(ref, flipped, K, Kt, 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(a.records[k].fk_norm2 == doctest::Approx(b.records[k].fk_norm2).epsilon(1e-12));
        CHECK(a.records[k].rk_norm2 == doctest::Approx(b.records[k].rk_norm2).epsilon(1e-12));
    }
    CHECK(a.records[1].sigma_k == -b.records[1].sigma_k);
}

TEST_CASE("Monte Carlo: fk2 and eigenvalue bounds over sample covariances") {
    GPModel m = make_gp_model(64, 2.0, 2.0, 32);
    Eigen::MatrixXd K = kernel_matrix(m);
    SpectralDecomp ref = decomp_from_model(m);
    Rng rng(13);
    int applicable = 0;
    for (int rep = 0; rep < 25; ++rep) {
        SampleSet s = sample_paths(m, 2000, rng);
        Eigen::MatrixXd Kt = sample_covariance(s);
        SpectralDecomp pert = eigendecompose(Kt, m.grid);
        PerturbationReport pr = perturbation_report(ref, pert, K, Kt, 3);
        for (const auto& rec : pr.records) {
            CHECK(rec.evalue_ok);
            if (rec.gap_ok) {
                ++applicable;
                CHECK(*rec.fk2_ok);
                CHECK(*rec.rjk_ok);
            }
        }
    }
    CHECK(applicable > 0);
}

TEST_CASE("projection_diff basics") {
    GPModel m = model_t2(32, 16);
    SpectralDecomp ref = decomp_from_model(m);
    Eigen::VectorXd bcoef(16);
    for (int k = 1; k <= 16; ++k) bcoef(k - 1) = std::pow(k, -3.0);
    GridFunction beta = {m.grid, m.basis.functions * bcoef};

    SUBCASE("identical decompositions give zero everywhere") {
        ProjectionDiff pd = projection_diff(ref, ref, beta, 4);
        CHECK(pd.actual < 1e-24);
        for (double t : pd.terms) CHECK(t < 1e-24);
        CHECK(pd.valid);
    }

    SUBCASE("p = full rank makes both projections the identity") {
        // full-rank PD kernel: K plus a small multiple of the identity
        Eigen::MatrixXd K = kernel_matrix(m) + 0.01 * Eigen::MatrixXd::Identity(32, 32);
        SpectralDecomp full_ref = eigendecompose(K, m.grid);
        Rng rng(3);
        Eigen::MatrixXd noise(32, 32);
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j <= i; ++j) noise(i, j) = noise(j, i) = 1e-5 * rng.gaussian();
        SpectralDecomp pert = eigendecompose(K + noise, m.grid);
        ProjectionDiff pd = projection_diff(full_ref, pert, beta, 32);
        CHECK(pd.actual < 1e-16);
    }
}

TEST_CASE("projection bound holds with the calibrated constant over sample covariances") {
    GPModel m = make_gp_model(64, 2.0, 2.0, 32);
    SpectralDecomp ref = decomp_from_model(m);
    Eigen::VectorXd bcoef(32);
    for (int k = 1; k <= 32; ++k) bcoef(k - 1) = 2.0 * std::pow(k, -3.0);
    GridFunction beta = {m.grid, m.basis.functions * bcoef};

    // p = 2 at n = 8000 puts 5δ below the k ≤ 2 gaps, so the bound applies;
    // p = 3 needs far larger n and stays gated by the validity flag
    Rng rng(29);
    int applicable = 0;
    for (int rep = 0; rep < 15; ++rep) {
        SampleSet s = sample_paths(m, 8000, rng);
        SpectralDecomp pert = eigendecompose(sample_covariance(s), m.grid);
        ProjectionDiff pd2 = projection_diff(ref, pert, beta, 2);
        if (pd2.valid) {
            ++applicable;
            CHECK(pd2.actual <= ProjectionDiff::cu * pd2.term_sum());
        }
        ProjectionDiff pd3 = projection_diff(ref, pert, beta, 3);
        if (pd3.valid) CHECK(pd3.actual <= ProjectionDiff::cu * pd3.term_sum());
    }
    CHECK(applicable > 0);
}

TEST_CASE("eigen_gap_sum matches hand-computed values") {
    Eigen::VectorXd th3(3);
    th3 << 1.0, 0.25, 1.0 / 9.0;
    const double expect = std::pow(2.0, -6.0) / std::pow(1.0 - 0.25, 2) +
                          std::pow(3.0, -6.0) / std::pow(1.0 - 1.0 / 9.0, 2);
    CHECK(eigen_gap_sum(th3, 1, 2.0, 6.0) == doctest::Approx(expect).epsilon(1e-14));

    // γ = 50 is dominated by the j = 2 term
    Eigen::VectorXd th100(100);
    for (int j = 1; j <= 100; ++j) th100(j - 1) = std::pow(j, -2.0);
    const double s = eigen_gap_sum(th100, 1, 2.0, 50.0);
    const double lead = std::pow(2.0, -50.0) / std::pow(th100(0) - th100(1), 2);
    CHECK(s == doctest::Approx(lead).epsilon(1e-6));

    Eigen::VectorXd flat = Eigen::VectorXd::Ones(4);
    CHECK_THROWS_AS(eigen_gap_sum(flat, 1, 2.0, 2.0), std::runtime_error);
}

TEST_CASE("kappa_k(2, alpha) grows like k^{2(1+alpha)-alpha}") {
    const int J = 500;
    Eigen::VectorXd th(J);
    for (int j = 1; j <= J; ++j) th(j - 1) = std::pow(j, -2.0);
    double rmin = 1e300, rmax = 0.0;
    for (int k = 2; k <= 40; ++k) {
        const double ratio = eigen_gap_sum(th, k, 2.0, 2.0) / std::pow(k, 4.0);
        rmin = std::min(rmin, ratio);
        rmax = std::max(rmax, ratio);
    }
    CHECK(rmax < 2.0);   // bounded above
    CHECK(rmin > 0.05);  // and not collapsing
}

TEST_CASE("lambda moment table") {
    GPModel m = make_gp_model(128, 2.0, 2.0, 48);
    Rng rng(41);
    auto rows = lambda_moment_report(400, 400, m, rng);
    for (const auto& r : rows) {
        INFO(r.name << " estimate " << r.estimate << " target " << r.target);
        CHECK(r.pass);
    }
}
