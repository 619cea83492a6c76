#pragma once

#include <optional>
#include <vector>

#include "funglm/expfam.hpp"
#include "funglm/grid.hpp"

namespace funglm {

/// Design for the (N+1)-dimensional exponential-family likelihood:
/// rows ξ_i' of `xi`, responses y_i, with y_i ~ Q_{ξ_i'γ} in simulation mode
/// (γ recorded in gamma_true).
struct DesignSet {
    Eigen::MatrixXd xi;  // n x (N+1)
    Eigen::VectorXd y;
    ExpFamilySpec family;
    std::optional<Eigen::VectorXd> gamma_true;
    bool underdetermined = false;  // n <= N+1

    int n() const { return static_cast<int>(xi.rows()); }
    int dim() const { return static_cast<int>(xi.cols()); }
};

DesignSet make_design(Eigen::MatrixXd xi, Eigen::VectorXd y, ExpFamilySpec family,
                      std::optional<Eigen::VectorXd> gamma_true = std::nullopt);

struct FitOptions {
    double tol = 1e-10;            // sup-norm gradient stopping rule
    int max_iter = 100;
    double ridge = 1e-12;          // scale of the fallback ridge for singular Hessians
    double overflow_guard = 500.0; // |ξ_i'g| cap during iteration
    bool warm_start = true;        // start from gamma_true when available
};

struct FitResult {
    Eigen::VectorXd ghat;
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;  // final sup-norm of the score
    bool ridge_used = false;
};

/// Damped Newton ascent on the concave log-likelihood
/// L_n(g) = Σ_i (ξ_i'g) y_i − ψ(ξ_i'g). Steps are halved until L_n increases
/// and whenever a linear predictor would cross the overflow guard; a guard
/// violation that persists at the step floor names the offending row.
FitResult fit_mle(const DesignSet& d, const FitOptions& opts = {});

double log_likelihood(const DesignSet& d, const Eigen::VectorXd& g);
Eigen::VectorXd log_likelihood_gradient(const DesignSet& d, const Eigen::VectorXd& g);
Eigen::MatrixXd log_likelihood_hessian(const DesignSet& d, const Eigen::VectorXd& g);

/// The approximation quantities at the simulation truth γ:
/// J_n = Σ ξ_i ξ_i' ψ̈(λ_i), w_i = J_n^{−1/2} ξ_i,
/// W_n = Σ w_i (y_i − ψ̇(λ_i)), r_n = J_n^{1/2}(ĝ − γ) − W_n, M_n = max_i |w_i|.
struct MleDiagnostics {
    Eigen::MatrixXd J;
    Eigen::VectorXd W;
    Eigen::VectorXd r;
    double M = 0.0;
};

MleDiagnostics mle_diagnostics(const DesignSet& d, const Eigen::VectorXd& gamma,
                               const FitResult& fit);

/// Precondition / conclusion split of the approximation lemma:
/// precondition M_n ≤ ε₁ε₂ / (2 G(1) N₊), event |W_n| ≤ √(N₊/ε₂),
/// conclusion |r_n| ≤ ε₁. At honest desk-scale constants the precondition
/// often fails; the two are reported separately, never asserted jointly.
struct LemmaCheck {
    double m_bound;
    bool precond_ok;
    double w_radius;
    bool w_event;
    bool r_ok;
};
LemmaCheck mle_lemma_check(const ExpFamilySpec& family, const MleDiagnostics& diag, double eps1,
                           double eps2);

/// A_n = n^{−1} Σ η_i η_i' ψ̈(λ_i) with ξ_i = D η_i, and its expectation
/// B_n computed by 64-point Gauss–Hermite quadrature of
/// r_j = E η^j ψ̈(ā + κη), κ² = Σ_{k≥1}(D_k γ_k)². B is returned in design
/// coordinates (the block form diag([[r0,r1],[r1,r2]], r0·I) rotated onto the
/// direction of Dγ) so that E A_n = B_n entrywise.
struct AnBn {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    double r0, r1, r2;
    double abar, kappa;
};
AnBn an_bn_matrices(const DesignSet& d, const Eigen::VectorXd& D_diag,
                    const Eigen::VectorXd& gamma);

/// Corollary-style error bound: Σ_j |κ_j'(ĝ−γ)|² ≤ 6‖B⁻¹‖/(nε) Σ_j |D⁻¹κ_j|²,
/// with the two preconditions reported alongside.
struct CorollaryCheck {
    double lhs, rhs;
    bool holds;
    bool precond_A;    // ‖A_n − B_n‖ ≤ (2‖B⁻¹‖)^{−1}
    bool precond_eta;  // max_i |η_i| ≤ ε√n/N₊ / (G(1)√(32‖B⁻¹‖))
    double B_inv_norm;
};
CorollaryCheck anbn_error_check(const DesignSet& d, const Eigen::VectorXd& D_diag,
                                const Eigen::VectorXd& gamma, const FitResult& fit,
                                const std::vector<Eigen::VectorXd>& kappas, double eps);

/// Symmetric square root / inverse square root via eigendecomposition.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a);
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& a);

/// E f(η) for η ~ N(0,1), 64-point Gauss–Hermite (nodes by Golub–Welsch).
double gauss_hermite_expect(const std::function<double(double)>& f);

}  // namespace funglm
