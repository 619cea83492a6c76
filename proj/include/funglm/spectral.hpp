#pragma once

#include <optional>
#include <vector>

#include "funglm/gp.hpp"
#include "funglm/grid.hpp"

namespace funglm {

/// Eigenpairs of the kernel operator f ↦ (1/T) Σ_g kernel(·,t_g) f(t_g),
/// eigenvalues sorted nonincreasing, eigenfunctions orthonormal in the
/// discrete L2 inner product.
struct SpectralDecomp {
    Grid grid;
    Eigen::VectorXd eigenvalues;     // length J (J = T for a full decomposition)
    Eigen::MatrixXd eigenfunctions;  // T x J, column k = φ_k values

    int count() const { return static_cast<int>(eigenvalues.size()); }
    GridFunction eigenfunction(int k) const { return {grid, eigenfunctions.col(k)}; }
};

/// Dense symmetric eigendecomposition of the weighted kernel matrix.
/// Eigenvalues in [−1e−10·scale, 0) are clamped to 0 (sample covariances are
/// PSD up to round-off); anything more negative is an error.
SpectralDecomp eigendecompose(const Eigen::MatrixXd& kernel, const Grid& grid);

/// The exact decomposition of a model built from an orthonormal basis.
SpectralDecomp decomp_from_model(const GPModel& model);

/// Kernel matrix Σ_k θ_k φ_k(s) φ_k(t) of a decomposition (or model).
Eigen::MatrixXd kernel_matrix(const SpectralDecomp& d);
Eigen::MatrixXd kernel_matrix(const GPModel& model);

struct DeltaNorm {
    double op_norm;    // ‖Δ‖, spectral norm of the difference operator
    double frobenius;  // coordinate (Frobenius) upper bound, ≥ op_norm
};
DeltaNorm delta_norm(const Eigen::MatrixXd& K, const Eigen::MatrixXd& Ktilde, const Grid& grid);

/// Per-k record of the perturbation diagnostics: gap ε_k, alignment sign σ_k,
/// the aligned eigenfunction error f_k = σ_k φ̃_k − φ_k, its main term Λ_k and
/// remainder r_k, plus the bound flags. fk2_ok / rjk_ok are empty when the gap
/// condition ε_k > 5δ fails (the bounds are not applicable there).
struct PerturbationRecord {
    int k = 0;  // 1-based
    double eps_k = 0.0;
    int sigma_k = 1;
    double fk_norm2 = 0.0;
    double lam_norm2 = 0.0;
    double rk_norm2 = 0.0;
    double evalue_gap = 0.0;  // |θ_k − θ̃_k|
    bool evalue_ok = false;   // |θ_k − θ̃_k| ≤ δ (+1e−10 slack)
    bool gap_ok = false;      // ε_k > 5δ
    std::optional<bool> fk2_ok;  // ‖f_k‖² ≤ 9‖Λ_k‖²
    std::optional<bool> rjk_ok;  // |r_{k,j}| ≤ 5δ‖Λ_k‖/|θ_k−θ_j| for all j ≠ k
};

struct PerturbationReport {
    double delta = 0.0;
    std::vector<PerturbationRecord> records;
};

PerturbationReport perturbation_report(const SpectralDecomp& ref, const SpectralDecomp& pert,
                                       const Eigen::MatrixXd& K, const Eigen::MatrixXd& Ktilde,
                                       int kmax);

/// ‖(H̃_p − H_p)β‖² computed directly, together with the seven terms of the
/// projection bound evaluated with J = {1..p}. `valid` requires
/// min_{k≤p} ε_k > 5δ. `cu` is the calibrated universal constant used by the
/// harness when asserting actual ≤ cu·Σ terms (calibration, not derivation).
struct ProjectionDiff {
    double actual = 0.0;
    std::array<double, 7> terms{};
    bool valid = false;
    double delta = 0.0;
    static constexpr double cu = 50.0;

    double term_sum() const {
        double s = 0.0;
        for (double t : terms) s += t;
        return s;
    }
};

ProjectionDiff projection_diff(const SpectralDecomp& ref, const SpectralDecomp& pert,
                               const GridFunction& beta, int p);

/// κ_k(r, γ) = Σ_{j≠k, j≤horizon} j^{−γ} / |θ_j − θ_k|^r. Horizon is the
/// length of the eigenvalue sequence. A zero gap is an error.
double eigen_gap_sum(const Eigen::VectorXd& theta, int k, double r, double gamma);

/// Monte Carlo moments of Λ_{k,j} = √(θ_j θ_k) S_{j,k}/(θ_k − θ_j) against the
/// zero-mean, n-doubling and k² scalings.
std::vector<MomentRow> lambda_moment_report(int n, int reps, const GPModel& model, Rng& rng);

}  // namespace funglm
