#pragma once

#include <optional>
#include <string>
#include <vector>

#include "funglm/grid.hpp"
#include "funglm/rng.hpp"

namespace funglm {

/// Gaussian process on the grid with Karhunen–Loève structure
/// X = μ + Σ_{j≤J_max} √θ_j η_j φ_j, θ_j = R·j^{−α}, φ_j the cosine basis.
///
/// The eigenvalue conditions R k^{−α} ≥ θ_k ≥ θ_{k+1} + (α/R) k^{−α−1} and the
/// increment consequence θ_k − θ_j ≥ R^{−1}(k^{−α} − j^{−α}) are verified at
/// construction and recorded in the flags below; they are not constructor
/// errors because the conditions fail for some admissible scales (e.g. R=1).
struct GPModel {
    Grid grid;
    GridFunction mu;
    Eigen::VectorXd theta;  // decreasing, length J_max
    BasisSet basis;         // first J_max cosine functions
    double alpha = 0.0;
    double R = 0.0;

    bool envelope_ok = false;   // R k^{−α} ≥ θ_k
    bool spacing_ok = false;    // θ_k ≥ θ_{k+1} + (α/R) k^{−α−1}
    bool increment_ok = false;  // θ_k − θ_j ≥ R^{−1}(k^{−α} − j^{−α}), k < j
    double kl_tail_fraction = 0.0;  // truncation error Σ_{j>J_max}θ_j / Σ_j θ_j (integral tail)

    int j_max() const { return static_cast<int>(theta.size()); }
};

/// θ_j = R·j^{−α} for j = 1..J_max (the upper envelope, so the first condition
/// holds with equality). J_max = 0 selects min(T/2, 200). μ defaults to zero.
GPModel make_gp_model(int T, double alpha, double R, int J_max = 0,
                      std::optional<GridFunction> mu = std::nullopt);

/// Same structure with explicitly supplied eigenvalues (tests use degenerate
/// and hand-picked spectra).
GPModel make_gp_model_with_theta(int T, double alpha, double R, Eigen::VectorXd theta,
                                 std::optional<GridFunction> mu = std::nullopt);

/// n simulated paths (columns) with cached scores z_{i,j} = ⟨X_i − μ, φ_j⟩
/// recomputed through the discrete inner product.
struct SampleSet {
    Grid grid;
    Eigen::MatrixXd paths;   // T x n
    Eigen::MatrixXd scores;  // n x J_max

    int n() const { return static_cast<int>(paths.cols()); }
};

SampleSet sample_paths(const GPModel& model, int n, Rng& rng);

GridFunction sample_mean(const SampleSet& s);

/// K̃(s,t) = (n−1)^{−1} Σ_i (X_i(s)−X̄(s))(X_i(t)−X̄(t)) as a T×T kernel matrix.
Eigen::MatrixXd sample_covariance(const SampleSet& s);

/// Empirical check of the quadratic-form tail bound
/// P{max_i W_i > 4T(log n + x)} < 2e^{−x}, W_i = Σ_k τ_{i,k} η_{i,k}².
struct MaxQuadResult {
    double empirical;  // exceedance frequency over the replications
    double bound;      // 2 e^{−x}
    double se;         // binomial standard error of the frequency
    double threshold;  // 4 T (log n + x)
};
MaxQuadResult max_quad_tail_check(const Eigen::MatrixXd& tau, int n, double x, int reps,
                                  Rng& rng);

/// One line of a Monte Carlo moment table.
struct MomentRow {
    std::string name;
    double estimate;
    double target;
    double tolerance;  // |estimate − target| allowed (absolute)
    bool pass;
};

/// Moments of the standardized sample covariance S_{j,k} over `reps`
/// replications at sample sizes n and 2n: E S_jj = 1, Var S_jj = 2/(n−1),
/// E S_jk = 0 (4 MC standard errors each), and the O(n^{−1}), O(n^{−2})
/// scalings as n-doubling ratios.
std::vector<MomentRow> sample_cov_moment_report(int n, int reps, Rng& rng);

}  // namespace funglm
