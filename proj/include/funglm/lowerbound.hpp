#pragma once

#include <vector>

#include "funglm/expfam.hpp"
#include "funglm/gp.hpp"

namespace funglm {

/// Hypercube of slope functions for the minimax lower bound: indices
/// J = {m+1, …, 2m}, envelope β_j = R·j^{−β}, slopes β_γ = ε Σ_{j∈J} γ_j β_j φ_j
/// for bit patterns γ ∈ {0,1}^m, with μ = 0 and a = 0.
struct HypercubeSpec {
    int m = 0;
    double eps = 0.0;
    ExpFamilySpec family;
    double beta_exp = 0.0, R = 0.0;
    Eigen::VectorXd beta_env;  // β_{m+1}, …, β_{2m}
};

/// Requires J_max ≥ 2m so the flipped indices have scores available.
HypercubeSpec make_hypercube(ExpFamilySpec family, const GPModel& gp, double beta_exp, int m);

/// ε tuned so that max_{j∈J} n·ε²β_j²θ_j = 1 (the per-flip Hellinger sums
/// stay O(1) uniformly in n).
double tuned_eps(const GPModel& gp, double beta_exp, int m, long n);

/// Σ_i h²(Q_{λ_i(γ)}, Q_{λ_i(ψ_j γ)}) with exact per-term Hellinger distances;
/// the parameter difference is exactly ±ε β_j z_{i,j}. `j` is the absolute
/// flipped index in J; `gamma` holds the m bits for indices m+1..2m.
double flip_h2_sum(const HypercubeSpec& spec, const std::vector<int>& gamma, int j,
                   const SampleSet& sample);

struct AffinityRow {
    int j;
    int pattern;  // index of the γ draw (or enumeration index)
    double h2_sum;
    double affinity_lb;  // max(0, 1 − min(√h2_sum, √2))
};

struct AffinityReport {
    std::vector<AffinityRow> rows;
    double min_affinity = 1.0;
};

/// Scans flips over sampled γ patterns (gamma_draws ≤ 0 enumerates all 2^m,
/// allowed for m ≤ 12).
AffinityReport affinity_scan(const HypercubeSpec& spec, const SampleSet& sample, int gamma_draws,
                             Rng& rng);

struct AssouadBound {
    double bound;  // ¼ ε² (Σ_{j∈J} β_j²) · min affinity
    double rho_n;  // n^{(1−2β)/(α+2β)}
    double ratio;  // bound / rho_n
};
AssouadBound assouad_bound(const HypercubeSpec& spec, const AffinityReport& report, long n,
                           double alpha);

}  // namespace funglm
