#pragma once

#include <array>
#include <functional>
#include <string>

#include "funglm/rng.hpp"

namespace funglm {

/// One-parameter exponential family {Q_λ} with densities exp(λy − ψ(λ))
/// relative to a base measure. ψ̇ is the mean of Q_λ, ψ̈ its variance.
/// `growth` is the envelope G of the third-derivative assumption
/// |ψ⃛(λ+h)| ≤ ψ̈(λ)·G(|h|), with G(0) ≥ 1 and G nondecreasing.
struct ExpFamilySpec {
    std::string name;
    std::function<double(double)> psi;
    std::function<double(double)> psi1;
    std::function<double(double)> psi2;
    std::function<double(double)> psi3;
    std::function<double(double)> growth;
    std::function<double(double, Rng&)> sample;
    double sampler_lambda_max = 40.0;  // sampling guard; evaluation guard is overflow-based
};

/// Built-in families. gaussian: ψ = λ²/2, G ≡ 1. poisson: ψ = e^λ, G(h) = e^h.
/// bernoulli: ψ = log(1+e^λ), G(h) = e^h. Unknown name throws.
ExpFamilySpec builtin_family(const std::string& name);

/// ψ evaluated with an overflow check: non-finite results throw instead of
/// silently propagating infinities.
double psi_checked(const ExpFamilySpec& f, double lambda);

struct HellingerReport {
    double h2_exact;        // 2 − 2 exp(ψ(λ+δ/2) − ψ(λ)/2 − ψ(λ+δ)/2)
    double h2_psi_bound;    // ψ(λ) + ψ(λ+δ) − 2ψ(λ+δ/2)
    double h2_model_bound;  // δ² ψ̈(λ) (1+|δ|) G(|δ|)
};

/// Squared Hellinger distance h²(Q_λ, Q_{λ+δ}) together with its two upper
/// bounds. Always h2_exact ≤ h2_psi_bound ≤ h2_model_bound (up to round-off).
HellingerReport hellinger_report(const ExpFamilySpec& f, double lambda, double delta);

/// Lattice checks of the family assumptions. The inequalities are stated for
/// all real λ, h; the lattice (λ ∈ [−30,30] step 0.25, h ∈ [0,3] step 0.05,
/// both signs of h) is the testable surrogate.
struct AssumptionReport {
    bool variance_positive;
    bool psi3_envelope_ok;
    std::array<double, 3> growth_eps;        // ε values: 0.1, 0.5, 1
    std::array<double, 3> growth_constants;  // fitted C_ε = max ψ̈(λ) e^{−ελ²}
    bool growth_finite;
};
AssumptionReport check_assumptions(const ExpFamilySpec& f);

/// Sampler moment check at a fixed λ: empirical mean/variance of `draws`
/// samples against ψ̇(λ), ψ̈(λ) at 4 Monte Carlo standard errors.
struct SamplerMoments {
    double lambda;
    double mean, mean_se;
    double var, var_se;
    bool mean_ok, var_ok;
};
SamplerMoments check_sampler_moments(const ExpFamilySpec& f, double lambda, int draws, Rng& rng);

}  // namespace funglm
