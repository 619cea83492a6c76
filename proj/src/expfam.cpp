#include "funglm/expfam.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace funglm {

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + e^x) without overflow
double log1pexp(double x) {
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace

ExpFamilySpec builtin_family(const std::string& name) {
    ExpFamilySpec f;
    f.name = name;
    if (name == "gaussian") {
        f.psi = [](double l) { return 0.5 * l * l; };
        f.psi1 = [](double l) { return l; };
        f.psi2 = [](double) { return 1.0; };
        f.psi3 = [](double) { return 0.0; };
        f.growth = [](double) { return 1.0; };
        f.sample = [](double l, Rng& rng) { return l + rng.gaussian(); };
        f.sampler_lambda_max = 1e12;
    } else if (name == "poisson") {
        f.psi = [](double l) { return std::exp(l); };
        f.psi1 = [](double l) { return std::exp(l); };
        f.psi2 = [](double l) { return std::exp(l); };
        f.psi3 = [](double l) { return std::exp(l); };
        f.growth = [](double h) { return std::exp(h); };
        f.sample = [](double l, Rng& rng) {
            return static_cast<double>(rng.poisson(std::exp(l)));
        };
        f.sampler_lambda_max = 40.0;  // mean e^40 ~ 2.4e17 still fits the draw type
    } else if (name == "bernoulli") {
        f.psi = [](double l) { return log1pexp(l); };
        f.psi1 = [](double l) { return sigmoid(l); };
        // σ(λ)σ(−λ) and −tanh(λ/2): stable at large |λ| where 1−σ cancels
        f.psi2 = [](double l) { return sigmoid(l) * sigmoid(-l); };
        f.psi3 = [](double l) { return -sigmoid(l) * sigmoid(-l) * std::tanh(0.5 * l); };
        f.growth = [](double h) { return std::exp(h); };
        f.sample = [](double l, Rng& rng) {
            return static_cast<double>(rng.bernoulli(sigmoid(l)));
        };
        f.sampler_lambda_max = 1e12;
    } else {
        throw std::invalid_argument("builtin_family: unknown family '" + name +
                                    "' (expected gaussian, poisson or bernoulli)");
    }
    return f;
}

double psi_checked(const ExpFamilySpec& f, double lambda) {
    if (!std::isfinite(lambda))
        throw std::invalid_argument("psi: non-finite canonical parameter");
    const double v = f.psi(lambda);
    if (!std::isfinite(v))
        throw std::runtime_error("psi overflow for family " + f.name + " at lambda=" +
                                 std::to_string(lambda));
    return v;
}

HellingerReport hellinger_report(const ExpFamilySpec& f, double lambda, double delta) {
    const double pa = psi_checked(f, lambda);
    const double pb = psi_checked(f, lambda + delta);
    const double pm = psi_checked(f, lambda + 0.5 * delta);

    // exponent ≤ 0 by convexity of ψ, so the affinity exp(·) never overflows
    const double exponent = pm - 0.5 * pa - 0.5 * pb;
    const double h2_exact = std::max(0.0, -2.0 * std::expm1(exponent));
    const double h2_psi = pa + pb - 2.0 * pm;
    const double ad = std::fabs(delta);
    const double h2_model = delta * delta * f.psi2(lambda) * (1.0 + ad) * f.growth(ad);
    if (!std::isfinite(h2_model))
        throw std::runtime_error("hellinger_report: model bound overflow at lambda=" +
                                 std::to_string(lambda));
    return {h2_exact, h2_psi, h2_model};
}

AssumptionReport check_assumptions(const ExpFamilySpec& f) {
    AssumptionReport rep;
    rep.variance_positive = true;
    rep.psi3_envelope_ok = true;
    rep.growth_eps = {0.1, 0.5, 1.0};
    rep.growth_constants = {0.0, 0.0, 0.0};
    rep.growth_finite = true;

    const double rel_slack = 1e-9;
    for (double lam = -30.0; lam <= 30.0 + 1e-12; lam += 0.25) {
        const double v = f.psi2(lam);
        if (!(v > 0.0) || !std::isfinite(v)) rep.variance_positive = false;
        for (double h = 0.0; h <= 3.0 + 1e-12; h += 0.05) {
            const double env = v * f.growth(h) * (1.0 + rel_slack) + 1e-300;
            if (std::fabs(f.psi3(lam + h)) > env) rep.psi3_envelope_ok = false;
            if (std::fabs(f.psi3(lam - h)) > env) rep.psi3_envelope_ok = false;
        }
        for (int i = 0; i < 3; ++i) {
            const double c = v * std::exp(-rep.growth_eps[i] * lam * lam);
            if (!std::isfinite(c)) rep.growth_finite = false;
            rep.growth_constants[i] = std::max(rep.growth_constants[i], c);
        }
    }
    return rep;
}

SamplerMoments check_sampler_moments(const ExpFamilySpec& f, double lambda, int draws, Rng& rng) {
    if (draws < 2) throw std::invalid_argument("check_sampler_moments: draws must be >= 2");
    std::vector<double> y(draws);
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
        y[i] = f.sample(lambda, rng);
        sum += y[i];
    }
    const double mean = sum / draws;
    double m2 = 0.0, m4 = 0.0;
    for (double v : y) {
        const double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const double var = m2 / (draws - 1);
    m4 /= draws;

    SamplerMoments sm;
    sm.lambda = lambda;
    sm.mean = mean;
    sm.var = var;
    sm.mean_se = std::sqrt(var / draws);
    sm.var_se = std::sqrt(std::max(m4 - var * var, 0.0) / draws);
    sm.mean_ok = std::fabs(mean - f.psi1(lambda)) <= 4.0 * sm.mean_se;
    sm.var_ok = std::fabs(var - f.psi2(lambda)) <= 4.0 * sm.var_se;
    return sm;
}

}  // namespace funglm
