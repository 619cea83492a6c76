#include "funglm/lowerbound.hpp"

#include <cmath>
#include <stdexcept>

namespace funglm {

HypercubeSpec make_hypercube(ExpFamilySpec family, const GPModel& gp, double beta_exp, int m) {
    if (m < 1) throw std::invalid_argument("hypercube: m must be >= 1");
    if (2 * m > gp.j_max())
        throw std::invalid_argument("hypercube: J = {m+1..2m} needs J_max >= 2m");
    HypercubeSpec spec;
    spec.m = m;
    spec.family = std::move(family);
    spec.beta_exp = beta_exp;
    spec.R = gp.R;
    spec.beta_env.resize(m);
    for (int j = m + 1; j <= 2 * m; ++j)
        spec.beta_env(j - m - 1) = gp.R * std::pow(j, -beta_exp);
    return spec;
}

double tuned_eps(const GPModel& gp, double beta_exp, int m, long n) {
    double worst = 0.0;
    for (int j = m + 1; j <= 2 * m; ++j) {
        const double bj = gp.R * std::pow(j, -beta_exp);
        worst = std::max(worst, bj * bj * gp.theta(j - 1));
    }
    if (worst <= 0.0) throw std::invalid_argument("tuned_eps: degenerate spectrum on J");
    return 1.0 / std::sqrt(static_cast<double>(n) * worst);
}

double flip_h2_sum(const HypercubeSpec& spec, const std::vector<int>& gamma, int j,
                   const SampleSet& sample) {
    const int m = spec.m;
    if (static_cast<int>(gamma.size()) != m)
        throw std::invalid_argument("flip_h2_sum: gamma must have m bits");
    if (j < m + 1 || j > 2 * m) throw std::invalid_argument("flip_h2_sum: j must lie in J");
    if (sample.scores.cols() < 2 * m)
        throw std::invalid_argument("flip_h2_sum: sample lacks scores on J");

    const int jj = j - m - 1;
    double sum = 0.0;
    for (int i = 0; i < sample.n(); ++i) {
        double lam = 0.0;
        for (int l = 0; l < m; ++l)
            if (gamma[l]) lam += spec.eps * spec.beta_env(l) * sample.scores(i, m + l);
        const double delta =
            (gamma[jj] ? -1.0 : 1.0) * spec.eps * spec.beta_env(jj) * sample.scores(i, m + jj);
        sum += hellinger_report(spec.family, lam, delta).h2_exact;
    }
    return sum;
}

AffinityReport affinity_scan(const HypercubeSpec& spec, const SampleSet& sample, int gamma_draws,
                             Rng& rng) {
    const int m = spec.m;
    std::vector<std::vector<int>> patterns;
    if (gamma_draws <= 0) {
        if (m > 12) throw std::invalid_argument("affinity_scan: enumeration limited to m <= 12");
        for (long code = 0; code < (1L << m); ++code) {
            std::vector<int> g(m);
            for (int l = 0; l < m; ++l) g[l] = (code >> l) & 1;
            patterns.push_back(std::move(g));
        }
    } else {
        for (int d = 0; d < gamma_draws; ++d) {
            std::vector<int> g(m);
            for (int l = 0; l < m; ++l) g[l] = rng.bernoulli(0.5);
            patterns.push_back(std::move(g));
        }
    }

    AffinityReport rep;
    for (int p = 0; p < static_cast<int>(patterns.size()); ++p) {
        for (int j = m + 1; j <= 2 * m; ++j) {
            AffinityRow row;
            row.j = j;
            row.pattern = p;
            row.h2_sum = flip_h2_sum(spec, patterns[p], j, sample);
            row.affinity_lb = std::max(0.0, 1.0 - std::sqrt(std::min(row.h2_sum, 2.0)));
            rep.min_affinity = std::min(rep.min_affinity, row.affinity_lb);
            rep.rows.push_back(row);
        }
    }
    return rep;
}

AssouadBound assouad_bound(const HypercubeSpec& spec, const AffinityReport& report, long n,
                           double alpha) {
    AssouadBound out;
    out.bound = 0.25 * spec.eps * spec.eps * spec.beta_env.squaredNorm() * report.min_affinity;
    out.rho_n = std::pow(static_cast<double>(n),
                         (1.0 - 2.0 * spec.beta_exp) / (alpha + 2.0 * spec.beta_exp));
    out.ratio = out.bound / out.rho_n;
    return out;
}

}  // namespace funglm
