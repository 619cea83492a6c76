#pragma once

#include <cstdint>
#include <random>

namespace funglm {

/// Seeded generator handed explicitly to everything that draws randomness.
/// Replication r of an experiment uses seed = base_seed + r, so any single
/// replication can be reproduced in isolation.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double gaussian() { return normal_(eng_); }
    double uniform() { return unif_(eng_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unif_(eng_); }

    long long poisson(double mean) {
        std::poisson_distribution<long long> d(mean);
        return d(eng_);
    }
    int bernoulli(double p) { return unif_(eng_) < p ? 1 : 0; }

    std::mt19937_64& engine() { return eng_; }

  private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace funglm
