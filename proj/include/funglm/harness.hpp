#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "funglm/estimator.hpp"

namespace funglm {

enum class HarnessMode {
    RateSweep,
    VerifySpectral,
    VerifyMle,
    VerifyHellinger,
    VerifyGaussianTail,
    LowerBound,
    SingleRun,
};

HarnessMode parse_mode(const std::string& name);  // kebab-case CLI names
std::string mode_name(HarnessMode mode);

/// Flat experiment configuration. JSON keys mirror the field names below;
/// unknown keys are rejected. `mode` in the JSON selects the estimator path
/// (known|unknown); the harness mode is the CLI subcommand.
struct ExperimentConfig {
    std::string family = "gaussian";
    double alpha = 2.0;
    double beta = 3.0;
    double R = 2.0;
    double a = 0.25;
    double zeta = 0.0;  // 0 = midpoint of the admissible window
    int T = 256;
    int J_max = 0;  // 0 = min(T/2, 200)
    std::vector<long> n_list = {256, 512, 1024, 2048, 4096};
    int reps = 50;
    std::uint64_t seed = 12345;
    std::string mode = "known";  // estimator mode: known | unknown
    std::string out_dir = "out";
    std::string out_csv;  // optional override of the data CSV filename

    // lower-bound keys
    int m = 0;  // 0 = from schedule
    std::string eps_rule = "max_one";
    double eps = 0.0;  // used when eps_rule = "fixed"
    int gamma_draws = 32;

    // MLE options
    double tol = 1e-10;
    int max_iter = 100;
    double ridge = 1e-12;
    double overflow_guard = 500.0;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

/// Throws std::invalid_argument naming the violated constraint.
void validate_config(const ExperimentConfig& cfg, HarnessMode mode);

struct AssertionRow {
    std::string name;
    double value;
    double bound;
    bool pass;
};

struct RunReport {
    std::vector<AssertionRow> assertions;
    std::string summary_json;
    bool all_passed = true;
    std::vector<std::string> artifacts;  // files written

    // mode-specific payloads consumed by the acceptance suite
    std::vector<std::pair<long, double>> median_ise;  // rate sweeps: (n, median)
    double slope = 0.0, slope_target = 0.0;
};

/// Runs one mode: writes the per-replication CSV, the assertion CSV and
/// summary.json under cfg.out_dir, and returns the assertion rows.
/// Deterministic for a fixed (config, seed); replication r uses seed + r.
RunReport run(const ExperimentConfig& cfg, HarnessMode mode);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // sum of squared residuals
    double target = 0.0;    // (1−2β)/(α+2β), filled by the sweep
    int points = 0;
};

/// OLS line through (log n, log median-ISE); needs ≥ 3 points, duplicated
/// abscissae are an error.
RateFit fit_rate(const std::vector<std::pair<double, double>>& pts);

}  // namespace funglm
