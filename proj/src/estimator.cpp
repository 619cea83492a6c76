#include "funglm/estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace funglm {

double ModelTruth::b0() const { return a + inner(gp.mu, beta_fn); }

ModelTruth make_truth(ExpFamilySpec family, GPModel gp, double a, double beta_exp,
                      bool alternate_signs) {
    const int J = gp.j_max();
    Eigen::VectorXd b(J);
    for (int k = 1; k <= J; ++k) {
        b(k - 1) = gp.R * std::pow(k, -beta_exp);
        if (alternate_signs && k % 2 == 0) b(k - 1) = -b(k - 1);
    }
    return make_truth_with_b(std::move(family), std::move(gp), a, beta_exp, std::move(b));
}

ModelTruth make_truth_with_b(ExpFamilySpec family, GPModel gp, double a, double beta_exp,
                             Eigen::VectorXd b) {
    if (!(gp.alpha > 1.0)) throw std::invalid_argument("truth: alpha must be > 1");
    if (!(beta_exp > (gp.alpha + 3.0) / 2.0))
        throw std::invalid_argument("truth: beta must exceed (alpha+3)/2");
    if (std::fabs(a) > gp.R) throw std::invalid_argument("truth: |a| must be <= R");
    if (norm(gp.mu) > gp.R + 1e-12)
        throw std::invalid_argument("truth: mean function norm must be <= R");
    if (b.size() != gp.j_max()) throw std::invalid_argument("truth: coefficient count");
    for (int k = 1; k <= b.size(); ++k)
        if (std::fabs(b(k - 1)) > gp.R * std::pow(k, -beta_exp) + 1e-12)
            throw std::invalid_argument("truth: |b_k| exceeds R k^{-beta} at k=" +
                                        std::to_string(k));
    ModelTruth t;
    t.a = a;
    t.b = std::move(b);
    t.alpha = gp.alpha;
    t.beta_exp = beta_exp;
    t.R = gp.R;
    t.beta_fn = {gp.grid, gp.basis.functions * t.b};
    t.gp = std::move(gp);
    t.family = std::move(family);
    return t;
}

double default_zeta(double alpha, double beta_exp) {
    return 0.5 * (1.0 / (2.0 + 2.0 * alpha) + 1.0 / (alpha + 2.0 * beta_exp - 1.0));
}

Sched schedule(long n, double alpha, double beta_exp, double zeta) {
    if (!(alpha > 1.0)) throw std::invalid_argument("schedule: alpha must be > 1");
    if (!(beta_exp > (alpha + 3.0) / 2.0))
        throw std::invalid_argument("schedule: beta must exceed (alpha+3)/2");
    const double lo = 1.0 / (alpha + 2.0 * beta_exp - 1.0);
    const double hi = 1.0 / (2.0 + 2.0 * alpha);
    if (!(zeta > lo && zeta < hi))
        throw std::invalid_argument("schedule: zeta=" + std::to_string(zeta) +
                                    " outside the admissible open window (" + std::to_string(lo) +
                                    ", " + std::to_string(hi) + ")");
    if (n < 2) throw std::invalid_argument("schedule: n must be >= 2");
    const double nd = static_cast<double>(n);
    Sched s;
    s.m = std::max<long>(1, std::llround(std::pow(nd, 1.0 / (alpha + 2.0 * beta_exp))));
    s.N = std::max<long>(s.m + 1, std::llround(std::pow(nd, zeta)));
    return s;
}

Dataset simulate_dataset(const ModelTruth& truth, int n, Rng& rng) {
    if (n < 2) throw std::invalid_argument("simulate_dataset: n must be >= 2");
    Dataset d;
    d.sample = sample_paths(truth.gp, n, rng);
    d.lambda.resize(n);
    d.y.resize(n);
    const double guard = 500.0;
    for (int i = 0; i < n; ++i) {
        const double lam =
            truth.a + d.sample.paths.col(i).dot(truth.beta_fn.values) / truth.gp.grid.size;
        if (std::fabs(lam) > guard || std::fabs(lam) > truth.family.sampler_lambda_max)
            throw std::runtime_error("simulate_dataset: |lambda| overflow at observation " +
                                     std::to_string(i));
        d.lambda(i) = lam;
        d.y(i) = truth.family.sample(lam, rng);
    }
    return d;
}

namespace {

Sched resolve_schedule(long n, const EstimatorOptions& opts) {
    Sched s;
    if (opts.m_override > 0 && opts.N_override > 0) {
        s.m = opts.m_override;
        s.N = opts.N_override;
        return s;
    }
    const double zeta =
        opts.zeta > 0 ? opts.zeta : default_zeta(opts.alpha, opts.beta_exp);
    s = schedule(n, opts.alpha, opts.beta_exp, zeta);
    if (opts.m_override > 0) s.m = opts.m_override;
    if (opts.N_override > 0) s.N = std::max(opts.N_override, s.m);
    return s;
}

double tail_sq_beyond(const Eigen::VectorXd& b, int m) {
    double s = 0.0;
    for (int k = m; k < b.size(); ++k) s += b(k) * b(k);
    return s;
}

}  // namespace

EstimateResult estimate_known(const Dataset& data, const ModelTruth& truth,
                              const EstimatorOptions& opts) {
    const int n = data.sample.n();
    const Sched sc = resolve_schedule(n, opts);
    if (sc.N > truth.gp.j_max())
        throw std::invalid_argument("estimate_known: N exceeds the model's J_max");

    Eigen::MatrixXd xi(n, sc.N + 1);
    xi.col(0).setOnes();
    xi.rightCols(sc.N) = data.sample.scores.leftCols(sc.N);

    Eigen::VectorXd gamma(sc.N + 1);
    gamma(0) = truth.b0();
    gamma.tail(sc.N) = truth.b.head(sc.N);

    DesignSet design = make_design(std::move(xi), data.y, truth.family, gamma);
    EstimateResult res;
    res.m = sc.m;
    res.N = sc.N;
    res.fit = fit_mle(design, opts.fit);
    res.ghat = res.fit.ghat;
    res.beta_hat = {truth.gp.grid,
                    truth.gp.basis.functions.leftCols(sc.m) * res.fit.ghat.segment(1, sc.m)};
    Eigen::VectorXd err = truth.beta_fn.values - res.beta_hat.values;
    res.ise = err.squaredNorm() / truth.gp.grid.size;
    res.tail_sq = tail_sq_beyond(truth.b, sc.m);
    return res;
}

EstimateResult estimate_unknown(const Dataset& data, const EstimatorOptions& opts,
                                const ModelTruth* truth) {
    const int n = data.sample.n();
    if (n < 3) throw std::invalid_argument("estimate_unknown: n must be >= 3");
    const Sched sc = resolve_schedule(n, opts);
    const Grid grid = data.sample.grid;

    Eigen::MatrixXd Ktilde = sample_covariance(data.sample);
    SpectralDecomp decomp = eigendecompose(Ktilde, grid);
    for (int k : opts.flip_signs) {
        if (k < 1 || k > decomp.count())
            throw std::invalid_argument("estimate_unknown: flip index out of range");
        decomp.eigenfunctions.col(k - 1) *= -1.0;
    }

    if (sc.N > decomp.count() ||
        decomp.eigenvalues(sc.N - 1) <= 1e-12 * std::max(decomp.eigenvalues(0), 1e-300))
        throw std::runtime_error(
            "estimate_unknown: estimated eigenvalue theta_" + std::to_string(sc.N) +
            " is not positive; increase n or decrease zeta");

    // centered scores ⟨X_i − X̄, φ̃_k⟩ — the true mean cancels
    Eigen::MatrixXd centered = data.sample.paths.colwise() - data.sample.paths.rowwise().mean();
    Eigen::MatrixXd scores =
        centered.transpose() * decomp.eigenfunctions.leftCols(sc.N) / grid.size;

    Eigen::MatrixXd xi(n, sc.N + 1);
    xi.col(0).setOnes();
    xi.rightCols(sc.N) = scores;

    std::optional<Eigen::VectorXd> gamma;
    if (truth) {
        Eigen::VectorXd g(sc.N + 1);
        Eigen::VectorXd xbar = data.sample.paths.rowwise().mean();
        g(0) = truth->a + xbar.dot(truth->beta_fn.values) / grid.size;
        g.tail(sc.N) =
            decomp.eigenfunctions.leftCols(sc.N).transpose() * truth->beta_fn.values / grid.size;
        gamma = std::move(g);
    }

    if (!truth && !opts.family)
        throw std::invalid_argument("estimate_unknown: family required when no truth is given");
    DesignSet design =
        make_design(std::move(xi), data.y, truth ? truth->family : *opts.family, gamma);
    EstimateResult res;
    res.m = sc.m;
    res.N = sc.N;
    res.fit = fit_mle(design, opts.fit);
    res.ghat = res.fit.ghat;
    res.beta_hat = {grid, decomp.eigenfunctions.leftCols(sc.m) * res.fit.ghat.segment(1, sc.m)};

    UnknownDiag diag;
    diag.theta_tilde = decomp.eigenvalues.head(sc.N);
    // score-Gram identity: (n−1)^{−1} Σ ξ̃ξ̃' has zero cross terms, diagonal
    // k≥1 equal to θ̃_k/θ_k (true θ when available, else θ̃ itself scaling to 1)
    {
        Eigen::VectorXd Dd(sc.N + 1);
        Dd(0) = 1.0;
        for (int k = 1; k <= sc.N; ++k)
            Dd(k) = std::sqrt(truth ? truth->gp.theta(k - 1) : decomp.eigenvalues(k - 1));
        Eigen::MatrixXd eta = design.xi * Dd.cwiseInverse().asDiagonal();
        Eigen::MatrixXd gram = eta.transpose() * eta / (n - 1);
        double dev = std::fabs(gram(0, 0) - static_cast<double>(n) / (n - 1));
        for (int k = 1; k <= sc.N; ++k) {
            const double want =
                truth ? decomp.eigenvalues(k - 1) / truth->gp.theta(k - 1) : 1.0;
            dev = std::max(dev, std::fabs(gram(k, k) - want));
            dev = std::max(dev, std::fabs(gram(0, k)));
            for (int j = 1; j < k; ++j) dev = std::max(dev, std::fabs(gram(j, k)));
        }
        diag.score_gram_dev = dev;
    }
    if (truth) {
        diag.delta_op = delta_norm(kernel_matrix(truth->gp), Ktilde, grid).op_norm;
        diag.sigma.resize(sc.N);
        for (int k = 1; k <= sc.N; ++k) {
            const double a =
                truth->gp.basis.functions.col(k - 1).dot(decomp.eigenfunctions.col(k - 1));
            diag.sigma[k - 1] = (a >= 0.0) ? 1 : -1;
        }
        Eigen::VectorXd err = truth->beta_fn.values - res.beta_hat.values;
        res.ise = err.squaredNorm() / grid.size;
        res.tail_sq = tail_sq_beyond(truth->b, sc.m);
    }
    res.diag = std::move(diag);
    return res;
}

TvChain tv_hellinger_chain(const ModelTruth& truth, const SampleSet& sample, int N) {
    const int J = truth.gp.j_max();
    if (N < 0 || N > J) throw std::invalid_argument("tv_hellinger_chain: bad N");
    const double b0 = truth.b0();
    TvChain out{0.0, 0.0};
    for (int i = 0; i < sample.n(); ++i) {
        double lam_full = b0, delta = 0.0;
        for (int k = 0; k < J; ++k) {
            const double t = sample.scores(i, k) * truth.b(k);
            lam_full += t;
            if (k >= N) delta += t;
        }
        // h²(Q_{λ_i}, Q_{λ_{i,N}}) via the model bound at base λ_i, shift −δ_i
        out.h2_sum += hellinger_report(truth.family, lam_full, -delta).h2_model_bound;
    }
    out.tv_bound = std::sqrt(out.h2_sum);
    return out;
}

TxxnRecord txxn_diagnostics(const ModelTruth& truth, const Dataset& data,
                            const EstimatorOptions& opts) {
    const int n = data.sample.n();
    const Sched sc = resolve_schedule(n, opts);
    const Grid grid = data.sample.grid;

    TxxnRecord rec;
    rec.n = n;
    rec.m = sc.m;
    rec.N = sc.N;
    rec.rho_n = std::pow(static_cast<double>(n),
                         (1.0 - 2.0 * truth.beta_exp) / (truth.alpha + 2.0 * truth.beta_exp));

    Eigen::MatrixXd Ktilde = sample_covariance(data.sample);
    SpectralDecomp pert = eigendecompose(Ktilde, grid);
    SpectralDecomp ref = decomp_from_model(truth.gp);
    rec.delta = delta_norm(kernel_matrix(truth.gp), Ktilde, grid).op_norm;

    Eigen::MatrixXd Z = data.sample.paths.colwise() - truth.gp.mu.values;
    rec.max_znorm2 = Z.colwise().squaredNorm().maxCoeff() / grid.size;
    rec.zbar_norm = std::sqrt(Z.rowwise().mean().squaredNorm() / grid.size);

    rec.proj_m = projection_diff(ref, pert, truth.beta_fn, sc.m).actual;
    rec.proj_N = projection_diff(ref, pert, truth.beta_fn, sc.N).actual;

    // η̃_i = D^{−1} ξ̃_i with the true scaling D = diag(1, √θ_1, …, √θ_N)
    Eigen::MatrixXd centered = data.sample.paths.colwise() - data.sample.paths.rowwise().mean();
    Eigen::MatrixXd tscores = centered.transpose() * pert.eigenfunctions.leftCols(sc.N) / grid.size;
    Eigen::VectorXd Dd(sc.N + 1);
    Dd(0) = 1.0;
    for (int k = 1; k <= sc.N; ++k) Dd(k) = std::sqrt(truth.gp.theta(k - 1));
    Eigen::MatrixXd teta(n, sc.N + 1);
    teta.col(0).setOnes();
    teta.rightCols(sc.N) = tscores * Dd.tail(sc.N).cwiseInverse().asDiagonal();
    rec.max_eta2 = teta.rowwise().squaredNorm().maxCoeff();

    // Ã_n vs A_n after sign alignment S̃
    Eigen::VectorXd tgamma(sc.N + 1);
    Eigen::VectorXd xbar = data.sample.paths.rowwise().mean();
    tgamma(0) = truth.a + xbar.dot(truth.beta_fn.values) / grid.size;
    tgamma.tail(sc.N) =
        pert.eigenfunctions.leftCols(sc.N).transpose() * truth.beta_fn.values / grid.size;
    Eigen::VectorXd tlam(n);
    for (int i = 0; i < n; ++i)
        tlam(i) = tgamma(0) + tscores.row(i).dot(tgamma.tail(sc.N));

    Eigen::MatrixXd eta(n, sc.N + 1);
    eta.col(0).setOnes();
    for (int k = 1; k <= sc.N; ++k)
        eta.col(k) = data.sample.scores.col(k - 1) / Dd(k);
    Eigen::VectorXd gamma(sc.N + 1);
    gamma(0) = truth.b0();
    gamma.tail(sc.N) = truth.b.head(sc.N);
    Eigen::VectorXd lamN(n);
    for (int i = 0; i < n; ++i)
        lamN(i) = gamma(0) + data.sample.scores.row(i).head(sc.N).dot(truth.b.head(sc.N));

    Eigen::VectorXd S(sc.N + 1);
    S(0) = 1.0;
    for (int k = 1; k <= sc.N; ++k) {
        const double a = truth.gp.basis.functions.col(k - 1).dot(pert.eigenfunctions.col(k - 1));
        S(k) = (a >= 0.0) ? 1.0 : -1.0;
    }

    Eigen::MatrixXd An = Eigen::MatrixXd::Zero(sc.N + 1, sc.N + 1);
    Eigen::MatrixXd tAn = An;
    for (int i = 0; i < n; ++i) {
        An += truth.family.psi2(lamN(i)) * (eta.row(i).transpose() * eta.row(i));
        tAn += truth.family.psi2(tlam(i)) * (teta.row(i).transpose() * teta.row(i));
    }
    An /= n;
    tAn /= n;
    Eigen::MatrixXd gap = S.asDiagonal() * tAn * S.asDiagonal();
    gap -= An;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gap, Eigen::EigenvaluesOnly);
    rec.a_gap = es.eigenvalues().cwiseAbs().maxCoeff();
    return rec;
}

}  // namespace funglm
