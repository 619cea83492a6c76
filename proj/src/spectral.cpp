#include "funglm/spectral.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace funglm {

namespace {

constexpr double kEvalueSlack = 1e-10;

Eigen::VectorXd mean_center_cols(Eigen::MatrixXd& m) {
    Eigen::VectorXd mu = m.colwise().mean();
    m.rowwise() -= mu.transpose();
    return mu;
}

double spectral_norm_sym(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

SpectralDecomp eigendecompose(const Eigen::MatrixXd& kernel, const Grid& grid) {
    const int T = grid.size;
    if (kernel.rows() != T || kernel.cols() != T)
        throw std::invalid_argument("eigendecompose: kernel shape does not match grid");
    if (!kernel.allFinite()) throw std::invalid_argument("eigendecompose: non-finite entries");
    const double scale = std::max(1.0, kernel.cwiseAbs().maxCoeff());
    if ((kernel - kernel.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("eigendecompose: kernel not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel / T);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecompose: solver failed");

    SpectralDecomp d;
    d.grid = grid;
    d.eigenvalues.resize(T);
    d.eigenfunctions.resize(T, T);
    const double top = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    const double sqrtT = std::sqrt(static_cast<double>(T));
    for (int k = 0; k < T; ++k) {
        double ev = es.eigenvalues()(T - 1 - k);  // descending
        if (ev < 0.0) {
            if (ev < -kEvalueSlack * top)
                throw std::runtime_error("eigendecompose: negative eigenvalue " +
                                         std::to_string(ev));
            ev = 0.0;
        }
        d.eigenvalues(k) = ev;
        d.eigenfunctions.col(k) = sqrtT * es.eigenvectors().col(T - 1 - k);
    }
    return d;
}

SpectralDecomp decomp_from_model(const GPModel& model) {
    SpectralDecomp d;
    d.grid = model.grid;
    d.eigenvalues = model.theta;
    d.eigenfunctions = model.basis.functions;
    return d;
}

Eigen::MatrixXd kernel_matrix(const SpectralDecomp& d) {
    return d.eigenfunctions * d.eigenvalues.asDiagonal() * d.eigenfunctions.transpose();
}

Eigen::MatrixXd kernel_matrix(const GPModel& model) {
    return model.basis.functions * model.theta.asDiagonal() * model.basis.functions.transpose();
}

DeltaNorm delta_norm(const Eigen::MatrixXd& K, const Eigen::MatrixXd& Ktilde, const Grid& grid) {
    if (K.rows() != Ktilde.rows() || K.cols() != Ktilde.cols())
        throw std::invalid_argument("delta_norm: shape mismatch");
    if (K.rows() != grid.size)
        throw std::invalid_argument("delta_norm: kernel shape does not match grid");
    Eigen::MatrixXd diff = (Ktilde - K) / grid.size;
    const double scale = std::max(1.0, diff.cwiseAbs().maxCoeff());
    if ((diff - diff.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("delta_norm: difference not symmetric");
    return {spectral_norm_sym(diff), diff.norm()};
}

PerturbationReport perturbation_report(const SpectralDecomp& ref, const SpectralDecomp& pert,
                                       const Eigen::MatrixXd& K, const Eigen::MatrixXd& Ktilde,
                                       int kmax) {
    if (ref.grid != pert.grid) throw std::invalid_argument("perturbation_report: grid mismatch");
    if (kmax < 1 || kmax > ref.count() || kmax > pert.count())
        throw std::invalid_argument("perturbation_report: kmax exceeds decomposition rank");

    const int T = ref.grid.size;
    const int J = ref.count();
    const auto& th = ref.eigenvalues;

    PerturbationReport rep;
    rep.delta = delta_norm(K, Ktilde, ref.grid).op_norm;

    // K̃ operator coordinates in the reference basis: T̃_{j,k} = ⟨φ_j, K̃ φ_k⟩
    Eigen::MatrixXd coords =
        ref.eigenfunctions.transpose() * Ktilde * ref.eigenfunctions / (double(T) * T);

    rep.records.reserve(kmax);
    for (int k = 1; k <= kmax; ++k) {
        PerturbationRecord rec;
        rec.k = k;

        double eps = std::numeric_limits<double>::infinity();
        for (int j = 1; j <= J; ++j)
            if (j != k) eps = std::min(eps, std::fabs(th(j - 1) - th(k - 1)));
        rec.eps_k = eps;

        const double align =
            ref.eigenfunctions.col(k - 1).dot(pert.eigenfunctions.col(k - 1)) / T;
        rec.sigma_k = (align >= 0.0) ? 1 : -1;

        Eigen::VectorXd fk =
            rec.sigma_k * pert.eigenfunctions.col(k - 1) - ref.eigenfunctions.col(k - 1);
        rec.fk_norm2 = fk.squaredNorm() / T;

        Eigen::VectorXd lam = Eigen::VectorXd::Zero(J);
        bool degenerate = false;
        for (int j = 1; j <= J; ++j) {
            if (j == k) continue;
            const double gap = th(k - 1) - th(j - 1);
            if (gap == 0.0) {
                degenerate = true;
                continue;
            }
            lam(j - 1) = coords(j - 1, k - 1) / gap;
        }
        rec.lam_norm2 = lam.squaredNorm();

        // Λ_k as a grid function. A reference decomposition with J < T columns
        // stands for an operator whose remaining T−J eigenvalues are zero; the
        // coordinates of K̃φ_k outside the span belong to Λ_k with gap θ_k.
        Eigen::VectorXd lam_grid = ref.eigenfunctions * lam;
        if (J < T && th(k - 1) > 0.0) {
            Eigen::VectorXd q = Ktilde * ref.eigenfunctions.col(k - 1) / T;
            Eigen::VectorXd resid = q - ref.eigenfunctions * coords.col(k - 1);
            rec.lam_norm2 += resid.squaredNorm() / T / (th(k - 1) * th(k - 1));
            lam_grid += resid / th(k - 1);
        }

        Eigen::VectorXd r_grid = fk - lam_grid;
        rec.rk_norm2 = r_grid.squaredNorm() / T;

        rec.evalue_gap = std::fabs(th(k - 1) - pert.eigenvalues(k - 1));
        rec.evalue_ok = rec.evalue_gap <= rep.delta + kEvalueSlack;
        rec.gap_ok = !degenerate && rec.eps_k > 5.0 * rep.delta;

        if (rec.gap_ok) {
            rec.fk2_ok = rec.fk_norm2 <= 9.0 * rec.lam_norm2 * (1.0 + 1e-9) + 1e-15;
            const double lam_norm = std::sqrt(rec.lam_norm2);
            Eigen::VectorXd r_coords = ref.eigenfunctions.transpose() * r_grid / T;
            bool rjk = true;
            for (int j = 1; j <= J; ++j) {
                if (j == k) continue;
                const double gap = std::fabs(th(k - 1) - th(j - 1));
                if (std::fabs(r_coords(j - 1)) > 5.0 * rep.delta * lam_norm / gap + 1e-12) {
                    rjk = false;
                    break;
                }
            }
            if (J < T && th(k - 1) > 0.0) {
                // zero-eigenvalue block: its whole norm obeys the same
                // 5δ‖Λ_k‖/|θ_k − 0| bound, so check it in aggregate
                Eigen::VectorXd tail = r_grid - ref.eigenfunctions * r_coords;
                if (std::sqrt(tail.squaredNorm() / T) >
                    5.0 * rep.delta * lam_norm / th(k - 1) + 1e-12)
                    rjk = false;
            }
            rec.rjk_ok = rjk;
        }
        rep.records.push_back(std::move(rec));
    }
    return rep;
}

ProjectionDiff projection_diff(const SpectralDecomp& ref, const SpectralDecomp& pert,
                               const GridFunction& beta, int p) {
    if (ref.grid != pert.grid || ref.grid != beta.grid)
        throw std::invalid_argument("projection_diff: grid mismatch");
    if (p < 1 || p > ref.count() || p > pert.count())
        throw std::invalid_argument("projection_diff: p exceeds decomposition rank");

    const int T = ref.grid.size;
    const int J = ref.count();
    const auto& th = ref.eigenvalues;

    ProjectionDiff out;

    Eigen::VectorXd b = ref.eigenfunctions.transpose() * beta.values / T;
    Eigen::VectorXd bt = pert.eigenfunctions.transpose() * beta.values / T;
    Eigen::VectorXd diff = pert.eigenfunctions.leftCols(p) * bt.head(p) -
                           ref.eigenfunctions.leftCols(p) * b.head(p);
    out.actual = diff.squaredNorm() / T;

    out.delta = spectral_norm_sym((kernel_matrix(pert) - kernel_matrix(ref)) / T);

    // K̃ coordinates in the reference basis, reconstructed from the
    // perturbed decomposition: C = M diag(θ̃) M', M_{j,l} = ⟨φ_j, φ̃_l⟩
    Eigen::MatrixXd M = ref.eigenfunctions.transpose() * pert.eigenfunctions / T;
    Eigen::MatrixXd coords = M * pert.eigenvalues.asDiagonal() * M.transpose();

    Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(J, p);  // Λ_{k,j}, column k−1
    bool degenerate = false;
    for (int k = 1; k <= p; ++k)
        for (int j = 1; j <= J; ++j) {
            if (j == k) continue;
            const double gap = th(k - 1) - th(j - 1);
            if (gap == 0.0) {
                degenerate = true;
                continue;
            }
            lam(j - 1, k - 1) = coords(j - 1, k - 1) / gap;
        }

    double min_eps = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= p; ++k)
        for (int j = 1; j <= J; ++j)
            if (j != k) min_eps = std::min(min_eps, std::fabs(th(j - 1) - th(k - 1)));
    out.valid = !degenerate && min_eps > 5.0 * out.delta;

    // the term sums run over the reference columns, so the bound is complete
    // only when the perturbed operator's range stays in that span
    if (J < T) {
        const double total2 = pert.eigenvalues.squaredNorm();
        const double span2 = (M * pert.eigenvalues.asDiagonal()).squaredNorm();
        if (total2 - span2 > 1e-10 * std::max(total2, 1e-300)) out.valid = false;
    }

    Eigen::VectorXd lam_norm2(p);
    for (int k = 0; k < p; ++k) lam_norm2(k) = lam.col(k).squaredNorm();
    const double lam_total = lam_norm2.sum();

    auto& t = out.terms;
    t.fill(0.0);
    for (int k = 1; k <= p; ++k) {
        double s1 = 0.0;  // Σ_{j>p} Λ_{k,j} b_j
        double s5 = 0.0;  // Σ_{j≠k} Λ_{k,j} b_j
        double s6 = 0.0;  // Σ_{j≠k} |b_j| / |θ_k−θ_j|
        double s7 = 0.0;  // Σ_{j≠k} 1 / |θ_k−θ_j|
        for (int j = 1; j <= J; ++j) {
            if (j != k) {
                s5 += lam(j - 1, k - 1) * b(j - 1);
                const double gap = std::fabs(th(k - 1) - th(j - 1));
                if (gap > 0.0) {
                    s6 += std::fabs(b(j - 1)) / gap;
                    s7 += 1.0 / gap;
                }
            }
            if (j > p) s1 += lam(j - 1, k - 1) * b(j - 1);
        }
        t[0] += s1 * s1;
        t[2] += b(k - 1) * b(k - 1) * lam_norm2(k - 1) * lam_norm2(k - 1);
        t[3] += std::fabs(b(k - 1)) * lam_norm2(k - 1);
        t[4] += s5 * s5;
        t[5] += lam_norm2(k - 1) * s6 * s6;
        t[6] += b(k - 1) * b(k - 1) * s7 * s7;
    }
    for (int j = p + 1; j <= J; ++j) {
        double s2 = 0.0;  // Σ_{k≤p} Λ_{k,j} b_k
        for (int k = 1; k <= p; ++k) s2 += lam(j - 1, k - 1) * b(k - 1);
        t[1] += s2 * s2;
    }
    t[3] *= t[3];
    t[4] *= lam_total;
    t[5] *= out.delta * out.delta;
    t[6] *= out.delta * out.delta * lam_total;
    return out;
}

double eigen_gap_sum(const Eigen::VectorXd& theta, int k, double r, double gamma) {
    const int J = static_cast<int>(theta.size());
    if (k < 1 || k > J) throw std::invalid_argument("eigen_gap_sum: k out of range");
    if (r < 1.0) throw std::invalid_argument("eigen_gap_sum: r must be >= 1");
    double sum = 0.0;
    for (int j = 1; j <= J; ++j) {
        if (j == k) continue;
        const double gap = std::fabs(theta(j - 1) - theta(k - 1));
        if (gap == 0.0) throw std::runtime_error("eigen_gap_sum: zero eigenvalue gap");
        sum += std::pow(static_cast<double>(j), -gamma) / std::pow(gap, r);
    }
    return sum;
}

std::vector<MomentRow> lambda_moment_report(int n, int reps, const GPModel& model, Rng& rng) {
    if (n < 3) throw std::invalid_argument("lambda_moment_report: n must be >= 3");
    const int Jh = std::min(model.j_max(), 48);
    if (Jh < 5) throw std::invalid_argument("lambda_moment_report: need J_max >= 5");
    const auto& th = model.theta;

    auto lam_entry = [&](const Eigen::MatrixXd& S, int k, int j) {
        return std::sqrt(th(j - 1) * th(k - 1)) * S(j - 1, k - 1) / (th(k - 1) - th(j - 1));
    };
    auto lam_norm2_of = [&](const Eigen::MatrixXd& S, int k) {
        double s = 0.0;
        for (int j = 1; j <= Jh; ++j)
            if (j != k) {
                const double v = lam_entry(S, k, j);
                s += v * v;
            }
        return s;
    };
    auto draw_S = [&](int nn) {
        Eigen::MatrixXd eta(nn, Jh);
        for (int i = 0; i < nn; ++i)
            for (int j = 0; j < Jh; ++j) eta(i, j) = rng.gaussian();
        mean_center_cols(eta);
        return Eigen::MatrixXd((eta.transpose() * eta) / (nn - 1));
    };

    std::vector<double> e21(reps), e21sq_n(reps), e21sq_2n(reps), l2_n(reps), l2_2n(reps),
        l4_n(reps), l4sq_n(reps), l4sq_2n(reps);
    for (int r = 0; r < reps; ++r) {
        Eigen::MatrixXd S = draw_S(n);
        const double v = lam_entry(S, 2, 1);
        e21[r] = v;
        e21sq_n[r] = v * v;
        l2_n[r] = lam_norm2_of(S, 2);
        l4_n[r] = lam_norm2_of(S, 4);
        l4sq_n[r] = l2_n[r] * l2_n[r];
        Eigen::MatrixXd S2 = draw_S(2 * n);
        const double v2 = lam_entry(S2, 2, 1);
        e21sq_2n[r] = v2 * v2;
        l2_2n[r] = lam_norm2_of(S2, 2);
        l4sq_2n[r] = l2_2n[r] * l2_2n[r];
    }

    auto mean_of = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        return m / v.size();
    };
    auto se_of = [&](const std::vector<double>& v) {
        const double m = mean_of(v);
        double s2 = 0.0;
        for (double x : v) s2 += (x - m) * (x - m);
        return std::sqrt(s2 / (v.size() - 1) / v.size());
    };

    std::vector<MomentRow> rows;
    const double m0 = mean_of(e21);
    rows.push_back({"E_Lam_2_1", m0, 0.0, 4.0 * se_of(e21), std::fabs(m0) <= 4.0 * se_of(e21)});
    const double r_entry = mean_of(e21sq_n) / mean_of(e21sq_2n);
    rows.push_back({"E_Lam_2_1_sq_doubling", r_entry, 2.0, 0.6, std::fabs(r_entry - 2.0) <= 0.6});
    const double r_norm = mean_of(l2_n) / mean_of(l2_2n);
    rows.push_back({"E_normLam_2_sq_doubling", r_norm, 2.0, 0.6, std::fabs(r_norm - 2.0) <= 0.6});
    const double growth = mean_of(l4_n) / mean_of(l2_n);
    rows.push_back({"E_normLam_growth_k2_to_k4", growth, 4.0, 1.6, std::fabs(growth - 4.0) <= 1.6});
    const double r4 = mean_of(l4sq_n) / mean_of(l4sq_2n);
    rows.push_back({"E_normLam_2_4th_doubling", r4, 4.0, 1.6, std::fabs(r4 - 4.0) <= 1.6});
    return rows;
}

}  // namespace funglm
