#include "funglm/mle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace funglm {

namespace {

struct GaussHermite {
    Eigen::VectorXd nodes;    // points for ∫ f(x) e^{−x²} dx
    Eigen::VectorXd weights;
};

// Golub–Welsch on the Hermite Jacobi matrix (off-diagonals √(i/2)).
GaussHermite build_gauss_hermite(int n) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = std::sqrt(i / 2.0);
        jac(i, i - 1) = b;
        jac(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    GaussHermite gh;
    gh.nodes = es.eigenvalues();
    gh.weights.resize(n);
    const double sqrt_pi = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        gh.weights(i) = sqrt_pi * v0 * v0;
    }
    return gh;
}

const GaussHermite& gh64() {
    static const GaussHermite gh = build_gauss_hermite(64);
    return gh;
}

int argmax_abs_row(const Eigen::VectorXd& lambda) {
    int idx = 0;
    lambda.cwiseAbs().maxCoeff(&idx);
    return idx;
}

}  // namespace

double gauss_hermite_expect(const std::function<double(double)>& f) {
    const auto& gh = gh64();
    const double sqrt2 = std::sqrt(2.0);
    double s = 0.0;
    for (int i = 0; i < gh.nodes.size(); ++i) s += gh.weights(i) * f(sqrt2 * gh.nodes(i));
    const double v = s / std::sqrt(M_PI);
    if (!std::isfinite(v)) throw std::runtime_error("gauss_hermite_expect: quadrature overflow");
    return v;
}

DesignSet make_design(Eigen::MatrixXd xi, Eigen::VectorXd y, ExpFamilySpec family,
                      std::optional<Eigen::VectorXd> gamma_true) {
    if (xi.rows() != y.size()) throw std::invalid_argument("design: row count mismatch");
    if (!xi.allFinite() || !y.allFinite())
        throw std::invalid_argument("design: non-finite entries");
    if (gamma_true && gamma_true->size() != xi.cols())
        throw std::invalid_argument("design: gamma dimension mismatch");
    DesignSet d;
    d.underdetermined = xi.rows() <= xi.cols();
    d.xi = std::move(xi);
    d.y = std::move(y);
    d.family = std::move(family);
    d.gamma_true = std::move(gamma_true);
    return d;
}

double log_likelihood(const DesignSet& d, const Eigen::VectorXd& g) {
    Eigen::VectorXd lambda = d.xi * g;
    double L = 0.0;
    for (int i = 0; i < lambda.size(); ++i)
        L += lambda(i) * d.y(i) - d.family.psi(lambda(i));
    return L;
}

Eigen::VectorXd log_likelihood_gradient(const DesignSet& d, const Eigen::VectorXd& g) {
    Eigen::VectorXd lambda = d.xi * g;
    Eigen::VectorXd resid(lambda.size());
    for (int i = 0; i < lambda.size(); ++i) resid(i) = d.y(i) - d.family.psi1(lambda(i));
    return d.xi.transpose() * resid;
}

Eigen::MatrixXd log_likelihood_hessian(const DesignSet& d, const Eigen::VectorXd& g) {
    Eigen::VectorXd lambda = d.xi * g;
    Eigen::VectorXd w(lambda.size());
    for (int i = 0; i < lambda.size(); ++i) w(i) = d.family.psi2(lambda(i));
    return -(d.xi.transpose() * w.asDiagonal() * d.xi);
}

FitResult fit_mle(const DesignSet& d, const FitOptions& opts) {
    const int p = d.dim();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    if (opts.warm_start && d.gamma_true) g = *d.gamma_true;

    Eigen::VectorXd lambda = d.xi * g;
    if (lambda.cwiseAbs().maxCoeff() > opts.overflow_guard)
        throw std::runtime_error("fit_mle: start point violates overflow guard at row " +
                                 std::to_string(argmax_abs_row(lambda)));

    FitResult res;
    res.ghat = g;

    auto loglik = [&](const Eigen::VectorXd& gg) { return log_likelihood(d, gg); };
    double L = loglik(g);

    for (int it = 1; it <= opts.max_iter; ++it) {
        res.iterations = it;
        Eigen::VectorXd grad = log_likelihood_gradient(d, g);
        res.grad_norm = grad.cwiseAbs().maxCoeff();
        if (res.grad_norm <= opts.tol) {
            res.converged = true;
            break;
        }

        Eigen::MatrixXd J = -log_likelihood_hessian(d, g);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(J);
        const Eigen::VectorXd piv = ldlt.vectorD();
        const bool singular = ldlt.info() != Eigen::Success || !(piv.minCoeff() > 0.0) ||
                              piv.minCoeff() < 1e-14 * piv.maxCoeff();
        Eigen::VectorXd step;
        if (!singular) {
            step = ldlt.solve(grad);
        } else {
            const double mu = opts.ridge * J.trace() / p + 1e-300;
            ldlt.compute(J + mu * Eigen::MatrixXd::Identity(p, p));
            step = ldlt.solve(grad);
            res.ridge_used = true;
        }
        if (!step.allFinite()) throw std::runtime_error("fit_mle: singular Newton system");

        double s = 1.0;
        bool moved = false;
        while (s >= 1e-12) {
            Eigen::VectorXd cand = g + s * step;
            Eigen::VectorXd lam = d.xi * cand;
            if (lam.cwiseAbs().maxCoeff() > opts.overflow_guard) {
                s *= 0.5;
                if (s < 1e-12)
                    throw std::runtime_error(
                        "fit_mle: overflow guard persists at step floor, row " +
                        std::to_string(argmax_abs_row(lam)));
                continue;
            }
            const double Lc = loglik(cand);
            if (Lc > L) {
                g = cand;
                L = Lc;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if (!moved) {  // flat at the objective's resolution; record and stop
            res.grad_norm = log_likelihood_gradient(d, g).cwiseAbs().maxCoeff();
            res.converged = res.grad_norm <= opts.tol;
            break;
        }
    }
    if (!res.converged) {
        Eigen::VectorXd grad = log_likelihood_gradient(d, g);
        res.grad_norm = grad.cwiseAbs().maxCoeff();
        res.converged = res.grad_norm <= opts.tol;
    }
    res.ghat = g;
    return res;
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.eigenvalues().minCoeff() < 0)
        throw std::runtime_error("sym_sqrt: matrix not positive semidefinite");
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.eigenvalues().minCoeff() <= 0)
        throw std::runtime_error("sym_inv_sqrt: matrix not positive definite");
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

MleDiagnostics mle_diagnostics(const DesignSet& d, const Eigen::VectorXd& gamma,
                               const FitResult& fit) {
    if (gamma.size() != d.dim()) throw std::invalid_argument("mle_diagnostics: gamma dimension");
    Eigen::VectorXd lambda = d.xi * gamma;
    Eigen::VectorXd w2(lambda.size()), resid(lambda.size());
    for (int i = 0; i < lambda.size(); ++i) {
        w2(i) = d.family.psi2(lambda(i));
        resid(i) = d.y(i) - d.family.psi1(lambda(i));
    }
    MleDiagnostics diag;
    diag.J = d.xi.transpose() * w2.asDiagonal() * d.xi;
    Eigen::MatrixXd Jmh = sym_inv_sqrt(diag.J);  // throws when J is not PD
    Eigen::MatrixXd W = d.xi * Jmh;              // rows w_i'
    diag.W = W.transpose() * resid;
    diag.r = sym_sqrt(diag.J) * (fit.ghat - gamma) - diag.W;
    diag.M = W.rowwise().norm().maxCoeff();
    return diag;
}

LemmaCheck mle_lemma_check(const ExpFamilySpec& family, const MleDiagnostics& diag, double eps1,
                           double eps2) {
    if (!(eps1 > 0 && eps1 <= 0.5 && eps2 > 0 && eps2 < 1))
        throw std::invalid_argument("mle_lemma_check: need 0<eps1<=1/2, 0<eps2<1");
    const double Np = static_cast<double>(diag.W.size());
    LemmaCheck c;
    c.m_bound = eps1 * eps2 / (2.0 * family.growth(1.0) * Np);
    c.precond_ok = diag.M <= c.m_bound;
    c.w_radius = std::sqrt(Np / eps2);
    c.w_event = diag.W.norm() <= c.w_radius;
    c.r_ok = diag.r.norm() <= eps1;
    return c;
}

AnBn an_bn_matrices(const DesignSet& d, const Eigen::VectorXd& D_diag,
                    const Eigen::VectorXd& gamma) {
    const int p = d.dim();
    if (D_diag.size() != p || gamma.size() != p)
        throw std::invalid_argument("an_bn_matrices: dimension mismatch");
    if ((D_diag.array() == 0.0).any())
        throw std::invalid_argument("an_bn_matrices: D must be nonsingular");

    AnBn out;
    const int n = d.n();
    Eigen::VectorXd lambda = d.xi * gamma;
    Eigen::MatrixXd eta = d.xi * D_diag.cwiseInverse().asDiagonal();  // rows η_i'
    out.A = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < n; ++i)
        out.A += d.family.psi2(lambda(i)) * (eta.row(i).transpose() * eta.row(i));
    out.A /= n;

    Eigen::VectorXd u = D_diag.cwiseProduct(gamma);
    out.abar = u(0);
    out.kappa = u.tail(p - 1).norm();
    const double abar = out.abar, kappa = out.kappa;
    auto& fam = d.family;
    out.r0 = gauss_hermite_expect([&](double e) { return fam.psi2(abar + kappa * e); });
    out.r1 = gauss_hermite_expect([&](double e) { return e * fam.psi2(abar + kappa * e); });
    out.r2 = gauss_hermite_expect([&](double e) { return e * e * fam.psi2(abar + kappa * e); });

    out.B = out.r0 * Eigen::MatrixXd::Identity(p, p);
    if (out.kappa > 0) {
        Eigen::VectorXd v = u.tail(p - 1) / out.kappa;
        out.B.block(1, 1, p - 1, p - 1) += (out.r2 - out.r0) * (v * v.transpose());
        out.B.block(0, 1, 1, p - 1) = out.r1 * v.transpose();
        out.B.block(1, 0, p - 1, 1) = out.r1 * v;
    }
    return out;
}

CorollaryCheck anbn_error_check(const DesignSet& d, const Eigen::VectorXd& D_diag,
                                const Eigen::VectorXd& gamma, const FitResult& fit,
                                const std::vector<Eigen::VectorXd>& kappas, double eps) {
    if (!(eps > 0 && eps < 1)) throw std::invalid_argument("anbn_error_check: eps in (0,1)");
    AnBn ab = an_bn_matrices(d, D_diag, gamma);
    const int n = d.n();
    const double Np = static_cast<double>(d.dim());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ab.B, Eigen::EigenvaluesOnly);
    const double bmin = es.eigenvalues().minCoeff();
    if (bmin <= 0) throw std::runtime_error("anbn_error_check: B_n not positive definite");

    CorollaryCheck c;
    c.B_inv_norm = 1.0 / bmin;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ed(ab.A - ab.B, Eigen::EigenvaluesOnly);
    c.precond_A = ed.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 / (2.0 * c.B_inv_norm);

    Eigen::MatrixXd eta = d.xi * D_diag.cwiseInverse().asDiagonal();
    const double max_eta = eta.rowwise().norm().maxCoeff();
    c.precond_eta =
        max_eta <= eps * std::sqrt(static_cast<double>(n)) / Np /
                       (d.family.growth(1.0) * std::sqrt(32.0 * c.B_inv_norm));

    double lhs = 0.0, dk2 = 0.0;
    Eigen::VectorXd err = fit.ghat - gamma;
    for (const auto& kap : kappas) {
        if (kap.size() != d.dim())
            throw std::invalid_argument("anbn_error_check: kappa dimension mismatch");
        const double t = kap.dot(err);
        lhs += t * t;
        dk2 += D_diag.cwiseInverse().cwiseProduct(kap).squaredNorm();
    }
    c.lhs = lhs;
    c.rhs = 6.0 * c.B_inv_norm / (n * eps) * dk2;
    c.holds = c.lhs <= c.rhs;
    return c;
}

}  // namespace funglm
