#include "kcb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kcb {

namespace {

Eigen::VectorXd sym_eigenvalues_desc(const Eigen::MatrixXd& A) {
    const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("symmetric eigendecomposition failed");
    return es.eigenvalues().reverse();
}

long round_up_multiple(long v, long k) { return ((v + k - 1) / k) * k; }

} // namespace

double effective_variance(const Eigen::VectorXd& eigs_sigma_hat, double gamma, double beta,
                          int d) {
    if (gamma <= 0.0)
        throw std::invalid_argument("degenerate implicit regularization: gamma must be > 0");
    if (beta <= 0.0) throw std::invalid_argument("beta must be > 0");
    if (d < 1) throw std::invalid_argument("d must be >= 1");

    const double r = gamma / beta;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < eigs_sigma_hat.size(); ++j) {
        const double l = std::max(eigs_sigma_hat(j), 0.0);
        const double q = r + l;
        acc += l / (q * q);
    }
    return acc / static_cast<double>(d);
}

std::pair<double, int> effective_bias(const Eigen::VectorXd& eigs, double rkhs_bound) {
    const Eigen::Index n = eigs.size();
    if (n < 1) throw std::invalid_argument("effective_bias: empty spectrum");
    for (Eigen::Index j = 0; j + 1 < n; ++j)
        if (eigs(j + 1) > eigs(j))
            throw std::invalid_argument("effective_bias: eigenvalues must be sorted descending");

    const double B2 = rkhs_bound * rkhs_bound;
    const double N = static_cast<double>(n);

    // suffix[k] = sum_{j > k} eigs_j with 1-based j; built back to front.
    std::vector<double> suffix(n + 1, 0.0);
    for (Eigen::Index j = n - 1; j >= 0; --j)
        suffix[j] = suffix[j + 1] + std::max(eigs(j), 0.0);

    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (Eigen::Index k = 0; k <= n; ++k) {
        const double cand = B2 * (suffix[k] / N + 2.0 * std::sqrt(static_cast<double>(k) / N));
        if (cand < best) {
            best = cand;
            best_k = static_cast<int>(k);
        }
    }
    return {best, best_k};
}

Eigen::VectorXd sigma_hat_eigenvalues(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    const double dd = static_cast<double>(d);

    Eigen::VectorXd nonzero;
    if (n <= d) {
        nonzero = sym_eigenvalues_desc(X * X.transpose() / dd);
    } else {
        nonzero = sym_eigenvalues_desc(X.transpose() * X / dd);
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    const Eigen::Index m = std::min<Eigen::Index>(n, nonzero.size());
    out.head(m) = nonzero.head(m).cwiseMax(0.0);
    return out;
}

ErrorDecomposition decompose_error(const KernelSpec& spec, const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& sigma_diag, double rkhs_bound) {
    ErrorDecomposition out;
    out.eigs_sigma_hat = sigma_hat_eigenvalues(X);

    const KernelParams kp = kernel_params(spec, sigma_diag);
    out.variance =
        effective_variance(out.eigs_sigma_hat, kp.gamma, kp.beta, static_cast<int>(X.cols()));

    out.eigs_gram = sym_eigenvalues_desc(gram(spec, X).entries).cwiseMax(0.0);
    std::tie(out.bias, out.bias_argmin_k) = effective_bias(out.eigs_gram, rkhs_bound);
    return out;
}

LinApproxReport k_lin(const KernelSpec& spec, const Eigen::MatrixXd& X,
                      const KernelParams& params) {
    const Eigen::Index n = X.rows();
    if (X.cols() != spec.dim) throw std::invalid_argument("k_lin: dimension mismatch");

    const Eigen::MatrixXd sigma_hat = X * X.transpose() / static_cast<double>(spec.dim);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, n);

    LinApproxReport rep;
    rep.K_lin = params.gamma * Eigen::MatrixXd::Identity(n, n) + params.alpha * ones +
                params.beta * sigma_hat;
    if (spec.family == KernelFamily::Rbf) {
        if (params.rho.size() != n || params.zeta.rows() != n)
            throw std::invalid_argument("k_lin: RBF needs psi/rho/zeta computed from this X");
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
        rep.K_lin += params.rho * one.transpose() + one * params.rho.transpose() + params.zeta;
    }

    const Eigen::MatrixXd diff = gram(spec, X).entries - rep.K_lin;
    const Eigen::VectorXd ev = sym_eigenvalues_desc(diff);
    rep.op_norm_diff = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    rep.gamma_half = params.gamma / 2.0;
    rep.event_holds = rep.op_norm_diff <= rep.gamma_half;
    return rep;
}

MigReport mig(const KernelSpec& spec, const Eigen::MatrixXd& X_stream, double tau2) {
    if (tau2 <= 0.0) throw std::invalid_argument("mig: tau2 must be positive");
    const Eigen::Index T = X_stream.rows();
    if (T < 1) throw std::invalid_argument("mig: empty stream");

    MigReport rep;
    rep.tau2 = tau2;
    rep.gain_by_T.reserve(T);

    // Incremental Cholesky of S_t = K_t + tau2 I; appending row t costs O(t^2).
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(T, T);
    const double log_tau2 = std::log(tau2);
    double logdet = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::VectorXd x = X_stream.row(t);
        const double kappa = eval_kernel(spec, x, x) + tau2;
        double s2 = kappa;
        if (t > 0) {
            Eigen::VectorXd k(t);
            for (Eigen::Index j = 0; j < t; ++j)
                k(j) = eval_kernel(spec, X_stream.row(j), x);
            const Eigen::VectorXd m =
                L.topLeftCorner(t, t).triangularView<Eigen::Lower>().solve(k);
            L.row(t).head(t) = m;
            s2 = kappa - m.squaredNorm();
        }
        s2 = std::max(s2, tau2);  // Schur complement of the PSD Gram cannot dip below tau2
        L(t, t) = std::sqrt(s2);
        logdet += std::log(s2);
        rep.gain_by_T.push_back(0.5 * (logdet - static_cast<double>(t + 1) * log_tau2));
    }
    return rep;
}

double mc_l2_error(const FittedModel& model, const RewardFunction& truth,
                   const CovarianceSpec& cov, int samples, Rng& rng) {
    if (samples < 1) throw std::invalid_argument("mc_l2_error: samples must be >= 1");
    double acc = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Eigen::VectorXd x = sample_context(cov, rng);
        const double diff = model.predict(x).mean - eval_reward(truth, x);
        acc += diff * diff;
    }
    return acc / samples;
}

LenientBudget lenient_budget(CovarianceCase cov_case, KernelFamily family, double Delta,
                             double eps, int d, int K, double sigma2,
                             const KernelConstants& kc) {
    if (Delta <= 0.0) throw std::invalid_argument("lenient_budget: Delta must be > 0");
    if (eps <= 0.0) throw std::invalid_argument("lenient_budget: eps must be > 0");
    if (d < 1 || K < 2) throw std::invalid_argument("lenient_budget: need d >= 1, K >= 2");
    if (sigma2 <= 0.0) throw std::invalid_argument("lenient_budget: sigma2 must be > 0");
    const bool rbf = family == KernelFamily::Rbf;
    if (rbf && kc.h1_min >= 0.0)
        throw std::invalid_argument("lenient_budget: RBF needs h1_min < 0");

    const double K2 = static_cast<double>(K) * K;
    double mult = 0.0;
    LenientBudget out;
    switch (cov_case) {
        case CovarianceCase::LowRank:
            mult = std::ceil(256.0 * sigma2 * K2 * eps / Delta);
            break;
        case CovarianceCase::ApproxLowRank:
            mult = rbf ? std::ceil(256.0 * sigma2 * K2 / (Delta * eps))
                       : std::ceil(256.0 * sigma2 * K2 * eps / Delta);
            break;
        case CovarianceCase::SpectralDecay:
            if (rbf) {
                // As printed the budget is negative (h1_min < 0); |h1_min| is
                // used and the substitution flagged.
                mult = std::floor(Delta * eps * kc.c_lower /
                                  (32.0 * std::abs(kc.h1_min) * sigma2));
                out.sign_flagged = true;
            } else {
                mult = std::floor(eps * eps * kc.h2_min * Delta / (64.0 * sigma2 * kc.beta));
            }
            break;
    }

    const double raw = std::max(mult, 0.0) * static_cast<double>(d);
    if (raw > 9e15) throw std::invalid_argument("lenient_budget: budget overflows");
    out.T0 = round_up_multiple(std::max(static_cast<long>(raw), static_cast<long>(K)), K);

    const double B2 = kc.b_norm * kc.b_norm;
    const double bound = Delta / (4.0 * K);
    double lhs;
    if (rbf) {
        lhs = 5.0 * B2 * std::abs(kc.h1_min) * eps;
    } else {
        const double quad = (cov_case == CovarianceCase::LowRank) ? 0.75 : 1.5;
        lhs = quad * B2 * kc.h2_max * eps * eps + B2 * kc.beta * eps;
    }
    out.eps_ok = lhs < bound;
    return out;
}

} // namespace kcb
