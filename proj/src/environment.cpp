#include "kcb/environment.hpp"

#include "kcb/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kcb {

double CovarianceSpec::epsilon() const {
    switch (kind) {
        case CovarianceCase::LowRank:
            return static_cast<double>(active_positions.size()) / d;
        case CovarianceCase::ApproxLowRank:
            return 0.5;
        case CovarianceCase::SpectralDecay:
            return trace() / d;
    }
    return 0.0;
}

CovarianceSpec make_covariance(CovarianceCase kind, int d, Rng& rng,
                               std::optional<int> active, std::optional<double> c_tilde) {
    if (d < 2) throw std::invalid_argument("covariance needs d >= 2");

    CovarianceSpec cov;
    cov.kind = kind;
    cov.d = d;
    cov.c_tilde = c_tilde ? *c_tilde : rng.uniform(0.5, 1.0);
    cov.eigs = Eigen::VectorXd::Zero(d);

    switch (kind) {
        case CovarianceCase::LowRank: {
            const int k = active ? *active : d / 2;
            if (k < 0 || k > d) throw std::invalid_argument("active count must be in [0, d]");
            // Uniform draw of k positions without replacement (partial shuffle).
            std::vector<int> idx(d);
            std::iota(idx.begin(), idx.end(), 0);
            for (int j = 0; j < k; ++j) {
                const int pick = j + static_cast<int>(rng.below(d - j));
                std::swap(idx[j], idx[pick]);
            }
            cov.active_positions.assign(idx.begin(), idx.begin() + k);
            std::sort(cov.active_positions.begin(), cov.active_positions.end());
            for (int pos : cov.active_positions) cov.eigs(pos) = cov.c_tilde;
            break;
        }
        case CovarianceCase::ApproxLowRank: {
            cov.eigs.setConstant(cov.c_tilde / 2.0);
            cov.eigs(0) = cov.c_tilde;
            break;
        }
        case CovarianceCase::SpectralDecay: {
            // j~ = max{ j : sum_{l<=j} 10/l <= d/4 }, then a constant fill that
            // tops the unscaled sum up to d/2 exactly.
            double partial = 0.0;
            int j_cut = 0;
            for (int j = 1; j <= d; ++j) {
                if (partial + 10.0 / j > d / 4.0) break;
                partial += 10.0 / j;
                j_cut = j;
            }
            if (j_cut >= d)
                throw std::invalid_argument(
                    "spectral decay undefined at this d: the harmonic part never reaches d/4, "
                    "leaving no fill positions");
            const double fill = (0.5 * d - partial) / (d - j_cut);
            for (int j = 0; j < d; ++j)
                cov.eigs(j) = cov.c_tilde * (j < j_cut ? 10.0 / (j + 1) : fill);
            break;
        }
    }
    return cov;
}

double clip_context(double v) { return std::min(10.0, std::max(v, -10.0)); }

Eigen::VectorXd sample_context(const CovarianceSpec& cov, Rng& rng) {
    Eigen::VectorXd x(cov.d);
    for (int j = 0; j < cov.d; ++j) {
        const double z = rng.normal();
        x(j) = clip_context(std::sqrt(cov.eigs(j)) * z);
    }
    return x;
}

RewardFunction RewardFunction::create(Eigen::MatrixXd centers, Eigen::VectorXd coeffs,
                                      KernelSpec kernel) {
    if (centers.rows() != coeffs.size())
        throw std::invalid_argument("reward centers/coeffs mismatch");
    if (centers.cols() != kernel.dim)
        throw std::invalid_argument("reward centers dimension mismatch");

    RewardFunction f(std::move(centers), std::move(coeffs), std::move(kernel));
    const Eigen::MatrixXd G = gram(f.kernel, f.centers).entries;
    f.rkhs_norm = std::sqrt(std::max(f.coeffs.dot(G * f.coeffs), 0.0));
    f.center_sqnorms_ = f.centers.rowwise().squaredNorm();
    return f;
}

RewardFunction make_reward(int d, int M, Rng& rng) {
    if (M < 1) throw std::invalid_argument("reward needs M >= 1");
    Eigen::MatrixXd centers(M, d);
    for (int m = 0; m < M; ++m)
        for (int j = 0; j < d; ++j) centers(m, j) = rng.normal();
    Eigen::VectorXd coeffs(M);
    for (int m = 0; m < M; ++m) coeffs(m) = rng.uniform(-1.0, 1.0);
    return RewardFunction::create(std::move(centers), std::move(coeffs),
                                  KernelSpec::gaussian(d, 4.0));
}

double eval_reward(const RewardFunction& f, const Eigen::VectorXd& x) {
    if (x.size() != f.kernel.dim) throw std::invalid_argument("eval_reward: dimension mismatch");
    if (f.kernel.family != KernelFamily::Rbf || f.kernel.profile.kind != Profile::Kind::Gaussian) {
        // Generic path for non-Gaussian reward kernels.
        double acc = 0.0;
        for (Eigen::Index m = 0; m < f.coeffs.size(); ++m)
            acc += f.coeffs(m) * eval_kernel(f.kernel, f.centers.row(m), x);
        return acc;
    }
    // ||x - c_m||^2 = ||x||^2 + ||c_m||^2 - 2 <c_m, x>, one GEMV for all centers.
    const double g = f.kernel.profile.g;
    const double d = static_cast<double>(f.kernel.dim);
    Eigen::ArrayXd sq = (f.center_sqnorms_.array() + x.squaredNorm()) -
                        2.0 * (f.centers * x).array();
    return (f.coeffs.array() * (-g / d * sq.max(0.0)).exp()).sum();
}

RoundDraw draw_round(const std::vector<RewardFunction>& arm_rewards,
                     const std::vector<CovarianceSpec>& cov_specs,
                     std::vector<Rng>& context_rngs) {
    const std::size_t K = arm_rewards.size();
    if (K < 2) throw std::invalid_argument("draw_round needs K >= 2 arms");
    if (cov_specs.size() != K || context_rngs.size() != K)
        throw std::invalid_argument("draw_round: per-arm inputs must all have K entries");

    RoundDraw out;
    out.contexts.reserve(K);
    out.means.resize(static_cast<Eigen::Index>(K));
    for (std::size_t i = 0; i < K; ++i) {
        out.contexts.push_back(sample_context(cov_specs[i], context_rngs[i]));
        out.means(static_cast<Eigen::Index>(i)) = eval_reward(arm_rewards[i], out.contexts[i]);
    }
    out.optimal_arm = argmax_lowest(out.means);
    return out;
}

} // namespace kcb
