#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "kcb/kernels.hpp"
#include "kcb/rng.hpp"

namespace kcb {

enum class CovarianceCase { LowRank, ApproxLowRank, SpectralDecay };

// Diagonal context covariance. The three constructions:
//   LowRank        `active` eigenvalues equal c, the rest 0
//   ApproxLowRank  c * (1, 1/2, 1/2, ..., 1/2)
//   SpectralDecay  c * (10/j for j <= j~, then a constant fill chosen so the
//                  unscaled eigenvalues sum to d/2)
// with c drawn uniformly from [0.5, 1]. SpectralDecay leading eigenvalues
// exceed 1 by construction; the other two cases stay within [0, 1].
struct CovarianceSpec {
    CovarianceCase kind;
    int d = 0;
    Eigen::VectorXd eigs;
    double c_tilde = 0.0;
    std::vector<int> active_positions;  // LowRank only

    double trace() const { return eigs.sum(); }
    double trace_sq() const { return eigs.squaredNorm(); }

    // The case's sparsity/decay parameter: rank fraction for LowRank, trailing
    // eigenvalue ratio (1/2) for ApproxLowRank, tr(S)/d for SpectralDecay.
    double epsilon() const;
};

CovarianceSpec make_covariance(CovarianceCase kind, int d, Rng& rng,
                               std::optional<int> active = std::nullopt,
                               std::optional<double> c_tilde = std::nullopt);

// Each coordinate is clip(sqrt(eig_j) * z_j, +-10) with z_j standard normal.
Eigen::VectorXd sample_context(const CovarianceSpec& cov, Rng& rng);

double clip_context(double v);

// f(x) = sum_m coeffs_m K(x, centers_m) with an exactly computable RKHS norm
// B = sqrt(c^T G c); |f| <= B everywhere since K(x,x) <= 1.
struct RewardFunction {
    Eigen::MatrixXd centers;  // M x d
    Eigen::VectorXd coeffs;   // M
    KernelSpec kernel;
    double rkhs_norm = 0.0;

    static RewardFunction create(Eigen::MatrixXd centers, Eigen::VectorXd coeffs,
                                 KernelSpec kernel);

private:
    RewardFunction(Eigen::MatrixXd c, Eigen::VectorXd w, KernelSpec k)
        : centers(std::move(c)), coeffs(std::move(w)), kernel(std::move(k)) {}
    Eigen::VectorXd center_sqnorms_;  // cached for fast evaluation
    friend double eval_reward(const RewardFunction&, const Eigen::VectorXd&);
};

// Centers ~ N(0, I_d), coefficients ~ Uniform[-1, 1], kernel exp(-4 t).
RewardFunction make_reward(int d, int M, Rng& rng);

double eval_reward(const RewardFunction& f, const Eigen::VectorXd& x);

struct NoiseSpec {
    double sigma2 = 1e-4;
};

struct RoundDraw {
    std::vector<Eigen::VectorXd> contexts;
    Eigen::VectorXd means;
    int optimal_arm = 0;
};

// Draws one context per arm, evaluates the arm means, and returns the ex-ante
// optimal arm (argmax, lowest index on ties).
RoundDraw draw_round(const std::vector<RewardFunction>& arm_rewards,
                     const std::vector<CovarianceSpec>& cov_specs,
                     std::vector<Rng>& context_rngs);

} // namespace kcb
