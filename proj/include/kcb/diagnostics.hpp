#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "kcb/environment.hpp"
#include "kcb/estimators.hpp"
#include "kcb/kernels.hpp"
#include "kcb/rng.hpp"

namespace kcb {

// Spectral error split of the interpolator:
//   variance V = (1/d) sum_j l_j / (gamma/beta + l_j)^2    over eig(X X^T / d)
//   bias     B = B_rkhs^2 * min_k [ (1/N) sum_{j>k} l_j(K_X) + 2 sqrt(k/N) ]
struct ErrorDecomposition {
    double variance = 0.0;
    double bias = 0.0;
    int bias_argmin_k = 0;
    Eigen::VectorXd eigs_sigma_hat;  // descending, length N
    Eigen::VectorXd eigs_gram;       // descending, length N
};

double effective_variance(const Eigen::VectorXd& eigs_sigma_hat, double gamma, double beta,
                          int d);

// Returns {bias, argmin k}; the k-scan is exhaustive over 0..N and the
// smallest minimizer wins ties. Input must be sorted descending.
std::pair<double, int> effective_bias(const Eigen::VectorXd& eigs_gram_desc,
                                      double rkhs_bound);

// Eigenvalues of X X^T / d, descending, padded to length N (computed on the
// smaller Gram side when N > d).
Eigen::VectorXd sigma_hat_eigenvalues(const Eigen::MatrixXd& X);

ErrorDecomposition decompose_error(const KernelSpec& spec, const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& sigma_diag, double rkhs_bound);

// Rank-structured linear approximation of the Gram matrix:
//   inner-product: K_lin = gamma I + alpha 1 1^T + beta X X^T / d
//   RBF:           ... + rho 1^T + 1 rho^T + zeta
// and the operator-norm distance to the exact Gram matrix. event_holds
// records whether the distance is within gamma/2.
struct LinApproxReport {
    double op_norm_diff = 0.0;
    double gamma_half = 0.0;
    bool event_holds = false;
    Eigen::MatrixXd K_lin;
};

LinApproxReport k_lin(const KernelSpec& spec, const Eigen::MatrixXd& X,
                      const KernelParams& params);

// Information gain along a stream: gain_by_T[t-1] = 1/2 ln det(I_t + K_t/tau2)
// over the first t rows, maintained by an incremental Cholesky append.
struct MigReport {
    double tau2 = 0.0;
    std::vector<double> gain_by_T;
};

MigReport mig(const KernelSpec& spec, const Eigen::MatrixXd& X_stream, double tau2);

// Monte-Carlo estimate of the squared L2(P) error of a fitted model against
// the true reward, with contexts drawn from the given covariance.
double mc_l2_error(const FittedModel& model, const RewardFunction& truth,
                   const CovarianceSpec& cov, int samples, Rng& rng);

// Exploration budgets that keep the per-round gap below Delta. Cases map to
// the covariance constructions (I low-rank, II approximate low-rank,
// III spectral decay):
//   I           T0 = ceil(256 s2 K^2 eps / Delta) d        (both families)
//   II  inner   T0 = ceil(256 s2 K^2 eps / Delta) d
//   II  RBF     T0 = ceil(256 s2 K^2 / (Delta eps)) d
//   III inner   T0 = floor(eps^2 h2_min Delta / (64 s2 beta)) d
//   III RBF     T0 = floor(Delta eps c_lower / (32 |h1_min| s2)) d
// rounded up to a multiple of K with a floor of K. The printed Case III RBF
// budget is negative as stated (h1_min < 0); |h1_min| is used instead and the
// substitution is flagged. eps_ok reports the family's smallness condition:
//   inner:  (3 B^2 h2_max / 4) eps^2 + B^2 beta eps < Delta / 4K   (Case I)
//           (3 B^2 h2_max / 2) eps^2 + B^2 beta eps < Delta / 4K   (II, III)
//   RBF:    5 B^2 |h1_min| eps < Delta / 4K
struct LenientBudget {
    long T0 = 0;
    bool eps_ok = false;
    bool sign_flagged = false;
};

LenientBudget lenient_budget(CovarianceCase cov_case, KernelFamily family, double Delta,
                             double eps, int d, int K, double sigma2,
                             const KernelConstants& consts);

} // namespace kcb
