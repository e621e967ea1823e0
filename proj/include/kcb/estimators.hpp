#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "kcb/kernels.hpp"

namespace kcb {

// Training data of one arm: contexts as rows of X, rewards in Y.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;
    int arm_id = 0;

    Dataset() = default;
    Dataset(Eigen::MatrixXd X, Eigen::VectorXd Y, int arm_id = 0);

    Eigen::Index size() const { return Y.size(); }
};

enum class EstimatorKind { KernelInterp, KernelRidge, LinearMinNorm, LinearRidge };

struct EstimatorChoice {
    EstimatorKind kind = EstimatorKind::KernelInterp;
    double lambda2 = 0.0;  // ridge strength for the *Ridge kinds

    static EstimatorChoice kernel_interp() { return {EstimatorKind::KernelInterp, 0.0}; }
    static EstimatorChoice kernel_ridge(double lambda2) {
        return {EstimatorKind::KernelRidge, lambda2};
    }
    static EstimatorChoice linear_min_norm() { return {EstimatorKind::LinearMinNorm, 0.0}; }
    static EstimatorChoice linear_ridge(double lambda2) {
        return {EstimatorKind::LinearRidge, lambda2};
    }

    bool is_kernel() const {
        return kind == EstimatorKind::KernelInterp || kind == EstimatorKind::KernelRidge;
    }
};

struct Prediction {
    double mean = 0.0;
    std::optional<double> std;
};

// Fitted estimator. Kernel kinds store the dual coefficients and a Cholesky
// factor of K + (lambda^2 + jitter) I for posterior-variance queries; linear
// kinds store the weight vector.
class FittedModel {
public:
    EstimatorChoice choice;
    Eigen::MatrixXd train_X;
    Eigen::VectorXd coeffs;               // N dual coefficients or d weights
    std::optional<KernelSpec> spec;       // kernel kinds only
    double jitter = 0.0;                  // diagonal shift applied by the solver

    Prediction predict(const Eigen::VectorXd& x, bool want_std = false) const;
    double rkhs_norm() const;

    // ln det of the factored system matrix K + (lambda2 + jitter) I.
    // Kernel kinds only.
    double factor_logdet() const;

private:
    friend FittedModel fit_model(const EstimatorChoice&, const std::optional<KernelSpec>&,
                                 const Dataset&);
    friend FittedModel fit_interpolator_gd(const KernelSpec&, const Dataset&, int, double);
    std::shared_ptr<Eigen::LLT<Eigen::MatrixXd>> llt_;  // kernel kinds
};

// Solves for the coefficients of the requested estimator:
//   KernelInterp   K(X,X) a = Y           (min-norm interpolator)
//   KernelRidge    (K(X,X) + l2 I) a = Y
//   LinearMinNorm  min ||w|| s.t. X w = Y (SVD pseudo-inverse)
//   LinearRidge    (X^T X + l2 I) w = X^T Y
// Kernel solves use an SPD factorization with escalating diagonal jitter
// 1e-12 -> 1e-10 -> 1e-8; failure past the last level raises a "singular
// system" error carrying the condition estimate.
FittedModel fit_model(const EstimatorChoice& choice, const std::optional<KernelSpec>& spec,
                      const Dataset& data);

// Interpolator fitted by gradient descent on the dual coefficients
// (steepest descent on 1/2 a^T K a - Y^T a). Verification path for the
// direct solve; raises an error if the residual grows 10x over its start.
FittedModel fit_interpolator_gd(const KernelSpec& spec, const Dataset& data, int steps,
                                double rate);

double rkhs_norm_of(const FittedModel& model);

} // namespace kcb
