#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace kcb {

enum class KernelFamily { InnerProduct, Rbf };

// Scalar profile h. Inner-product kernels evaluate h(<x,y>/d), RBF kernels
// h(||x-y||^2/d); the 1/d scaling keeps the argument O(1) as d grows.
struct Profile {
    enum class Kind { Linear, Polynomial, Gaussian, Laplace, RationalQuadratic, Matern };

    Kind kind = Kind::Gaussian;
    double c = 0.0;      // Polynomial offset
    int p = 0;           // Polynomial degree
    double g = 1.0;      // Gaussian / Laplace / RationalQuadratic rate
    double alpha = 1.0;  // RationalQuadratic shape
    double ell = 1.0;    // Matern lengthscale
    double nu = 2.5;     // Matern smoothness; only 5/2 and 7/2 supported

    static Profile linear() { return {Kind::Linear}; }
    static Profile polynomial(double c, int p) {
        Profile pr{Kind::Polynomial};
        pr.c = c;
        pr.p = p;
        return pr;
    }
    static Profile gaussian(double g) {
        Profile pr{Kind::Gaussian};
        pr.g = g;
        return pr;
    }
    static Profile laplace(double g) {
        Profile pr{Kind::Laplace};
        pr.g = g;
        return pr;
    }
    static Profile rational_quadratic(double alpha, double g) {
        Profile pr{Kind::RationalQuadratic};
        pr.alpha = alpha;
        pr.g = g;
        return pr;
    }
    static Profile matern(double ell, double nu) {
        Profile pr{Kind::Matern};
        pr.ell = ell;
        pr.nu = nu;
        return pr;
    }

    std::string name() const;
};

struct KernelSpec {
    KernelFamily family;
    Profile profile;
    int dim;

    // Validates profile/family compatibility and the class conditions
    // (inner-product: h(0) >= 0, h'(0) > 0; RBF: h > 0 and h' < 0 on [0,2]
    // with h' increasing). Throws std::invalid_argument on violation.
    KernelSpec(KernelFamily family, Profile profile, int dim);

    static KernelSpec linear(int dim) {
        return {KernelFamily::InnerProduct, Profile::linear(), dim};
    }
    static KernelSpec polynomial(int dim, double c, int p) {
        return {KernelFamily::InnerProduct, Profile::polynomial(c, p), dim};
    }
    static KernelSpec gaussian(int dim, double g) {
        return {KernelFamily::Rbf, Profile::gaussian(g), dim};
    }
    static KernelSpec laplace(int dim, double g) {
        return {KernelFamily::Rbf, Profile::laplace(g), dim};
    }
    static KernelSpec rational_quadratic(int dim, double alpha, double g) {
        return {KernelFamily::Rbf, Profile::rational_quadratic(alpha, g), dim};
    }
    static KernelSpec matern(int dim, double ell, double nu) {
        return {KernelFamily::Rbf, Profile::matern(ell, nu), dim};
    }
};

struct ProfileDerivs {
    double h;
    double h1;
    double h2;
};

// h, h', h'' at t, closed form per profile. Laplace and Matern refuse t = 0
// (the Rbf parameter formulas only ever need derivatives at tau > 0).
ProfileDerivs profile_derivs(const KernelSpec& spec, double t);

// h(t) alone; defined at t = 0 for every profile.
double profile_value(const KernelSpec& spec, double t);

// K(x, y) = h(<x,y>/d) or h(||x-y||^2/d) depending on family.
double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct GramMatrix {
    Eigen::MatrixXd entries;
    KernelSpec spec;
};

// N x N kernel matrix of the rows of X. The strict upper triangle is computed
// once and mirrored, so the result is exactly symmetric.
GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& X);

// Cross-kernel vector k(x) with k_j = K(x, X_j).
Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& x);

// Taylor coefficients of the Gram matrix around the covariance scale.
//   inner-product: alpha = h(0) + h''(0) tr(S^2)/d^2, beta = h'(0),
//                  gamma = h(tau/2) - h(0) - h'(0) tau/2
//   RBF:           alpha = h(tau) + 2 h''(tau) tr(S^2)/d^2, beta = -2 h'(tau),
//                  gamma = h(0) + tau h'(tau) - h(tau)
// with tau = 2 tr(S)/d. The RBF detail vectors come from the sample:
//   psi_j = ||X_j||^2/d - tau/2,  rho = h'(tau) psi + h''(tau) psi∘psi / 2,
//   zeta = h''(tau) psi psi^T   (the Taylor coefficient of psi_j psi_k).
struct KernelParams {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double tau = 0.0;
    double r = 0.0;        // gamma / beta
    Eigen::VectorXd psi;   // empty unless X was supplied (RBF)
    Eigen::VectorXd rho;
    Eigen::MatrixXd zeta;
};

struct KernelParamsOptions {
    // When set, tau and tr(S^2) are estimated from X instead of taken from
    // the covariance eigenvalues.
    bool empirical = false;
};

KernelParams kernel_params(const KernelSpec& spec, const Eigen::VectorXd& sigma_diag,
                           const std::optional<Eigen::MatrixXd>& X = std::nullopt,
                           const KernelParamsOptions& opts = {});

// Numerically recorded profile constants used by the lenient-regret budgets.
// h'' is scanned over [0,1] (inner-product class), h' over [0,2] (RBF class);
// c_lower is min h'' for inner-product and 2 min|h'| for RBF.
struct KernelConstants {
    double h2_min = 0.0;
    double h2_max = 0.0;
    double beta = 0.0;    // h'(0) for inner-product profiles, else 0
    double h1_min = 0.0;
    double c_lower = 0.0;
    double b_norm = 0.0;  // RKHS bound of the reward, supplied by the caller
};

KernelConstants kernel_constants(const KernelSpec& spec, double rkhs_bound);

} // namespace kcb
