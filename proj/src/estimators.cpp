#include "kcb/estimators.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kcb {

namespace {

constexpr double kContextClip = 10.0;

// Jitter ladder for near-singular Gram matrices (duplicated contexts).
constexpr double kJitters[] = {0.0, 1e-12, 1e-10, 1e-8};

double interp_tolerance(const Eigen::VectorXd& Y) {
    return 1e-6 * (1.0 + Y.lpNorm<Eigen::Infinity>());
}

} // namespace

Dataset::Dataset(Eigen::MatrixXd X_, Eigen::VectorXd Y_, int arm_id_)
    : X(std::move(X_)), Y(std::move(Y_)), arm_id(arm_id_) {
    if (Y.size() < 1) throw std::invalid_argument("dataset must be nonempty");
    if (X.rows() != Y.size()) throw std::invalid_argument("dataset X/Y row mismatch");
    if (!X.allFinite() || !Y.allFinite())
        throw std::invalid_argument("dataset entries must be finite");
    if (X.cwiseAbs().maxCoeff() > kContextClip + 1e-9)
        throw std::invalid_argument("dataset contexts exceed the |x| <= 10 clip");
}

FittedModel fit_model(const EstimatorChoice& choice, const std::optional<KernelSpec>& spec,
                      const Dataset& data) {
    if (choice.lambda2 < 0.0) throw std::invalid_argument("lambda2 must be >= 0");

    FittedModel m;
    m.choice = choice;
    m.train_X = data.X;

    if (choice.is_kernel()) {
        if (!spec) throw std::invalid_argument("kernel estimator needs a KernelSpec");
        if (data.X.cols() != spec->dim)
            throw std::invalid_argument("dataset dimension does not match kernel spec");
        m.spec = *spec;

        const Eigen::MatrixXd G = gram(*spec, data.X).entries;
        const Eigen::Index n = G.rows();
        const bool interp = choice.kind == EstimatorKind::KernelInterp;
        const double tol = interp_tolerance(data.Y);

        for (double jit : kJitters) {
            Eigen::MatrixXd A = G + (choice.lambda2 + jit) * Eigen::MatrixXd::Identity(n, n);
            auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(A);
            if (llt->info() != Eigen::Success) continue;
            Eigen::VectorXd a = llt->solve(data.Y);
            if (!a.allFinite()) continue;
            if (interp) {
                const double resid = (G * a - data.Y).lpNorm<Eigen::Infinity>();
                if (resid > tol) continue;
            }
            m.coeffs = std::move(a);
            m.jitter = jit;
            m.llt_ = std::move(llt);
            return m;
        }

        Eigen::LLT<Eigen::MatrixXd> probe(
            G + (choice.lambda2 + kJitters[3]) * Eigen::MatrixXd::Identity(n, n));
        std::ostringstream msg;
        msg << "singular system: kernel solve failed after max jitter (rcond ~= "
            << (probe.info() == Eigen::Success ? probe.rcond() : 0.0) << ")";
        throw std::runtime_error(msg.str());
    }

    if (choice.kind == EstimatorKind::LinearMinNorm) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(data.X,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-10);  // singular values below 1e-10 * s_max count as zero
        m.coeffs = svd.solve(data.Y);
        return m;
    }

    // LinearRidge
    const Eigen::Index d = data.X.cols();
    const Eigen::MatrixXd Xt = data.X.transpose();
    const Eigen::MatrixXd A0 = Xt * data.X;
    const Eigen::VectorXd b = Xt * data.Y;
    for (double jit : kJitters) {
        Eigen::MatrixXd A = A0 + (choice.lambda2 + jit) * Eigen::MatrixXd::Identity(d, d);
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success) continue;
        Eigen::VectorXd w = llt.solve(b);
        if (!w.allFinite()) continue;
        m.coeffs = std::move(w);
        m.jitter = jit;
        return m;
    }
    throw std::runtime_error("singular system: linear ridge normal equations not SPD");
}

Prediction FittedModel::predict(const Eigen::VectorXd& x, bool want_std) const {
    Prediction out;
    if (choice.is_kernel()) {
        const Eigen::VectorXd k = kernel_vector(*spec, train_X, x);
        out.mean = k.dot(coeffs);
        if (want_std) {
            const double kxx = eval_kernel(*spec, x, x);
            const double var = kxx - k.dot(llt_->solve(k));
            out.std = std::sqrt(std::max(var, 0.0));  // clamp fp cancellation
        }
        return out;
    }
    if (x.size() != coeffs.size())
        throw std::invalid_argument("predict: dimension mismatch");
    if (want_std) throw std::invalid_argument("variance unsupported for linear estimators");
    out.mean = coeffs.dot(x);
    return out;
}

double FittedModel::factor_logdet() const {
    if (!choice.is_kernel() || !llt_)
        throw std::invalid_argument("factor_logdet: kernel estimators only");
    return 2.0 * llt_->matrixLLT().diagonal().array().log().sum();
}

double FittedModel::rkhs_norm() const {
    if (choice.is_kernel()) {
        const Eigen::MatrixXd G = gram(*spec, train_X).entries;
        return std::sqrt(std::max(coeffs.dot(G * coeffs), 0.0));
    }
    // Linear kinds: Euclidean weight norm, the RKHS norm of the linear kernel.
    return coeffs.norm();
}

double rkhs_norm_of(const FittedModel& model) { return model.rkhs_norm(); }

FittedModel fit_interpolator_gd(const KernelSpec& spec, const Dataset& data, int steps,
                                double rate) {
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (rate <= 0.0) throw std::invalid_argument("rate must be positive");
    if (data.X.cols() != spec.dim)
        throw std::invalid_argument("dataset dimension does not match kernel spec");

    const Eigen::MatrixXd G = gram(spec, data.X).entries;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(data.Y.size());
    Eigen::VectorXd resid = data.Y;  // Y - G a
    const double r0 = resid.norm();
    const double stop = 1e-14 * (1.0 + data.Y.lpNorm<Eigen::Infinity>());

    for (int s = 0; s < steps && resid.norm() > stop; ++s) {
        a += rate * resid;
        resid = data.Y - G * a;
        if (!resid.allFinite() || resid.norm() > 10.0 * r0)
            throw std::runtime_error(
                "gradient descent diverged; use a rate below 2/lambda_max(K)");
    }

    FittedModel m;
    m.choice = EstimatorChoice::kernel_interp();
    m.train_X = data.X;
    m.spec = spec;
    m.coeffs = std::move(a);
    m.llt_ = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(
        G + 1e-12 * Eigen::MatrixXd::Identity(G.rows(), G.cols()));
    return m;
}

} // namespace kcb
