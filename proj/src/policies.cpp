#include "kcb/policies.hpp"

#include "kcb/util.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kcb {

int round_robin_arm(long t, int num_arms) {
    if (t < 1) throw std::invalid_argument("rounds are 1-based");
    if (num_arms < 1) throw std::invalid_argument("need at least one arm");
    return static_cast<int>((t - 1) % num_arms);
}

EtcPolicy::EtcPolicy(long T0, int num_arms, EstimatorChoice estimator,
                     std::optional<KernelSpec> spec)
    : T0_(T0), K_(num_arms), estimator_(estimator), spec_(std::move(spec)),
      xs_(num_arms), ys_(num_arms) {
    if (T0 < 1) throw std::invalid_argument("T0 must be >= 1");
    if (num_arms < 2) throw std::invalid_argument("need K >= 2 arms");
    if (estimator.is_kernel() && !spec_)
        throw std::invalid_argument("kernel estimator needs a KernelSpec");
}

int EtcPolicy::explore_arm(long t) const {
    if (t > T0_) throw std::invalid_argument("exploration phase over");
    return round_robin_arm(t, K_);
}

void EtcPolicy::record(int arm, const Eigen::VectorXd& context, double reward) {
    if (committed_) throw std::logic_error("already committed");
    if (recorded_ >= T0_) throw std::logic_error("exploration phase over");
    if (arm < 0 || arm >= K_) throw std::invalid_argument("arm out of range");
    xs_[arm].push_back(context);
    ys_[arm].push_back(reward);
    ++recorded_;
}

Dataset EtcPolicy::dataset(int arm) const {
    const auto& xs = xs_.at(arm);
    const auto& ys = ys_.at(arm);
    if (xs.empty()) throw std::runtime_error("arm has no exploration samples");
    Eigen::MatrixXd X(xs.size(), xs[0].size());
    Eigen::VectorXd Y(ys.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
        X.row(static_cast<Eigen::Index>(j)) = xs[j];
        Y(static_cast<Eigen::Index>(j)) = ys[j];
    }
    return Dataset(std::move(X), std::move(Y), arm);
}

void EtcPolicy::commit() {
    if (committed_) throw std::logic_error("already committed");
    if (recorded_ < T0_) throw std::logic_error("exploration incomplete");
    models_.reserve(K_);
    for (int i = 0; i < K_; ++i) {
        try {
            models_.push_back(fit_model(estimator_, spec_, dataset(i)));
        } catch (const std::exception& e) {
            models_.clear();
            std::ostringstream msg;
            msg << "commit failed on arm " << i << ": " << e.what();
            throw std::runtime_error(msg.str());
        }
    }
    committed_ = true;
}

int EtcPolicy::select(const std::vector<Eigen::VectorXd>& contexts) const {
    if (!committed_) throw std::logic_error("policy not committed");
    if (static_cast<int>(contexts.size()) != K_)
        throw std::invalid_argument("select needs one context per arm");
    Eigen::VectorXd scores(K_);
    for (int i = 0; i < K_; ++i) scores(i) = models_[i].predict(contexts[i]).mean;
    return argmax_lowest(scores);
}

const FittedModel& EtcPolicy::model(int arm) const {
    if (!committed_) throw std::logic_error("policy not committed");
    return models_.at(arm);
}

UcbPolicy::UcbPolicy(int num_arms, KernelSpec spec, double lambda2, double delta,
                     Eigen::VectorXd rkhs_bounds, double sigma2, double width_scale)
    : K_(num_arms), spec_(std::move(spec)), lambda2_(lambda2), delta_(delta),
      rkhs_bounds_(std::move(rkhs_bounds)), sigma2_(sigma2), width_scale_(width_scale),
      xs_(num_arms), ys_(num_arms), models_(num_arms), logdet_(num_arms, 0.0) {
    if (num_arms < 2) throw std::invalid_argument("need K >= 2 arms");
    if (lambda2_ <= 0.0) throw std::invalid_argument("lambda2 must be positive");
    if (delta_ <= 0.0 || delta_ >= 1.0) throw std::invalid_argument("delta must be in (0,1)");
    if (rkhs_bounds_.size() != num_arms)
        throw std::invalid_argument("need one RKHS bound per arm");
    if (sigma2_ < 0.0) throw std::invalid_argument("sigma2 must be >= 0");
}

void UcbPolicy::ensure_model(int arm) const {
    if (models_[arm] || ys_[arm].empty()) return;
    Eigen::MatrixXd X(xs_[arm].size(), xs_[arm][0].size());
    Eigen::VectorXd Y(ys_[arm].size());
    for (std::size_t j = 0; j < xs_[arm].size(); ++j) {
        X.row(static_cast<Eigen::Index>(j)) = xs_[arm][j];
        Y(static_cast<Eigen::Index>(j)) = ys_[arm][j];
    }
    models_[arm] = fit_model(EstimatorChoice::kernel_ridge(lambda2_), spec_,
                             Dataset(std::move(X), std::move(Y), arm));
    const double n = static_cast<double>(ys_[arm].size());
    logdet_[arm] = models_[arm]->factor_logdet() - n * std::log(lambda2_);
}

double UcbPolicy::beta(int arm) const {
    if (arm < 0 || arm >= K_) throw std::invalid_argument("arm out of range");
    ensure_model(arm);
    const double lambda = std::sqrt(lambda2_);
    const double inside = 2.0 * logdet_[arm] + 2.0 * std::log(static_cast<double>(K_) / delta_);
    return width_scale_ *
           (rkhs_bounds_(arm) + sigma2_ / lambda * std::sqrt(std::max(inside, 0.0)));
}

int UcbPolicy::select(const std::vector<Eigen::VectorXd>& contexts) const {
    if (static_cast<int>(contexts.size()) != K_)
        throw std::invalid_argument("select needs one context per arm");
    Eigen::VectorXd scores(K_);
    for (int i = 0; i < K_; ++i) {
        ensure_model(i);
        double mean = 0.0;
        double std_dev;
        if (models_[i]) {
            const Prediction p = models_[i]->predict(contexts[i], /*want_std=*/true);
            mean = p.mean;
            std_dev = *p.std;
        } else {
            std_dev = std::sqrt(std::max(eval_kernel(spec_, contexts[i], contexts[i]), 0.0));
        }
        scores(i) = mean + beta(i) * std_dev;
    }
    return argmax_lowest(scores);
}

void UcbPolicy::record(int arm, const Eigen::VectorXd& context, double reward) {
    if (arm < 0 || arm >= K_) throw std::invalid_argument("arm out of range");
    xs_[arm].push_back(context);
    ys_[arm].push_back(reward);
    models_[arm].reset();  // refit lazily on next query
}

} // namespace kcb
