#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "kcb/estimators.hpp"
#include "kcb/kernels.hpp"

namespace kcb {

// Round-robin exploration arm for 1-based round t. The literal schedule
// "t - K floor(t/K)" lands on 0 at multiples of K, so the evident intent
// (t-1) mod K is used; arms are 0-indexed here.
int round_robin_arm(long t, int num_arms);

// Explore-then-commit: rounds 1..T0 sample arms round-robin and accumulate
// per-arm datasets; commit() fits one estimator per arm; afterwards select()
// plays argmax of the frozen predictors.
class EtcPolicy {
public:
    EtcPolicy(long T0, int num_arms, EstimatorChoice estimator,
              std::optional<KernelSpec> spec);

    int explore_arm(long t) const;  // valid for t in [1, T0]
    void record(int arm, const Eigen::VectorXd& context, double reward);
    void commit();
    bool committed() const { return committed_; }
    int select(const std::vector<Eigen::VectorXd>& contexts) const;

    long exploration_duration() const { return T0_; }
    int num_arms() const { return K_; }
    long samples_recorded() const { return recorded_; }
    const FittedModel& model(int arm) const;
    Dataset dataset(int arm) const;  // snapshot of an arm's accumulated data

private:
    long T0_;
    int K_;
    EstimatorChoice estimator_;
    std::optional<KernelSpec> spec_;
    std::vector<std::vector<Eigen::VectorXd>> xs_;
    std::vector<std::vector<double>> ys_;
    std::vector<FittedModel> models_;
    long recorded_ = 0;
    bool committed_ = false;
};

// Contextual GP-UCB over per-arm kernel-ridge posteriors. Plays
//   argmax_i  mean_i(x_i) + beta_i * std_i(x_i)
// with the confidence width
//   beta_i = B_i + sigma^2/lambda * sqrt(2 lndet(I + K/lambda^2) + 2 ln(K/delta))
// scaled by width_scale (1 or 1/10). Datasets grow per arm; models are refit
// from scratch when an arm's data changes.
class UcbPolicy {
public:
    UcbPolicy(int num_arms, KernelSpec spec, double lambda2, double delta,
              Eigen::VectorXd rkhs_bounds, double sigma2, double width_scale);

    double beta(int arm) const;
    int select(const std::vector<Eigen::VectorXd>& contexts) const;
    void record(int arm, const Eigen::VectorXd& context, double reward);

    int num_arms() const { return K_; }
    long observations(int arm) const { return static_cast<long>(ys_[arm].size()); }

private:
    void ensure_model(int arm) const;

    int K_;
    KernelSpec spec_;
    double lambda2_;
    double delta_;
    Eigen::VectorXd rkhs_bounds_;
    double sigma2_;
    double width_scale_;
    std::vector<std::vector<Eigen::VectorXd>> xs_;
    std::vector<std::vector<double>> ys_;
    mutable std::vector<std::optional<FittedModel>> models_;
    mutable std::vector<double> logdet_;  // ln det(I + K/lambda^2), per arm
};

} // namespace kcb
