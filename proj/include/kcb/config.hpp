#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcb/environment.hpp"
#include "kcb/estimators.hpp"
#include "kcb/kernels.hpp"

namespace kcb {

struct PolicyConfig {
    enum class Name { Etc, CgpUcb };
    Name name = Name::Etc;
    EstimatorChoice estimator = EstimatorChoice::kernel_interp();  // EtC only
    double lambda2 = 1.0;      // CGP-UCB ridge / GP noise parameter
    double width_scale = 1.0;  // 1 or 0.1
    double delta = 0.1;        // CGP-UCB confidence level

    std::string label() const;
};

// Named baselines: etc, etc_ridge, etc_linear, etc_linear_ridge, cgp_ucb,
// cgp_ucb_ridgeless, cgp_ucb_scaled, cgp_ucb_scaled_ridgeless.
PolicyConfig policy_preset(const std::string& name);

// The preset's "policy" object as JSON text (used by sweep).
std::string policy_preset_json(const std::string& name);

struct CovarianceConfig {
    CovarianceCase kind = CovarianceCase::LowRank;
    std::optional<int> active;  // LowRank override, defaults to d/2
};

struct DiagnosticsConfig {
    int mc_samples = 2000;
    double tau2 = 1.0;
    bool empirical = false;  // estimate tau / tr(S^2) from the sample
};

struct ExperimentConfig {
    int d = 0;
    int K = 0;
    long T = 0;
    long T0 = 0;
    CovarianceConfig covariance;
    int reward_centers = 500;
    double sigma2 = 1e-4;
    Profile kernel_profile = Profile::gaussian(4.0);
    PolicyConfig policy;
    double delta_lenient = 0.0;
    std::vector<std::uint64_t> seeds;
    std::string out_dir = "out";
    DiagnosticsConfig diagnostics;
    std::vector<std::string> warnings;  // filled during parsing, not serialized

    KernelSpec make_kernel() const;
};

// Strict parser: unknown keys are rejected, violated constraints name the
// offending key. Required keys: d, K, T, T0, policy, covariance, seeds.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

} // namespace kcb
