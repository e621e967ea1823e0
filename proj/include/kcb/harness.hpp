#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kcb/config.hpp"
#include "kcb/diagnostics.hpp"
#include "kcb/environment.hpp"

namespace kcb {

struct RoundRecord {
    int arm = 0;
    int optimal = 0;
    double r = 0.0;        // realized gap at the drawn contexts, >= 0
    double R = 0.0;        // cumulative regret
    double R_delta = 0.0;  // cumulative lenient regret, sum of max(r - Delta, 0)
};

struct RegretTrace {
    std::uint64_t seed = 0;
    std::vector<RoundRecord> rounds;
};

struct RunSummary {
    std::vector<double> mean_R, se_R;    // per round, across seeds
    std::vector<double> mean_Rd, se_Rd;
    std::vector<double> final_R, final_Rd;  // per seed
};

// Per-arm benchmark instance: covariance, reward function, shared noise.
struct Environment {
    std::vector<CovarianceSpec> covs;
    std::vector<RewardFunction> rewards;
    NoiseSpec noise;

    Eigen::VectorXd rkhs_bounds() const;
};

// Environment randomness is drawn from named substreams of the seed
// ("covariance", "reward", "contexts", "noise"), so two policies replayed on
// the same seed face identical context and noise sequences.
Environment make_environment(const ExperimentConfig& cfg, std::uint64_t seed);

// One seeded episode against a prebuilt environment (test hook).
RegretTrace run_rounds(const ExperimentConfig& cfg, const Environment& env,
                       std::uint64_t seed);

RegretTrace run_episode(const ExperimentConfig& cfg, std::uint64_t seed);

// All configured seeds, optionally in parallel; trace order follows cfg.seeds
// regardless of scheduling.
std::vector<RegretTrace> run_all_seeds(const ExperimentConfig& cfg, int threads = 1);

RunSummary aggregate(const std::vector<RegretTrace>& traces);

// Writes summary.csv, per_seed.csv, metadata.json and (unless disabled)
// regret.svg under out_dir. Outputs are byte-identical for identical inputs.
void emit_outputs(const RunSummary& summary, const std::vector<RegretTrace>& traces,
                  const ExperimentConfig& cfg, const std::string& out_dir, bool svg);

struct DiagnosticsRow {
    std::uint64_t seed = 0;
    std::string case_name;
    int d = 0;
    long N = 0;
    double eps = 0.0;
    double V = 0.0;
    double B = 0.0;
    int argmin_k = 0;
    double op_norm_diff = 0.0;
    double gamma_half = 0.0;
    bool event = false;
    double mc_l2 = 0.0;
    double mig_final = 0.0;
    bool budget_valid = false;
    long budget_T0 = 0;
    bool budget_eps_ok = false;
    bool budget_sign_flagged = false;
};

// Spectral diagnostics of arm 0's instance at the exploration sample size
// N = ceil(T0 / K), one row per seed.
std::vector<DiagnosticsRow> diagnose(const ExperimentConfig& cfg, int threads = 1);

void emit_diagnostics(const std::vector<DiagnosticsRow>& rows, const std::string& out_dir);

// CLI entry points; return a process exit code.
int run_command(const ExperimentConfig& cfg, const std::string& out_dir, bool svg,
                int threads);
int sweep_command(const std::string& config_text, const std::string& vary,
                  const std::string& out_dir, bool svg, int threads);
int diagnose_command(const ExperimentConfig& cfg, const std::string& out_dir, int threads);

} // namespace kcb
