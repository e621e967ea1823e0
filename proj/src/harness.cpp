#include "kcb/harness.hpp"

#include "kcb/policies.hpp"
#include "kcb/svg.hpp"
#include "kcb/util.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace kcb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string case_label(CovarianceCase c) {
    switch (c) {
        case CovarianceCase::LowRank: return "low_rank";
        case CovarianceCase::ApproxLowRank: return "approx_low_rank";
        case CovarianceCase::SpectralDecay: return "spectral_decay";
    }
    return "?";
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// failure after joining.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

} // namespace

Eigen::VectorXd Environment::rkhs_bounds() const {
    Eigen::VectorXd b(static_cast<Eigen::Index>(rewards.size()));
    for (std::size_t i = 0; i < rewards.size(); ++i)
        b(static_cast<Eigen::Index>(i)) = rewards[i].rkhs_norm;
    return b;
}

Environment make_environment(const ExperimentConfig& cfg, std::uint64_t seed) {
    Environment env;
    env.noise.sigma2 = cfg.sigma2;
    env.covs.reserve(cfg.K);
    env.rewards.reserve(cfg.K);
    for (int i = 0; i < cfg.K; ++i) {
        Rng cov_rng = substream(seed, "covariance", static_cast<std::uint64_t>(i));
        env.covs.push_back(
            make_covariance(cfg.covariance.kind, cfg.d, cov_rng, cfg.covariance.active));
        Rng rew_rng = substream(seed, "reward", static_cast<std::uint64_t>(i));
        env.rewards.push_back(make_reward(cfg.d, cfg.reward_centers, rew_rng));
    }
    return env;
}

RegretTrace run_rounds(const ExperimentConfig& cfg, const Environment& env,
                       std::uint64_t seed) {
    std::vector<Rng> ctx_rngs;
    ctx_rngs.reserve(cfg.K);
    for (int i = 0; i < cfg.K; ++i)
        ctx_rngs.push_back(substream(seed, "contexts", static_cast<std::uint64_t>(i)));
    Rng noise_rng = substream(seed, "noise");
    const double sigma = std::sqrt(env.noise.sigma2);

    const bool is_etc = cfg.policy.name == PolicyConfig::Name::Etc;
    std::optional<EtcPolicy> etc;
    std::optional<UcbPolicy> ucb;
    if (is_etc) {
        std::optional<KernelSpec> spec;
        if (cfg.policy.estimator.is_kernel()) spec = cfg.make_kernel();
        etc.emplace(cfg.T0, cfg.K, cfg.policy.estimator, spec);
    } else {
        ucb.emplace(cfg.K, cfg.make_kernel(), cfg.policy.lambda2, cfg.policy.delta,
                    env.rkhs_bounds(), env.noise.sigma2, cfg.policy.width_scale);
    }

    RegretTrace trace;
    trace.seed = seed;
    trace.rounds.reserve(cfg.T);
    double R = 0.0, Rd = 0.0;

    for (long t = 1; t <= cfg.T; ++t) {
        const RoundDraw draw = draw_round(env.rewards, env.covs, ctx_rngs);
        const double xi = sigma * noise_rng.normal();  // drawn every round for determinism

        int arm;
        try {
            if (is_etc) {
                if (t <= cfg.T0) {
                    arm = etc->explore_arm(t);
                    etc->record(arm, draw.contexts[arm], draw.means(arm) + xi);
                    if (t == cfg.T0) etc->commit();
                } else {
                    arm = etc->select(draw.contexts);
                }
            } else {
                arm = ucb->select(draw.contexts);
                ucb->record(arm, draw.contexts[arm], draw.means(arm) + xi);
            }
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "episode aborted at round " << t << " (seed " << seed << "): " << e.what();
            throw std::runtime_error(msg.str());
        }

        const double r = draw.means(draw.optimal_arm) - draw.means(arm);
        R += r;
        Rd += std::max(r - cfg.delta_lenient, 0.0);
        trace.rounds.push_back({arm, draw.optimal_arm, r, R, Rd});
    }
    return trace;
}

RegretTrace run_episode(const ExperimentConfig& cfg, std::uint64_t seed) {
    return run_rounds(cfg, make_environment(cfg, seed), seed);
}

std::vector<RegretTrace> run_all_seeds(const ExperimentConfig& cfg, int threads) {
    std::vector<RegretTrace> traces(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), threads,
                 [&](std::size_t i) { traces[i] = run_episode(cfg, cfg.seeds[i]); });
    return traces;
}

RunSummary aggregate(const std::vector<RegretTrace>& traces) {
    if (traces.empty()) throw std::invalid_argument("aggregate: no traces");
    const std::size_t T = traces[0].rounds.size();
    for (const auto& tr : traces)
        if (tr.rounds.size() != T)
            throw std::invalid_argument("aggregate: trace length mismatch");

    const double n = static_cast<double>(traces.size());
    RunSummary s;
    s.mean_R.resize(T);
    s.se_R.resize(T);
    s.mean_Rd.resize(T);
    s.se_Rd.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        double mR = 0.0, mRd = 0.0;
        for (const auto& tr : traces) {
            mR += tr.rounds[t].R;
            mRd += tr.rounds[t].R_delta;
        }
        mR /= n;
        mRd /= n;
        double vR = 0.0, vRd = 0.0;
        if (traces.size() > 1) {
            for (const auto& tr : traces) {
                vR += (tr.rounds[t].R - mR) * (tr.rounds[t].R - mR);
                vRd += (tr.rounds[t].R_delta - mRd) * (tr.rounds[t].R_delta - mRd);
            }
            vR /= (n - 1.0);
            vRd /= (n - 1.0);
        }
        s.mean_R[t] = mR;
        s.se_R[t] = std::sqrt(vR / n);
        s.mean_Rd[t] = mRd;
        s.se_Rd[t] = std::sqrt(vRd / n);
    }
    for (const auto& tr : traces) {
        s.final_R.push_back(tr.rounds.back().R);
        s.final_Rd.push_back(tr.rounds.back().R_delta);
    }
    return s;
}

void emit_outputs(const RunSummary& summary, const std::vector<RegretTrace>& traces,
                  const ExperimentConfig& cfg, const std::string& out_dir, bool svg) {
    if (traces.empty()) throw std::invalid_argument("emit_outputs: no traces");
    if (summary.mean_R.empty()) throw std::invalid_argument("emit_outputs: empty summary");

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    {
        std::ostringstream csv;
        csv << "round,mean_regret,stderr,mean_lenient,stderr_lenient\n";
        for (std::size_t t = 0; t < summary.mean_R.size(); ++t)
            csv << (t + 1) << ',' << fmt17(summary.mean_R[t]) << ',' << fmt17(summary.se_R[t])
                << ',' << fmt17(summary.mean_Rd[t]) << ',' << fmt17(summary.se_Rd[t]) << '\n';
        write_file(dir / "summary.csv", csv.str());
    }

    {
        std::ostringstream csv;
        csv << "seed,round,arm,optimal,r,R,R_delta\n";
        for (const auto& tr : traces) {
            long t = 1;
            for (const auto& rec : tr.rounds) {
                csv << tr.seed << ',' << t << ',' << rec.arm << ',' << rec.optimal << ','
                    << fmt17(rec.r) << ',' << fmt17(rec.R) << ',' << fmt17(rec.R_delta) << '\n';
                ++t;
            }
        }
        write_file(dir / "per_seed.csv", csv.str());
    }

    {
        json meta;
        meta["config"] = json::parse(serialize_config(cfg));
        meta["policy_label"] = cfg.policy.label();
        meta["notes"] = {
            "regret is the realized gap at the drawn contexts; seed averages estimate the "
            "expectation",
            "lenient regret applies max(gap - delta_lenient, 0) to the realized per-round gap"};
        write_file(dir / "metadata.json", meta.dump(2) + "\n");
    }

    if (svg) {
        SvgSeries series{cfg.policy.label(), summary.mean_R, summary.se_R};
        write_regret_svg((dir / "regret.svg").string(), {series}, "Cumulative regret", "round",
                         "regret");
    }
}

std::vector<DiagnosticsRow> diagnose(const ExperimentConfig& cfg, int threads) {
    const KernelSpec kernel = cfg.make_kernel();
    const long N = (cfg.T0 + cfg.K - 1) / cfg.K;  // arm 0's exploration sample count

    std::vector<DiagnosticsRow> rows(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), threads, [&](std::size_t idx) {
        const std::uint64_t seed = cfg.seeds[idx];
        Rng cov_rng = substream(seed, "covariance", 0);
        const CovarianceSpec cov =
            make_covariance(cfg.covariance.kind, cfg.d, cov_rng, cfg.covariance.active);
        Rng rew_rng = substream(seed, "reward", 0);
        const RewardFunction reward = make_reward(cfg.d, cfg.reward_centers, rew_rng);

        Rng ctx_rng = substream(seed, "contexts", 0);
        Rng noise_rng = substream(seed, "noise");
        Eigen::MatrixXd X(N, cfg.d);
        Eigen::VectorXd Y(N);
        const double sigma = std::sqrt(cfg.sigma2);
        for (long j = 0; j < N; ++j) {
            const Eigen::VectorXd x = sample_context(cov, ctx_rng);
            X.row(j) = x;
            Y(j) = eval_reward(reward, x) + sigma * noise_rng.normal();
        }

        DiagnosticsRow row;
        row.seed = seed;
        row.case_name = case_label(cov.kind);
        row.d = cfg.d;
        row.N = N;
        row.eps = cov.epsilon();

        KernelParamsOptions kpo;
        kpo.empirical = cfg.diagnostics.empirical;
        const KernelParams params = kernel_params(kernel, cov.eigs, X, kpo);

        const Eigen::VectorXd eigs_sh = sigma_hat_eigenvalues(X);
        try {
            row.V = effective_variance(eigs_sh, params.gamma, params.beta, cfg.d);
        } catch (const std::exception&) {
            row.V = std::numeric_limits<double>::quiet_NaN();  // gamma = 0 (linear profile)
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram(kernel, X).entries,
                                                          Eigen::EigenvaluesOnly);
        const Eigen::VectorXd gram_eigs = es.eigenvalues().reverse().cwiseMax(0.0);
        std::tie(row.B, row.argmin_k) = effective_bias(gram_eigs, reward.rkhs_norm);

        const LinApproxReport lin = k_lin(kernel, X, params);
        row.op_norm_diff = lin.op_norm_diff;
        row.gamma_half = lin.gamma_half;
        row.event = lin.event_holds;

        row.mig_final = mig(kernel, X, cfg.diagnostics.tau2).gain_by_T.back();

        EstimatorChoice est = cfg.policy.name == PolicyConfig::Name::Etc
                                  ? cfg.policy.estimator
                                  : EstimatorChoice::kernel_ridge(cfg.policy.lambda2);
        const FittedModel model = fit_model(est, kernel, Dataset(X, Y, 0));
        Rng mc_rng = substream(seed, "mc_l2");
        row.mc_l2 = mc_l2_error(model, reward, cov, cfg.diagnostics.mc_samples, mc_rng);

        if (cfg.delta_lenient > 0.0 && std::isfinite(cfg.delta_lenient) && cfg.sigma2 > 0.0) {
            const KernelConstants kc = kernel_constants(kernel, reward.rkhs_norm);
            const LenientBudget budget =
                lenient_budget(cov.kind, kernel.family, cfg.delta_lenient, cov.epsilon(),
                               cfg.d, cfg.K, cfg.sigma2, kc);
            row.budget_valid = true;
            row.budget_T0 = budget.T0;
            row.budget_eps_ok = budget.eps_ok;
            row.budget_sign_flagged = budget.sign_flagged;
        }
        rows[idx] = std::move(row);
    });
    return rows;
}

void emit_diagnostics(const std::vector<DiagnosticsRow>& rows, const std::string& out_dir) {
    if (rows.empty()) throw std::invalid_argument("emit_diagnostics: no rows");
    fs::create_directories(out_dir);
    std::ostringstream csv;
    csv << "seed,case,d,N,eps,V,B,argmin_k,op_norm_diff,gamma_half,event,mc_l2,mig,"
           "budget_T0,budget_eps_ok,budget_sign_flagged\n";
    for (const auto& r : rows) {
        csv << r.seed << ',' << r.case_name << ',' << r.d << ',' << r.N << ',' << fmt17(r.eps)
            << ',' << fmt17(r.V) << ',' << fmt17(r.B) << ',' << r.argmin_k << ','
            << fmt17(r.op_norm_diff) << ',' << fmt17(r.gamma_half) << ',' << (r.event ? 1 : 0)
            << ',' << fmt17(r.mc_l2) << ',' << fmt17(r.mig_final) << ',';
        if (r.budget_valid)
            csv << r.budget_T0 << ',' << (r.budget_eps_ok ? 1 : 0) << ','
                << (r.budget_sign_flagged ? 1 : 0);
        else
            csv << ",,";
        csv << '\n';
    }
    write_file(fs::path(out_dir) / "diagnostics.csv", csv.str());
}

int run_command(const ExperimentConfig& cfg, const std::string& out_dir, bool svg,
                int threads) {
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
    const auto traces = run_all_seeds(cfg, threads);
    const RunSummary summary = aggregate(traces);
    emit_outputs(summary, traces, cfg, out_dir, svg);

    double mean = 0.0;
    for (double v : summary.final_R) mean += v;
    mean /= static_cast<double>(summary.final_R.size());
    std::cout << cfg.policy.label() << ": mean final regret " << mean << " over "
              << cfg.seeds.size() << " seeds -> " << out_dir << '\n';
    return 0;
}

int diagnose_command(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
    const auto rows = diagnose(cfg, threads);
    emit_diagnostics(rows, out_dir);
    std::cout << "wrote diagnostics for " << rows.size() << " seeds -> " << out_dir << '\n';
    return 0;
}

namespace {

// Sets a dotted path ("covariance.active") in a JSON document.
void set_json_path(json& root, const std::string& key, const json& value) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

json parse_value_literal(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);  // bare strings are taken verbatim
    }
}

} // namespace

int sweep_command(const std::string& config_text, const std::string& vary,
                  const std::string& out_dir, bool svg, int threads) {
    const std::size_t eq = vary.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= vary.size())
        throw std::invalid_argument("--vary expects key=v1,v2,...");
    const std::string key = vary.substr(0, eq);
    std::vector<std::string> values;
    std::stringstream ss(vary.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(item);
    if (values.empty()) throw std::invalid_argument("--vary has no values");

    const json base = json::parse(config_text);
    fs::create_directories(out_dir);

    std::vector<SvgSeries> series;
    std::ostringstream table;
    table << "variant,final_mean_regret,final_stderr,final_mean_lenient,final_stderr_lenient\n";

    for (const auto& value : values) {
        json doc = base;
        if (key == "policy")
            doc["policy"] = json::parse(policy_preset_json(value));
        else
            set_json_path(doc, key, parse_value_literal(value));

        const ExperimentConfig cfg = parse_config(doc.dump());
        for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';

        const std::string label = key + "=" + value;
        const fs::path sub = fs::path(out_dir) / label;
        const auto traces = run_all_seeds(cfg, threads);
        const RunSummary summary = aggregate(traces);
        emit_outputs(summary, traces, cfg, sub.string(), svg);

        series.push_back({label, summary.mean_R, summary.se_R});
        table << label << ',' << fmt17(summary.mean_R.back()) << ',' << fmt17(summary.se_R.back())
              << ',' << fmt17(summary.mean_Rd.back()) << ',' << fmt17(summary.se_Rd.back())
              << '\n';
        std::cout << label << ": mean final regret " << summary.mean_R.back() << '\n';
    }

    write_file(fs::path(out_dir) / "sweep.csv", table.str());
    if (svg)
        write_regret_svg((fs::path(out_dir) / "sweep.svg").string(), series,
                         "Cumulative regret", "round", "regret");
    return 0;
}

} // namespace kcb
