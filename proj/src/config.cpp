#include "kcb/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kcb {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
}

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            fail("unknown key \"" + where + it.key() + "\"");
    }
}

const json& require(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end()) fail("missing required key \"" + key + "\"");
    return *it;
}

long get_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) fail("\"" + key + "\" must be an integer");
    return v.get<long>();
}

double get_num(const json& v, const std::string& key) {
    if (v.is_string() && v.get<std::string>() == "inf")
        return std::numeric_limits<double>::infinity();
    if (!v.is_number()) fail("\"" + key + "\" must be a number");
    return v.get<double>();
}

CovarianceCase parse_case(const std::string& s) {
    if (s == "low_rank") return CovarianceCase::LowRank;
    if (s == "approx_low_rank") return CovarianceCase::ApproxLowRank;
    if (s == "spectral_decay") return CovarianceCase::SpectralDecay;
    fail("unknown covariance case \"" + s + "\"");
}

std::string case_name(CovarianceCase c) {
    switch (c) {
        case CovarianceCase::LowRank: return "low_rank";
        case CovarianceCase::ApproxLowRank: return "approx_low_rank";
        case CovarianceCase::SpectralDecay: return "spectral_decay";
    }
    return "?";
}

EstimatorKind parse_estimator(const std::string& s) {
    if (s == "kernel_interp") return EstimatorKind::KernelInterp;
    if (s == "kernel_ridge") return EstimatorKind::KernelRidge;
    if (s == "linear_min_norm") return EstimatorKind::LinearMinNorm;
    if (s == "linear_ridge") return EstimatorKind::LinearRidge;
    fail("unknown estimator \"" + s + "\"");
}

std::string estimator_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::KernelInterp: return "kernel_interp";
        case EstimatorKind::KernelRidge: return "kernel_ridge";
        case EstimatorKind::LinearMinNorm: return "linear_min_norm";
        case EstimatorKind::LinearRidge: return "linear_ridge";
    }
    return "?";
}

PolicyConfig parse_policy(const json& obj) {
    if (!obj.is_object()) fail("\"policy\" must be an object");
    PolicyConfig pc;
    const std::string name = require(obj, "name").get<std::string>();
    if (name == "etc") {
        pc.name = PolicyConfig::Name::Etc;
        check_keys(obj, {"name", "estimator", "lambda2"}, "policy.");
        pc.estimator.kind = parse_estimator(require(obj, "estimator").get<std::string>());
        const bool ridge = pc.estimator.kind == EstimatorKind::KernelRidge ||
                           pc.estimator.kind == EstimatorKind::LinearRidge;
        pc.estimator.lambda2 = ridge ? 1.0 : 0.0;
        if (obj.contains("lambda2")) {
            if (!ridge) fail("\"policy.lambda2\" only applies to ridge estimators");
            pc.estimator.lambda2 = get_num(obj["lambda2"], "policy.lambda2");
            if (pc.estimator.lambda2 < 0.0) fail("\"policy.lambda2\" must be >= 0");
        }
    } else if (name == "cgp_ucb") {
        pc.name = PolicyConfig::Name::CgpUcb;
        check_keys(obj, {"name", "lambda2", "width_scale", "delta"}, "policy.");
        if (obj.contains("lambda2")) pc.lambda2 = get_num(obj["lambda2"], "policy.lambda2");
        if (pc.lambda2 <= 0.0) fail("\"policy.lambda2\" must be > 0");
        if (obj.contains("width_scale"))
            pc.width_scale = get_num(obj["width_scale"], "policy.width_scale");
        if (pc.width_scale != 1.0 && pc.width_scale != 0.1)
            fail("\"policy.width_scale\" must be 1 or 0.1");
        if (obj.contains("delta")) pc.delta = get_num(obj["delta"], "policy.delta");
        if (pc.delta <= 0.0 || pc.delta >= 1.0) fail("\"policy.delta\" must be in (0,1)");
    } else {
        fail("unknown policy \"" + name + "\"");
    }
    return pc;
}

Profile parse_profile(const json& obj) {
    if (!obj.is_object()) fail("\"kernel\" must be an object");
    const std::string prof = require(obj, "profile").get<std::string>();
    if (prof == "linear") {
        check_keys(obj, {"profile"}, "kernel.");
        return Profile::linear();
    }
    if (prof == "polynomial") {
        check_keys(obj, {"profile", "c", "p"}, "kernel.");
        return Profile::polynomial(get_num(require(obj, "c"), "kernel.c"),
                                   static_cast<int>(get_int(require(obj, "p"), "kernel.p")));
    }
    if (prof == "gaussian") {
        check_keys(obj, {"profile", "g"}, "kernel.");
        return Profile::gaussian(obj.contains("g") ? get_num(obj["g"], "kernel.g") : 4.0);
    }
    if (prof == "laplace") {
        check_keys(obj, {"profile", "g"}, "kernel.");
        return Profile::laplace(get_num(require(obj, "g"), "kernel.g"));
    }
    if (prof == "rational_quadratic") {
        check_keys(obj, {"profile", "alpha", "g"}, "kernel.");
        return Profile::rational_quadratic(get_num(require(obj, "alpha"), "kernel.alpha"),
                                           get_num(require(obj, "g"), "kernel.g"));
    }
    if (prof == "matern") {
        check_keys(obj, {"profile", "ell", "nu"}, "kernel.");
        return Profile::matern(get_num(require(obj, "ell"), "kernel.ell"),
                               get_num(require(obj, "nu"), "kernel.nu"));
    }
    fail("unknown kernel profile \"" + prof + "\"");
}

json profile_to_json(const Profile& pr) {
    json k;
    k["profile"] = pr.name();
    switch (pr.kind) {
        case Profile::Kind::Linear: break;
        case Profile::Kind::Polynomial:
            k["c"] = pr.c;
            k["p"] = pr.p;
            break;
        case Profile::Kind::Gaussian:
        case Profile::Kind::Laplace:
            k["g"] = pr.g;
            break;
        case Profile::Kind::RationalQuadratic:
            k["alpha"] = pr.alpha;
            k["g"] = pr.g;
            break;
        case Profile::Kind::Matern:
            k["ell"] = pr.ell;
            k["nu"] = pr.nu;
            break;
    }
    return k;
}

} // namespace

std::string PolicyConfig::label() const {
    if (name == Name::Etc) {
        switch (estimator.kind) {
            case EstimatorKind::KernelInterp: return "EtC";
            case EstimatorKind::KernelRidge: return "EtC-Ridge";
            case EstimatorKind::LinearMinNorm: return "EtC-Linear";
            case EstimatorKind::LinearRidge: return "EtC-Linear-Ridge";
        }
    }
    std::string s = "CGP-UCB";
    if (width_scale == 0.1) s += "-Scaled";
    if (lambda2 <= 1e-6) s += "-Ridgeless";
    return s;
}

PolicyConfig policy_preset(const std::string& name) {
    PolicyConfig pc;
    if (name == "etc") {
        pc.estimator = EstimatorChoice::kernel_interp();
    } else if (name == "etc_ridge") {
        pc.estimator = EstimatorChoice::kernel_ridge(1.0);
    } else if (name == "etc_linear") {
        pc.estimator = EstimatorChoice::linear_min_norm();
    } else if (name == "etc_linear_ridge") {
        pc.estimator = EstimatorChoice::linear_ridge(1.0);
    } else if (name == "cgp_ucb" || name == "cgp_ucb_ridgeless" || name == "cgp_ucb_scaled" ||
               name == "cgp_ucb_scaled_ridgeless") {
        pc.name = PolicyConfig::Name::CgpUcb;
        pc.lambda2 = (name.find("ridgeless") != std::string::npos) ? 1e-8 : 1.0;
        pc.width_scale = (name.find("scaled") != std::string::npos) ? 0.1 : 1.0;
    } else {
        fail("unknown policy preset \"" + name + "\"");
    }
    return pc;
}

std::string policy_preset_json(const std::string& name) {
    const PolicyConfig pc = policy_preset(name);
    json pol;
    if (pc.name == PolicyConfig::Name::Etc) {
        pol["name"] = "etc";
        pol["estimator"] = estimator_name(pc.estimator.kind);
        if (pc.estimator.kind == EstimatorKind::KernelRidge ||
            pc.estimator.kind == EstimatorKind::LinearRidge)
            pol["lambda2"] = pc.estimator.lambda2;
    } else {
        pol["name"] = "cgp_ucb";
        pol["lambda2"] = pc.lambda2;
        pol["width_scale"] = pc.width_scale;
        pol["delta"] = pc.delta;
    }
    return pol.dump();
}

KernelSpec ExperimentConfig::make_kernel() const {
    const bool ip = kernel_profile.kind == Profile::Kind::Linear ||
                    kernel_profile.kind == Profile::Kind::Polynomial;
    return {ip ? KernelFamily::InnerProduct : KernelFamily::Rbf, kernel_profile, d};
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) fail("top level must be an object");
    check_keys(root,
               {"d", "K", "T", "T0", "covariance", "reward_centers", "sigma2", "kernel",
                "policy", "delta_lenient", "seeds", "out_dir", "diagnostics"},
               "");

    ExperimentConfig cfg;
    cfg.d = static_cast<int>(get_int(require(root, "d"), "d"));
    cfg.K = static_cast<int>(get_int(require(root, "K"), "K"));
    cfg.T = get_int(require(root, "T"), "T");
    cfg.T0 = get_int(require(root, "T0"), "T0");
    if (cfg.d < 2) fail("\"d\" must be >= 2");
    if (cfg.K < 2) fail("\"K\" must be >= 2");
    if (cfg.T < 1) fail("\"T\" must be >= 1");
    if (cfg.T0 < 1) fail("\"T0\" must be >= 1");
    if (cfg.T0 > cfg.T) fail("\"T0\" must be <= T");

    const json& cov = require(root, "covariance");
    if (!cov.is_object()) fail("\"covariance\" must be an object");
    check_keys(cov, {"case", "active"}, "covariance.");
    cfg.covariance.kind = parse_case(require(cov, "case").get<std::string>());
    if (cov.contains("active")) {
        if (cfg.covariance.kind != CovarianceCase::LowRank)
            fail("\"covariance.active\" only applies to the low_rank case");
        const long a = get_int(cov["active"], "covariance.active");
        if (a < 1 || a > cfg.d) fail("\"covariance.active\" must be in [1, d]");
        cfg.covariance.active = static_cast<int>(a);
    }

    cfg.policy = parse_policy(require(root, "policy"));

    if (root.contains("kernel")) cfg.kernel_profile = parse_profile(root["kernel"]);
    cfg.make_kernel();  // validates profile parameters against d

    if (root.contains("reward_centers")) {
        cfg.reward_centers = static_cast<int>(get_int(root["reward_centers"], "reward_centers"));
        if (cfg.reward_centers < 1) fail("\"reward_centers\" must be >= 1");
    }
    if (root.contains("sigma2")) {
        cfg.sigma2 = get_num(root["sigma2"], "sigma2");
        if (!(cfg.sigma2 >= 0.0)) fail("\"sigma2\" must be >= 0");
    }
    if (root.contains("delta_lenient")) {
        cfg.delta_lenient = get_num(root["delta_lenient"], "delta_lenient");
        if (!(cfg.delta_lenient >= 0.0)) fail("\"delta_lenient\" must be >= 0");
    }

    const json& seeds = require(root, "seeds");
    if (!seeds.is_array() || seeds.empty()) fail("\"seeds\" must be a nonempty array");
    for (const auto& s : seeds)
        cfg.seeds.push_back(static_cast<std::uint64_t>(get_int(s, "seeds")));

    if (root.contains("out_dir")) cfg.out_dir = root["out_dir"].get<std::string>();

    if (root.contains("diagnostics")) {
        const json& dg = root["diagnostics"];
        if (!dg.is_object()) fail("\"diagnostics\" must be an object");
        check_keys(dg, {"mc_samples", "tau2", "empirical"}, "diagnostics.");
        if (dg.contains("mc_samples")) {
            cfg.diagnostics.mc_samples =
                static_cast<int>(get_int(dg["mc_samples"], "diagnostics.mc_samples"));
            if (cfg.diagnostics.mc_samples < 1) fail("\"diagnostics.mc_samples\" must be >= 1");
        }
        if (dg.contains("tau2")) {
            cfg.diagnostics.tau2 = get_num(dg["tau2"], "diagnostics.tau2");
            if (cfg.diagnostics.tau2 <= 0.0) fail("\"diagnostics.tau2\" must be > 0");
        }
        if (dg.contains("empirical")) {
            if (!dg["empirical"].is_boolean()) fail("\"diagnostics.empirical\" must be a bool");
            cfg.diagnostics.empirical = dg["empirical"].get<bool>();
        }
    }

    if (cfg.T0 % cfg.K != 0)
        cfg.warnings.push_back("T0 is not a multiple of K; exploration counts differ by one");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json root;
    root["d"] = cfg.d;
    root["K"] = cfg.K;
    root["T"] = cfg.T;
    root["T0"] = cfg.T0;
    json cov;
    cov["case"] = case_name(cfg.covariance.kind);
    if (cfg.covariance.active) cov["active"] = *cfg.covariance.active;
    root["covariance"] = cov;
    root["reward_centers"] = cfg.reward_centers;
    root["sigma2"] = cfg.sigma2;
    root["kernel"] = profile_to_json(cfg.kernel_profile);
    json pol;
    if (cfg.policy.name == PolicyConfig::Name::Etc) {
        pol["name"] = "etc";
        pol["estimator"] = estimator_name(cfg.policy.estimator.kind);
        if (cfg.policy.estimator.kind == EstimatorKind::KernelRidge ||
            cfg.policy.estimator.kind == EstimatorKind::LinearRidge)
            pol["lambda2"] = cfg.policy.estimator.lambda2;
    } else {
        pol["name"] = "cgp_ucb";
        pol["lambda2"] = cfg.policy.lambda2;
        pol["width_scale"] = cfg.policy.width_scale;
        pol["delta"] = cfg.policy.delta;
    }
    root["policy"] = pol;
    if (std::isinf(cfg.delta_lenient))
        root["delta_lenient"] = "inf";
    else
        root["delta_lenient"] = cfg.delta_lenient;
    root["seeds"] = cfg.seeds;
    root["out_dir"] = cfg.out_dir;
    json dg;
    dg["mc_samples"] = cfg.diagnostics.mc_samples;
    dg["tau2"] = cfg.diagnostics.tau2;
    dg["empirical"] = cfg.diagnostics.empirical;
    root["diagnostics"] = dg;
    return root.dump(2) + "\n";
}

} // namespace kcb
