#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kcb/config.hpp"
#include "kcb/harness.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kcb: kernelized contextual bandit simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string vary;
    int threads = 1;
    bool no_svg = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "experiment config (JSON)")->required();
        cmd->add_option("--out", out_override, "output directory (overrides config out_dir)");
        cmd->add_option("--threads", threads, "worker threads for seeds")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--no-svg", no_svg, "skip SVG plots");
    };

    CLI::App* run = app.add_subcommand("run", "run episodes, aggregate, write CSV/SVG");
    add_common(run);
    CLI::App* sweep = app.add_subcommand("sweep", "grid over one config key");
    add_common(sweep);
    sweep->add_option("--vary", vary, "key=v1,v2,... (key may be dotted; policy takes preset names)")
        ->required();
    CLI::App* diag = app.add_subcommand("diagnose", "emit the spectral diagnostics CSV");
    add_common(diag);

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string text = slurp(config_path);
        const kcb::ExperimentConfig cfg = kcb::parse_config(text);
        const std::string out = out_override.empty() ? cfg.out_dir : out_override;
        if (run->parsed()) return kcb::run_command(cfg, out, !no_svg, threads);
        if (sweep->parsed()) return kcb::sweep_command(text, vary, out, !no_svg, threads);
        return kcb::diagnose_command(cfg, out, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
