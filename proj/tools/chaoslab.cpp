#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "chaoslab/config.hpp"
#include "chaoslab/dispatch.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/parallel.hpp"

namespace cli = chaoslab::cli;
namespace config = chaoslab::config;

namespace {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

const char* describe(const std::string& name) {
    if (name == "check-kernel") return "classify the configured interaction kernel";
    if (name == "simulate") return "run one particle system and store the trajectory";
    if (name == "meanfield") return "mean-field reference solves (picard, fokker-planck, decay)";
    if (name == "girsanov") return "drift-energy and exponential-moment scaling in N";
    if (name == "chaos") return "propagation-of-chaos diagnostics (marginal, tightness, ...)";
    if (name == "bound-oracle") return "windowed Gaussian-convolution bounds and conditioning";
    return "";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chaoslab: interacting-particle simulation with singular mean-field drifts"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cli::kToolVersion));

    std::string config_path;
    std::string out_dir;
    uint64_t seed_override = 0;
    int threads = 0;

    for (const std::string& name : cli::subcommands()) {
        CLI::App* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", config_path, "experiment config file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (created if absent)")->required();
        sub->add_option("--seed", seed_override, "override the config seed");
        sub->add_option("--threads", threads, "worker threads (0 = auto / CHAOSLAB_THREADS)");
    }

    CLI11_PARSE(app, argc, argv);

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (threads > 0) chaoslab::parallel::set_max_threads(threads);

    config::Config cfg;
    std::string hash;
    try {
        cfg = config::parse_config_file(config_path);
        if (sub->count("--seed") > 0) cfg.sim.seed = seed_override;
        hash = hex64(config::config_hash(cfg));
    } catch (const std::exception& e) {
        cli::write_error_report(out_dir, "config", cli::error_type_name(e), e.what(), "");
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        cli::RunManifest manifest = cli::dispatch(name, cfg, out_dir);
        std::cout << manifest.summary << "\n";
        std::cout << "wrote " << manifest.outputs.size() << " outputs + manifest.json to "
                  << out_dir << " (config " << manifest.config_hash << ")\n";
        return 0;
    } catch (const std::exception& e) {
        const std::string module = cli::module_for(name);
        const std::string type = cli::error_type_name(e);
        cli::write_error_report(out_dir, module, type, e.what(), hash);
        std::cerr << "error [" << module << "/" << type << "]: " << e.what() << "\n";
        return 1;
    }
}
