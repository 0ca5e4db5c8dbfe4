#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chaoslab/sde_engine.hpp"

/// Declarative experiment configuration.
///
/// Grammar (documented in the README): an INI-like key-value format with
/// exactly three sections, lowercase keys, '#' comments, decimal numbers,
/// and comma-separated lists:
///
///     [kernel]      name plus numeric kernel parameters (d, p, q, ...)
///     [sim]         particle count, horizon, dt, sigma, seed, initial law
///     [experiment]  study-specific knobs (N sweeps, test functions, ...)
///
/// Unknown keys and unknown sections are errors.  Defaults: sigma = sqrt 2,
/// record_every = 1, taming absent.  render() emits the canonical resolved
/// form, so parse(render(c)) resolves to the same experiment and
/// config_hash() is a content hash of the resolved semantics.
namespace chaoslab::config {

/// Study-specific knobs, all with sensible defaults; which ones a given
/// subcommand reads is documented per study in the README.
struct ExperimentPlan {
    long record_every = 1;
    bool keep_increments = false;
    std::vector<long> marginals; ///< particle indices for the CSV export

    std::vector<long> n_list;  ///< ensemble sizes for sweeps
    double alpha = 0.5;        ///< exponential-moment multiplier
    long n_paths = 1000;
    long n_runs = 8;
    std::string study;         ///< study selector within a subcommand
    std::string method = "exact-w1-1d";
    int n_slices = 16;
    long iterations = 8;       ///< Picard iterations
    long n_ref = 2000;         ///< law sample size (Picard)
    double bandwidth = 0.0;    ///< 0 = Silverman
    std::vector<double> grid_lo, grid_hi;
    std::vector<long> grid_cells;
    double dt_pde = 0.0;       ///< 0 = use sim dt
    long n_snapshots = 11;
    std::vector<double> times; ///< generic time list (decay, tightness)
    double t = 0.0;            ///< evaluation time; 0 = horizon
    double s = 0.0;
    std::vector<double> early_times;
    std::string f = "cos";
    std::vector<double> frequency;
    std::string phi = "one";
    std::string g = "tanh";
    std::string h = "tanh";
    double decay_r = 2.0;      ///< L^r order of the decay check
    std::vector<double> windows; ///< bound-oracle window widths
    std::vector<double> shifts;  ///< bound-oracle shift magnitudes (axis 0)
    long reference_samples = 20000;
};

struct Config {
    sde::SimConfig sim; ///< kernel resolved inside
    ExperimentPlan experiment;
};

/// Parse and resolve.  ConfigError carries the line (and column when it
/// applies); range violations from kernel or sim resolution propagate as
/// ConstraintError naming the violated rule.
Config parse_config(const std::string& text);
Config parse_config_file(const std::filesystem::path& path);

/// Canonical resolved rendering: fixed section and key order, all
/// defaults materialized, shortest round-trip number formatting.
std::string render(const Config& config);

/// FNV-1a 64-bit hash of render(config) — the provenance key embedded in
/// manifests and error records.
uint64_t config_hash(const Config& config);

/// FNV-1a 64-bit of arbitrary bytes (used for output-file content hashes).
uint64_t fnv1a64(std::span<const unsigned char> bytes);

} // namespace chaoslab::config
