#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/config.hpp"

/// Subcommand dispatch: run one study end to end from a resolved config,
/// write its CSV/JSON/binary outputs into a directory, and record a
/// manifest tying every output file to the exact inputs (config hash,
/// seed, tool version, timestamps).
namespace chaoslab::cli {

inline constexpr const char* kToolVersion = "chaoslab 0.1.0";

struct OutputRecord {
    std::string path; ///< file name relative to the output directory
    std::string kind; ///< "csv", "json", "binary", or "config"
    long rows = 0;    ///< CSV data rows / trajectory snapshots / 1 for JSON
    std::string content_hash; ///< FNV-1a64 of the file bytes, 16 hex digits
};

struct RunManifest {
    std::string config_hash; ///< FNV-1a64 of the canonical config render
    std::string tool_version = kToolVersion;
    uint64_t seed = 0;
    std::string started;  ///< ISO-8601 UTC
    std::string finished; ///< ISO-8601 UTC
    std::string subcommand;
    std::vector<OutputRecord> outputs;
    std::string summary; ///< one-line human-readable result
};

/// Valid subcommand names, in display order.
std::span<const std::string> subcommands();

/// The library module a subcommand's errors originate from (used in error
/// records; config-parse failures are reported as module "config").
std::string module_for(const std::string& subcommand);

/// Short lowercase tag for an error's type ("constraint", "usage",
/// "numerical", "blow-up", "estimation", "config", "error", "internal").
std::string error_type_name(const std::exception& e);

/// Run `subcommand` on the resolved config, writing all outputs plus
/// manifest.json into `outdir` (created when absent).  Also writes the
/// canonical config render (config.ini) for provenance.  Returns the
/// manifest.  Throws UsageError for unknown subcommands and propagates
/// module errors untouched.
RunManifest dispatch(const std::string& subcommand, const config::Config& cfg,
                     const std::filesystem::path& outdir);

/// Best-effort machine-readable failure record (error.json) with the
/// origin module, error type, message, and config hash (empty = the
/// config itself could not be resolved).  Never throws.
void write_error_report(const std::filesystem::path& outdir, const std::string& module,
                        const std::string& error_type, const std::string& message,
                        const std::string& config_hash_hex) noexcept;

} // namespace chaoslab::cli
