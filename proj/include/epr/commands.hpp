#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "epr/config.hpp"

namespace epr {

struct CommandOptions {
    std::filesystem::path config_path;
    std::filesystem::path out_root = "runs";
    std::optional<std::uint64_t> seed_override;
    bool exhaustive = false;
    int verbosity = 0;
};

/// Each command writes its artifacts under a run directory keyed by the
/// resolved-config hash and seed, echoes the effective configuration there,
/// and returns the run directory. Failures throw epr::Error.

std::filesystem::path cmd_fit(const CommandOptions& options, const std::string& target,
                              std::vector<std::string> inputs);
std::filesystem::path cmd_stage(const CommandOptions& options, const std::string& stage_name);
std::filesystem::path cmd_predict(const CommandOptions& options,
                                  const std::filesystem::path& records_path);
std::filesystem::path cmd_correlate(const CommandOptions& options);
std::filesystem::path cmd_report(const CommandOptions& options);

}  // namespace epr
