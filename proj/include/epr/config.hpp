#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "epr/pipeline.hpp"

namespace epr {

struct DatasetConfig {
    std::filesystem::path path;
    char delimiter = ',';
    std::string missing_token;
    std::vector<VariableSpec> variables;
};

struct PlanModelRef {
    std::string target;
    std::string stage;
    bool direct_link = false;
};

struct PlanConfig {
    std::vector<std::string> passthrough;
    std::vector<PlanModelRef> models;
    /// Variables the correlation study covers; all declared variables when
    /// left empty.
    std::vector<std::string> study_variables;
};

/// Parsed, validated run configuration. `effective` holds the same content
/// as JSON with every default resolved; it is echoed into the run directory
/// and re-running from the echo reproduces the run.
struct RunConfig {
    DatasetConfig dataset;
    EprConfig epr;
    GaConfig ga;
    int render_precision = 5;
    double knee_threshold = 0.1;
    std::vector<StageSpec> stages;
    std::vector<ModelSelection> selections;
    std::optional<PlanConfig> plan;
    nlohmann::json effective;
};

/// Fills defaults and absolutizes the dataset path against base_dir.
/// Idempotent: resolving an already-resolved configuration is a no-op.
nlohmann::json resolve_config_defaults(const nlohmann::json& raw,
                                       const std::filesystem::path& base_dir);

RunConfig parse_run_config(const nlohmann::json& resolved);

RunConfig load_run_config(const std::filesystem::path& path);

/// Stable 64-bit content hash of a resolved configuration, as 16 hex chars.
std::string config_hash(const nlohmann::json& resolved);

Dataset load_configured_dataset(const RunConfig& config);

}  // namespace epr
