#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "groundloop/agent_gateway.hpp"
#include "groundloop/backend.hpp"
#include "groundloop/orchestrator.hpp"

namespace groundloop {

struct CurationQuotas {
    // Negative quota caps emitted refusal targets; -1 means unlimited.
    int max_negatives = -1;
    int max_positives_simple = -1;
    int max_positives_with_clues = -1;
};

struct AgentConfig {
    std::string kind;       // "fixture" | "http"
    std::string transport;  // path or URL
    int timeout_ms = 10000;
    double score_threshold = 0.30;
    int per_class_cap = 5;
};

struct AppConfig {
    BackendEndpoint backend;
    std::optional<AgentConfig> grounding;
    std::optional<AgentConfig> ocr;
    ComposerOptions composer;
    Budget budget;
    int parallelism = 1;
    OnAgentFailure on_agent_failure = OnAgentFailure::Proceed;
    std::string dataset_path;
    std::string output_dir = "out";
    CurationQuotas curation;

    RunConfig run_config() const;
    /// Builds live endpoints, loading fixture files. Validates that a fixture
    /// configured as grounding/ocr really is of that kind.
    Agents make_agents() const;
    /// The effective configuration as JSON, for manifests and hashing.
    nlohmann::json to_json() const;
};

/// Loads and validates the config file. Unknown keys are rejected with their
/// full path; referenced files must exist. Throws ConfigError.
AppConfig load_config(const std::string& path);

/// Applies GROUNDLOOP_* environment overrides (PARALLELISM, BUDGET,
/// NO_POSITIONS, OUTPUT, DATASET). Malformed values throw ConfigError.
void apply_env_overrides(AppConfig& config);

} // namespace groundloop
