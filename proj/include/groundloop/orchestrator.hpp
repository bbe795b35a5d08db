#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "groundloop/agent_gateway.hpp"
#include "groundloop/backend.hpp"
#include "groundloop/call_parser.hpp"
#include "groundloop/prompt_composer.hpp"
#include "groundloop/token_router.hpp"
#include "groundloop/types.hpp"

namespace groundloop {

struct AgentCallRecord {
    std::string kind;  // "grounding" | "ocr"
    nlohmann::json request;
    double duration_ms = 0.0;
    std::string result_summary;
    std::optional<std::string> error;
};

struct Timings {
    double round1_ms = 0.0;
    double round2_ms = 0.0;
    double total_ms = 0.0;
};

// Full record of one sample through the loop. Prompts are stored in their
// segment form so a trace alone is enough to replay or inspect a run.
struct Trace {
    std::string sample_id;
    nlohmann::json round1_prompt;
    std::string round1_raw;
    std::optional<RoundOneOutcome> outcome;
    std::vector<AgentCallRecord> agent_calls;
    ClueSet clue_set;
    std::optional<RoutingPlan> routing_plan;
    int dropped_text_clues = 0;
    std::optional<nlohmann::json> round2_prompt;
    std::optional<std::string> round2_raw;
    std::string final_answer;
    bool repeated_refusal = false;  // round 2 refused again; answer kept as-is
    std::vector<std::string> warnings;
    std::optional<std::string> error;  // set when the sample failed outright
    Timings timings;
};

enum class OnAgentFailure { Proceed, FailSample };

struct RunConfig {
    ComposerOptions composer;
    Budget budget;
    int parallelism = 1;
    OnAgentFailure on_agent_failure = OnAgentFailure::Proceed;
};

struct Agents {
    std::optional<AgentEndpoint> grounding;
    std::optional<AgentEndpoint> ocr;
};

struct Sample {
    std::string id;
    Query query;
};

/// Runs the two-round loop for one sample. At most two backend calls are ever
/// made. Round-2 output is final even when the model refuses again.
Trace run_sample(const Sample& sample, ChatBackend& backend,
                 const BackendEndpoint& endpoint, const Agents& agents,
                 const RunConfig& config);

/// Runs a batch with up to config.parallelism workers. Traces come back in
/// input order regardless of scheduling; per-sample failures surface as error
/// traces, not exceptions.
std::vector<Trace> run_batch(const std::vector<Sample>& samples, ChatBackend& backend,
                             const BackendEndpoint& endpoint, const Agents& agents,
                             const RunConfig& config);

} // namespace groundloop
