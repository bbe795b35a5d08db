#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "groundloop/orchestrator.hpp"

namespace groundloop {

inline constexpr int kTraceVersion = 1;

nlohmann::json prompt_to_json(const PromptDocument& doc);
PromptDocument prompt_from_json(const nlohmann::json& j);

nlohmann::json trace_to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& j);

void write_traces_jsonl(const std::string& path, const std::vector<Trace>& traces);
std::vector<Trace> read_traces_jsonl(const std::string& path);

/// Strips every timing field in place. Two runs over the same inputs must be
/// identical after this, whatever the parallelism.
void erase_timings(nlohmann::json& trace_json);

/// Stable FNV-1a over a string, hex encoded. Used to fingerprint the
/// effective configuration in run manifests.
std::string fnv1a_hex(const std::string& data);

nlohmann::json make_run_manifest(const std::vector<Trace>& traces,
                                 const nlohmann::json& effective_config);

} // namespace groundloop
