#include "groundloop/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace groundloop {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& prefix) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) {
            throw ConfigError("unknown config key '" + prefix + key + "'");
        }
    }
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) {
        throw ConfigError(what + " does not exist: " + path);
    }
}

int require_int(const json& j, const char* key, int fallback, const std::string& prefix) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) {
        throw ConfigError("config key '" + prefix + key + "' must be an integer");
    }
    return j[key].get<int>();
}

AgentConfig parse_agent(const json& j, const std::string& prefix) {
    reject_unknown_keys(
        j, {"kind", "transport", "timeout_ms", "score_threshold", "per_class_cap"}, prefix);
    AgentConfig agent;
    if (!j.contains("kind") || !j["kind"].is_string()) {
        throw ConfigError("config key '" + prefix + "kind' is required");
    }
    agent.kind = j["kind"].get<std::string>();
    if (agent.kind != "fixture" && agent.kind != "http") {
        throw ConfigError("config key '" + prefix + "kind' must be fixture or http");
    }
    if (!j.contains("transport") || !j["transport"].is_string()) {
        throw ConfigError("config key '" + prefix + "transport' is required");
    }
    agent.transport = j["transport"].get<std::string>();
    agent.timeout_ms = require_int(j, "timeout_ms", agent.timeout_ms, prefix);
    if (j.contains("score_threshold")) {
        if (!j["score_threshold"].is_number()) {
            throw ConfigError("config key '" + prefix + "score_threshold' must be a number");
        }
        agent.score_threshold = j["score_threshold"].get<double>();
    }
    agent.per_class_cap = require_int(j, "per_class_cap", agent.per_class_cap, prefix);
    if (agent.kind == "fixture") require_file(agent.transport, prefix + "transport");
    return agent;
}

} // namespace

RunConfig AppConfig::run_config() const {
    RunConfig rc;
    rc.composer = composer;
    rc.budget = budget;
    rc.parallelism = parallelism;
    rc.on_agent_failure = on_agent_failure;
    return rc;
}

Agents AppConfig::make_agents() const {
    Agents agents;
    auto build = [](const AgentConfig& cfg, AgentKind expected,
                    const char* name) -> AgentEndpoint {
        AgentEndpoint ep;
        if (cfg.kind == "fixture") {
            ep = load_fixture_agent(cfg.transport);
            if (ep.kind != expected) {
                throw ConfigError(std::string("fixture configured as ") + name +
                                  " agent holds records of the other kind: " + cfg.transport);
            }
        } else {
            ep.kind = expected;
            ep.transport = cfg.transport;
        }
        ep.timeout_ms = cfg.timeout_ms;
        ep.score_threshold = cfg.score_threshold;
        ep.per_class_cap = cfg.per_class_cap;
        return ep;
    };
    if (grounding) agents.grounding = build(*grounding, AgentKind::Grounding, "grounding");
    if (ocr) agents.ocr = build(*ocr, AgentKind::Ocr, "ocr");
    return agents;
}

json AppConfig::to_json() const {
    json j;
    j["backend"] = {{"kind", backend.kind},
                    {"locator", backend.locator},
                    {"model", backend.model},
                    {"max_output_tokens", backend.max_output_tokens},
                    {"timeout_ms", backend.timeout_ms},
                    {"retry_limit", backend.retry_limit}};
    if (!backend.sampling.is_null()) j["backend"]["sampling"] = backend.sampling;
    auto agent_json = [](const AgentConfig& a) {
        return json{{"kind", a.kind},
                    {"transport", a.transport},
                    {"timeout_ms", a.timeout_ms},
                    {"score_threshold", a.score_threshold},
                    {"per_class_cap", a.per_class_cap}};
    };
    if (grounding) j["agents"]["grounding"] = agent_json(*grounding);
    if (ocr) j["agents"]["ocr"] = agent_json(*ocr);
    j["composer"] = {{"include_positions", composer.include_positions}};
    j["budget"] = {{"context_limit", budget.context_limit},
                   {"chars_per_token", budget.chars_per_token}};
    j["parallelism"] = parallelism;
    j["on_agent_failure"] =
        on_agent_failure == OnAgentFailure::Proceed ? "proceed" : "fail_sample";
    j["paths"] = {{"dataset", dataset_path}, {"output_dir", output_dir}};
    j["curation"] = {{"max_negatives", curation.max_negatives},
                     {"max_positives_simple", curation.max_positives_simple},
                     {"max_positives_with_clues", curation.max_positives_with_clues}};
    return j;
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ConfigError("config file is not a JSON object: " + path);
    }
    reject_unknown_keys(j,
                        {"backend", "agents", "composer", "budget", "parallelism",
                         "on_agent_failure", "paths", "curation"},
                        "");
    AppConfig config;

    if (!j.contains("backend") || !j["backend"].is_object()) {
        throw ConfigError("config needs a backend object");
    }
    const json& b = j["backend"];
    reject_unknown_keys(b,
                        {"kind", "locator", "model", "max_output_tokens", "timeout_ms",
                         "retry_limit", "sampling"},
                        "backend.");
    config.backend.kind = b.value("kind", "scripted");
    if (config.backend.kind != "scripted" && config.backend.kind != "http") {
        throw ConfigError("backend.kind must be scripted or http");
    }
    if (!b.contains("locator") || !b["locator"].is_string()) {
        throw ConfigError("backend.locator is required");
    }
    config.backend.locator = b["locator"].get<std::string>();
    config.backend.model = b.value("model", config.backend.model);
    config.backend.max_output_tokens =
        require_int(b, "max_output_tokens", config.backend.max_output_tokens, "backend.");
    config.backend.timeout_ms = require_int(b, "timeout_ms", config.backend.timeout_ms, "backend.");
    config.backend.retry_limit = require_int(b, "retry_limit", config.backend.retry_limit, "backend.");
    if (config.backend.retry_limit < 0 || config.backend.retry_limit > 3) {
        throw ConfigError("backend.retry_limit must be between 0 and 3");
    }
    if (b.contains("sampling")) {
        if (!b["sampling"].is_object()) throw ConfigError("backend.sampling must be an object");
        config.backend.sampling = b["sampling"];
    }
    if (config.backend.kind == "scripted") require_file(config.backend.locator, "backend.locator");

    if (j.contains("agents")) {
        if (!j["agents"].is_object()) throw ConfigError("agents must be an object");
        reject_unknown_keys(j["agents"], {"grounding", "ocr"}, "agents.");
        if (j["agents"].contains("grounding")) {
            config.grounding = parse_agent(j["agents"]["grounding"], "agents.grounding.");
        }
        if (j["agents"].contains("ocr")) {
            config.ocr = parse_agent(j["agents"]["ocr"], "agents.ocr.");
        }
    }

    if (j.contains("composer")) {
        reject_unknown_keys(j["composer"], {"include_positions"}, "composer.");
        if (j["composer"].contains("include_positions")) {
            if (!j["composer"]["include_positions"].is_boolean()) {
                throw ConfigError("composer.include_positions must be a boolean");
            }
            config.composer.include_positions = j["composer"]["include_positions"].get<bool>();
        }
    }

    if (j.contains("budget")) {
        reject_unknown_keys(j["budget"], {"context_limit", "chars_per_token"}, "budget.");
        config.budget.context_limit =
            require_int(j["budget"], "context_limit", config.budget.context_limit, "budget.");
        if (j["budget"].contains("chars_per_token")) {
            if (!j["budget"]["chars_per_token"].is_number()) {
                throw ConfigError("budget.chars_per_token must be a number");
            }
            config.budget.chars_per_token = j["budget"]["chars_per_token"].get<double>();
        }
        if (config.budget.context_limit <= 0 || config.budget.chars_per_token <= 0) {
            throw ConfigError("budget values must be positive");
        }
    }

    config.parallelism = require_int(j, "parallelism", config.parallelism, "");
    if (config.parallelism < 1) throw ConfigError("parallelism must be at least 1");

    if (j.contains("on_agent_failure")) {
        const std::string mode = j["on_agent_failure"].get<std::string>();
        if (mode == "proceed") {
            config.on_agent_failure = OnAgentFailure::Proceed;
        } else if (mode == "fail_sample") {
            config.on_agent_failure = OnAgentFailure::FailSample;
        } else {
            throw ConfigError("on_agent_failure must be proceed or fail_sample");
        }
    }

    if (j.contains("paths")) {
        reject_unknown_keys(j["paths"], {"dataset", "output_dir"}, "paths.");
        config.dataset_path = j["paths"].value("dataset", "");
        config.output_dir = j["paths"].value("output_dir", config.output_dir);
        if (!config.dataset_path.empty()) require_file(config.dataset_path, "paths.dataset");
    }

    if (j.contains("curation")) {
        reject_unknown_keys(
            j["curation"], {"max_negatives", "max_positives_simple", "max_positives_with_clues"},
            "curation.");
        config.curation.max_negatives =
            require_int(j["curation"], "max_negatives", -1, "curation.");
        config.curation.max_positives_simple =
            require_int(j["curation"], "max_positives_simple", -1, "curation.");
        config.curation.max_positives_with_clues =
            require_int(j["curation"], "max_positives_with_clues", -1, "curation.");
    }

    return config;
}

void apply_env_overrides(AppConfig& config) {
    auto env = [](const char* name) -> std::optional<std::string> {
        const char* value = std::getenv(name);
        if (value == nullptr) return std::nullopt;
        return std::string{value};
    };
    auto parse_positive_int = [](const std::string& text, const char* name) {
        try {
            std::size_t used = 0;
            const int value = std::stoi(text, &used);
            if (used != text.size() || value < 1) throw std::invalid_argument{""};
            return value;
        } catch (const std::exception&) {
            throw ConfigError(std::string(name) + " must be a positive integer, got '" + text +
                              "'");
        }
    };
    if (auto v = env("GROUNDLOOP_PARALLELISM")) {
        config.parallelism = parse_positive_int(*v, "GROUNDLOOP_PARALLELISM");
    }
    if (auto v = env("GROUNDLOOP_BUDGET")) {
        config.budget.context_limit = parse_positive_int(*v, "GROUNDLOOP_BUDGET");
    }
    if (auto v = env("GROUNDLOOP_NO_POSITIONS")) {
        if (*v == "1" || *v == "true") {
            config.composer.include_positions = false;
        } else if (*v == "0" || *v == "false") {
            config.composer.include_positions = true;
        } else {
            throw ConfigError("GROUNDLOOP_NO_POSITIONS must be 0/1/true/false, got '" + *v + "'");
        }
    }
    if (auto v = env("GROUNDLOOP_OUTPUT")) config.output_dir = *v;
    if (auto v = env("GROUNDLOOP_DATASET")) {
        require_file(*v, "GROUNDLOOP_DATASET");
        config.dataset_path = *v;
    }
}

} // namespace groundloop
