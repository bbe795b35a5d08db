#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include <json.hpp>

#include "groundloop/config.hpp"

using namespace groundloop;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("groundloop_config_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }

    std::string file(const std::string& name, const std::string& content) {
        auto p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p.string();
    }
};

struct EnvGuard {
    std::string name;
    EnvGuard(const std::string& n, const std::string& value) : name(n) {
        ::setenv(name.c_str(), value.c_str(), 1);
    }
    ~EnvGuard() { ::unsetenv(name.c_str()); }
};

std::string script_line() {
    return R"({"image_id": "a", "round1": "hi"})" "\n";
}

std::string grounding_line() {
    return R"({"image_id": "a", "kind": "grounding", "detections": []})" "\n";
}

std::string ocr_line() {
    return R"({"image_id": "a", "kind": "ocr", "texts": []})" "\n";
}

} // namespace

TEST_CASE("a minimal config loads with defaults") {
    TempDir dir;
    auto script = dir.file("script.jsonl", script_line());
    auto path = dir.file("config.json",
                         json{{"backend", {{"kind", "scripted"}, {"locator", script}}}}.dump());

    auto config = load_config(path);
    CHECK(config.backend.kind == "scripted");
    CHECK(config.backend.locator == script);
    CHECK(config.backend.retry_limit == 2);
    CHECK(config.parallelism == 1);
    CHECK(config.budget.context_limit == 2048);
    CHECK(config.composer.include_positions);
    CHECK(config.on_agent_failure == OnAgentFailure::Proceed);
    CHECK(config.output_dir == "out");
    CHECK_FALSE(config.grounding.has_value());
    CHECK(config.curation.max_negatives == -1);
}

TEST_CASE("a full config parses every section") {
    TempDir dir;
    auto script = dir.file("script.jsonl", script_line());
    auto ground = dir.file("ground.jsonl", grounding_line());
    auto ocr = dir.file("ocr.jsonl", ocr_line());
    auto dataset = dir.file("data.jsonl", R"({"id": "x", "image_path": "x.png", "question": "?", "answer": "y"})" "\n");

    json cfg = {
        {"backend",
         {{"kind", "scripted"}, {"locator", script}, {"model", "m"},
          {"max_output_tokens", 128}, {"timeout_ms", 5000}, {"retry_limit", 3},
          {"sampling", {{"temperature", 0.1}}}}},
        {"agents",
         {{"grounding",
           {{"kind", "fixture"}, {"transport", ground}, {"score_threshold", 0.4},
            {"per_class_cap", 4}}},
          {"ocr", {{"kind", "fixture"}, {"transport", ocr}}}}},
        {"composer", {{"include_positions", false}}},
        {"budget", {{"context_limit", 1024}, {"chars_per_token", 3.5}}},
        {"parallelism", 4},
        {"on_agent_failure", "fail_sample"},
        {"paths", {{"dataset", dataset}, {"output_dir", "results"}}},
        {"curation", {{"max_negatives", 10}}},
    };
    auto config = load_config(dir.file("config.json", cfg.dump()));

    CHECK(config.backend.retry_limit == 3);
    CHECK(config.backend.sampling["temperature"] == doctest::Approx(0.1));
    REQUIRE(config.grounding.has_value());
    CHECK(config.grounding->score_threshold == doctest::Approx(0.4));
    CHECK(config.grounding->per_class_cap == 4);
    REQUIRE(config.ocr.has_value());
    CHECK_FALSE(config.composer.include_positions);
    CHECK(config.budget.chars_per_token == doctest::Approx(3.5));
    CHECK(config.parallelism == 4);
    CHECK(config.on_agent_failure == OnAgentFailure::FailSample);
    CHECK(config.dataset_path == dataset);
    CHECK(config.output_dir == "results");
    CHECK(config.curation.max_negatives == 10);
    CHECK(config.curation.max_positives_simple == -1);

    auto agents = config.make_agents();
    REQUIRE(agents.grounding.has_value());
    CHECK(agents.grounding->is_fixture());
    CHECK(agents.grounding->score_threshold == doctest::Approx(0.4));
    REQUIRE(agents.ocr.has_value());
    CHECK(agents.ocr->kind == AgentKind::Ocr);
}

TEST_CASE("unknown keys are rejected with their full path") {
    TempDir dir;
    auto script = dir.file("script.jsonl", script_line());

    auto expect_error_mentioning = [&](const json& cfg, const std::string& needle) {
        auto path = dir.file("bad.json", cfg.dump());
        try {
            load_config(path);
            FAIL("expected ConfigError for " << needle);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    expect_error_mentioning(
        {{"backend", {{"kind", "scripted"}, {"locator", script}}}, {"typo_key", 1}},
        "typo_key");
    expect_error_mentioning(
        {{"backend", {{"kind", "scripted"}, {"locator", script}, {"retries", 1}}}},
        "backend.retries");
    expect_error_mentioning(
        {{"backend", {{"kind", "scripted"}, {"locator", script}}},
         {"agents", {{"grounding", {{"kind", "http"}, {"transport", "http://x/"}, {"cap", 3}}}}}},
        "agents.grounding.cap");
    expect_error_mentioning(
        {{"backend", {{"kind", "scripted"}, {"locator", script}}},
         {"budget", {{"limit", 100}}}},
        "budget.limit");
}

TEST_CASE("invalid values are rejected") {
    TempDir dir;
    auto script = dir.file("script.jsonl", script_line());
    auto base = [&](json patch) {
        json cfg = {{"backend", {{"kind", "scripted"}, {"locator", script}}}};
        for (auto& [k, v] : patch.items()) cfg[k] = v;
        return dir.file("cfg.json", cfg.dump());
    };

    CHECK_THROWS_AS(load_config(base({{"parallelism", 0}})), ConfigError);
    CHECK_THROWS_AS(load_config(base({{"budget", {{"context_limit", 0}}}})), ConfigError);
    CHECK_THROWS_AS(load_config(base({{"budget", {{"chars_per_token", -1.0}}}})),
                    ConfigError);
    CHECK_THROWS_AS(load_config(base({{"on_agent_failure", "explode"}})), ConfigError);

    // retry_limit outside 0..3.
    json high_retry = {{"backend",
                        {{"kind", "scripted"}, {"locator", script}, {"retry_limit", 4}}}};
    CHECK_THROWS_AS(load_config(dir.file("r.json", high_retry.dump())), ConfigError);

    // Backend kind neither scripted nor http.
    json bad_kind = {{"backend", {{"kind", "smoke-signal"}, {"locator", script}}}};
    CHECK_THROWS_AS(load_config(dir.file("k.json", bad_kind.dump())), ConfigError);
}

TEST_CASE("referenced files must exist") {
    TempDir dir;
    json cfg = {{"backend", {{"kind", "scripted"}, {"locator", "/no/such/script.jsonl"}}}};
    CHECK_THROWS_AS(load_config(dir.file("c1.json", cfg.dump())), ConfigError);

    auto script = dir.file("script.jsonl", script_line());
    json cfg2 = {{"backend", {{"kind", "scripted"}, {"locator", script}}},
                 {"agents",
                  {{"grounding", {{"kind", "fixture"}, {"transport", "/no/fixture.jsonl"}}}}}};
    CHECK_THROWS_AS(load_config(dir.file("c2.json", cfg2.dump())), ConfigError);

    json cfg3 = {{"backend", {{"kind", "scripted"}, {"locator", script}}},
                 {"paths", {{"dataset", "/no/dataset.jsonl"}}}};
    CHECK_THROWS_AS(load_config(dir.file("c3.json", cfg3.dump())), ConfigError);

    // An HTTP backend has no file to check.
    json cfg4 = {{"backend", {{"kind", "http"}, {"locator", "http://127.0.0.1:9/chat"}}}};
    CHECK_NOTHROW(load_config(dir.file("c4.json", cfg4.dump())));
}

TEST_CASE("a fixture of the wrong kind cannot serve the other agent") {
    TempDir dir;
    auto ocr = dir.file("ocr.jsonl", ocr_line());
    AppConfig config;
    config.grounding = AgentConfig{"fixture", ocr, 1000, 0.3, 5};
    CHECK_THROWS_AS(config.make_agents(), ConfigError);
}

TEST_CASE("environment overrides beat the file") {
    AppConfig config;
    config.parallelism = 1;
    config.budget.context_limit = 2048;

    {
        EnvGuard p("GROUNDLOOP_PARALLELISM", "6");
        EnvGuard b("GROUNDLOOP_BUDGET", "512");
        EnvGuard n("GROUNDLOOP_NO_POSITIONS", "1");
        EnvGuard o("GROUNDLOOP_OUTPUT", "/tmp/elsewhere");
        apply_env_overrides(config);
    }
    CHECK(config.parallelism == 6);
    CHECK(config.budget.context_limit == 512);
    CHECK_FALSE(config.composer.include_positions);
    CHECK(config.output_dir == "/tmp/elsewhere");

    // NO_POSITIONS=0 turns positions back on.
    {
        EnvGuard n("GROUNDLOOP_NO_POSITIONS", "0");
        apply_env_overrides(config);
    }
    CHECK(config.composer.include_positions);
}

TEST_CASE("malformed environment values are config errors") {
    AppConfig config;
    {
        EnvGuard p("GROUNDLOOP_PARALLELISM", "many");
        CHECK_THROWS_AS(apply_env_overrides(config), ConfigError);
    }
    {
        EnvGuard p("GROUNDLOOP_PARALLELISM", "0");
        CHECK_THROWS_AS(apply_env_overrides(config), ConfigError);
    }
    {
        EnvGuard p("GROUNDLOOP_BUDGET", "12abc");
        CHECK_THROWS_AS(apply_env_overrides(config), ConfigError);
    }
    {
        EnvGuard n("GROUNDLOOP_NO_POSITIONS", "maybe");
        CHECK_THROWS_AS(apply_env_overrides(config), ConfigError);
    }
    {
        EnvGuard d("GROUNDLOOP_DATASET", "/no/such/data.jsonl");
        CHECK_THROWS_AS(apply_env_overrides(config), ConfigError);
    }
}

TEST_CASE("the dataset override must point at a real file") {
    TempDir dir;
    auto data = dir.file("d.jsonl", "{}\n");
    AppConfig config;
    EnvGuard d("GROUNDLOOP_DATASET", data);
    apply_env_overrides(config);
    CHECK(config.dataset_path == data);
}

TEST_CASE("to_json reflects the effective settings") {
    AppConfig config;
    config.backend.locator = "x.jsonl";
    config.parallelism = 3;
    config.composer.include_positions = false;
    auto j = config.to_json();
    CHECK(j["backend"]["locator"] == "x.jsonl");
    CHECK(j["parallelism"] == 3);
    CHECK(j["composer"]["include_positions"] == false);
    CHECK(j["on_agent_failure"] == "proceed");
    CHECK(j["curation"]["max_negatives"] == -1);
}
