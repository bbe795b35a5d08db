#include "groundloop/backend.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include "groundloop/http_client.hpp"

namespace groundloop {

using nlohmann::json;

nlohmann::json build_chat_request(const BackendEndpoint& endpoint, const PromptDocument& doc) {
    json content = json::array();
    for (const auto& segment : doc.segments) {
        if (const auto* img = std::get_if<ImageSlot>(&segment)) {
            content.push_back({{"type", "image"}, {"id_or_data", img->image.id}});
        } else if (const auto* crop = std::get_if<ObjectSlot>(&segment)) {
            content.push_back({{"type", "image"}, {"id_or_data", crop->crop.id}});
        } else if (const auto* text = std::get_if<TextSegment>(&segment)) {
            content.push_back({{"type", "text"}, {"text", text->text}});
        }
    }
    json request = {
        {"model", endpoint.model},
        {"messages", json::array({json{{"role", "user"}, {"content", std::move(content)}}})},
        {"max_tokens", endpoint.max_output_tokens},
    };
    if (!endpoint.sampling.is_null()) {
        for (const auto& [key, value] : endpoint.sampling.items()) request[key] = value;
    }
    return request;
}

ScriptedBackend::ScriptedBackend(std::map<std::string, Entry> entries)
    : entries_(std::move(entries)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FixtureParseError("cannot open backend script: " + path);
    std::map<std::string, Entry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw FixtureParseError(where + ": invalid JSON");
        }
        if (!j.contains("image_id") || !j["image_id"].is_string()) {
            throw FixtureParseError(where + ": missing image_id");
        }
        if (!j.contains("round1") || !j["round1"].is_string()) {
            throw FixtureParseError(where + ": missing round1 reply");
        }
        Entry entry;
        entry.round1 = j["round1"].get<std::string>();
        if (j.contains("round2")) {
            if (!j["round2"].is_string()) {
                throw FixtureParseError(where + ": round2 must be a string");
            }
            entry.round2 = j["round2"].get<std::string>();
        }
        if (!entries.emplace(j["image_id"].get<std::string>(), std::move(entry)).second) {
            throw FixtureParseError(where + ": duplicate script entry for image");
        }
    }
    if (entries.empty()) throw FixtureParseError(path + ": backend script has no entries");
    return std::make_unique<ScriptedBackend>(std::move(entries));
}

std::string ScriptedBackend::complete(const json& request) {
    std::string image_id;
    bool grounded = false;
    for (const auto& message : request.value("messages", json::array())) {
        for (const auto& part : message.value("content", json::array())) {
            const std::string type = part.value("type", "");
            if (type == "image" && image_id.empty()) {
                image_id = part.value("id_or_data", "");
            } else if (type == "text" &&
                       part.value("text", "").find(kClueHeader) != std::string::npos) {
                grounded = true;
            }
        }
    }
    auto it = entries_.find(image_id);
    if (it == entries_.end()) {
        throw BackendUnavailable("backend script has no entry for image '" + image_id + "'");
    }
    if (grounded) {
        if (!it->second.round2) {
            throw BackendUnavailable("backend script expected no second round for image '" +
                                     image_id + "'");
        }
        return *it->second.round2;
    }
    return it->second.round1;
}

HttpBackend::HttpBackend(std::string url, int timeout_ms)
    : url_(std::move(url)), timeout_ms_(timeout_ms) {}

std::string HttpBackend::complete(const json& request) {
    HttpResult res = http_post_json(url_, request.dump(), timeout_ms_);
    if (!res.ok) throw BackendUnavailable("chat backend: " + res.error);
    json parsed = json::parse(res.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("content") ||
        !parsed["content"].is_string()) {
        throw MalformedResponse("chat backend reply lacks a content string");
    }
    return parsed["content"].get<std::string>();
}

std::unique_ptr<ChatBackend> make_backend(const BackendEndpoint& endpoint) {
    if (endpoint.kind == "scripted") return ScriptedBackend::from_file(endpoint.locator);
    if (endpoint.kind == "http") {
        return std::make_unique<HttpBackend>(endpoint.locator, endpoint.timeout_ms);
    }
    throw ConfigError("unknown backend kind '" + endpoint.kind + "'");
}

std::string call_backend(ChatBackend& backend, const BackendEndpoint& endpoint,
                         const PromptDocument& doc) {
    const json request = build_chat_request(endpoint, doc);
    const int retries = std::min(endpoint.retry_limit, 3);
    std::chrono::milliseconds delay{50};
    for (int attempt = 0;; ++attempt) {
        try {
            return backend.complete(request);
        } catch (const BackendUnavailable&) {
            if (attempt >= retries) throw;
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
}

} // namespace groundloop
