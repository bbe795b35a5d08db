#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "groundloop/prompt_composer.hpp"

namespace groundloop {

struct BackendEndpoint {
    std::string kind = "scripted";  // "scripted" (canned file) or "http"
    std::string locator;            // script path or URL
    std::string model = "mock";
    int max_output_tokens = 512;
    int timeout_ms = 30000;
    int retry_limit = 2;            // extra attempts after the first; capped at 3
    nlohmann::json sampling;        // passed through opaquely when non-null
};

/// Serializes a prompt into the chat wire format: one user message whose
/// content interleaves text parts and image parts. Object crops ride as image
/// parts after the text that introduces their placeholders.
nlohmann::json build_chat_request(const BackendEndpoint& endpoint, const PromptDocument& doc);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    /// Sends one wire-format request, returns the reply text. Throws
    /// BackendUnavailable on transport failure and MalformedResponse when the
    /// reply does not carry the expected content field.
    virtual std::string complete(const nlohmann::json& request) = 0;
};

/// Canned backend driven by a line-delimited script:
///   {"image_id": "...", "round1": "...", "round2": "..."}
/// The reply is chosen by the image id of the request's first image part;
/// requests whose text carries the clue header get the round2 entry. This
/// keeps replay stateless, so concurrent workers cannot interleave.
class ScriptedBackend : public ChatBackend {
public:
    struct Entry {
        std::string round1;
        std::optional<std::string> round2;
    };

    static std::unique_ptr<ScriptedBackend> from_file(const std::string& path);
    explicit ScriptedBackend(std::map<std::string, Entry> entries);

    std::string complete(const nlohmann::json& request) override;

private:
    std::map<std::string, Entry> entries_;
};

class HttpBackend : public ChatBackend {
public:
    HttpBackend(std::string url, int timeout_ms);
    std::string complete(const nlohmann::json& request) override;

private:
    std::string url_;
    int timeout_ms_;
};

std::unique_ptr<ChatBackend> make_backend(const BackendEndpoint& endpoint);

/// Builds the wire request for `doc` and sends it, retrying transport
/// failures with exponential backoff up to endpoint.retry_limit extra
/// attempts. Malformed replies are not retried.
std::string call_backend(ChatBackend& backend, const BackendEndpoint& endpoint,
                         const PromptDocument& doc);

} // namespace groundloop
