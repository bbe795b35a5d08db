#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "groundloop/errors.hpp"

namespace groundloop {

/// The fixed sentence a backend emits to ask for agent help. Classification
/// matches it case-insensitively with whitespace runs collapsed; rendering
/// reproduces it byte for byte.
extern const std::string kRefusalPrefix;

/// The item that requests the OCR agent instead of naming an object class.
extern const std::string kTextSentinel;

struct AgentCallRequest {
    std::vector<std::string> object_classes;  // trimmed, deduplicated, sentinel-free
    bool wants_text = false;

    /// Normalizes raw items: trims, drops empties, folds any item equal to
    /// the text sentinel (case-insensitive) into wants_text, deduplicates
    /// preserving first occurrence. Throws EmptyItemList when nothing remains.
    static AgentCallRequest make(const std::vector<std::string>& raw_items,
                                 bool wants_text = false);

    bool operator==(const AgentCallRequest&) const = default;
};

struct RoundOneOutcome {
    // Direct answers carry the trimmed model output; calls carry the parsed request.
    std::variant<std::string, AgentCallRequest> value;

    bool is_direct() const { return std::holds_alternative<std::string>(value); }
    bool is_call() const { return !is_direct(); }
    const std::string& answer() const { return std::get<std::string>(value); }
    const AgentCallRequest& request() const { return std::get<AgentCallRequest>(value); }

    static RoundOneOutcome direct(std::string answer);
    static RoundOneOutcome call(AgentCallRequest request);

    bool operator==(const RoundOneOutcome&) const = default;
};

/// Splits the comma-separated item list that follows the refusal prefix.
/// A single trailing period is stripped from the final item. Throws
/// EmptyItemList when no usable item remains.
AgentCallRequest parse_item_list(std::string_view items_text);

/// Decides whether a raw round-1 reply is a direct answer or an agent call.
/// Anything not starting with the refusal prefix is Direct (trimmed).
RoundOneOutcome classify_round_one(std::string_view raw_reply);

/// Exact inverse of classification for valid requests:
/// classify_round_one(render_refusal(r)) reproduces r.
std::string render_refusal(const AgentCallRequest& request);

} // namespace groundloop
