#include "groundloop/call_parser.hpp"

#include <algorithm>
#include <cctype>

namespace groundloop {

const std::string kRefusalPrefix =
    "Sorry, I cannot answer the question. Some visual information about the "
    "following objects is missing or unclear:";

const std::string kTextSentinel = "text in the image";

namespace {

bool is_ws(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_ws(s[b])) ++b;
    while (e > b && is_ws(s[e - 1])) --e;
    return s.substr(b, e - b);
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(),
                      [](char x, char y) { return lower(x) == lower(y); });
}

// Matches `prefix` at the start of `raw`, ignoring letter case and letting a
// whitespace run in `raw` stand wherever `prefix` has a single space. Returns
// the offset just past the match, or nullopt.
std::optional<size_t> match_prefix_collapsed(std::string_view raw, std::string_view prefix) {
    size_t i = 0;
    while (i < raw.size() && is_ws(raw[i])) ++i;  // leading whitespace is fine
    for (size_t j = 0; j < prefix.size();) {
        if (prefix[j] == ' ') {
            if (i >= raw.size() || !is_ws(raw[i])) return std::nullopt;
            while (i < raw.size() && is_ws(raw[i])) ++i;
            ++j;
        } else {
            if (i >= raw.size() || lower(raw[i]) != lower(prefix[j])) return std::nullopt;
            ++i;
            ++j;
        }
    }
    return i;
}

} // namespace

RoundOneOutcome RoundOneOutcome::direct(std::string answer) {
    return RoundOneOutcome{std::move(answer)};
}

RoundOneOutcome RoundOneOutcome::call(AgentCallRequest request) {
    return RoundOneOutcome{std::move(request)};
}

AgentCallRequest AgentCallRequest::make(const std::vector<std::string>& raw_items,
                                        bool wants_text) {
    AgentCallRequest req;
    req.wants_text = wants_text;
    for (const auto& raw : raw_items) {
        std::string item{trim(raw)};
        if (item.empty()) continue;
        if (iequals(item, kTextSentinel)) {
            req.wants_text = true;
            continue;
        }
        const bool seen = std::any_of(req.object_classes.begin(), req.object_classes.end(),
                                      [&](const std::string& c) { return c == item; });
        if (!seen) req.object_classes.push_back(std::move(item));
    }
    if (req.object_classes.empty() && !req.wants_text) {
        throw EmptyItemList("agent call names no object class and no text request");
    }
    return req;
}

AgentCallRequest parse_item_list(std::string_view items_text) {
    std::vector<std::string> items;
    size_t start = 0;
    while (start <= items_text.size()) {
        size_t comma = items_text.find(',', start);
        if (comma == std::string_view::npos) comma = items_text.size();
        items.emplace_back(items_text.substr(start, comma - start));
        if (comma == items_text.size()) break;
        start = comma + 1;
    }
    // The rendered list ends in a period; strip exactly one from the last item
    // so class names that themselves end in '.' survive a round trip.
    if (!items.empty()) {
        std::string last{trim(items.back())};
        if (!last.empty() && last.back() == '.') last.pop_back();
        items.back() = last;
    }
    return AgentCallRequest::make(items);
}

RoundOneOutcome classify_round_one(std::string_view raw_reply) {
    if (auto end = match_prefix_collapsed(raw_reply, kRefusalPrefix)) {
        return RoundOneOutcome::call(parse_item_list(raw_reply.substr(*end)));
    }
    return RoundOneOutcome::direct(std::string{trim(raw_reply)});
}

std::string render_refusal(const AgentCallRequest& request) {
    if (request.object_classes.empty() && !request.wants_text) {
        throw EmptyItemList("cannot render an agent call with no items");
    }
    std::string out = kRefusalPrefix;
    out += ' ';
    bool first = true;
    for (const auto& c : request.object_classes) {
        if (!first) out += ", ";
        out += c;
        first = false;
    }
    if (request.wants_text) {
        if (!first) out += ", ";
        out += kTextSentinel;
    }
    out += '.';
    return out;
}

} // namespace groundloop
