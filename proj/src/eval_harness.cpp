#include "groundloop/eval_harness.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

namespace groundloop {

using nlohmann::json;

namespace {

bool is_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

std::string lower_copy(std::string_view s) {
    std::string out{s};
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> letter_tokens(const std::string& answer) {
    // Punctuation becomes whitespace so "(C)" and "C." read as bare letters.
    std::string cleaned = answer;
    for (char& c : cleaned) {
        if (is_punct(c)) c = ' ';
    }
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < cleaned.size()) {
        while (pos < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[pos]))) {
            ++pos;
        }
        std::size_t end = pos;
        while (end < cleaned.size() && !std::isspace(static_cast<unsigned char>(cleaned[end]))) {
            ++end;
        }
        if (end > pos) tokens.push_back(cleaned.substr(pos, end - pos));
        pos = end;
    }
    return tokens;
}

// Whole-word, case-insensitive containment of `needle` in `haystack`.
bool contains_word(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return false;
    const std::string h = lower_copy(haystack);
    const std::string n = lower_copy(needle);
    std::size_t pos = 0;
    const auto is_word = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0;
    };
    while ((pos = h.find(n, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word(h[pos - 1]) || !is_word(n.front());
        const std::size_t after = pos + n.size();
        const bool right_ok = after == h.size() || !is_word(h[after]) || !is_word(n.back());
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

} // namespace

std::optional<std::string> extract_choice(const std::string& answer,
                                          const std::vector<QueryOption>& options) {
    if (options.empty()) return std::nullopt;
    for (const auto& token : letter_tokens(answer)) {
        if (token.size() != 1) continue;
        // Uppercase only: a lowercase "a" is nearly always the article, not a
        // choice, and must fall through to the full-text match.
        const char letter = token[0];
        if (letter < 'A' || letter > 'D') continue;
        for (const auto& opt : options) {
            if (opt.letter.size() == 1 && opt.letter[0] == letter) return opt.letter;
        }
    }
    // No standalone letter; try the option texts, longest first so the most
    // specific phrasing wins.
    const std::string normalized = normalize_open_answer(answer);
    std::vector<const QueryOption*> by_length;
    for (const auto& opt : options) by_length.push_back(&opt);
    std::stable_sort(by_length.begin(), by_length.end(),
                     [](const QueryOption* a, const QueryOption* b) {
                         return a->text.size() > b->text.size();
                     });
    for (const auto* opt : by_length) {
        if (normalize_open_answer(opt->text) == normalized) return opt->letter;
    }
    for (const auto* opt : by_length) {
        if (contains_word(answer, opt->text)) return opt->letter;
    }
    return std::nullopt;
}

std::string normalize_open_answer(std::string_view answer) {
    std::string out;
    bool pending_space = false;
    for (char c : answer) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    static const std::string terminal = ".,;:!?";
    while (!out.empty() && (terminal.find(out.back()) != std::string::npos ||
                            std::isspace(static_cast<unsigned char>(out.back())))) {
        out.pop_back();
    }
    return out;
}

bool answer_is_correct(const std::string& answer, const BenchmarkItem& item) {
    if (item.multiple_choice()) {
        const auto choice = extract_choice(answer, item.options);
        return choice.has_value() && *choice == item.answer;
    }
    return normalize_open_answer(answer) == normalize_open_answer(item.answer);
}

void count_routing(const Trace& trace, RoutingHistogram& histogram) {
    bool grounding = false, ocr = false;
    for (const auto& call : trace.agent_calls) {
        if (call.kind == "grounding") grounding = true;
        if (call.kind == "ocr") ocr = true;
    }
    if (grounding && ocr) {
        ++histogram.both;
    } else if (grounding) {
        ++histogram.grounding_only;
    } else if (ocr) {
        ++histogram.ocr_only;
    } else {
        ++histogram.direct;
    }
}

Metrics score(const std::vector<Trace>& traces, const std::vector<BenchmarkItem>& items) {
    std::map<std::string, const BenchmarkItem*> by_id;
    for (const auto& item : items) by_id[item.id] = &item;

    Metrics metrics;
    for (const auto& trace : traces) {
        auto it = by_id.find(trace.sample_id);
        if (it == by_id.end()) {
            throw MissingGold("trace '" + trace.sample_id + "' has no dataset item");
        }
        const BenchmarkItem& item = *it->second;
        const bool correct = answer_is_correct(trace.final_answer, item);
        ++metrics.total;
        if (correct) ++metrics.correct;
        for (const auto& tag : item.tags) {
            auto& bucket = metrics.per_tag[tag];
            ++bucket.total;
            if (correct) ++bucket.correct;
        }
        count_routing(trace, metrics.routing);
    }
    metrics.accuracy =
        metrics.total == 0 ? 0.0 : static_cast<double>(metrics.correct) / metrics.total;
    return metrics;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_simple_hard(
    const std::vector<BenchmarkItem>& items,
    const std::map<std::string, std::string>& reference_predictions) {
    std::vector<std::string> simple, hard;
    for (const auto& item : items) {
        auto it = reference_predictions.find(item.id);
        if (it == reference_predictions.end()) {
            throw MissingReference("no reference prediction for item '" + item.id + "'");
        }
        if (answer_is_correct(it->second, item)) {
            simple.push_back(item.id);
        } else {
            hard.push_back(item.id);
        }
    }
    return {std::move(simple), std::move(hard)};
}

std::map<std::string, std::string> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaMismatch("cannot open predictions: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("answer")) {
            throw SchemaMismatch(path + ":" + std::to_string(line_no) +
                                 ": prediction needs id and answer");
        }
        out[j["id"].get<std::string>()] = j["answer"].get<std::string>();
    }
    return out;
}

} // namespace groundloop
