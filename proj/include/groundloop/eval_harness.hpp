#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "groundloop/dataset.hpp"
#include "groundloop/orchestrator.hpp"

namespace groundloop {

struct RoutingHistogram {
    int direct = 0;
    int ocr_only = 0;
    int grounding_only = 0;
    int both = 0;

    int total() const { return direct + ocr_only + grounding_only + both; }
    bool operator==(const RoutingHistogram&) const = default;
};

struct TagAccuracy {
    int correct = 0;
    int total = 0;
};

struct Metrics {
    int correct = 0;
    int total = 0;
    double accuracy = 0.0;
    std::map<std::string, TagAccuracy> per_tag;
    RoutingHistogram routing;
};

/// Picks the option letter out of a free-form reply: first a standalone
/// letter (punctuation stripped), then a case-insensitive match of an
/// option's full text inside the reply. nullopt when neither applies.
std::optional<std::string> extract_choice(const std::string& answer,
                                          const std::vector<QueryOption>& options);

/// Lowercase, whitespace collapsed, terminal punctuation stripped.
std::string normalize_open_answer(std::string_view answer);

/// True when `answer` counts as correct for `item` (letter equality for
/// multiple choice, normalized equality for open form).
bool answer_is_correct(const std::string& answer, const BenchmarkItem& item);

/// Buckets one trace by which agents its round-1 outcome invoked.
void count_routing(const Trace& trace, RoutingHistogram& histogram);

/// Scores traces against their items. Unparseable or missing answers count
/// wrong. Throws MissingGold when a trace has no matching item.
Metrics score(const std::vector<Trace>& traces, const std::vector<BenchmarkItem>& items);

/// Splits items by whether a reference model already answers them correctly.
/// Returns (simple ids, hard ids) in item order. Throws MissingReference when
/// an item has no reference prediction.
std::pair<std::vector<std::string>, std::vector<std::string>> split_simple_hard(
    const std::vector<BenchmarkItem>& items,
    const std::map<std::string, std::string>& reference_predictions);

/// Loads {"id": ..., "answer": ...} lines.
std::map<std::string, std::string> load_predictions(const std::string& path);

} // namespace groundloop
