#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "groundloop/geometry.hpp"

namespace groundloop {

struct QueryOption {
    std::string letter;  // "A".."D"
    std::string text;

    bool operator==(const QueryOption&) const = default;
};

struct Query {
    ImageRef image;
    std::string question;
    std::string answer_format_hint;  // appended verbatim; may be empty
    std::vector<QueryOption> options;

    bool operator==(const Query&) const = default;
};

struct TextClue {
    std::string content;
    NormalizedBox location;

    bool operator==(const TextClue&) const = default;
};

// One detected object class with its crops. The per-class count the prompt
// announces is always the number of crops, so it is derived, not stored.
struct ObjectClueGroup {
    std::string class_name;
    std::vector<std::pair<ImageRef, NormalizedBox>> crops;

    std::size_t count() const { return crops.size(); }

    bool operator==(const ObjectClueGroup&) const = default;
};

struct ClueSet {
    std::vector<ObjectClueGroup> object_groups;
    std::vector<std::string> undetected_classes;  // requested but not found
    std::vector<TextClue> text_clues;             // agent reading order
    bool text_agent_ran = false;

    /// Total crop count across groups (the m of the clue bookkeeping).
    std::size_t total_objects() const {
        std::size_t m = 0;
        for (const auto& g : object_groups) m += g.count();
        return m;
    }

    bool grounding_ran() const {
        return !object_groups.empty() || !undetected_classes.empty();
    }

    bool operator==(const ClueSet&) const = default;
};

} // namespace groundloop
