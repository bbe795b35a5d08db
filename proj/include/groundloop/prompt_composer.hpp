#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "groundloop/agent_gateway.hpp"
#include "groundloop/types.hpp"

namespace groundloop {

// Fixed template strings. Prompts must reproduce these byte for byte, so they
// live in one place.
extern const std::string kClueHeader;          // "Additional visual information to focus on:"
extern const std::string kTextBlockLead;       // "Text in the image: "
extern const std::string kNoTextFallback;      // used when OCR ran but found nothing
extern const std::string kAbsenceSuffix;       // " not existent in the image"
extern const std::string kImagePlaceholder;    // "<image>"
extern const std::string kObjectPlaceholder;   // "<object>"
extern const std::string kLocationLead;        // " at location "

struct ComposerOptions {
    // Ablation toggle: when false the " at location [...]" clauses are left
    // out of both object lines and text entries. Everything else is unchanged.
    bool include_positions = true;
};

/// An original-image part. Exactly one leads every prompt.
struct ImageSlot {
    ImageRef image;
    bool operator==(const ImageSlot&) const = default;
};

/// One square object crop, in the same order as the "<object>" placeholders
/// appearing in the text segments before it.
struct ObjectSlot {
    ImageRef crop;
    bool operator==(const ObjectSlot&) const = default;
};

struct TextSegment {
    std::string text;
    bool operator==(const TextSegment&) const = default;
};

using Segment = std::variant<ImageSlot, ObjectSlot, TextSegment>;

struct PromptDocument {
    std::vector<Segment> segments;

    std::size_t object_slot_count() const;
    bool operator==(const PromptDocument&) const = default;
};

/// Canonical coordinate rendering: round half away from zero to 3 decimals,
/// then drop at most one trailing zero so at least 2 decimals remain.
std::string format_coord(double value);

/// "[x1, y1, x2, y2]" with each coordinate rendered by format_coord.
std::string format_location(const NormalizedBox& box);

struct ObjectBlock {
    std::string text;
    std::vector<ImageRef> crops;  // placeholder order
};

/// The grounded-object section: header, one line per detected class with
/// count, "<object>" placeholders and locations, then one line per class the
/// agent could not find.
ObjectBlock format_object_block(const GroundingResult& result, const ComposerOptions& opts);

/// The OCR section: header plus the recognized strings with locations, or the
/// fixed fallback sentence when the agent found no text.
std::string format_text_block(const std::vector<TextClue>& clues, const ComposerOptions& opts);

/// The question followed by its options (if any) and the answer-format hint
/// (if any), exactly as they should appear at the end of every prompt.
std::string question_block(const Query& query);

/// Round 1: image plus the bare question block.
PromptDocument compose_round_one(const Query& query);

/// Round 2: image, clue sections, crops, question block. Requires that at
/// least one agent ran (throws NoCluesRequested otherwise). The object
/// section precedes the text section when both agents ran.
PromptDocument compose_round_two(const Query& query, const ClueSet& clues,
                                 const ComposerOptions& opts);

/// Flat text view of a document: "<image>" for the leading image, segment
/// texts separated by blank lines. Object crops contribute no text of their
/// own; their placeholders are already inside the text.
std::string render_text(const PromptDocument& doc);

/// Removes every " at location [...], [...]" clause. Applying this to a
/// prompt composed with positions yields the prompt composed without them.
std::string strip_location_clauses(std::string_view text);

} // namespace groundloop
