#include "groundloop/prompt_composer.hpp"

#include <cmath>
#include <sstream>

namespace groundloop {

const std::string kClueHeader = "Additional visual information to focus on:";
const std::string kTextBlockLead = "Text in the image: ";
const std::string kNoTextFallback =
    "Please focus on providing an answer to the question without considering any "
    "challenges related to the clarity or presence of text in the image.";
const std::string kAbsenceSuffix = " not existent in the image";
const std::string kImagePlaceholder = "<image>";
const std::string kObjectPlaceholder = "<object>";
const std::string kLocationLead = " at location ";

std::size_t PromptDocument::object_slot_count() const {
    std::size_t n = 0;
    for (const auto& s : segments) {
        if (std::holds_alternative<ObjectSlot>(s)) ++n;
    }
    return n;
}

std::string format_coord(double value) {
    // llround implements round half away from zero on the stored double.
    long long thousandths = std::llround(value * 1000.0);
    const bool negative = thousandths < 0;
    if (negative) thousandths = -thousandths;

    const long long whole = thousandths / 1000;
    long long frac = thousandths % 1000;
    int digits = 3;
    if (frac % 10 == 0) {  // drop at most one trailing zero, keep two decimals
        frac /= 10;
        digits = 2;
    }
    std::ostringstream os;
    if (negative) os << '-';
    os << whole << '.';
    for (int place = digits - 1; place >= 0; --place) {
        long long div = 1;
        for (int k = 0; k < place; ++k) div *= 10;
        os << (frac / div) % 10;
    }
    return os.str();
}

std::string format_location(const NormalizedBox& box) {
    std::ostringstream os;
    os << '[' << format_coord(box.x1()) << ", " << format_coord(box.y1()) << ", "
       << format_coord(box.x2()) << ", " << format_coord(box.y2()) << ']';
    return os.str();
}

ObjectBlock format_object_block(const GroundingResult& result, const ComposerOptions& opts) {
    ObjectBlock block;
    std::vector<std::string> paragraphs;
    for (const auto& group : result.groups) {
        std::ostringstream line;
        line << group.count() << ' ' << group.class_name;
        if (group.count() > 1) line << "(s)";
        line << ' ';
        for (std::size_t i = 0; i < group.count(); ++i) {
            if (i > 0) line << ", ";
            line << kObjectPlaceholder;
        }
        if (opts.include_positions) {
            line << kLocationLead;
            for (std::size_t i = 0; i < group.crops.size(); ++i) {
                if (i > 0) line << ", ";
                line << format_location(group.crops[i].second);
            }
        }
        paragraphs.push_back(line.str());
        for (const auto& [crop, box] : group.crops) block.crops.push_back(crop);
    }
    if (!result.undetected_classes.empty()) {
        std::ostringstream absent;
        for (std::size_t i = 0; i < result.undetected_classes.size(); ++i) {
            if (i > 0) absent << '\n';
            absent << result.undetected_classes[i] << kAbsenceSuffix;
        }
        paragraphs.push_back(absent.str());
    }

    std::ostringstream text;
    text << kClueHeader;
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        text << (i == 0 ? "\n" : "\n\n") << paragraphs[i];
    }
    block.text = text.str();
    return block;
}

std::string format_text_block(const std::vector<TextClue>& clues, const ComposerOptions& opts) {
    if (clues.empty()) {
        // The fallback stands as its own paragraph under the header.
        return kClueHeader + "\n\n" + kNoTextFallback;
    }
    std::ostringstream os;
    os << kClueHeader << '\n' << kTextBlockLead;
    for (std::size_t i = 0; i < clues.size(); ++i) {
        if (i > 0) os << "; ";
        os << '\'' << clues[i].content << '\'';
        if (opts.include_positions) os << kLocationLead << format_location(clues[i].location);
    }
    os << '.';
    return os.str();
}

std::string question_block(const Query& query) {
    std::ostringstream os;
    os << query.question;
    for (const auto& opt : query.options) {
        os << ' ' << opt.letter << ". " << opt.text;
    }
    if (!query.answer_format_hint.empty()) os << '\n' << query.answer_format_hint;
    return os.str();
}

PromptDocument compose_round_one(const Query& query) {
    PromptDocument doc;
    doc.segments.push_back(ImageSlot{query.image});
    doc.segments.push_back(TextSegment{question_block(query)});
    return doc;
}

PromptDocument compose_round_two(const Query& query, const ClueSet& clues,
                                 const ComposerOptions& opts) {
    if (!clues.grounding_ran() && !clues.text_agent_ran) {
        throw NoCluesRequested("round 2 composed with no agent result at all");
    }
    PromptDocument doc;
    doc.segments.push_back(ImageSlot{query.image});
    if (clues.grounding_ran()) {
        GroundingResult view{clues.object_groups, clues.undetected_classes, {}};
        ObjectBlock block = format_object_block(view, opts);
        doc.segments.push_back(TextSegment{std::move(block.text)});
        for (auto& crop : block.crops) doc.segments.push_back(ObjectSlot{std::move(crop)});
    }
    if (clues.text_agent_ran) {
        doc.segments.push_back(TextSegment{format_text_block(clues.text_clues, opts)});
    }
    doc.segments.push_back(TextSegment{question_block(query)});
    return doc;
}

std::string render_text(const PromptDocument& doc) {
    std::string out;
    bool first = true;
    for (const auto& segment : doc.segments) {
        const std::string* piece = nullptr;
        if (const auto* img = std::get_if<ImageSlot>(&segment)) {
            (void)img;
            piece = &kImagePlaceholder;
        } else if (const auto* text = std::get_if<TextSegment>(&segment)) {
            piece = &text->text;
        } else {
            continue;  // crops carry no text; their placeholders are inline already
        }
        if (!first) out += "\n\n";
        out += *piece;
        first = false;
    }
    return out;
}

std::string strip_location_clauses(std::string_view text) {
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t hit = text.find(kLocationLead, pos);
        if (hit == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        std::size_t cursor = hit + kLocationLead.size();
        if (cursor >= text.size() || text[cursor] != '[') {
            // Not a location clause; keep the literal text and move on.
            out.append(text.substr(pos, hit + kLocationLead.size() - pos));
            pos = cursor;
            continue;
        }
        out.append(text.substr(pos, hit - pos));
        // Consume "[...]" groups separated by ", ".
        while (cursor < text.size() && text[cursor] == '[') {
            const std::size_t close = text.find(']', cursor);
            if (close == std::string_view::npos) {
                cursor = text.size();
                break;
            }
            cursor = close + 1;
            if (text.compare(cursor, 3, ", [") == 0) {
                cursor += 2;  // points at the next '['
            } else {
                break;
            }
        }
        pos = cursor;
    }
    return out;
}

} // namespace groundloop
