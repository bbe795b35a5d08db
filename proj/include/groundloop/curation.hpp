#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "groundloop/agent_gateway.hpp"
#include "groundloop/call_parser.hpp"
#include "groundloop/dataset.hpp"
#include "groundloop/prompt_composer.hpp"

namespace groundloop {

enum class Polarity { Negative, PositiveSimple, PositiveWithClues };

// One supervised example: the prompt the model sees and the reply it should
// produce. Negatives teach the refusal, positives teach grounded answers.
struct TrainingRecord {
    PromptDocument prompt;
    std::string target;
    Polarity polarity = Polarity::Negative;
};

struct OcrBox {
    std::string content;
    PixelRect box;          // pixel coordinates in the source image
    double height_px = 0.0;  // glyph height; y extent of the box by default
};

struct CandidateImage {
    ImageRef image;
    std::vector<OcrBox> ocr_boxes;
    std::vector<Detection> detections;  // normalized, score-carrying
    std::string question;
    std::string answer;  // gold for positives
    std::string answer_format_hint;
};

/// Text-rich eligibility: the image is big enough to plausibly defeat a
/// low-resolution encoder (longer side above 500 px) while some glyphs are
/// small enough to be unreadable (minimum text height under 20 px).
bool filter_text_rich(const CandidateImage& candidate);

/// Round-1 prompt paired with the rendered refusal for `request`. The target
/// parses back to `request` by construction.
TrainingRecord build_negative(const Query& query, const AgentCallRequest& request);

/// Clue-free clues -> plain round-1 prompt with the gold answer; otherwise
/// the grounded round-2 prompt with the gold answer.
TrainingRecord build_positive(const Query& query, const ClueSet& clues,
                              const std::string& gold, const ComposerOptions& opts);

struct AnnotationSpec {
    NormalizedBox box{0.0, 0.0, 0.0, 0.0};
    std::string color = "red";
    int stroke_px = 3;
};

struct BenchmarkDraft {
    BenchmarkItem item;  // skeleton: question stub, empty options, no gold
    AnnotationSpec annotation;
};

/// Small-object benchmark drafts for one image: of the top-5 detections by
/// score, keep those covering strictly less than a tenth of the image; one
/// draft per surviving box, best score first. Throws NoSmallObjects when
/// nothing survives.
std::vector<BenchmarkDraft> build_benchmark_item(const CandidateImage& candidate,
                                                 const std::string& question_stub);

/// Line-delimited candidate records:
///   {"image_id", "width", "height", "source"?, "question"?, "answer"?,
///    "hint"?, "texts": [{"content", "box", "height"?}],
///    "detections": [{"class", "box", "score"}]}
/// Boxes are pixel coordinates, like agent fixtures.
std::vector<CandidateImage> load_candidates(const std::string& path);

/// Chat-format serialization: the prompt as the user turn, the target as the
/// assistant turn, plus the polarity label.
nlohmann::json training_record_to_json(const TrainingRecord& record);

const char* polarity_name(Polarity polarity);

} // namespace groundloop
