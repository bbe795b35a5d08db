#include "groundloop/curation.hpp"

#include <algorithm>
#include <fstream>

namespace groundloop {

using nlohmann::json;

namespace {

constexpr double kMinLongSidePx = 500.0;
constexpr double kMaxTextHeightPx = 20.0;
constexpr double kSmallObjectAreaFraction = 0.1;
constexpr int kBenchmarkTopK = 5;

PixelRect pixel_box_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) {
        throw SchemaMismatch(where + ": box must be a 4-number array");
    }
    return PixelRect{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                     j[3].get<double>()};
}

} // namespace

bool filter_text_rich(const CandidateImage& candidate) {
    if (candidate.ocr_boxes.empty()) return false;
    const double long_side =
        static_cast<double>(std::max(candidate.image.width, candidate.image.height));
    if (long_side <= kMinLongSidePx) return false;
    double min_height = candidate.ocr_boxes.front().height_px;
    for (const auto& box : candidate.ocr_boxes) {
        min_height = std::min(min_height, box.height_px);
    }
    return min_height < kMaxTextHeightPx;
}

TrainingRecord build_negative(const Query& query, const AgentCallRequest& request) {
    TrainingRecord record;
    record.prompt = compose_round_one(query);
    record.target = render_refusal(request);
    record.polarity = Polarity::Negative;
    return record;
}

TrainingRecord build_positive(const Query& query, const ClueSet& clues,
                              const std::string& gold, const ComposerOptions& opts) {
    TrainingRecord record;
    record.target = gold;
    if (!clues.grounding_ran() && !clues.text_agent_ran) {
        record.prompt = compose_round_one(query);
        record.polarity = Polarity::PositiveSimple;
    } else {
        record.prompt = compose_round_two(query, clues, opts);
        record.polarity = Polarity::PositiveWithClues;
    }
    return record;
}

std::vector<BenchmarkDraft> build_benchmark_item(const CandidateImage& candidate,
                                                 const std::string& question_stub) {
    std::vector<const Detection*> ranked;
    for (const auto& d : candidate.detections) ranked.push_back(&d);
    std::stable_sort(ranked.begin(), ranked.end(), [](const Detection* a, const Detection* b) {
        return a->score > b->score;
    });
    if (ranked.size() > kBenchmarkTopK) ranked.resize(kBenchmarkTopK);

    std::vector<BenchmarkDraft> drafts;
    int index = 0;
    for (const Detection* d : ranked) {
        if (box_area_fraction(d->box) >= kSmallObjectAreaFraction) continue;
        BenchmarkDraft draft;
        draft.item.id = candidate.image.id + "#box" + std::to_string(index);
        draft.item.image_id = candidate.image.id;
        draft.item.image_path = candidate.image.source;
        draft.item.width = candidate.image.width;
        draft.item.height = candidate.image.height;
        draft.item.question = question_stub;
        draft.item.tags = {"objects"};
        draft.annotation.box = d->box;
        drafts.push_back(std::move(draft));
        ++index;
    }
    if (drafts.empty()) {
        throw NoSmallObjects("no detection of '" + candidate.image.id +
                             "' covers less than a tenth of the image");
    }
    return drafts;
}

std::vector<CandidateImage> load_candidates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaMismatch("cannot open candidates: " + path);
    std::vector<CandidateImage> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw SchemaMismatch(where + ": invalid JSON record");
        }
        CandidateImage candidate;
        if (!j.contains("image_id") || !j["image_id"].is_string()) {
            throw SchemaMismatch(where + ": missing image_id");
        }
        candidate.image.id = j["image_id"].get<std::string>();
        candidate.image.width = j.value("width", 0LL);
        candidate.image.height = j.value("height", 0LL);
        candidate.image.source = j.value("source", "");
        if (candidate.image.width <= 0 || candidate.image.height <= 0) {
            throw SchemaMismatch(where + ": candidate needs positive width and height");
        }
        candidate.question = j.value("question", "");
        candidate.answer = j.value("answer", "");
        candidate.answer_format_hint = j.value("hint", "");
        for (const auto& t : j.value("texts", json::array())) {
            OcrBox box;
            if (!t.contains("content") || !t["content"].is_string()) {
                throw SchemaMismatch(where + ": text needs content");
            }
            box.content = t["content"].get<std::string>();
            box.box = pixel_box_from_json(t.at("box"), where);
            box.height_px = t.value("height", box.box.y2 - box.box.y1);
            candidate.ocr_boxes.push_back(std::move(box));
        }
        for (const auto& d : j.value("detections", json::array())) {
            if (!d.contains("class") || !d["class"].is_string() || !d.contains("score")) {
                throw SchemaMismatch(where + ": detection needs class and score");
            }
            const PixelRect box = pixel_box_from_json(d.at("box"), where);
            candidate.detections.push_back(Detection{d["class"].get<std::string>(),
                                                     normalize_box(box, candidate.image),
                                                     d["score"].get<double>()});
        }
        out.push_back(std::move(candidate));
    }
    return out;
}

const char* polarity_name(Polarity polarity) {
    switch (polarity) {
        case Polarity::Negative: return "negative";
        case Polarity::PositiveSimple: return "positive_simple";
        case Polarity::PositiveWithClues: return "positive_with_clues";
    }
    return "negative";
}

nlohmann::json training_record_to_json(const TrainingRecord& record) {
    json content = json::array();
    for (const auto& segment : record.prompt.segments) {
        if (const auto* img = std::get_if<ImageSlot>(&segment)) {
            content.push_back({{"type", "image"}, {"id_or_data", img->image.id}});
        } else if (const auto* crop = std::get_if<ObjectSlot>(&segment)) {
            content.push_back({{"type", "image"}, {"id_or_data", crop->crop.id}});
        } else if (const auto* text = std::get_if<TextSegment>(&segment)) {
            content.push_back({{"type", "text"}, {"text", text->text}});
        }
    }
    return json{{"polarity", polarity_name(record.polarity)},
                {"messages",
                 json::array({json{{"role", "user"}, {"content", std::move(content)}},
                              json{{"role", "assistant"},
                                   {"content", json::array({json{{"type", "text"},
                                                                 {"text", record.target}}})}}})}};
}

} // namespace groundloop
