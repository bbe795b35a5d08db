#include "groundloop/agent_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "groundloop/http_client.hpp"

namespace groundloop {

using nlohmann::json;

namespace {

constexpr double kMinCropAreaFraction = 1e-8;

PixelRect parse_pixel_box(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4 || !std::all_of(j.begin(), j.end(), [](const json& v) {
            return v.is_number();
        })) {
        throw FixtureParseError(where + ": box must be a 4-number array");
    }
    return PixelRect{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                     j[3].get<double>()};
}

FixtureRecord parse_fixture_record(const json& j, const std::string& where,
                                   std::string& image_id) {
    if (!j.is_object()) throw FixtureParseError(where + ": record must be an object");
    if (!j.contains("image_id") || !j["image_id"].is_string() ||
        j["image_id"].get<std::string>().empty()) {
        throw FixtureParseError(where + ": missing image_id");
    }
    image_id = j["image_id"].get<std::string>();
    if (!j.contains("kind") || !j["kind"].is_string()) {
        throw FixtureParseError(where + ": missing kind");
    }
    FixtureRecord rec;
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "grounding") {
        rec.kind = AgentKind::Grounding;
        for (const auto& d : j.value("detections", json::array())) {
            FixtureRecord::RawDetection raw;
            if (!d.contains("class") || !d["class"].is_string()) {
                throw FixtureParseError(where + ": detection missing class");
            }
            raw.class_name = d["class"].get<std::string>();
            raw.box = parse_pixel_box(d.at("box"), where);
            if (!d.contains("score") || !d["score"].is_number()) {
                throw FixtureParseError(where + ": detection missing score");
            }
            raw.score = d["score"].get<double>();
            if (raw.score < 0.0 || raw.score > 1.0) {
                throw FixtureParseError(where + ": score " + std::to_string(raw.score) +
                                        " outside [0, 1]");
            }
            rec.detections.push_back(std::move(raw));
        }
    } else if (kind == "ocr") {
        rec.kind = AgentKind::Ocr;
        for (const auto& t : j.value("texts", json::array())) {
            FixtureRecord::RawText raw;
            if (!t.contains("content") || !t["content"].is_string()) {
                throw FixtureParseError(where + ": text missing content");
            }
            raw.content = t["content"].get<std::string>();
            raw.box = parse_pixel_box(t.at("box"), where);
            rec.texts.push_back(std::move(raw));
        }
    } else {
        throw FixtureParseError(where + ": unknown kind '" + kind + "'");
    }
    return rec;
}

std::vector<Detection> normalize_detections(
    const std::vector<FixtureRecord::RawDetection>& raw, const ImageRef& image) {
    std::vector<Detection> out;
    out.reserve(raw.size());
    for (const auto& d : raw) {
        out.push_back(Detection{d.class_name, normalize_box(d.box, image), d.score});
    }
    return out;
}

std::vector<Detection> fetch_detections(const ImageRef& image,
                                        const std::vector<std::string>& classes,
                                        const AgentEndpoint& endpoint) {
    if (endpoint.is_fixture()) {
        auto it = endpoint.fixtures->by_image.find(image.id);
        if (it == endpoint.fixtures->by_image.end()) {
            throw AgentUnavailable("grounding fixture has no record for image '" + image.id +
                                   "'");
        }
        // A recorded agent answers the request it was asked; restrict the
        // stored inventory to the requested classes.
        std::vector<FixtureRecord::RawDetection> raw;
        for (const auto& d : it->second.detections) {
            if (std::find(classes.begin(), classes.end(), d.class_name) != classes.end()) {
                raw.push_back(d);
            }
        }
        return normalize_detections(raw, image);
    }

    json body = {{"image",
                  {{"id", image.id},
                   {"width", image.width},
                   {"height", image.height},
                   {"source", image.source}}},
                 {"classes", classes},
                 {"threshold", endpoint.score_threshold}};
    HttpResult res = http_post_json(endpoint.transport, body.dump(), endpoint.timeout_ms);
    if (!res.ok) throw AgentUnavailable("grounding agent: " + res.error);
    json parsed = json::parse(res.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("detections") ||
        !parsed["detections"].is_array()) {
        throw AgentUnavailable("grounding agent returned an unusable payload");
    }
    std::vector<Detection> out;
    for (const auto& d : parsed["detections"]) {
        if (!d.is_object() || !d.contains("class") || !d["class"].is_string() ||
            !d.contains("box") || !d.contains("score") || !d["score"].is_number()) {
            throw AgentUnavailable("grounding agent returned a malformed detection");
        }
        PixelRect box;
        try {
            box = parse_pixel_box(d["box"], "response");
        } catch (const FixtureParseError& e) {
            throw AgentUnavailable(std::string("grounding agent: ") + e.what());
        }
        out.push_back(Detection{d["class"].get<std::string>(), normalize_box(box, image),
                                d["score"].get<double>()});
    }
    return out;
}

} // namespace

AgentEndpoint load_fixture_agent(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FixtureParseError("cannot open fixture file: " + path);
    auto store = std::make_shared<FixtureStore>();
    std::string line;
    int line_no = 0;
    bool have_kind = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw FixtureParseError(where + ": invalid JSON");
        std::string image_id;
        FixtureRecord rec = parse_fixture_record(j, where, image_id);
        if (!have_kind) {
            store->kind = rec.kind;
            have_kind = true;
        } else if (store->kind != rec.kind) {
            throw FixtureParseError(where + ": mixed agent kinds in one fixture file");
        }
        if (!store->by_image.emplace(image_id, std::move(rec)).second) {
            throw FixtureParseError(where + ": duplicate record for image '" + image_id + "'");
        }
    }
    if (!have_kind) throw FixtureParseError(path + ": fixture file has no records");

    AgentEndpoint ep;
    ep.kind = store->kind;
    ep.transport = path;
    ep.fixtures = std::move(store);
    return ep;
}

GroundingResult group_detections(const std::vector<std::string>& requested,
                                 const std::vector<Detection>& detections,
                                 double threshold,
                                 int cap) {
    GroundingResult result;
    for (const auto& d : detections) {
        if (std::find(requested.begin(), requested.end(), d.class_name) == requested.end()) {
            result.warnings.push_back("dropped detection for class '" + d.class_name +
                                      "' that was never requested");
        }
    }
    for (const auto& cls : requested) {
        std::vector<const Detection*> kept;
        for (const auto& d : detections) {
            if (d.class_name != cls) continue;
            if (d.score < threshold) continue;
            if (box_area_fraction(d.box) < kMinCropAreaFraction) continue;
            kept.push_back(&d);
        }
        std::stable_sort(kept.begin(), kept.end(), [](const Detection* a, const Detection* b) {
            if (a->score != b->score) return a->score > b->score;
            return a->box.x1() < b->box.x1();
        });
        if (cap >= 0 && kept.size() > static_cast<size_t>(cap)) {
            kept.resize(static_cast<size_t>(cap));
        }
        if (kept.empty()) {
            result.undetected_classes.push_back(cls);
            continue;
        }
        ObjectClueGroup group;
        group.class_name = cls;
        for (const Detection* d : kept) {
            // Crops are attached by ground_objects; groups built here carry
            // only locations, paired with a placeholder ref.
            group.crops.emplace_back(ImageRef{}, d->box);
        }
        result.groups.push_back(std::move(group));
    }
    return result;
}

GroundingResult ground_objects(const ImageRef& image,
                               const std::vector<std::string>& classes,
                               const AgentEndpoint& endpoint) {
    std::vector<Detection> detections = fetch_detections(image, classes, endpoint);
    GroundingResult result = group_detections(classes, detections, endpoint.score_threshold,
                                              endpoint.per_class_cap);
    for (auto& group : result.groups) {
        for (auto& [crop, box] : group.crops) {
            crop = crop_spec(image, box);
        }
    }
    return result;
}

std::vector<TextClue> ocr_texts(const ImageRef& image, const AgentEndpoint& endpoint) {
    std::vector<TextClue> out;
    if (endpoint.is_fixture()) {
        auto it = endpoint.fixtures->by_image.find(image.id);
        if (it == endpoint.fixtures->by_image.end()) {
            throw AgentUnavailable("ocr fixture has no record for image '" + image.id + "'");
        }
        for (const auto& t : it->second.texts) {
            out.push_back(TextClue{t.content, normalize_box(t.box, image)});
        }
        return out;
    }

    json body = {{"image",
                  {{"id", image.id},
                   {"width", image.width},
                   {"height", image.height},
                   {"source", image.source}}}};
    HttpResult res = http_post_json(endpoint.transport, body.dump(), endpoint.timeout_ms);
    if (!res.ok) throw AgentUnavailable("ocr agent: " + res.error);
    json parsed = json::parse(res.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("texts") ||
        !parsed["texts"].is_array()) {
        throw AgentUnavailable("ocr agent returned an unusable payload");
    }
    for (const auto& t : parsed["texts"]) {
        if (!t.is_object() || !t.contains("content") || !t["content"].is_string() ||
            !t.contains("box")) {
            throw AgentUnavailable("ocr agent returned a malformed text entry");
        }
        PixelRect box;
        try {
            box = parse_pixel_box(t["box"], "response");
        } catch (const FixtureParseError& e) {
            throw AgentUnavailable(std::string("ocr agent: ") + e.what());
        }
        out.push_back(TextClue{t["content"].get<std::string>(), normalize_box(box, image)});
    }
    return out;
}

ImageRef crop_spec(const ImageRef& image, const NormalizedBox& box) {
    if (box_area_fraction(box) < kMinCropAreaFraction) {
        throw DegenerateBox("box too small to crop from image '" + image.id + "'");
    }
    PixelRect px = denormalize_box(box, image);
    const double w = px.x2 - px.x1;
    const double h = px.y2 - px.y1;
    const double side = std::max(w, h);

    // Pad the shorter axis symmetrically, then slide inside the image. When
    // the square is larger than the image itself, clip to the image.
    auto expand = [](double lo, double hi, double side, double limit) {
        const double center = (lo + hi) / 2.0;
        double a = center - side / 2.0;
        double b = center + side / 2.0;
        if (a < 0.0) {
            b -= a;
            a = 0.0;
        }
        if (b > limit) {
            a -= b - limit;
            b = limit;
        }
        return std::pair<double, double>{std::max(0.0, a), std::min(limit, b)};
    };
    auto [x1, x2] = expand(px.x1, px.x2, side, static_cast<double>(image.width));
    auto [y1, y2] = expand(px.y1, px.y2, side, static_cast<double>(image.height));

    PixelRect square{std::round(x1), std::round(y1), std::round(x2), std::round(y2)};

    ImageRef crop;
    std::ostringstream id;
    id << image.id << "#crop(" << static_cast<long long>(square.x1) << ","
       << static_cast<long long>(square.y1) << "," << static_cast<long long>(square.x2) << ","
       << static_cast<long long>(square.y2) << ")";
    crop.id = id.str();
    crop.width = static_cast<long long>(square.x2 - square.x1);
    crop.height = static_cast<long long>(square.y2 - square.y1);
    crop.source = image.source;
    crop.crop_of = image.id;
    crop.crop_box = square;
    return crop;
}

} // namespace groundloop
