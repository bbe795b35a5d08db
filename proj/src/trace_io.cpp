#include "groundloop/trace_io.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace groundloop {

using nlohmann::json;

namespace {

json box_to_json(const NormalizedBox& box) {
    return json::array({box.x1(), box.y1(), box.x2(), box.y2()});
}

NormalizedBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) {
        throw SchemaMismatch("box must be a 4-number array");
    }
    return NormalizedBox(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                         j[3].get<double>());
}

json image_to_json(const ImageRef& image) {
    json j = {{"id", image.id},
              {"width", image.width},
              {"height", image.height},
              {"source", image.source}};
    if (image.crop_of) j["crop_of"] = *image.crop_of;
    if (image.crop_box) {
        j["crop_box"] = json::array(
            {image.crop_box->x1, image.crop_box->y1, image.crop_box->x2, image.crop_box->y2});
    }
    return j;
}

ImageRef image_from_json(const json& j) {
    ImageRef image;
    image.id = j.value("id", "");
    image.width = j.value("width", 0LL);
    image.height = j.value("height", 0LL);
    image.source = j.value("source", "");
    if (j.contains("crop_of")) image.crop_of = j["crop_of"].get<std::string>();
    if (j.contains("crop_box")) {
        const auto& b = j["crop_box"];
        image.crop_box = PixelRect{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                   b[3].get<double>()};
    }
    return image;
}

const char* projection_name(Projection p) {
    switch (p) {
        case Projection::None: return "none";
        case Projection::Mlp: return "mlp";
        case Projection::Resampler: return "resampler";
    }
    return "none";
}

Projection projection_from_name(const std::string& name) {
    if (name == "mlp") return Projection::Mlp;
    if (name == "resampler") return Projection::Resampler;
    return Projection::None;
}

} // namespace

json prompt_to_json(const PromptDocument& doc) {
    json segments = json::array();
    for (const auto& segment : doc.segments) {
        if (const auto* img = std::get_if<ImageSlot>(&segment)) {
            segments.push_back({{"type", "image"}, {"image", image_to_json(img->image)}});
        } else if (const auto* crop = std::get_if<ObjectSlot>(&segment)) {
            segments.push_back({{"type", "object"}, {"image", image_to_json(crop->crop)}});
        } else if (const auto* text = std::get_if<TextSegment>(&segment)) {
            segments.push_back({{"type", "text"}, {"text", text->text}});
        }
    }
    return json{{"segments", std::move(segments)}};
}

PromptDocument prompt_from_json(const json& j) {
    PromptDocument doc;
    for (const auto& s : j.value("segments", json::array())) {
        const std::string type = s.value("type", "");
        if (type == "image") {
            doc.segments.push_back(ImageSlot{image_from_json(s.at("image"))});
        } else if (type == "object") {
            doc.segments.push_back(ObjectSlot{image_from_json(s.at("image"))});
        } else if (type == "text") {
            doc.segments.push_back(TextSegment{s.value("text", "")});
        } else {
            throw SchemaMismatch("unknown prompt segment type '" + type + "'");
        }
    }
    return doc;
}

json trace_to_json(const Trace& trace) {
    json j;
    j["trace_version"] = kTraceVersion;
    j["sample_id"] = trace.sample_id;
    j["round1_prompt"] = trace.round1_prompt;
    j["round1_raw"] = trace.round1_raw;
    if (trace.outcome) {
        if (trace.outcome->is_direct()) {
            j["outcome"] = {{"type", "direct"}, {"answer", trace.outcome->answer()}};
        } else {
            const auto& req = trace.outcome->request();
            j["outcome"] = {{"type", "call"},
                            {"object_classes", req.object_classes},
                            {"wants_text", req.wants_text}};
        }
    }
    json calls = json::array();
    for (const auto& call : trace.agent_calls) {
        json c = {{"kind", call.kind},
                  {"request", call.request},
                  {"duration_ms", call.duration_ms},
                  {"result_summary", call.result_summary}};
        if (call.error) c["error"] = *call.error;
        calls.push_back(std::move(c));
    }
    j["agent_calls"] = std::move(calls);

    json groups = json::array();
    for (const auto& group : trace.clue_set.object_groups) {
        json crops = json::array();
        for (const auto& [crop, box] : group.crops) {
            crops.push_back({{"image", image_to_json(crop)}, {"box", box_to_json(box)}});
        }
        groups.push_back({{"class", group.class_name}, {"crops", std::move(crops)}});
    }
    json text_clues = json::array();
    for (const auto& clue : trace.clue_set.text_clues) {
        text_clues.push_back({{"content", clue.content}, {"box", box_to_json(clue.location)}});
    }
    j["clue_set"] = {{"object_groups", std::move(groups)},
                     {"undetected_classes", trace.clue_set.undetected_classes},
                     {"text_clues", std::move(text_clues)},
                     {"text_agent_ran", trace.clue_set.text_agent_ran}};

    if (trace.routing_plan) {
        j["routing_plan"] = {
            {"global_projection", projection_name(trace.routing_plan->global_projection)},
            {"object_projection", projection_name(trace.routing_plan->object_projection)},
            {"tokens_global", trace.routing_plan->tokens_global},
            {"tokens_per_object", trace.routing_plan->tokens_per_object},
            {"object_count", trace.routing_plan->object_count}};
    }
    j["dropped_text_clues"] = trace.dropped_text_clues;
    if (trace.round2_prompt) j["round2_prompt"] = *trace.round2_prompt;
    if (trace.round2_raw) j["round2_raw"] = *trace.round2_raw;
    j["final_answer"] = trace.final_answer;
    j["repeated_refusal"] = trace.repeated_refusal;
    j["warnings"] = trace.warnings;
    if (trace.error) j["error"] = *trace.error;
    j["timings"] = {{"round1_ms", trace.timings.round1_ms},
                    {"round2_ms", trace.timings.round2_ms},
                    {"total_ms", trace.timings.total_ms}};
    return j;
}

Trace trace_from_json(const json& j) {
    if (j.value("trace_version", -1) != kTraceVersion) {
        throw SchemaMismatch("unsupported trace_version");
    }
    Trace trace;
    trace.sample_id = j.value("sample_id", "");
    trace.round1_prompt = j.value("round1_prompt", json());
    trace.round1_raw = j.value("round1_raw", "");
    if (j.contains("outcome")) {
        const auto& o = j["outcome"];
        if (o.value("type", "") == "direct") {
            trace.outcome = RoundOneOutcome::direct(o.value("answer", ""));
        } else {
            AgentCallRequest req;
            req.object_classes =
                o.value("object_classes", std::vector<std::string>{});
            req.wants_text = o.value("wants_text", false);
            trace.outcome = RoundOneOutcome::call(std::move(req));
        }
    }
    for (const auto& c : j.value("agent_calls", json::array())) {
        AgentCallRecord record;
        record.kind = c.value("kind", "");
        record.request = c.value("request", json());
        record.duration_ms = c.value("duration_ms", 0.0);
        record.result_summary = c.value("result_summary", "");
        if (c.contains("error")) record.error = c["error"].get<std::string>();
        trace.agent_calls.push_back(std::move(record));
    }
    if (j.contains("clue_set")) {
        const auto& cs = j["clue_set"];
        for (const auto& g : cs.value("object_groups", json::array())) {
            ObjectClueGroup group;
            group.class_name = g.value("class", "");
            for (const auto& c : g.value("crops", json::array())) {
                group.crops.emplace_back(image_from_json(c.at("image")),
                                         box_from_json(c.at("box")));
            }
            trace.clue_set.object_groups.push_back(std::move(group));
        }
        trace.clue_set.undetected_classes =
            cs.value("undetected_classes", std::vector<std::string>{});
        for (const auto& t : cs.value("text_clues", json::array())) {
            trace.clue_set.text_clues.push_back(
                TextClue{t.value("content", ""), box_from_json(t.at("box"))});
        }
        trace.clue_set.text_agent_ran = cs.value("text_agent_ran", false);
    }
    if (j.contains("routing_plan")) {
        const auto& r = j["routing_plan"];
        RoutingPlan plan;
        plan.global_projection = projection_from_name(r.value("global_projection", "none"));
        plan.object_projection = projection_from_name(r.value("object_projection", "none"));
        plan.tokens_global = r.value("tokens_global", 0);
        plan.tokens_per_object = r.value("tokens_per_object", 0);
        plan.object_count = r.value("object_count", 0);
        trace.routing_plan = plan;
    }
    trace.dropped_text_clues = j.value("dropped_text_clues", 0);
    if (j.contains("round2_prompt")) trace.round2_prompt = j["round2_prompt"];
    if (j.contains("round2_raw")) trace.round2_raw = j["round2_raw"].get<std::string>();
    trace.final_answer = j.value("final_answer", "");
    trace.repeated_refusal = j.value("repeated_refusal", false);
    trace.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("error")) trace.error = j["error"].get<std::string>();
    if (j.contains("timings")) {
        const auto& t = j["timings"];
        trace.timings.round1_ms = t.value("round1_ms", 0.0);
        trace.timings.round2_ms = t.value("round2_ms", 0.0);
        trace.timings.total_ms = t.value("total_ms", 0.0);
    }
    return trace;
}

void write_traces_jsonl(const std::string& path, const std::vector<Trace>& traces) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    for (const auto& trace : traces) out << trace_to_json(trace).dump() << '\n';
}

std::vector<Trace> read_traces_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file: " + path);
    std::vector<Trace> traces;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw SchemaMismatch(path + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        traces.push_back(trace_from_json(j));
    }
    return traces;
}

void erase_timings(json& trace_json) {
    trace_json.erase("timings");
    if (trace_json.contains("agent_calls")) {
        for (auto& call : trace_json["agent_calls"]) call.erase("duration_ms");
    }
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash;
    return os.str();
}

json make_run_manifest(const std::vector<Trace>& traces, const json& effective_config) {
    int direct = 0, called = 0, errors = 0, dropped = 0, repeated = 0;
    for (const auto& trace : traces) {
        if (trace.error) ++errors;
        if (trace.outcome && trace.outcome->is_call()) ++called;
        if (trace.outcome && trace.outcome->is_direct()) ++direct;
        dropped += trace.dropped_text_clues;
        if (trace.repeated_refusal) ++repeated;
    }
    return json{{"trace_version", kTraceVersion},
                {"config_hash", fnv1a_hex(effective_config.dump())},
                {"config", effective_config},
                {"samples", traces.size()},
                {"direct", direct},
                {"called", called},
                {"errors", errors},
                {"dropped_text_clues_total", dropped},
                {"repeated_refusals", repeated}};
}

} // namespace groundloop
