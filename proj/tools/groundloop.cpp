#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "groundloop/config.hpp"
#include "groundloop/curation.hpp"
#include "groundloop/dataset.hpp"
#include "groundloop/eval_harness.hpp"
#include "groundloop/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace groundloop;

namespace {

struct GlobalFlags {
    std::string config_path;
    int parallelism = 0;       // 0: not given
    bool no_positions = false;
    int budget = 0;            // 0: not given
    std::string output_dir;
};

AppConfig effective_config(const GlobalFlags& flags, bool config_required) {
    AppConfig config;
    if (!flags.config_path.empty()) {
        config = load_config(flags.config_path);
    } else if (config_required) {
        throw ConfigError("this command needs --config");
    }
    apply_env_overrides(config);
    if (flags.parallelism > 0) config.parallelism = flags.parallelism;
    if (flags.no_positions) config.composer.include_positions = false;
    if (flags.budget > 0) config.budget.context_limit = flags.budget;
    if (!flags.output_dir.empty()) config.output_dir = flags.output_dir;
    return config;
}

void ensure_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
}

int cmd_run(const GlobalFlags& flags, const std::string& dataset_flag) {
    AppConfig config = effective_config(flags, true);
    if (!dataset_flag.empty()) config.dataset_path = dataset_flag;
    if (config.dataset_path.empty()) {
        throw ConfigError("run needs a dataset (config paths.dataset or --dataset)");
    }

    const std::vector<BenchmarkItem> items = load_dataset(config.dataset_path);
    std::vector<Sample> samples;
    samples.reserve(items.size());
    for (const auto& item : items) {
        samples.push_back(Sample{item.id, query_from_item(item)});
    }

    auto backend = make_backend(config.backend);
    const Agents agents = config.make_agents();
    const std::vector<Trace> traces =
        run_batch(samples, *backend, config.backend, agents, config.run_config());

    ensure_output_dir(config.output_dir);
    const std::string trace_path = config.output_dir + "/traces.jsonl";
    write_traces_jsonl(trace_path, traces);
    const json manifest = make_run_manifest(traces, config.to_json());
    std::ofstream out(config.output_dir + "/manifest.json");
    out << manifest.dump(2) << '\n';

    int errors = 0;
    for (const auto& trace : traces) {
        if (trace.error) ++errors;
    }
    std::cout << "ran " << traces.size() << " samples (" << errors << " errors) -> "
              << trace_path << '\n';
    return 0;
}

void print_metrics(const Metrics& metrics) {
    std::cout << "accuracy: " << metrics.correct << "/" << metrics.total;
    if (metrics.total > 0) {
        std::cout << " (" << 100.0 * metrics.accuracy << "%)";
    }
    std::cout << '\n';
    for (const auto& [tag, bucket] : metrics.per_tag) {
        std::cout << "  tag " << tag << ": " << bucket.correct << "/" << bucket.total << '\n';
    }
    std::cout << "routing: direct=" << metrics.routing.direct
              << " ocr_only=" << metrics.routing.ocr_only
              << " grounding_only=" << metrics.routing.grounding_only
              << " both=" << metrics.routing.both << '\n';
}

json metrics_to_json(const Metrics& metrics) {
    json tags = json::object();
    for (const auto& [tag, bucket] : metrics.per_tag) {
        tags[tag] = {{"correct", bucket.correct}, {"total", bucket.total}};
    }
    return json{{"correct", metrics.correct},
                {"total", metrics.total},
                {"accuracy", metrics.accuracy},
                {"per_tag", std::move(tags)},
                {"routing",
                 {{"direct", metrics.routing.direct},
                  {"ocr_only", metrics.routing.ocr_only},
                  {"grounding_only", metrics.routing.grounding_only},
                  {"both", metrics.routing.both}}}};
}

int cmd_eval(const std::string& traces_path, const std::string& dataset_path,
             const std::string& report_path, const std::string& reference_path) {
    const std::vector<Trace> traces = read_traces_jsonl(traces_path);
    const std::vector<BenchmarkItem> items = load_dataset(dataset_path);
    const Metrics metrics = score(traces, items);
    print_metrics(metrics);

    json report = metrics_to_json(metrics);
    if (!reference_path.empty()) {
        const auto predictions = load_predictions(reference_path);
        const auto [simple, hard] = split_simple_hard(items, predictions);
        std::map<std::string, bool> is_simple;
        for (const auto& id : simple) is_simple[id] = true;
        for (const auto& id : hard) is_simple[id] = false;
        std::map<std::string, const BenchmarkItem*> by_id;
        for (const auto& item : items) by_id[item.id] = &item;
        int simple_correct = 0, simple_total = 0, hard_correct = 0, hard_total = 0;
        for (const auto& trace : traces) {
            const BenchmarkItem& item = *by_id.at(trace.sample_id);
            const bool correct = answer_is_correct(trace.final_answer, item);
            if (is_simple.at(item.id)) {
                ++simple_total;
                simple_correct += correct ? 1 : 0;
            } else {
                ++hard_total;
                hard_correct += correct ? 1 : 0;
            }
        }
        std::cout << "simple: " << simple_correct << "/" << simple_total << "   hard: "
                  << hard_correct << "/" << hard_total << '\n';
        report["split"] = {{"simple", {{"correct", simple_correct}, {"total", simple_total}}},
                           {"hard", {{"correct", hard_correct}, {"total", hard_total}}}};
    }
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw Error("cannot write report to " + report_path);
        out << report.dump(2) << '\n';
    }
    return 0;
}

int cmd_curate(const GlobalFlags& flags, const std::string& candidates_path) {
    AppConfig config = effective_config(flags, false);
    const std::vector<CandidateImage> candidates = load_candidates(candidates_path);

    int negatives = 0, positives_simple = 0, positives_with_clues = 0;
    const auto within = [](int count, int quota) { return quota < 0 || count < quota; };

    ensure_output_dir(config.output_dir);
    const std::string records_path = config.output_dir + "/records.jsonl";
    std::ofstream out(records_path);
    if (!out) throw Error("cannot write " + records_path);

    for (const auto& candidate : candidates) {
        Query query;
        query.image = candidate.image;
        query.question = candidate.question;
        query.answer_format_hint = candidate.answer_format_hint;

        const bool text_track = !candidate.ocr_boxes.empty() && filter_text_rich(candidate);
        const bool object_track = !text_track && !candidate.detections.empty();

        if (text_track || object_track) {
            AgentCallRequest request;
            ClueSet clues;
            if (text_track) {
                request = AgentCallRequest::make({}, true);
                clues.text_agent_ran = true;
                for (const auto& box : candidate.ocr_boxes) {
                    clues.text_clues.push_back(
                        TextClue{box.content, normalize_box(box.box, candidate.image)});
                }
            } else {
                std::vector<std::string> classes;
                for (const auto& d : candidate.detections) {
                    if (std::find(classes.begin(), classes.end(), d.class_name) ==
                        classes.end()) {
                        classes.push_back(d.class_name);
                    }
                }
                request = AgentCallRequest::make(classes);
                GroundingResult grouped = group_detections(classes, candidate.detections,
                                                           0.30, 5);
                for (auto& group : grouped.groups) {
                    for (auto& [crop, box] : group.crops) {
                        crop = crop_spec(candidate.image, box);
                    }
                }
                clues.object_groups = std::move(grouped.groups);
                clues.undetected_classes = std::move(grouped.undetected_classes);
            }
            if (within(negatives, config.curation.max_negatives)) {
                out << training_record_to_json(build_negative(query, request)).dump() << '\n';
                ++negatives;
            }
            if (within(positives_with_clues, config.curation.max_positives_with_clues)) {
                out << training_record_to_json(
                           build_positive(query, clues, candidate.answer, config.composer))
                           .dump()
                    << '\n';
                ++positives_with_clues;
            }
        } else if (within(positives_simple, config.curation.max_positives_simple)) {
            out << training_record_to_json(
                       build_positive(query, ClueSet{}, candidate.answer, config.composer))
                       .dump()
                << '\n';
            ++positives_simple;
        }
    }

    const json manifest = {{"negatives", negatives},
                           {"positives_simple", positives_simple},
                           {"positives_with_clues", positives_with_clues},
                           {"total", negatives + positives_simple + positives_with_clues}};
    std::ofstream mout(config.output_dir + "/curation_manifest.json");
    mout << manifest.dump(2) << '\n';
    std::cout << "curated " << manifest["total"] << " records (" << negatives << " negative, "
              << positives_simple << " simple, " << positives_with_clues << " with clues) -> "
              << records_path << '\n';
    return 0;
}

int cmd_bench_build(const GlobalFlags& flags, const std::string& candidates_path,
                    const std::string& question_stub) {
    AppConfig config = effective_config(flags, false);
    const std::vector<CandidateImage> candidates = load_candidates(candidates_path);

    ensure_output_dir(config.output_dir);
    const std::string items_path = config.output_dir + "/bench_items.jsonl";
    std::ofstream out(items_path);
    if (!out) throw Error("cannot write " + items_path);

    int emitted = 0, skipped = 0;
    for (const auto& candidate : candidates) {
        if (candidate.detections.empty()) {
            ++skipped;
            continue;
        }
        try {
            for (const auto& draft : build_benchmark_item(candidate, question_stub)) {
                json line = {
                    {"id", draft.item.id},
                    {"image_id", draft.item.image_id},
                    {"image_path", draft.item.image_path},
                    {"width", draft.item.width},
                    {"height", draft.item.height},
                    {"question", draft.item.question},
                    {"options", json::array()},
                    {"answer", ""},
                    {"tags", draft.item.tags},
                    {"annotation",
                     {{"box",
                       {draft.annotation.box.x1(), draft.annotation.box.y1(),
                        draft.annotation.box.x2(), draft.annotation.box.y2()}},
                      {"color", draft.annotation.color},
                      {"stroke_px", draft.annotation.stroke_px}}},
                };
                out << line.dump() << '\n';
                ++emitted;
            }
        } catch (const NoSmallObjects&) {
            ++skipped;
        }
    }
    std::cout << "built " << emitted << " benchmark drafts (" << skipped
              << " images skipped) -> " << items_path << '\n';
    return 0;
}

int cmd_inspect(const std::string& traces_path, const std::string& sample_id) {
    const std::vector<Trace> traces = read_traces_jsonl(traces_path);
    for (const auto& trace : traces) {
        if (trace.sample_id != sample_id) continue;
        std::cout << "sample " << trace.sample_id << '\n';
        std::cout << "--- round 1 prompt ---\n"
                  << render_text(prompt_from_json(trace.round1_prompt)) << '\n';
        std::cout << "--- round 1 reply ---\n" << trace.round1_raw << '\n';
        for (const auto& call : trace.agent_calls) {
            std::cout << "--- agent " << call.kind << " ---\n"
                      << call.request.dump() << " -> "
                      << (call.error ? "error: " + *call.error : call.result_summary) << '\n';
        }
        if (trace.round2_prompt) {
            std::cout << "--- round 2 prompt ---\n"
                      << render_text(prompt_from_json(*trace.round2_prompt)) << '\n';
        }
        if (trace.round2_raw) {
            std::cout << "--- round 2 reply ---\n" << *trace.round2_raw << '\n';
        }
        std::cout << "--- final answer ---\n" << trace.final_answer << '\n';
        if (trace.error) std::cout << "error: " << *trace.error << '\n';
        return 0;
    }
    throw SchemaMismatch("no trace with id '" + sample_id + "' in " + traces_path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-round grounded question answering over a multimodal chat backend"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "configuration file (JSON)");
    app.add_option("--parallelism", flags.parallelism, "worker count for batch runs");
    app.add_flag("--no-positions", flags.no_positions,
                 "leave location clauses out of composed prompts");
    app.add_option("--budget", flags.budget, "context window budget in tokens");
    app.add_option("--output", flags.output_dir, "output directory");

    auto* run = app.add_subcommand("run", "run the two-round loop over a dataset");
    std::string run_dataset;
    run->add_option("--dataset", run_dataset, "dataset JSONL (overrides config)");

    auto* eval = app.add_subcommand("eval", "score traces against a dataset");
    std::string eval_traces, eval_dataset, eval_report, eval_reference;
    eval->add_option("--traces", eval_traces, "trace JSONL from a run")->required();
    eval->add_option("--dataset", eval_dataset, "dataset JSONL with gold answers")->required();
    eval->add_option("--report", eval_report, "write the metrics report here");
    eval->add_option("--split-reference", eval_reference,
                     "reference predictions JSONL for the simple/hard split");

    auto* curate = app.add_subcommand("curate", "build training records from candidates");
    std::string curate_candidates;
    curate->add_option("--candidates", curate_candidates, "candidate JSONL")->required();

    auto* bench = app.add_subcommand("bench-build", "draft small-object benchmark items");
    std::string bench_candidates;
    std::string bench_question = "What is the object in the red box?";
    bench->add_option("--candidates", bench_candidates, "candidate JSONL")->required();
    bench->add_option("--question", bench_question, "question stub for drafted items");

    auto* inspect = app.add_subcommand("inspect", "pretty-print one trace");
    std::string inspect_traces, inspect_id;
    inspect->add_option("--traces", inspect_traces, "trace JSONL")->required();
    inspect->add_option("id", inspect_id, "sample id to show")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(flags, run_dataset);
        if (eval->parsed()) return cmd_eval(eval_traces, eval_dataset, eval_report, eval_reference);
        if (curate->parsed()) return cmd_curate(flags, curate_candidates);
        if (bench->parsed()) return cmd_bench_build(flags, bench_candidates, bench_question);
        if (inspect->parsed()) return cmd_inspect(inspect_traces, inspect_id);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
