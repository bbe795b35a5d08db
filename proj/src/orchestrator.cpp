#include "groundloop/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "groundloop/trace_io.hpp"

namespace groundloop {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string trim_copy(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Dispatches the agents named by the round-1 request. Failures either fall
// back to "agent ran, found nothing" clues or fail the sample, per config.
ClueSet gather_clues(const Query& query, const AgentCallRequest& request,
                     const Agents& agents, const RunConfig& config, Trace& trace) {
    ClueSet clues;
    if (!request.object_classes.empty()) {
        AgentCallRecord record;
        record.kind = "grounding";
        record.request = {{"classes", request.object_classes}};
        const auto start = Clock::now();
        try {
            if (!agents.grounding) {
                throw AgentUnavailable("no grounding agent configured");
            }
            GroundingResult result =
                ground_objects(query.image, request.object_classes, *agents.grounding);
            clues.object_groups = std::move(result.groups);
            clues.undetected_classes = std::move(result.undetected_classes);
            for (auto& w : result.warnings) trace.warnings.push_back(std::move(w));
            record.result_summary = std::to_string(clues.total_objects()) + " crops across " +
                                    std::to_string(clues.object_groups.size()) + " classes, " +
                                    std::to_string(clues.undetected_classes.size()) +
                                    " undetected";
        } catch (const Error& e) {
            record.error = e.what();
            if (config.on_agent_failure == OnAgentFailure::FailSample) {
                record.duration_ms = ms_since(start);
                trace.agent_calls.push_back(std::move(record));
                throw;
            }
            // Absence lines already express "nothing found"; reuse them.
            clues.undetected_classes = request.object_classes;
            record.result_summary = "failed; classes treated as undetected";
        }
        record.duration_ms = ms_since(start);
        trace.agent_calls.push_back(std::move(record));
    }
    if (request.wants_text) {
        AgentCallRecord record;
        record.kind = "ocr";
        record.request = nlohmann::json::object();
        const auto start = Clock::now();
        try {
            if (!agents.ocr) throw AgentUnavailable("no ocr agent configured");
            clues.text_clues = ocr_texts(query.image, *agents.ocr);
            clues.text_agent_ran = true;
            record.result_summary = std::to_string(clues.text_clues.size()) + " text clues";
        } catch (const Error& e) {
            record.error = e.what();
            if (config.on_agent_failure == OnAgentFailure::FailSample) {
                record.duration_ms = ms_since(start);
                trace.agent_calls.push_back(std::move(record));
                throw;
            }
            clues.text_agent_ran = true;  // ran and found nothing -> fallback sentence
            record.result_summary = "failed; composing with the no-text fallback";
        }
        record.duration_ms = ms_since(start);
        trace.agent_calls.push_back(std::move(record));
    }
    return clues;
}

} // namespace

Trace run_sample(const Sample& sample, ChatBackend& backend,
                 const BackendEndpoint& endpoint, const Agents& agents,
                 const RunConfig& config) {
    Trace trace;
    trace.sample_id = sample.id;
    const auto t0 = Clock::now();
    try {
        const PromptDocument round1 = compose_round_one(sample.query);
        trace.round1_prompt = prompt_to_json(round1);

        const auto r1 = Clock::now();
        trace.round1_raw = call_backend(backend, endpoint, round1);
        trace.timings.round1_ms = ms_since(r1);

        trace.outcome = classify_round_one(trace.round1_raw);
        if (trace.outcome->is_direct()) {
            trace.final_answer = trace.outcome->answer();
            trace.timings.total_ms = ms_since(t0);
            return trace;
        }

        ClueSet clues =
            gather_clues(sample.query, trace.outcome->request(), agents, config, trace);

        if (clues.text_agent_ran && !clues.text_clues.empty()) {
            TruncationResult truncated = truncate_text_clues(
                clues.text_clues,
                [&](const std::vector<TextClue>& subset) {
                    ClueSet candidate = clues;
                    candidate.text_clues = subset;
                    return compose_round_two(sample.query, candidate, config.composer);
                },
                config.budget);
            trace.dropped_text_clues = truncated.dropped;
            clues.text_clues = std::move(truncated.kept);
        }
        trace.clue_set = clues;

        const PromptDocument round2 =
            compose_round_two(sample.query, clues, config.composer);
        trace.routing_plan =
            route_projection(static_cast<int>(round2.object_slot_count()));
        trace.round2_prompt = prompt_to_json(round2);

        const auto r2 = Clock::now();
        // Round 2 is a fresh single-turn exchange; no chat history rides along.
        trace.round2_raw = call_backend(backend, endpoint, round2);
        trace.timings.round2_ms = ms_since(r2);

        trace.final_answer = trim_copy(*trace.round2_raw);
        try {
            trace.repeated_refusal = classify_round_one(*trace.round2_raw).is_call();
        } catch (const EmptyItemList&) {
            trace.repeated_refusal = true;  // refusal prefix with a broken item list
        }
    } catch (const Error& e) {
        trace.error = e.what();
        trace.final_answer.clear();
    }
    trace.timings.total_ms = ms_since(t0);
    return trace;
}

std::vector<Trace> run_batch(const std::vector<Sample>& samples, ChatBackend& backend,
                             const BackendEndpoint& endpoint, const Agents& agents,
                             const RunConfig& config) {
    std::vector<Trace> traces(samples.size());
    const int workers =
        std::max(1, std::min<int>(config.parallelism, static_cast<int>(samples.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            traces[i] = run_sample(samples[i], backend, endpoint, agents, config);
        }
        return traces;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= samples.size()) return;
                traces[i] = run_sample(samples[i], backend, endpoint, agents, config);
            }
        });
    }
    for (auto& t : pool) t.join();
    return traces;
}

} // namespace groundloop
