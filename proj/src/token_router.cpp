#include "groundloop/token_router.hpp"

#include <cmath>

namespace groundloop {

namespace {

constexpr int kMlpTokens = 256;
constexpr int kResamplerTokens = 32;
constexpr int kObjectCapForMlp = 4;  // above this everything is compressed

} // namespace

RoutingPlan route_projection(int object_count) {
    RoutingPlan plan;
    plan.object_count = object_count;
    if (object_count == 0) {
        plan.global_projection = Projection::Mlp;
        plan.object_projection = Projection::None;
        plan.tokens_global = kMlpTokens;
        plan.tokens_per_object = 0;
    } else if (object_count <= kObjectCapForMlp) {
        plan.global_projection = Projection::Resampler;
        plan.object_projection = Projection::Mlp;
        plan.tokens_global = kResamplerTokens;
        plan.tokens_per_object = kMlpTokens;
    } else {
        plan.global_projection = Projection::Resampler;
        plan.object_projection = Projection::Resampler;
        plan.tokens_global = kResamplerTokens;
        plan.tokens_per_object = kResamplerTokens;
    }
    return plan;
}

long long estimate_tokens(const PromptDocument& doc, const RoutingPlan& plan,
                          const Budget& budget) {
    const auto slots = static_cast<int>(doc.object_slot_count());
    if (slots != plan.object_count) {
        throw PlanMismatch("plan covers " + std::to_string(plan.object_count) +
                           " objects but the document carries " + std::to_string(slots));
    }
    const std::string text = render_text(doc);
    const long long text_tokens = static_cast<long long>(
        std::ceil(static_cast<double>(text.size()) / budget.chars_per_token));
    return plan.total_visual_tokens() + text_tokens;
}

TruncationResult truncate_text_clues(
    const std::vector<TextClue>& clues,
    const std::function<PromptDocument(const std::vector<TextClue>&)>& build,
    const Budget& budget) {
    // Estimates grow with each kept clue except possibly at 0 -> 1, where the
    // fixed no-text fallback can outweigh a short clue. Walking down from the
    // full list and taking the first fitting prefix handles both.
    const auto fits = [&](const std::vector<TextClue>& subset) {
        PromptDocument doc = build(subset);
        RoutingPlan plan = route_projection(static_cast<int>(doc.object_slot_count()));
        return estimate_tokens(doc, plan, budget) <= budget.context_limit;
    };

    std::vector<TextClue> prefix = clues;
    while (!prefix.empty()) {
        if (fits(prefix)) {
            return TruncationResult{prefix,
                                    static_cast<int>(clues.size() - prefix.size())};
        }
        prefix.pop_back();
    }
    // Even the clue-free document may overflow; that is the caller's problem
    // to notice, every text clue is gone at this point.
    return TruncationResult{{}, static_cast<int>(clues.size())};
}

} // namespace groundloop
