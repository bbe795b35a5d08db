#pragma once

#include <functional>
#include <vector>

#include "groundloop/prompt_composer.hpp"
#include "groundloop/types.hpp"

namespace groundloop {

enum class Projection { None, Mlp, Resampler };

// Visual-token plan for one prompt. MLP projection keeps 256 tokens per
// image, the resampler compresses to 32.
struct RoutingPlan {
    Projection global_projection = Projection::Mlp;
    Projection object_projection = Projection::None;
    int tokens_global = 0;
    int tokens_per_object = 0;
    int object_count = 0;

    int total_visual_tokens() const {
        return tokens_global + tokens_per_object * object_count;
    }

    bool operator==(const RoutingPlan&) const = default;
};

struct Budget {
    int context_limit = 2048;
    double chars_per_token = 4.0;  // crude text estimator ratio
};

/// Chooses projections from the number of object crops:
///   0 objects:   global image through the MLP (256).
///   1-4 objects: each object through the MLP (256 each), global compressed
///                to 32 through the resampler.
///   5+ objects:  everything through the resampler (32 each).
RoutingPlan route_projection(int object_count);

/// Visual tokens per the plan plus ceil(text chars / ratio) over the rendered
/// document text. Throws PlanMismatch when the plan's object count does not
/// match the document's crop slots.
long long estimate_tokens(const PromptDocument& doc, const RoutingPlan& plan,
                          const Budget& budget);

struct TruncationResult {
    std::vector<TextClue> kept;
    int dropped = 0;
};

/// Keeps the longest prefix of `clues` (OCR reading order) whose composed
/// document still fits the budget. Only text clues are ever dropped.
/// `build` recomposes the document for a candidate prefix.
TruncationResult truncate_text_clues(
    const std::vector<TextClue>& clues,
    const std::function<PromptDocument(const std::vector<TextClue>&)>& build,
    const Budget& budget);

} // namespace groundloop
