#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "groundloop/geometry.hpp"
#include "groundloop/types.hpp"

namespace groundloop {

// One raw detection as reported by a grounding agent, already normalized to
// image fractions. Wire payloads and fixtures carry pixel boxes; the gateway
// normalizes them before anything downstream sees them.
struct Detection {
    std::string class_name;
    NormalizedBox box;
    double score = 0.0;

    bool operator==(const Detection&) const = default;
};

struct GroundingResult {
    std::vector<ObjectClueGroup> groups;             // in requested-class order
    std::vector<std::string> undetected_classes;     // requested, nothing kept
    std::vector<std::string> warnings;               // e.g. dropped unknown echoes

    bool operator==(const GroundingResult&) const = default;
};

enum class AgentKind { Grounding, Ocr };

// A fixture file is a line-delimited set of canned agent responses keyed by
// image id. All records in one file must be of the same kind.
struct FixtureRecord {
    AgentKind kind = AgentKind::Grounding;
    struct RawDetection {
        std::string class_name;
        PixelRect box;
        double score = 0.0;
    };
    struct RawText {
        std::string content;
        PixelRect box;
    };
    std::vector<RawDetection> detections;
    std::vector<RawText> texts;
};

struct FixtureStore {
    AgentKind kind = AgentKind::Grounding;
    std::map<std::string, FixtureRecord> by_image;
};

struct AgentEndpoint {
    AgentKind kind = AgentKind::Grounding;
    std::string transport;          // fixture path or HTTP URL
    int timeout_ms = 10000;
    double score_threshold = 0.30;  // grounding only
    int per_class_cap = 5;          // grounding only
    std::shared_ptr<const FixtureStore> fixtures;  // set for fixture endpoints

    bool is_fixture() const { return fixtures != nullptr; }
};

/// Loads a fixture file into an endpoint whose responses are served from
/// memory. The endpoint kind is taken from the records; mixed-kind files are
/// rejected. Throws FixtureParseError with line diagnostics.
AgentEndpoint load_fixture_agent(const std::string& path);

/// Pure grouping step shared by every transport: drop detections below
/// `threshold`, keep at most `cap` per class (highest scores, ties broken by
/// leftmost x1), partition requested classes into groups and undetected.
/// Detections for classes never requested are dropped with a warning.
/// Degenerate boxes (area fraction below 1e-8) are skipped like low scores
/// because no crop can be cut from them.
GroundingResult group_detections(const std::vector<std::string>& requested,
                                 const std::vector<Detection>& detections,
                                 double threshold,
                                 int cap);

/// Calls the grounding agent for `classes` on `image` and returns grouped
/// clues with square crops attached. Throws AgentUnavailable when the
/// transport fails (fixture record missing, HTTP error, bad payload).
GroundingResult ground_objects(const ImageRef& image,
                               const std::vector<std::string>& classes,
                               const AgentEndpoint& endpoint);

/// Calls the OCR agent and returns text clues in the agent's reading order.
std::vector<TextClue> ocr_texts(const ImageRef& image, const AgentEndpoint& endpoint);

/// Describes the square crop around `box` used for object re-encoding: the
/// shorter side is padded symmetrically to match the longer one, then the
/// square is slid and clamped to stay inside the image. Deterministic for
/// identical inputs. Throws DegenerateBox for near-pointlike boxes.
ImageRef crop_spec(const ImageRef& image, const NormalizedBox& box);

} // namespace groundloop
