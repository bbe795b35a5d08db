#pragma once

#include <string>
#include <vector>

#include "groundloop/types.hpp"

namespace groundloop {

// One evaluation item. Open-form items leave `options` empty. Image width and
// height are optional in the schema but required before a batch run, because
// agent boxes cannot be normalized without them.
struct BenchmarkItem {
    std::string id;
    std::string image_id;  // fixture/script key; defaults to the item id
    std::string image_path;
    long long width = 0;
    long long height = 0;
    std::string question;
    std::vector<QueryOption> options;
    std::string answer;  // gold
    std::vector<std::string> tags;
    std::string answer_format_hint;

    bool multiple_choice() const { return !options.empty(); }
};

/// Loads line-delimited items, validating ids (unique, non-empty), option
/// letters, and field types. Throws SchemaMismatch with line diagnostics.
std::vector<BenchmarkItem> load_dataset(const std::string& path);

/// Query for running an item through the loop. Requires image dimensions.
Query query_from_item(const BenchmarkItem& item);

} // namespace groundloop
