#include "groundloop/dataset.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "groundloop/errors.hpp"

namespace groundloop {

using nlohmann::json;

std::vector<BenchmarkItem> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaMismatch("cannot open dataset: " + path);
    std::vector<BenchmarkItem> items;
    std::set<std::string> seen_ids;
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
        BenchmarkItem item;
        if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
            throw SchemaMismatch(where + ": missing id");
        }
        item.id = j["id"].get<std::string>();
        if (!seen_ids.insert(item.id).second) {
            throw SchemaMismatch(where + ": duplicate id '" + item.id + "'");
        }
        if (!j.contains("image_path") || !j["image_path"].is_string()) {
            throw SchemaMismatch(where + ": missing image_path");
        }
        item.image_path = j["image_path"].get<std::string>();
        item.width = j.value("width", 0LL);
        item.height = j.value("height", 0LL);
        if (!j.contains("question") || !j["question"].is_string()) {
            throw SchemaMismatch(where + ": missing question");
        }
        item.question = j["question"].get<std::string>();
        if (j.contains("options")) {
            if (!j["options"].is_array()) throw SchemaMismatch(where + ": options must be an array");
            for (const auto& o : j["options"]) {
                if (!o.is_object() || !o.contains("letter") || !o.contains("text") ||
                    !o["letter"].is_string() || !o["text"].is_string()) {
                    throw SchemaMismatch(where + ": option needs letter and text");
                }
                QueryOption opt{o["letter"].get<std::string>(), o["text"].get<std::string>()};
                if (opt.letter.size() != 1 || opt.letter[0] < 'A' || opt.letter[0] > 'D') {
                    throw SchemaMismatch(where + ": option letter must be A-D");
                }
                item.options.push_back(std::move(opt));
            }
        }
        if (!j.contains("answer") || !j["answer"].is_string()) {
            throw SchemaMismatch(where + ": missing answer");
        }
        item.answer = j["answer"].get<std::string>();
        if (j.contains("tags")) {
            if (!j["tags"].is_array()) throw SchemaMismatch(where + ": tags must be an array");
            for (const auto& t : j["tags"]) {
                if (!t.is_string()) throw SchemaMismatch(where + ": tags must be strings");
                item.tags.push_back(t.get<std::string>());
            }
        }
        item.answer_format_hint = j.value("hint", "");
        item.image_id = j.value("image_id", item.id);
        items.push_back(std::move(item));
    }
    return items;
}

Query query_from_item(const BenchmarkItem& item) {
    if (item.width <= 0 || item.height <= 0) {
        throw SchemaMismatch("item '" + item.id +
                             "' lacks image dimensions; runs need width and height");
    }
    Query query;
    query.image = ImageRef{item.image_id, item.width, item.height, item.image_path, {}, {}};
    query.question = item.question;
    query.answer_format_hint = item.answer_format_hint;
    query.options = item.options;
    return query;
}

} // namespace groundloop
