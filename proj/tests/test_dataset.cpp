#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "groundloop/dataset.hpp"
#include "groundloop/errors.hpp"

using namespace groundloop;

namespace {

namespace fs = std::filesystem;

struct TempDataset {
    fs::path path;
    explicit TempDataset(const std::string& content) {
        path = fs::temp_directory_path() / "groundloop_dataset.jsonl";
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempDataset() { std::error_code ec; fs::remove(path, ec); }
};

void expect_schema_error(const std::string& content, const std::string& needle) {
    TempDataset data(content);
    try {
        load_dataset(data.path.string());
        FAIL("expected SchemaMismatch mentioning " << needle);
    } catch (const SchemaMismatch& e) {
        CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
}

} // namespace

TEST_CASE("a well-formed dataset loads every field") {
    TempDataset data(
        R"({"id": "q1", "image_path": "a.png", "width": 1000, "height": 800, "question": "Color?", "options": [{"letter": "A", "text": "Blue"}, {"letter": "B", "text": "Red"}], "answer": "B", "tags": ["color"], "hint": "Answer with the option's letter from the given choices directly."})"
        "\n"
        "\n"
        R"({"id": "q2", "image_id": "shared-photo", "image_path": "b.png", "question": "Say what?", "answer": "stop"})"
        "\n");
    auto items = load_dataset(data.path.string());
    REQUIRE(items.size() == 2);

    const auto& q1 = items[0];
    CHECK(q1.id == "q1");
    CHECK(q1.image_id == "q1");  // defaults to the item id
    CHECK(q1.image_path == "a.png");
    CHECK(q1.width == 1000);
    CHECK(q1.height == 800);
    REQUIRE(q1.options.size() == 2);
    CHECK(q1.options[1].letter == "B");
    CHECK(q1.multiple_choice());
    CHECK(q1.answer == "B");
    CHECK(q1.tags == std::vector<std::string>{"color"});
    CHECK_FALSE(q1.answer_format_hint.empty());

    const auto& q2 = items[1];
    CHECK(q2.image_id == "shared-photo");
    CHECK_FALSE(q2.multiple_choice());
    CHECK(q2.width == 0);  // legal in the file, rejected only at run time
}

TEST_CASE("schema violations carry line diagnostics") {
    expect_schema_error(R"({"image_path": "a.png", "question": "?", "answer": "x"})" "\n",
                        ":1");
    expect_schema_error(
        R"({"id": "a", "image_path": "p", "question": "?", "answer": "x"})" "\n"
        R"({"id": "a", "image_path": "p", "question": "?", "answer": "x"})" "\n",
        "duplicate id");
    expect_schema_error(R"({"id": "a", "question": "?", "answer": "x"})" "\n",
                        "image_path");
    expect_schema_error(R"({"id": "a", "image_path": "p", "answer": "x"})" "\n",
                        "question");
    expect_schema_error(R"({"id": "a", "image_path": "p", "question": "?"})" "\n",
                        "answer");
    expect_schema_error(
        R"({"id": "a", "image_path": "p", "question": "?", "answer": "x", "options": [{"letter": "E", "text": "no"}]})"
        "\n",
        "A-D");
    expect_schema_error(
        R"({"id": "a", "image_path": "p", "question": "?", "answer": "x", "options": [{"letter": "AB", "text": "no"}]})"
        "\n",
        "A-D");
    expect_schema_error("not json\n", "invalid JSON");
}

TEST_CASE("query_from_item needs dimensions and copies the rest") {
    BenchmarkItem item;
    item.id = "q";
    item.image_id = "photo-7";
    item.image_path = "photo.png";
    item.width = 640;
    item.height = 480;
    item.question = "What is shown?";
    item.options = {{"A", "A dog"}, {"B", "A cat"}};
    item.answer = "B";
    item.answer_format_hint = "Answer with the option's letter from the given choices directly.";

    auto query = query_from_item(item);
    CHECK(query.image.id == "photo-7");
    CHECK(query.image.width == 640);
    CHECK(query.image.height == 480);
    CHECK(query.image.source == "photo.png");
    CHECK(query.question == item.question);
    CHECK(query.options.size() == 2);
    CHECK(query.answer_format_hint == item.answer_format_hint);

    item.width = 0;
    CHECK_THROWS_AS(query_from_item(item), SchemaMismatch);
}

TEST_CASE("missing dataset file") {
    CHECK_THROWS_AS(load_dataset("/no/such/dataset.jsonl"), SchemaMismatch);
}
