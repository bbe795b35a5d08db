#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "groundloop/agent_gateway.hpp"

using namespace groundloop;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

ImageRef image(const std::string& id, long long w, long long h) {
    ImageRef ref;
    ref.id = id;
    ref.width = w;
    ref.height = h;
    return ref;
}

NormalizedBox box(double x1, double y1, double x2, double y2) {
    return NormalizedBox(x1, y1, x2, y2);
}

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& name, const std::string& content) {
        path = fs::temp_directory_path() / ("groundloop_test_" + name);
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::error_code ec; fs::remove(path, ec); }
};

} // namespace

TEST_CASE("group_detections filters by score and partitions requested classes") {
    std::vector<Detection> dets = {
        {"button", box(0.25, 0.63, 0.26, 0.64), 0.9},
        {"button", box(0.47, 0.59, 0.48, 0.60), 0.8},
        {"paper clip", box(0.65, 0.70, 0.66, 0.71), 0.7},
        {"lamp", box(0.1, 0.1, 0.3, 0.3), 0.1},  // below threshold
    };
    auto result = group_detections({"button", "paper clip", "lamp"}, dets, 0.30, 5);
    REQUIRE(result.groups.size() == 2);
    CHECK(result.groups[0].class_name == "button");
    CHECK(result.groups[0].count() == 2);
    CHECK(result.groups[1].class_name == "paper clip");
    CHECK(result.undetected_classes == std::vector<std::string>{"lamp"});
    CHECK(result.warnings.empty());
}

TEST_CASE("groups follow requested order, not detection order") {
    std::vector<Detection> dets = {
        {"b", box(0.5, 0.5, 0.6, 0.6), 0.9},
        {"a", box(0.1, 0.1, 0.2, 0.2), 0.9},
    };
    auto result = group_detections({"a", "b"}, dets, 0.30, 5);
    REQUIRE(result.groups.size() == 2);
    CHECK(result.groups[0].class_name == "a");
    CHECK(result.groups[1].class_name == "b");
}

TEST_CASE("per-class cap keeps the five best scores") {
    std::vector<Detection> dets;
    const double scores[] = {0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.65};
    for (int i = 0; i < 7; ++i) {
        double x = 0.1 * (i + 1);
        dets.push_back({"sheep", box(x, 0.4, x + 0.05, 0.5), scores[i]});
    }
    auto result = group_detections({"sheep"}, dets, 0.30, 5);
    REQUIRE(result.groups.size() == 1);
    REQUIRE(result.groups[0].count() == 5);
    // Highest five survive, in score order.
    for (int i = 0; i < 5; ++i) {
        CHECK(result.groups[0].crops[i].second.x1() == doctest::Approx(0.1 * (i + 1)));
    }
    CHECK(result.undetected_classes.empty());
}

TEST_CASE("equal scores break ties toward the leftmost box") {
    std::vector<Detection> dets = {
        {"cat", box(0.6, 0.1, 0.7, 0.2), 0.8},
        {"cat", box(0.2, 0.1, 0.3, 0.2), 0.8},
    };
    auto result = group_detections({"cat"}, dets, 0.30, 5);
    REQUIRE(result.groups.size() == 1);
    CHECK(result.groups[0].crops[0].second.x1() == doctest::Approx(0.2));
    CHECK(result.groups[0].crops[1].second.x1() == doctest::Approx(0.6));
}

TEST_CASE("degenerate boxes are skipped even with top scores") {
    std::vector<Detection> dets = {
        {"dot", box(0.5, 0.5, 0.5, 0.5), 0.99},
    };
    auto result = group_detections({"dot"}, dets, 0.30, 5);
    CHECK(result.groups.empty());
    CHECK(result.undetected_classes == std::vector<std::string>{"dot"});
}

TEST_CASE("detections for classes never requested are dropped with a warning") {
    std::vector<Detection> dets = {
        {"dog", box(0.1, 0.1, 0.4, 0.4), 0.9},
        {"cat", box(0.5, 0.5, 0.8, 0.8), 0.9},
    };
    auto result = group_detections({"cat"}, dets, 0.30, 5);
    REQUIRE(result.groups.size() == 1);
    CHECK(result.groups[0].class_name == "cat");
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("dog") != std::string::npos);
}

TEST_CASE("crop_spec pads the shorter axis to a square") {
    auto crop = crop_spec(image("img", 1000, 1000), box(0.4, 0.4, 0.6, 0.5));
    CHECK(crop.id == "img#crop(400,350,600,550)");
    CHECK(crop.width == 200);
    CHECK(crop.height == 200);
    REQUIRE(crop.crop_of.has_value());
    CHECK(*crop.crop_of == "img");
    REQUIRE(crop.crop_box.has_value());
    CHECK(crop.crop_box->x1 == 400);
    CHECK(crop.crop_box->y1 == 350);
    CHECK(crop.crop_box->x2 == 600);
    CHECK(crop.crop_box->y2 == 550);
}

TEST_CASE("crop_spec slides the square inside the image at borders") {
    // Box touching the top edge: the pad cannot go above y=0, so it all goes down.
    auto crop = crop_spec(image("img", 1000, 1000), box(0.1, 0.0, 0.3, 0.1));
    CHECK(crop.crop_box->x1 == 100);
    CHECK(crop.crop_box->y1 == 0);
    CHECK(crop.crop_box->x2 == 300);
    CHECK(crop.crop_box->y2 == 200);
}

TEST_CASE("crop_spec clips when the square exceeds the image") {
    // 1000x150 strip: a 500px-wide box cannot be squared, the crop covers the
    // full height instead.
    auto crop = crop_spec(image("strip", 1000, 150), box(0.0, 0.0, 0.5, 100.0 / 150.0));
    CHECK(crop.crop_box->y1 == 0);
    CHECK(crop.crop_box->y2 == 150);
    CHECK(crop.crop_box->x1 == 0);
    CHECK(crop.crop_box->x2 == 500);
    CHECK(crop.height == 150);
}

TEST_CASE("crop_spec rejects near-pointlike boxes") {
    CHECK_THROWS_AS(crop_spec(image("img", 1000, 1000), box(0.5, 0.5, 0.5, 0.9)),
                    DegenerateBox);
}

TEST_CASE("crop_spec is deterministic") {
    auto a = crop_spec(image("img", 3264, 2448), box(0.891, 0.184, 0.999, 0.328));
    auto b = crop_spec(image("img", 3264, 2448), box(0.891, 0.184, 0.999, 0.328));
    CHECK(a == b);
}

TEST_CASE("fixture files load with their kind and records") {
    TempFile f("ground_ok.jsonl",
               R"({"image_id": "a", "kind": "grounding", "detections": [{"class": "cat", "box": [10, 10, 200, 200], "score": 0.9}]})"
               "\n"
               R"({"image_id": "b", "kind": "grounding", "detections": []})"
               "\n");
    auto ep = load_fixture_agent(f.path.string());
    CHECK(ep.kind == AgentKind::Grounding);
    REQUIRE(ep.is_fixture());
    CHECK(ep.fixtures->by_image.size() == 2);
    CHECK(ep.fixtures->by_image.at("a").detections.size() == 1);
}

TEST_CASE("fixture parse errors carry file and line") {
    SUBCASE("duplicate image id") {
        TempFile f("ground_dup.jsonl",
                   R"({"image_id": "a", "kind": "grounding", "detections": []})"
                   "\n"
                   R"({"image_id": "a", "kind": "grounding", "detections": []})"
                   "\n");
        try {
            load_fixture_agent(f.path.string());
            FAIL("expected FixtureParseError");
        } catch (const FixtureParseError& e) {
            CHECK(std::string(e.what()).find(":2") != std::string::npos);
        }
    }
    SUBCASE("mixed kinds in one file") {
        TempFile f("ground_mixed.jsonl",
                   R"({"image_id": "a", "kind": "grounding", "detections": []})"
                   "\n"
                   R"({"image_id": "b", "kind": "ocr", "texts": []})"
                   "\n");
        CHECK_THROWS_AS(load_fixture_agent(f.path.string()), FixtureParseError);
    }
    SUBCASE("score out of range") {
        TempFile f("ground_score.jsonl",
                   R"({"image_id": "a", "kind": "grounding", "detections": [{"class": "cat", "box": [0, 0, 10, 10], "score": 1.5}]})"
                   "\n");
        try {
            load_fixture_agent(f.path.string());
            FAIL("expected FixtureParseError");
        } catch (const FixtureParseError& e) {
            CHECK(std::string(e.what()).find(":1") != std::string::npos);
        }
    }
    SUBCASE("invalid JSON line") {
        TempFile f("ground_bad.jsonl", "{not json}\n");
        CHECK_THROWS_AS(load_fixture_agent(f.path.string()), FixtureParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_fixture_agent("/nonexistent/fixture.jsonl"),
                        FixtureParseError);
    }
}

TEST_CASE("ground_objects over a fixture normalizes, groups and attaches crops") {
    TempFile f("ground_fig.jsonl",
               R"({"image_id": "buttons", "kind": "grounding", "detections": [)"
               R"({"class": "button", "box": [250, 630, 260, 640], "score": 0.9}, )"
               R"({"class": "button", "box": [470, 590, 480, 600], "score": 0.85}, )"
               R"({"class": "button", "box": [520, 620, 530, 630], "score": 0.8}, )"
               R"({"class": "paper clip", "box": [650, 700, 660, 710], "score": 0.7}, )"
               R"({"class": "scissors", "box": [10, 10, 90, 90], "score": 0.95}]})"
               "\n");
    auto ep = load_fixture_agent(f.path.string());
    auto img = image("buttons", 1000, 1000);

    auto result = ground_objects(img, {"button", "paper clip", "lamp"}, ep);
    REQUIRE(result.groups.size() == 2);
    CHECK(result.groups[0].class_name == "button");
    REQUIRE(result.groups[0].count() == 3);
    CHECK(result.groups[0].crops[0].second == box(0.25, 0.63, 0.26, 0.64));
    CHECK(result.groups[1].crops[0].second == box(0.65, 0.70, 0.66, 0.71));
    CHECK(result.undetected_classes == std::vector<std::string>{"lamp"});
    // The recorded agent answers only what was asked; the scissors row is
    // simply not part of the reply, so no warning either.
    CHECK(result.warnings.empty());

    for (const auto& g : result.groups) {
        for (const auto& [crop, b] : g.crops) {
            REQUIRE(crop.crop_of.has_value());
            CHECK(*crop.crop_of == "buttons");
            CHECK(crop.width == crop.height);  // everything here is far from edges
        }
    }
}

TEST_CASE("ground_objects without a fixture record is an agent failure") {
    TempFile f("ground_empty.jsonl",
               R"({"image_id": "other", "kind": "grounding", "detections": []})"
               "\n");
    auto ep = load_fixture_agent(f.path.string());
    CHECK_THROWS_AS(ground_objects(image("missing", 100, 100), {"cat"}, ep),
                    AgentUnavailable);
}

TEST_CASE("ocr_texts over a fixture preserves reading order") {
    TempFile f("ocr_letter.jsonl",
               R"({"image_id": "letter", "kind": "ocr", "texts": [)"
               R"({"content": "May311918", "box": [660, 43, 931, 77]}, )"
               R"({"content": "3379Bark Jane Rd", "box": [545, 103, 921, 131]}]})"
               "\n");
    auto ep = load_fixture_agent(f.path.string());
    CHECK(ep.kind == AgentKind::Ocr);

    auto clues = ocr_texts(image("letter", 1000, 1000), ep);
    REQUIRE(clues.size() == 2);
    CHECK(clues[0].content == "May311918");
    CHECK(clues[0].location == box(0.66, 0.043, 0.931, 0.077));
    CHECK(clues[1].content == "3379Bark Jane Rd");
    CHECK(clues[1].location == box(0.545, 0.103, 0.921, 0.131));
}

TEST_CASE("HTTP transports round-trip requests and surface echo warnings") {
    httplib::Server server;
    json seen_ground_request;
    server.Post("/ground", [&](const httplib::Request& req, httplib::Response& res) {
        seen_ground_request = json::parse(req.body);
        json reply = {{"detections",
                       json::array({{{"class", "cat"}, {"box", {100, 100, 300, 300}}, {"score", 0.9}},
                                    {{"class", "weasel"}, {"box", {0, 0, 50, 50}}, {"score", 0.8}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/ocr", [&](const httplib::Request& req, httplib::Response& res) {
        json reply = {{"texts", json::array({{{"content", "STOP"}, {"box", {10, 10, 90, 40}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("boom", "text/plain");
    });
    server.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json", "text/plain");
    });

    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto img = image("street", 1000, 1000);
    std::string base = "http://127.0.0.1:" + std::to_string(port);

    {
        AgentEndpoint ep;
        ep.kind = AgentKind::Grounding;
        ep.transport = base + "/ground";
        auto result = ground_objects(img, {"cat"}, ep);
        REQUIRE(result.groups.size() == 1);
        CHECK(result.groups[0].crops[0].second == box(0.1, 0.1, 0.3, 0.3));
        // A live agent may echo classes nobody asked for; those are dropped loudly.
        REQUIRE(result.warnings.size() == 1);
        CHECK(result.warnings[0].find("weasel") != std::string::npos);

        CHECK(seen_ground_request["image"]["id"] == "street");
        CHECK(seen_ground_request["image"]["width"] == 1000);
        CHECK(seen_ground_request["classes"] == json::array({"cat"}));
        CHECK(seen_ground_request["threshold"] == doctest::Approx(0.30));
    }

    {
        AgentEndpoint ep;
        ep.kind = AgentKind::Ocr;
        ep.transport = base + "/ocr";
        auto clues = ocr_texts(img, ep);
        REQUIRE(clues.size() == 1);
        CHECK(clues[0].content == "STOP");
    }

    {
        AgentEndpoint ep;
        ep.kind = AgentKind::Grounding;
        ep.transport = base + "/broken";
        CHECK_THROWS_AS(ground_objects(img, {"cat"}, ep), AgentUnavailable);
    }

    {
        AgentEndpoint ep;
        ep.kind = AgentKind::Grounding;
        ep.transport = base + "/garbage";
        CHECK_THROWS_AS(ground_objects(img, {"cat"}, ep), AgentUnavailable);
    }

    server.stop();
    server_thread.join();
}
