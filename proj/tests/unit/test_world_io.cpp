#include <doctest.h>

#include <fstream>

#include "sevln/error.hpp"
#include "sevln/nav_env.hpp"
#include "support/fixtures.hpp"

using namespace sevln;

namespace {

const char* kGraph = R"({
  "nodes": [{"id": "a", "pos": [0, 0, 0]}, {"id": "b", "pos": [3, 4, 0]}, {"id": "c", "pos": [3, 0, 0]}],
  "edges": [["a", "b"], ["b", "c", 4.0]]
})";

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("graph parsing") {
    const NavGraph g = parse_graph(kGraph, "g.json");
    CHECK(g.node_count() == 3);
    CHECK(g.edge_count() == 2);
    CHECK(g.edge_weight("a", "b") == doctest::Approx(5.0));
    CHECK(g.position("b") == Vec3{3, 4, 0});
}

TEST_CASE("graph errors carry file and record") {
    CHECK_THROWS_AS(parse_graph("{not json", "g.json"), ParseError);
    CHECK(message_of([] { parse_graph("{not json", "g.json"); }).rfind("g.json:", 0) == 0);
    CHECK_THROWS_AS(parse_graph(R"({"nodes": []})", "g.json"), ParseError);
    CHECK(message_of([] {
              parse_graph(R"({"nodes": [{"id": "a", "pos": [0, 0]}], "edges": []})", "g.json");
          }).find("nodes[0]") != std::string::npos);
    const std::string unknown = message_of([] {
        parse_graph(R"({"nodes": [{"id": "a", "pos": [0, 0, 0]}], "edges": [["a", "z9"]]})", "g.json");
    });
    CHECK(unknown.find("edges[0]") != std::string::npos);
    CHECK(unknown.find("z9") != std::string::npos);
    CHECK_THROWS_AS(parse_graph(R"({"nodes": [{"id": "a", "pos": [0, 0, 0]}, {"id": "b", "pos": [1, 0, 0]}],
                                    "edges": [["a", "b", 2.0]]})",
                                "g.json"),
                    ValidationError);
}

TEST_CASE("episode parsing and validation") {
    const NavGraph g = parse_graph(kGraph, "g.json");
    const auto eps = parse_episodes(R"([{"id": "e1", "instruction": "go", "start": "a", "goal": "c",
        "gt_path": ["a", "b", "c"], "captions": {"a->b": "a door", "b->c": "a lamp"}}])",
                                    g, "e.json");
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].gt_path == std::vector<NodeId>{"a", "b", "c"});
    CHECK(eps[0].caption("a", "b") == "a door");
    CHECK_FALSE(eps[0].caption("b", "a").has_value());

    auto bad = [&](const std::string& text) {
        return message_of([&] { parse_episodes(text, g, "e.json"); });
    };
    const std::string skip = bad(R"([{"id": "e1", "instruction": "go", "start": "a", "goal": "c",
        "gt_path": ["a", "c"]}])");
    CHECK(skip.find("e.json: episode[0]") != std::string::npos);
    CHECK(skip.find("not a graph edge") != std::string::npos);

    const std::string unknown = bad(R"([{"id": "e1", "instruction": "go", "start": "a", "goal": "z9",
        "gt_path": ["a", "z9"]}])");
    CHECK(unknown.find("'z9'") != std::string::npos);

    CHECK(bad(R"([{"id": "e1", "instruction": "go", "start": "a", "goal": "c",
        "gt_path": ["b", "c"]}])").find("begin at start") != std::string::npos);
    CHECK(bad(R"([{"id": "e1", "instruction": "go", "start": "a", "goal": "c",
        "gt_path": ["a", "b"]}])").find("end at goal") != std::string::npos);
    CHECK(bad(R"([{"id": "e1", "instruction": "go", "start": "a", "goal": "b",
        "gt_path": ["a", "b"], "captions": {"a->c": "x"}}])").find("caption key") != std::string::npos);
    CHECK(bad(R"([{"id": "e1", "instruction": "go", "start": "a", "goal": "b", "gt_path": ["a", "b"]},
                  {"id": "e1", "instruction": "go", "start": "a", "goal": "b", "gt_path": ["a", "b"]}])")
              .find("duplicate") != std::string::npos);
    CHECK(bad(R"([{"id": "e1", "start": "a", "goal": "b", "gt_path": ["a", "b"]}])")
              .find("instruction") != std::string::npos);
}

TEST_CASE("unreachable goal is rejected") {
    const NavGraph g = parse_graph(R"({"nodes": [{"id": "a", "pos": [0, 0, 0]}, {"id": "b", "pos": [1, 0, 0]},
        {"id": "c", "pos": [9, 0, 0]}], "edges": [["a", "b"]]})");
    Episode ep;
    ep.id = "x";
    ep.start = "a";
    ep.goal = "c";
    ep.gt_path = {"a", "c"};
    CHECK_THROWS_AS(validate_episode(g, ep, "x"), ValidationError);
}

TEST_CASE("bundled worlds load") {
    const World loft = fixtures::loft5();
    CHECK(loft.graph.node_count() == 5);
    CHECK(loft.episodes.size() == 4);
    const World paired = fixtures::paired10();
    CHECK(paired.episodes.size() == 10);
    for (const auto& ep : paired.episodes) {
        CHECK(shortest_path_length(paired.graph, ep.start, ep.goal) > kSuccessRadius);
    }
}

TEST_CASE("missing files raise io errors") {
    CHECK_THROWS_AS(load_world("/nonexistent/graph.json", "/nonexistent/eps.json"), IoError);
}
