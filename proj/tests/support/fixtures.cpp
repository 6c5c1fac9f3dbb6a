#include "support/fixtures.hpp"

#include <atomic>
#include <cmath>
#include <unistd.h>

#include "support/oracles.hpp"

namespace fixtures {

namespace fs = std::filesystem;

fs::path source_path(const std::string& rel) { return fs::path(SEVLN_SOURCE_DIR) / rel; }
fs::path data_path(const std::string& rel) { return source_path("data") / rel; }

sevln::World loft5() {
    return sevln::load_world(data_path("worlds/loft5/graph.json"),
                             data_path("worlds/loft5/episodes.json"));
}

sevln::World paired10() {
    return sevln::load_world(data_path("worlds/paired10/graph.json"),
                             data_path("worlds/paired10/episodes.json"));
}

sevln::RunConfig config_for(const std::string& world, const std::string& policy,
                            std::size_t dimension) {
    sevln::RunConfig c;
    c.world = data_path("worlds/" + world + "/graph.json");
    c.episodes = data_path("worlds/" + world + "/episodes.json");
    if (world == "paired10") c.vocab = data_path("worlds/paired10/landmarks.txt");
    c.backend.kind = "scripted";
    c.backend.policy = policy;
    c.embedder.dimension = dimension;
    c.seed = 7;
    return c;
}

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("sevln-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

sevln::NavGraph random_graph(std::mt19937_64& rng, int n, double extra_p) {
    std::uniform_real_distribution<double> coord(0.0, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    sevln::NavGraph g;
    std::vector<sevln::Vec3> placed;
    for (int i = 0; i < n; ++i) {
        sevln::Vec3 p;
        bool ok = false;
        while (!ok) {
            p = {coord(rng), coord(rng), 0.0};
            ok = true;
            for (const auto& q : placed) {
                if (std::hypot(p.x - q.x, p.y - q.y) < 0.05) ok = false;
            }
        }
        placed.push_back(p);
        g.add_node("v" + std::to_string(i), p);
    }
    for (int i = 1; i < n; ++i) {
        std::uniform_int_distribution<int> parent(0, i - 1);
        g.add_edge("v" + std::to_string(parent(rng)), "v" + std::to_string(i));
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const auto a = "v" + std::to_string(i), b = "v" + std::to_string(j);
            if (!g.adjacent(a, b) && unit(rng) < extra_p) g.add_edge(a, b);
        }
    }
    return g;
}

std::vector<sevln::NodeId> random_walk(std::mt19937_64& rng, const sevln::NavGraph& g,
                                       const sevln::NodeId& start, int steps) {
    std::vector<sevln::NodeId> path{start};
    for (int i = 0; i < steps; ++i) {
        const auto& nb = g.neighbors(path.back());
        std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
        path.push_back(nb[pick(rng)].id);
    }
    return path;
}

sevln::Episode make_episode(const sevln::NavGraph& g, const sevln::NodeId& start,
                            const sevln::NodeId& goal, const std::string& id) {
    sevln::Episode ep;
    ep.id = id;
    ep.instruction = "walk from " + start + " to " + goal;
    ep.start = start;
    ep.goal = goal;
    ep.gt_path = oracle::shortest_route(g, start, goal)->nodes;
    return ep;
}

sevln::DecisionTriple triple(const std::string& action, const std::string& thinking,
                             const std::string& planning) {
    return {thinking, planning, sevln::Action::parse(action)};
}

sevln::ExperienceEntry random_entry(std::mt19937_64& rng, std::size_t dimension) {
    std::normal_distribution<float> normal(0.0f, 1.0f);
    sevln::ExperienceEntry e;
    e.landmarks = {"lm" + std::to_string(rng() % 1000)};
    e.descriptions = {"a room", "another room"};
    e.original = {triple("stop", "went nowhere", "stop")};
    e.revised = {triple("n1", "should have moved", "move to n1")};
    e.embedding.resize(dimension);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& v : e.embedding) {
            v = normal(rng);
            norm += static_cast<double>(v) * v;
        }
    } while (norm == 0.0);
    for (auto& v : e.embedding) v = static_cast<float>(v / std::sqrt(norm));
    e.source_episode = "ep" + std::to_string(rng() % 100);
    return e;
}

}  // namespace fixtures
