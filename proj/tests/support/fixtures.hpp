#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sevln/experience.hpp"
#include "sevln/harness.hpp"
#include "sevln/nav_env.hpp"

namespace fixtures {

std::filesystem::path source_path(const std::string& rel);
std::filesystem::path data_path(const std::string& rel);

sevln::World loft5();
sevln::World paired10();

/// Config for a bundled world with a scripted policy and the hashing embedder.
sevln::RunConfig config_for(const std::string& world, const std::string& policy,
                            std::size_t dimension = 64);

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Connected graph of `n` nodes in a 10 m box: a random spanning tree plus
/// extra edges with probability `extra_p`.
sevln::NavGraph random_graph(std::mt19937_64& rng, int n, double extra_p = 0.25);

/// Random walk of `steps` moves from `start`.
std::vector<sevln::NodeId> random_walk(std::mt19937_64& rng, const sevln::NavGraph& g,
                                       const sevln::NodeId& start, int steps);

/// Episode start->goal whose gt_path is a shortest route.
sevln::Episode make_episode(const sevln::NavGraph& g, const sevln::NodeId& start,
                            const sevln::NodeId& goal, const std::string& id = "ep");

sevln::DecisionTriple triple(const std::string& action, const std::string& thinking = "t",
                             const std::string& planning = "p");

/// Valid entry with a random unit-norm embedding of `dimension` values.
sevln::ExperienceEntry random_entry(std::mt19937_64& rng, std::size_t dimension);

}  // namespace fixtures
