#pragma once

// Independent reference implementations used to check the library.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sevln/experience.hpp"
#include "sevln/nav_env.hpp"
#include "sevln/reflection.hpp"

namespace oracle {

struct Route {
    double length = 0.0;
    std::vector<sevln::NodeId> nodes;
};

/// Shortest route by exhaustive enumeration of simple paths (depth-first,
/// pruned only by the best complete length found so far). nullopt when
/// unreachable.
std::optional<Route> shortest_route(const sevln::NavGraph& g, const sevln::NodeId& a,
                                    const sevln::NodeId& b);

/// Metrics recomputed from positions and brute-force distances.
sevln::MetricReport metrics(const sevln::NavGraph& g, const sevln::Episode& ep,
                            const std::vector<sevln::NodeId>& trajectory);

/// Expected retrieval: score every entry, stable sort by score descending
/// then created_seq, keep the first n.
std::vector<std::int64_t> top_n(const sevln::ExperienceRepo& repo, const std::vector<float>& q,
                                std::size_t n);

}  // namespace oracle
