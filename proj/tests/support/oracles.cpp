#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "sevln/retrieval.hpp"

namespace oracle {

using sevln::NodeId;

namespace {

double dist(const sevln::Vec3& a, const sevln::Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

std::optional<Route> shortest_route(const sevln::NavGraph& g, const NodeId& a, const NodeId& b) {
    std::optional<Route> best;
    std::set<NodeId> on_path{a};
    std::vector<NodeId> path{a};
    std::function<void(const NodeId&, double)> dfs = [&](const NodeId& here, double len) {
        if (best && len >= best->length) return;
        if (here == b) {
            best = Route{len, path};
            return;
        }
        for (const auto& n : g.neighbors(here)) {
            if (on_path.count(n.id)) continue;
            on_path.insert(n.id);
            path.push_back(n.id);
            dfs(n.id, len + dist(g.position(here), g.position(n.id)));
            path.pop_back();
            on_path.erase(n.id);
        }
    };
    dfs(a, 0.0);
    return best;
}

sevln::MetricReport metrics(const sevln::NavGraph& g, const sevln::Episode& ep,
                            const std::vector<NodeId>& trajectory) {
    sevln::MetricReport r;
    r.episode_id = ep.id;
    auto to_goal = [&](const NodeId& n) { return shortest_route(g, n, ep.goal)->length; };
    r.ne = to_goal(trajectory.back());
    r.sr = r.ne <= 3.0 ? 1 : 0;
    r.osr = 0;
    for (const auto& n : trajectory) {
        if (to_goal(n) <= 3.0) r.osr = 1;
    }
    double p = 0.0;
    for (std::size_t i = 1; i < trajectory.size(); ++i) {
        p += dist(g.position(trajectory[i - 1]), g.position(trajectory[i]));
    }
    const double l = shortest_route(g, ep.start, ep.goal)->length;
    if (r.sr == 0) {
        r.spl = 0.0;
    } else if (p == 0.0 && l == 0.0) {
        r.spl = 1.0;
    } else {
        r.spl = l / std::max(p, l);
    }
    for (std::size_t t = 0; t < trajectory.size(); ++t) {
        if (t >= ep.gt_path.size() || trajectory[t] != ep.gt_path[t]) {
            r.divergence_step = static_cast<int>(t);
            break;
        }
    }
    return r;
}

std::vector<std::int64_t> top_n(const sevln::ExperienceRepo& repo, const std::vector<float>& q,
                                std::size_t n) {
    std::vector<std::pair<double, std::int64_t>> scored;
    for (const auto& e : repo.entries()) {
        scored.emplace_back(sevln::cosine(q, e.embedding), e.created_seq);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
    });
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < scored.size() && i < n; ++i) out.push_back(scored[i].second);
    return out;
}

}  // namespace oracle
