#include "sevln/nav_env.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <queue>

#include "sevln/error.hpp"

namespace sevln {

double euclidean(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void NavGraph::add_node(const NodeId& id, const Vec3& pos) {
    if (id.empty()) throw ValidationError("empty node id");
    if (id == "stop") throw ValidationError("node id 'stop' is reserved for the stop action");
    if (!positions_.emplace(id, pos).second) {
        throw ValidationError("duplicate node '" + id + "'");
    }
    adjacency_[id];
}

void NavGraph::add_edge(const NodeId& a, const NodeId& b) {
    if (!contains(a)) throw ValidationError("edge references unknown node '" + a + "'");
    if (!contains(b)) throw ValidationError("edge references unknown node '" + b + "'");
    if (a == b) throw ValidationError("self-loop at node '" + a + "'");
    if (adjacent(a, b)) throw ValidationError("duplicate edge '" + a + "'-'" + b + "'");
    const double w = euclidean(positions_.at(a), positions_.at(b));
    if (!(w > 0.0)) throw ValidationError("zero-length edge '" + a + "'-'" + b + "'");

    auto insert_sorted = [](std::vector<Neighbor>& list, Neighbor n) {
        auto it = std::lower_bound(list.begin(), list.end(), n.id,
                                   [](const Neighbor& x, const NodeId& id) { return x.id < id; });
        list.insert(it, std::move(n));
    };
    insert_sorted(adjacency_[a], Neighbor{b, w});
    insert_sorted(adjacency_[b], Neighbor{a, w});
    ++edge_count_;
}

bool NavGraph::contains(const NodeId& id) const { return positions_.count(id) != 0; }

const Vec3& NavGraph::position(const NodeId& id) const {
    auto it = positions_.find(id);
    if (it == positions_.end()) throw ValidationError("unknown node '" + id + "'");
    return it->second;
}

const std::vector<Neighbor>& NavGraph::neighbors(const NodeId& id) const {
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) throw ValidationError("unknown node '" + id + "'");
    return it->second;
}

bool NavGraph::adjacent(const NodeId& a, const NodeId& b) const {
    auto it = adjacency_.find(a);
    if (it == adjacency_.end()) return false;
    const auto& list = it->second;
    auto pos = std::lower_bound(list.begin(), list.end(), b,
                                [](const Neighbor& x, const NodeId& id) { return x.id < id; });
    return pos != list.end() && pos->id == b;
}

double NavGraph::edge_weight(const NodeId& a, const NodeId& b) const {
    for (const auto& n : neighbors(a)) {
        if (n.id == b) return n.weight;
    }
    throw ValidationError("no edge '" + a + "'-'" + b + "'");
}

std::vector<NodeId> NavGraph::node_ids() const {
    std::vector<NodeId> ids;
    ids.reserve(positions_.size());
    for (const auto& [id, _] : positions_) ids.push_back(id);
    return ids;
}

std::vector<std::pair<NodeId, NodeId>> NavGraph::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (const auto& [id, list] : adjacency_) {
        for (const auto& n : list) {
            if (id < n.id) out.emplace_back(id, n.id);
        }
    }
    return out;
}

std::string format_bearing(double deg) {
    const long r = std::lround(deg);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+ld", r == 0 ? 0L : r);
    return buf;
}

std::optional<std::string> Episode::caption(const NodeId& from, const NodeId& to) const {
    auto it = captions.find({from, to});
    if (it == captions.end()) return std::nullopt;
    return it->second;
}

Action Action::parse(std::string_view text) {
    std::string trimmed(text);
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    trimmed.erase(trimmed.begin(), std::find_if(trimmed.begin(), trimmed.end(), not_space));
    trimmed.erase(std::find_if(trimmed.rbegin(), trimmed.rend(), not_space).base(), trimmed.end());
    std::string lower = trimmed;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "stop") return stop();
    return move_to(trimmed);
}

std::vector<NodeId> Observation::candidate_ids() const {
    std::vector<NodeId> ids;
    ids.reserve(candidates.size());
    for (const auto& c : candidates) ids.push_back(c.target);
    return ids;
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::none: return "running";
        case Termination::stopped: return "stopped";
        case Termination::max_steps: return "max-steps";
        case Termination::error: return "error";
    }
    return "unknown";
}

EpisodeState start_episode(const Episode& episode, int max_steps) {
    EpisodeState s;
    s.episode = &episode;
    s.trajectory = {episode.start};
    s.max_steps = max_steps;
    return s;
}

namespace {

// Clockwise from +y in the xy-plane, degrees in (-180, 180].
double heading_deg(const Vec3& from, const Vec3& to) {
    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    if (dx == 0.0 && dy == 0.0) return 0.0;
    return std::atan2(dx, dy) * 180.0 / std::numbers::pi;
}

double normalize_deg(double d) {
    while (d <= -180.0) d += 360.0;
    while (d > 180.0) d -= 360.0;
    return d;
}

}  // namespace

Observation observe(const NavGraph& graph, const EpisodeState& state) {
    if (state.terminated()) throw std::logic_error("observe on a terminated episode");
    const NodeId& here = state.current();
    const Vec3& here_pos = graph.position(here);

    double arrival = 0.0;
    if (state.trajectory.size() >= 2) {
        const auto& prev = state.trajectory[state.trajectory.size() - 2];
        arrival = heading_deg(graph.position(prev), here_pos);
    }

    Observation obs;
    obs.current = here;
    obs.step_index = state.steps_taken;
    for (const auto& n : graph.neighbors(here)) {
        Candidate c;
        c.target = n.id;
        c.bearing = normalize_deg(heading_deg(here_pos, graph.position(n.id)) - arrival);
        auto cap = state.episode ? state.episode->caption(here, n.id) : std::nullopt;
        c.caption = cap ? *cap : "unlabeled view toward " + n.id;
        obs.candidates.push_back(std::move(c));
    }
    std::sort(obs.candidates.begin(), obs.candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  if (a.bearing != b.bearing) return a.bearing < b.bearing;
                  return a.target < b.target;
              });
    return obs;
}

EpisodeState step(const NavGraph& graph, const EpisodeState& state, const Action& action) {
    if (state.terminated()) throw std::logic_error("step on a terminated episode");
    EpisodeState next = state;
    if (action.is_stop()) {
        next.termination = Termination::stopped;
        return next;
    }
    if (!graph.adjacent(state.current(), action.target())) {
        throw InvalidActionError("cannot move from '" + state.current() + "' to non-adjacent '" +
                                 action.target() + "'");
    }
    next.trajectory.push_back(action.target());
    ++next.steps_taken;
    if (next.steps_taken >= next.max_steps) next.termination = Termination::max_steps;
    return next;
}

EpisodeState abort_episode(const EpisodeState& state, std::string message) {
    EpisodeState next = state;
    next.termination = Termination::error;
    next.error_message = std::move(message);
    return next;
}

std::map<NodeId, double> shortest_path_lengths_from(const NavGraph& graph, const NodeId& source) {
    if (!graph.contains(source)) throw ValidationError("unknown node '" + source + "'");
    std::map<NodeId, double> dist;
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
    dist[source] = 0.0;
    frontier.emplace(0.0, source);
    while (!frontier.empty()) {
        auto [d, u] = frontier.top();
        frontier.pop();
        if (d > dist[u]) continue;
        for (const auto& n : graph.neighbors(u)) {
            const double nd = d + n.weight;
            auto it = dist.find(n.id);
            if (it == dist.end() || nd < it->second) {
                dist[n.id] = nd;
                frontier.emplace(nd, n.id);
            }
        }
    }
    return dist;
}

double shortest_path_length(const NavGraph& graph, const NodeId& a, const NodeId& b) {
    if (!graph.contains(b)) throw ValidationError("unknown node '" + b + "'");
    if (a == b) {
        if (!graph.contains(a)) throw ValidationError("unknown node '" + a + "'");
        return 0.0;
    }
    const auto dist = shortest_path_lengths_from(graph, a);
    auto it = dist.find(b);
    if (it == dist.end()) {
        throw UnreachableError("no path from '" + a + "' to '" + b + "'");
    }
    return it->second;
}

bool within_success_radius(const NavGraph& graph, const NodeId& a, const NodeId& goal) {
    return euclidean(graph.position(a), graph.position(goal)) <= kSuccessRadius;
}

double path_length(const NavGraph& graph, const std::vector<NodeId>& path) {
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) total += graph.edge_weight(path[i - 1], path[i]);
    return total;
}

}  // namespace sevln
