#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sevln {

using NodeId = std::string;

/// Goal tolerance used by every success test, in meters.
inline constexpr double kSuccessRadius = 3.0;
inline constexpr int kDefaultMaxSteps = 20;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

double euclidean(const Vec3& a, const Vec3& b);

/// Bearing rounded to whole degrees with an explicit sign ("+90", "-45", "+0").
std::string format_bearing(double deg);

struct Neighbor {
    NodeId id;
    double weight = 0.0;
};

/// Weighted undirected graph. Edge weights are always the Euclidean distance
/// between endpoint positions.
class NavGraph {
public:
    void add_node(const NodeId& id, const Vec3& pos);
    /// Adds an undirected edge; rejects unknown ids, self-loops, duplicates and
    /// zero-length edges.
    void add_edge(const NodeId& a, const NodeId& b);

    bool contains(const NodeId& id) const;
    const Vec3& position(const NodeId& id) const;
    /// Neighbors sorted by node id.
    const std::vector<Neighbor>& neighbors(const NodeId& id) const;
    bool adjacent(const NodeId& a, const NodeId& b) const;
    double edge_weight(const NodeId& a, const NodeId& b) const;

    std::vector<NodeId> node_ids() const;
    /// Each undirected edge once, as (smaller id, larger id), sorted.
    std::vector<std::pair<NodeId, NodeId>> edges() const;
    std::size_t node_count() const { return positions_.size(); }
    std::size_t edge_count() const { return edge_count_; }

private:
    std::map<NodeId, Vec3> positions_;
    std::map<NodeId, std::vector<Neighbor>> adjacency_;
    std::size_t edge_count_ = 0;
};

struct Episode {
    std::string id;
    std::string instruction;
    NodeId start;
    NodeId goal;
    std::vector<NodeId> gt_path;
    /// Keyed by directed edge (from, to).
    std::map<std::pair<NodeId, NodeId>, std::string> captions;

    std::optional<std::string> caption(const NodeId& from, const NodeId& to) const;
};

struct World {
    NavGraph graph;
    std::vector<Episode> episodes;
};

class Action {
public:
    enum class Kind { stop, move };

    static Action stop() { return Action(Kind::stop, {}); }
    static Action move_to(NodeId target) { return Action(Kind::move, std::move(target)); }
    /// "stop" (any case) or a node id.
    static Action parse(std::string_view text);

    Kind kind() const { return kind_; }
    bool is_stop() const { return kind_ == Kind::stop; }
    const NodeId& target() const { return target_; }
    std::string to_string() const { return is_stop() ? std::string("stop") : target_; }

    friend bool operator==(const Action&, const Action&) = default;

private:
    Action(Kind kind, NodeId target) : kind_(kind), target_(std::move(target)) {}

    Kind kind_;
    NodeId target_;
};

struct Candidate {
    NodeId target;
    double bearing = 0.0;  // degrees, (-180, 180], relative to arrival heading
    std::string caption;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct Observation {
    NodeId current;
    std::vector<Candidate> candidates;
    int step_index = 0;

    std::vector<NodeId> candidate_ids() const;
    friend bool operator==(const Observation&, const Observation&) = default;
};

enum class Termination { none, stopped, max_steps, error };

std::string_view to_string(Termination t);

struct EpisodeState {
    const Episode* episode = nullptr;
    std::vector<NodeId> trajectory;
    int steps_taken = 0;
    int max_steps = kDefaultMaxSteps;
    Termination termination = Termination::none;
    std::string error_message;

    bool terminated() const { return termination != Termination::none; }
    const NodeId& current() const { return trajectory.back(); }
};

EpisodeState start_episode(const Episode& episode, int max_steps = kDefaultMaxSteps);

/// Candidates are every neighbor of the current node, sorted by bearing then id.
Observation observe(const NavGraph& graph, const EpisodeState& state);

/// Returns the successor state. Throws InvalidActionError for a non-adjacent
/// target, leaving `state` untouched.
EpisodeState step(const NavGraph& graph, const EpisodeState& state, const Action& action);

/// Marks the state as aborted by a module failure.
EpisodeState abort_episode(const EpisodeState& state, std::string message);

double shortest_path_length(const NavGraph& graph, const NodeId& a, const NodeId& b);

/// Geodesic distance from `source` to every reachable node.
std::map<NodeId, double> shortest_path_lengths_from(const NavGraph& graph, const NodeId& source);

/// Euclidean distance to goal within kSuccessRadius, inclusive.
bool within_success_radius(const NavGraph& graph, const NodeId& a, const NodeId& goal);

/// Sum of edge weights along consecutive nodes of `path`.
double path_length(const NavGraph& graph, const std::vector<NodeId>& path);

// World ingestion. `source` names the file in error messages.
NavGraph parse_graph(std::string_view json_text, const std::string& source = "<graph>");
std::vector<Episode> parse_episodes(std::string_view json_text, const NavGraph& graph,
                                    const std::string& source = "<episodes>");
void validate_episode(const NavGraph& graph, const Episode& episode, const std::string& locus);
World load_world(const std::filesystem::path& graph_file,
                 const std::filesystem::path& episodes_file);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace sevln
