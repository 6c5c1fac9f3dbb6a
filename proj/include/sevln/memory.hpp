#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sevln/nav_env.hpp"

namespace sevln {

class ModelBackend;

/// One reasoning step: thinking, planning and the executed action.
struct DecisionTriple {
    std::string thinking;
    std::string planning;
    Action action = Action::stop();

    friend bool operator==(const DecisionTriple&, const DecisionTriple&) = default;
};

struct NodeAnnotation {
    NodeId node;
    std::string description;
    std::optional<DecisionTriple> triple;
    int step_index = 0;

    friend bool operator==(const NodeAnnotation&, const NodeAnnotation&) = default;
};

/// Verbal topological map: the explored subgraph plus per-step annotations.
///
/// The subgraph holds every node the agent stood on together with the
/// frontier it observed there, so the candidates offered at any recorded step
/// are exactly the map neighbors of that step's node.
class TopoMap {
public:
    TopoMap() = default;
    explicit TopoMap(std::string episode_id) : episode_id_(std::move(episode_id)) {}

    /// Records the observation at obs.current; `triple` may be attached now or
    /// later through attach_decision once the decider has returned.
    void update(const Observation& obs, std::string description,
                std::optional<DecisionTriple> triple = std::nullopt);
    /// Posterior annotation of the most recent step.
    void attach_decision(DecisionTriple triple);

    const std::string& episode_id() const { return episode_id_; }
    const std::set<NodeId>& nodes() const { return nodes_; }
    const std::set<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
    const std::vector<NodeAnnotation>& annotations() const { return annotations_; }
    bool empty() const { return annotations_.empty(); }

    bool visited(const NodeId& id) const;
    /// Map neighbors of `id`, sorted.
    std::vector<NodeId> neighbors(const NodeId& id) const;
    /// Candidates that were on offer at the annotation with index `i`.
    std::vector<NodeId> frontier_at(std::size_t i) const;

    std::vector<DecisionTriple> decisions() const;
    std::vector<std::string> descriptions() const;

    friend bool operator==(const TopoMap&, const TopoMap&) = default;

private:
    std::string episode_id_;
    std::set<NodeId> nodes_;
    std::set<std::pair<NodeId, NodeId>> edges_;  // (smaller, larger)
    std::vector<NodeAnnotation> annotations_;
};

/// Free-function form of TopoMap::update.
TopoMap update_map(TopoMap map, const Observation& obs, std::string description,
                   std::optional<DecisionTriple> triple = std::nullopt);

/// Rendered map split into the fixed graph part and one line per annotation,
/// so prompt assembly can drop the oldest annotation lines first.
struct MapText {
    std::vector<std::string> header;
    std::vector<std::string> annotations;

    std::string joined() const;
};

MapText render_map_parts(const TopoMap& map);
std::string render_map(const TopoMap& map);
std::string render_annotation(const NodeAnnotation& a);

/// Escapes newlines and '|' so rendered lines stay one-per-field.
std::string escape_field(const std::string& text);

/// System prompt for scene description calls.
extern const char* const kMemoryTaskDescription;

/// User message listing the observed views; shared with scripted backends
/// that echo captions.
std::string render_observation(const Observation& obs);

/// Scene description of the current observation. Throws AnnotationError when
/// the backend returns nothing usable.
std::string annotate(ModelBackend& backend, const std::string& task_desc, const Observation& obs);

}  // namespace sevln
