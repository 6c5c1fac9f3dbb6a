#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sevln/backend.hpp"
#include "sevln/error.hpp"
#include "sevln/memory.hpp"

namespace sevln {

namespace {

std::pair<NodeId, NodeId> edge_key(const NodeId& a, const NodeId& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

void TopoMap::update(const Observation& obs, std::string description,
                     std::optional<DecisionTriple> triple) {
    if (!annotations_.empty()) {
        if (!nodes_.count(obs.current)) {
            throw std::logic_error("update_map: node '" + obs.current + "' is not reachable in the map");
        }
        if (obs.step_index <= annotations_.back().step_index) {
            throw std::logic_error("update_map: step_index must increase");
        }
    }
    nodes_.insert(obs.current);
    for (const auto& c : obs.candidates) {
        nodes_.insert(c.target);
        edges_.insert(edge_key(obs.current, c.target));
    }
    annotations_.push_back(NodeAnnotation{obs.current, std::move(description), std::move(triple),
                                          obs.step_index});
}

void TopoMap::attach_decision(DecisionTriple triple) {
    if (annotations_.empty()) throw std::logic_error("attach_decision on an empty map");
    annotations_.back().triple = std::move(triple);
}

bool TopoMap::visited(const NodeId& id) const {
    return std::any_of(annotations_.begin(), annotations_.end(),
                       [&](const NodeAnnotation& a) { return a.node == id; });
}

std::vector<NodeId> TopoMap::neighbors(const NodeId& id) const {
    std::vector<NodeId> out;
    for (const auto& [a, b] : edges_) {
        if (a == id) out.push_back(b);
        else if (b == id) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<NodeId> TopoMap::frontier_at(std::size_t i) const {
    return neighbors(annotations_.at(i).node);
}

std::vector<DecisionTriple> TopoMap::decisions() const {
    std::vector<DecisionTriple> out;
    for (const auto& a : annotations_) {
        if (a.triple) out.push_back(*a.triple);
    }
    return out;
}

std::vector<std::string> TopoMap::descriptions() const {
    std::vector<std::string> out;
    out.reserve(annotations_.size());
    for (const auto& a : annotations_) out.push_back(a.description);
    return out;
}

TopoMap update_map(TopoMap map, const Observation& obs, std::string description,
                   std::optional<DecisionTriple> triple) {
    map.update(obs, std::move(description), std::move(triple));
    return map;
}

std::string escape_field(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '|': out += "\\|"; break;
            default: out += c;
        }
    }
    return out;
}

std::string render_annotation(const NodeAnnotation& a) {
    std::string line = "step " + std::to_string(a.step_index) + " @ " + a.node + " | " +
                       escape_field(a.description) + " | ";
    if (a.triple) {
        line += escape_field(a.triple->thinking) + " | " + escape_field(a.triple->planning) +
                " | " + a.triple->action.to_string();
    } else {
        line += "(decision pending)";
    }
    return line;
}

std::string MapText::joined() const {
    std::string out;
    for (const auto& l : header) out += l + "\n";
    for (const auto& l : annotations) out += l + "\n";
    return out;
}

MapText render_map_parts(const TopoMap& map) {
    MapText t;
    t.header.push_back("TOPOLOGICAL MAP (episode " + map.episode_id() + ")");
    std::string nodes = "nodes:";
    for (const auto& n : map.nodes()) {
        nodes += " " + n + (map.visited(n) ? "*" : "");
    }
    t.header.push_back(nodes);
    std::string edges = "edges:";
    for (const auto& [a, b] : map.edges()) edges += " " + a + "-" + b;
    t.header.push_back(edges);
    t.header.push_back("annotations (step @ node | scene | thinking | planning | action):");
    for (const auto& a : map.annotations()) t.annotations.push_back(render_annotation(a));
    return t;
}

std::string render_map(const TopoMap& map) { return render_map_parts(map).joined(); }

const char* const kMemoryTaskDescription =
    "You are the memory module of an indoor navigation agent. You receive the views visible "
    "from the agent's current position, one line per navigable direction. Write a concise "
    "scene description of the current position covering every view: rooms, objects and "
    "landmarks, and which direction they lie in. Reply with the description only.";

std::string render_observation(const Observation& obs) {
    std::string out = "Current node: " + obs.current + " (step " + std::to_string(obs.step_index) + ")\n";
    out += "Views:\n";
    for (const auto& c : obs.candidates) {
        out += "- toward " + c.target + " (bearing " + format_bearing(c.bearing) + " deg): " +
               escape_field(c.caption) + "\n";
    }
    return out;
}

std::string annotate(ModelBackend& backend, const std::string& task_desc, const Observation& obs) {
    ChatRequest req;
    req.system = task_desc;
    req.user = render_observation(obs);
    req.tag = "annotate";
    std::string reply;
    try {
        reply = backend.complete(req);
    } catch (const BackendError& e) {
        throw AnnotationError(std::string("scene description failed: ") + e.what());
    }
    const auto first = reply.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        throw AnnotationError("scene description backend returned an empty reply");
    }
    const auto last = reply.find_last_not_of(" \t\r\n");
    return reply.substr(first, last - first + 1);
}

}  // namespace sevln
