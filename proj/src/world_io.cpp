#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sevln/error.hpp"
#include "sevln/nav_env.hpp"

namespace sevln {

using nlohmann::json;

namespace {

constexpr double kWeightTolerance = 1e-6;

json parse_json(std::string_view text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
}

const json& require(const json& obj, const char* key, const std::string& locus) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(locus + ": missing field '" + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& locus) {
    const json& v = require(obj, key, locus);
    if (!v.is_string()) throw ParseError(locus + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

NavGraph parse_graph(std::string_view json_text, const std::string& source) {
    const json doc = parse_json(json_text, source);
    if (!doc.is_object()) throw ParseError(source + ": top level must be an object");
    const json& nodes = require(doc, "nodes", source);
    const json& edges = require(doc, "edges", source);
    if (!nodes.is_array() || !edges.is_array()) {
        throw ParseError(source + ": 'nodes' and 'edges' must be arrays");
    }

    NavGraph graph;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string locus = source + ": nodes[" + std::to_string(i) + "]";
        const json& n = nodes[i];
        if (!n.is_object()) throw ParseError(locus + ": must be an object");
        const std::string id = require_string(n, "id", locus);
        const json& pos = require(n, "pos", locus);
        if (!pos.is_array() || pos.size() != 3 || !pos[0].is_number() || !pos[1].is_number() ||
            !pos[2].is_number()) {
            throw ParseError(locus + ": 'pos' must be [x, y, z]");
        }
        try {
            graph.add_node(id, Vec3{pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()});
        } catch (const ValidationError& e) {
            throw ValidationError(locus + ": " + e.what());
        }
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string locus = source + ": edges[" + std::to_string(i) + "]";
        const json& e = edges[i];
        if (!e.is_array() || e.size() < 2 || e.size() > 3 || !e[0].is_string() || !e[1].is_string()) {
            throw ParseError(locus + ": edge must be [\"a\", \"b\"] or [\"a\", \"b\", weight]");
        }
        const auto a = e[0].get<std::string>();
        const auto b = e[1].get<std::string>();
        try {
            graph.add_edge(a, b);
        } catch (const ValidationError& err) {
            throw ValidationError(locus + ": " + err.what());
        }
        if (e.size() == 3) {
            if (!e[2].is_number()) throw ParseError(locus + ": weight must be a number");
            const double stored = e[2].get<double>();
            const double actual = graph.edge_weight(a, b);
            if (std::abs(stored - actual) > kWeightTolerance) {
                throw ValidationError(locus + ": stored weight " + std::to_string(stored) +
                                      " disagrees with coordinate distance " +
                                      std::to_string(actual));
            }
        }
    }
    return graph;
}

void validate_episode(const NavGraph& graph, const Episode& ep, const std::string& locus) {
    auto known = [&](const NodeId& id, const std::string& what) {
        if (!graph.contains(id)) {
            throw ValidationError(locus + ": " + what + " references unknown node '" + id + "'");
        }
    };
    if (ep.id.empty()) throw ValidationError(locus + ": empty episode id");
    known(ep.start, "start");
    known(ep.goal, "goal");
    if (ep.gt_path.empty()) throw ValidationError(locus + ": empty gt_path");
    for (std::size_t i = 0; i < ep.gt_path.size(); ++i) {
        known(ep.gt_path[i], "gt_path[" + std::to_string(i) + "]");
    }
    if (ep.gt_path.front() != ep.start) {
        throw ValidationError(locus + ": gt_path must begin at start '" + ep.start + "'");
    }
    if (ep.gt_path.back() != ep.goal) {
        throw ValidationError(locus + ": gt_path must end at goal '" + ep.goal + "'");
    }
    for (std::size_t i = 1; i < ep.gt_path.size(); ++i) {
        if (!graph.adjacent(ep.gt_path[i - 1], ep.gt_path[i])) {
            throw ValidationError(locus + ": gt_path step " + std::to_string(i) + " '" +
                                  ep.gt_path[i - 1] + "' -> '" + ep.gt_path[i] +
                                  "' is not a graph edge");
        }
    }
    for (const auto& [key, _] : ep.captions) {
        known(key.first, "caption key");
        known(key.second, "caption key");
        if (!graph.adjacent(key.first, key.second)) {
            throw ValidationError(locus + ": caption key '" + key.first + "->" + key.second +
                                  "' is not a graph edge");
        }
    }
    try {
        (void)shortest_path_length(graph, ep.start, ep.goal);
    } catch (const UnreachableError&) {
        throw ValidationError(locus + ": goal '" + ep.goal + "' unreachable from start '" +
                              ep.start + "'");
    }
}

std::vector<Episode> parse_episodes(std::string_view json_text, const NavGraph& graph,
                                    const std::string& source) {
    const json doc = parse_json(json_text, source);
    if (!doc.is_array()) throw ParseError(source + ": top level must be an array");
    std::vector<Episode> out;
    out.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        std::string locus = source + ": episode[" + std::to_string(i) + "]";
        const json& e = doc[i];
        if (!e.is_object()) throw ParseError(locus + ": must be an object");
        Episode ep;
        ep.id = require_string(e, "id", locus);
        locus += " (id '" + ep.id + "')";
        ep.instruction = require_string(e, "instruction", locus);
        ep.start = require_string(e, "start", locus);
        ep.goal = require_string(e, "goal", locus);
        const json& path = require(e, "gt_path", locus);
        if (!path.is_array()) throw ParseError(locus + ": 'gt_path' must be an array");
        for (const auto& p : path) {
            if (!p.is_string()) throw ParseError(locus + ": gt_path entries must be strings");
            ep.gt_path.push_back(p.get<std::string>());
        }
        if (auto it = e.find("captions"); it != e.end()) {
            if (!it->is_object()) throw ParseError(locus + ": 'captions' must be an object");
            for (const auto& [key, value] : it->items()) {
                const auto arrow = key.find("->");
                if (arrow == std::string::npos || !value.is_string()) {
                    throw ParseError(locus + ": caption entries must be \"a->b\": \"text\"");
                }
                ep.captions[{key.substr(0, arrow), key.substr(arrow + 2)}] = value.get<std::string>();
            }
        }
        validate_episode(graph, ep, locus);
        out.push_back(std::move(ep));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (out[i].id == out[j].id) {
                throw ValidationError(source + ": duplicate episode id '" + out[i].id + "'");
            }
        }
    }
    return out;
}

World load_world(const std::filesystem::path& graph_file,
                 const std::filesystem::path& episodes_file) {
    World world;
    world.graph = parse_graph(read_text_file(graph_file), graph_file.string());
    world.episodes = parse_episodes(read_text_file(episodes_file), world.graph,
                                    episodes_file.string());
    return world;
}

}  // namespace sevln
