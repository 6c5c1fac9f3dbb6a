#include "sevln/policies.hpp"

#include <algorithm>
#include <random>

#include "sevln/error.hpp"
#include "sevln/retrieval.hpp"

namespace sevln {

using nlohmann::json;

Policy parse_policy(std::string_view name) {
    if (name == "oracle") return Policy::oracle;
    if (name == "stop") return Policy::stop;
    if (name == "two-phase") return Policy::two_phase;
    if (name == "random-walk") return Policy::random_walk;
    throw ConfigError("unknown scripted policy '" + std::string(name) + "'");
}

std::string_view to_string(Policy p) {
    switch (p) {
        case Policy::oracle: return "oracle";
        case Policy::stop: return "stop";
        case Policy::two_phase: return "two-phase";
        case Policy::random_walk: return "random-walk";
    }
    return "unknown";
}

namespace prompt_scan {

namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        out.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

}  // namespace

std::optional<std::string> section(const std::string& prompt, std::string_view name) {
    const std::string header = "=== " + std::string(name) + " ===\n";
    const auto start = prompt.find(header);
    if (start == std::string::npos) return std::nullopt;
    const auto body = start + header.size();
    const auto next = prompt.find("\n=== ", body);
    return prompt.substr(body, next == std::string::npos ? std::string::npos : next - body);
}

std::optional<NodeId> current_node(const std::string& prompt) {
    const auto body = section(prompt, "CANDIDATES");
    if (!body) return std::nullopt;
    const std::string key = "current node: ";
    const auto pos = body->find(key);
    if (pos == std::string::npos) return std::nullopt;
    const auto start = pos + key.size();
    const auto end = body->find(' ', start);
    return body->substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::vector<NodeId> candidates(const std::string& prompt) {
    std::vector<NodeId> out;
    const auto body = section(prompt, "CANDIDATES");
    if (!body) return out;
    for (auto line : lines_of(*body)) {
        if (line.rfind("- ", 0) != 0) continue;
        const auto end = line.find(" (bearing ");
        if (end == std::string_view::npos) continue;
        out.emplace_back(line.substr(2, end - 2));
    }
    return out;
}

std::vector<std::vector<std::string>> experience_landmarks(const std::string& prompt) {
    std::vector<std::vector<std::string>> out;
    const auto body = section(prompt, "EXPERIENCE");
    if (!body) return out;
    const std::string key = "landmarks: ";
    for (auto line : lines_of(*body)) {
        if (line.rfind("EXPERIENCE ", 0) != 0) continue;
        const auto pos = line.find(key);
        if (pos == std::string_view::npos) continue;
        const auto start = pos + key.size();
        const auto end = line.find(';', start);
        std::string_view list = line.substr(start, end == std::string_view::npos ? line.npos : end - start);
        std::vector<std::string> items;
        std::size_t p = 0;
        while (p <= list.size()) {
            auto comma = list.find(", ", p);
            if (comma == std::string_view::npos) comma = list.size();
            if (comma > p) items.emplace_back(list.substr(p, comma - p));
            p = comma + 2;
        }
        out.push_back(std::move(items));
    }
    return out;
}

std::vector<std::string> view_captions(const std::string& request) {
    std::vector<std::string> out;
    for (auto line : lines_of(request)) {
        if (line.rfind("- toward ", 0) != 0) continue;
        const auto pos = line.find("): ");
        if (pos == std::string_view::npos) continue;
        out.emplace_back(line.substr(pos + 3));
    }
    return out;
}

}  // namespace prompt_scan

namespace {

std::optional<NodeId> route_successor(const Episode& ep, const NodeId& here) {
    auto it = std::find(ep.gt_path.begin(), ep.gt_path.end(), here);
    if (it == ep.gt_path.end() || std::next(it) == ep.gt_path.end()) return std::nullopt;
    return *std::next(it);
}

std::string decision_json(const std::string& thinking, const std::string& planning,
                          const std::string& action) {
    return json{{"thinking", thinking}, {"planning", planning}, {"action", action}}.dump();
}

std::string instruction_of(const std::string& user) {
    const std::string key = "INSTRUCTION: ";
    const auto pos = user.find(key);
    if (pos == std::string::npos) return user;
    const auto end = user.find('\n', pos);
    return user.substr(pos + key.size(), end == std::string::npos ? std::string::npos : end - pos - key.size());
}

class PolicyResponder {
public:
    PolicyResponder(Policy policy, Episode episode, std::uint64_t seed)
        : policy_(policy),
          episode_(std::move(episode)),
          rng_(seed ^ HashingEmbedder::hash_token(episode_.id)) {
        for (const auto& w : tokenize(episode_.instruction)) instruction_lower_ += w + " ";
    }

    std::string operator()(const ChatRequest& req, std::size_t /*call*/) {
        if (req.tag == "annotate") return annotate(req);
        if (req.tag == "landmarks") {
            return json(fallback_landmarks(instruction_of(req.user))).dump();
        }
        if (req.tag == "decide") return decide(req);
        if (req.tag == "correct") return correct(req);
        return "ok";
    }

private:
    std::string annotate(const ChatRequest& req) const {
        const auto captions = prompt_scan::view_captions(req.user);
        std::string out;
        for (std::size_t i = 0; i < captions.size(); ++i) {
            if (i) out += "; ";
            out += captions[i];
        }
        return out;
    }

    bool has_matching_experience(const std::string& prompt) const {
        for (const auto& list : prompt_scan::experience_landmarks(prompt)) {
            for (const auto& l : list) {
                if (!l.empty() && instruction_lower_.find(l) != std::string::npos) return true;
            }
        }
        return false;
    }

    std::string follow_route(const NodeId& here, const std::string& why) const {
        if (auto next = route_successor(episode_, here)) {
            return decision_json(why + " The route continues toward " + *next + ".",
                                 "Move to " + *next + " and keep following the instruction.", *next);
        }
        return decision_json(why + " The destination has been reached.", "Stop here.", "stop");
    }

    std::string decide(const ChatRequest& req) {
        const auto here = prompt_scan::current_node(req.user).value_or(episode_.start);
        switch (policy_) {
            case Policy::oracle:
                return follow_route(here, "The instruction describes this route.");
            case Policy::stop:
                return decision_json("Nothing suggests moving on.", "Stop here.", "stop");
            case Policy::two_phase:
                if (has_matching_experience(req.user)) {
                    return follow_route(here, "A past experience with the same landmark shows the way.");
                }
                return decision_json("Without prior experience the landmark cannot be located.",
                                     "Stop here.", "stop");
            case Policy::random_walk: {
                const auto cands = prompt_scan::candidates(req.user);
                std::uniform_real_distribution<double> coin(0.0, 1.0);
                if (cands.empty() || coin(rng_) < 0.2) {
                    return decision_json("Picking at random.", "Stop here.", "stop");
                }
                std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
                const NodeId& next = cands[pick(rng_)];
                return decision_json("Picking at random.", "Move to " + next + ".", next);
            }
        }
        return decision_json("-", "-", "stop");
    }

    std::string correct(const ChatRequest& req) const {
        // decision lines: "decision k @ node | candidates: a, b, stop | action: x"
        struct Row {
            int index;
            NodeId node;
            std::vector<NodeId> candidates;
            std::string action;
        };
        std::vector<Row> rows;
        std::optional<int> focus;
        std::size_t pos = 0;
        const std::string& text = req.user;
        while (pos < text.size()) {
            auto end = text.find('\n', pos);
            if (end == std::string::npos) end = text.size();
            const std::string line = text.substr(pos, end - pos);
            pos = end + 1;
            if (line.rfind("focus decision: ", 0) == 0) {
                focus = std::stoi(line.substr(16));
                continue;
            }
            if (line.rfind("decision ", 0) != 0) continue;
            Row r;
            const auto at = line.find(" @ ");
            const auto bar1 = line.find(" | candidates: ");
            const auto bar2 = line.find(" | action: ");
            if (at == std::string::npos || bar1 == std::string::npos || bar2 == std::string::npos) continue;
            r.index = std::stoi(line.substr(9, at - 9));
            r.node = line.substr(at + 3, bar1 - at - 3);
            const std::string list = line.substr(bar1 + 15, bar2 - bar1 - 15);
            std::size_t p = 0;
            while (p <= list.size()) {
                auto comma = list.find(", ", p);
                if (comma == std::string::npos) comma = list.size();
                const std::string item = list.substr(p, comma - p);
                if (!item.empty() && item != "stop") r.candidates.push_back(item);
                p = comma + 2;
            }
            r.action = line.substr(bar2 + 11);
            rows.push_back(std::move(r));
        }
        if (rows.empty()) return "{}";

        if (focus) {
            const auto it = std::find_if(rows.begin(), rows.end(),
                                         [&](const Row& r) { return r.index == *focus; });
            if (it != rows.end()) {
                const auto next = route_successor(episode_, it->node);
                const std::string action = next ? *next : "stop";
                return json{{"step", it->index},
                            {"thinking", "Decision " + std::to_string(it->index) + " at " + it->node +
                                             " chose " + it->action +
                                             ", which leaves the route to the destination."},
                            {"planning", next ? "Move to " + *next + " and continue along the route."
                                              : "Stop at " + it->node + "."},
                            {"action", action}}
                    .dump();
            }
        }
        // Without evaluation scores: guess the final decision and try another candidate.
        const Row& r = rows.back();
        std::string action = "stop";
        for (const auto& c : r.candidates) {
            if (c != r.action) {
                action = c;
                break;
            }
        }
        return json{{"step", r.index},
                    {"thinking", "The last decision at " + r.node + " may have been wrong."},
                    {"planning", "Try a different direction."},
                    {"action", action}}
            .dump();
    }

    Policy policy_;
    Episode episode_;
    std::mt19937_64 rng_;
    std::string instruction_lower_;
};

}  // namespace

std::unique_ptr<ModelBackend> make_policy_backend(Policy policy, const Episode& episode,
                                                  std::uint64_t seed) {
    auto responder = std::make_shared<PolicyResponder>(policy, episode, seed);
    return std::make_unique<ResponderBackend>(
        [responder](const ChatRequest& req, std::size_t call) { return (*responder)(req, call); });
}

}  // namespace sevln
