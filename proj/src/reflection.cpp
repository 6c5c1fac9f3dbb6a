#include "sevln/reflection.hpp"

#include <algorithm>
#include <cstdio>

#include "sevln/backend.hpp"
#include "sevln/error.hpp"
#include "sevln/log.hpp"
#include "sevln/reasoning.hpp"
#include "sevln/retrieval.hpp"

namespace sevln {

using nlohmann::json;

json report_to_json(const MetricReport& r) {
    return {{"episode_id", r.episode_id},
            {"ne", r.ne},
            {"sr", r.sr},
            {"spl", r.spl},
            {"osr", r.osr},
            {"divergence_step", r.divergence_step ? json(*r.divergence_step) : json(nullptr)}};
}

std::optional<int> divergence_step(const std::vector<NodeId>& nav, const std::vector<NodeId>& gt) {
    for (std::size_t t = 0; t < nav.size(); ++t) {
        if (t >= gt.size() || nav[t] != gt[t]) return static_cast<int>(t);
    }
    return std::nullopt;
}

MetricReport evaluate_trajectory(const NavGraph& graph, const Episode& episode,
                                 const std::vector<NodeId>& trajectory) {
    if (trajectory.empty()) throw std::invalid_argument("evaluate: empty trajectory");
    const auto to_goal = shortest_path_lengths_from(graph, episode.goal);
    auto geodesic = [&](const NodeId& n) {
        auto it = to_goal.find(n);
        if (it == to_goal.end()) {
            throw UnreachableError("no path from '" + n + "' to goal '" + episode.goal + "'");
        }
        return it->second;
    };

    MetricReport r;
    r.episode_id = episode.id;
    r.ne = geodesic(trajectory.back());
    r.sr = r.ne <= kSuccessRadius ? 1 : 0;
    const double shortest = geodesic(episode.start);
    const double taken = path_length(graph, trajectory);
    const double denom = std::max(taken, shortest);
    r.spl = r.sr == 0 ? 0.0 : (denom > 0.0 ? shortest / denom : 1.0);
    r.osr = std::any_of(trajectory.begin(), trajectory.end(),
                        [&](const NodeId& n) { return geodesic(n) <= kSuccessRadius; })
                ? 1
                : 0;
    r.divergence_step = divergence_step(trajectory, episode.gt_path);
    return r;
}

MetricReport evaluate(const NavGraph& graph, const Episode& episode, const EpisodeState& state) {
    if (!state.terminated()) throw std::logic_error("evaluate needs a terminated episode");
    MetricReport r = evaluate_trajectory(graph, episode, state.trajectory);
    if (state.termination == Termination::error) {
        r.sr = 0;
        r.spl = 0.0;
    }
    return r;
}

int focus_decision(const MetricReport& report, std::size_t decision_count) {
    if (decision_count == 0) return -1;
    const int last = static_cast<int>(decision_count) - 1;
    if (report.divergence_step && *report.divergence_step >= 1) {
        return std::min(*report.divergence_step - 1, last);
    }
    return last;
}

const char* const kReflectionTaskDescription =
    "You review a finished indoor navigation episode. You receive the agent's topological map "
    "with its scene descriptions and step-by-step decisions, the list of decisions with the "
    "candidates that were available, and (when available) the evaluation scores of the "
    "episode. Identify the first unreasonable decision, explain why it was wrong, and give the "
    "decision the agent should have made at that step.";

const char* const kCorrectorOutputFormat =
    "Reply with one JSON object and nothing else:\n"
    "{\"step\": <decision index>, \"thinking\": \"<why the original decision was wrong and what "
    "should have been considered>\", \"planning\": \"<the corrected route>\", "
    "\"action\": \"<one candidate of that decision, or stop>\"}";

namespace {

std::string join_ids(const std::vector<NodeId>& ids) {
    std::string out;
    for (const auto& id : ids) out += id + ", ";
    return out + "stop";
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string render_correction_prompt(const TopoMap& map, const MetricReport* report) {
    std::string out = "=== MAP ===\n" + render_map(map) + "\n=== DECISIONS ===\n";
    const auto& ann = map.annotations();
    std::size_t decisions = 0;
    for (std::size_t i = 0; i < ann.size(); ++i) {
        if (!ann[i].triple) break;
        ++decisions;
        out += "decision " + std::to_string(i) + " @ " + ann[i].node +
               " | candidates: " + join_ids(map.frontier_at(i)) +
               " | action: " + ann[i].triple->action.to_string() + "\n";
    }
    if (report != nullptr) {
        out += "\n=== EVALUATION ===\n";
        out += "NE: " + fixed(report->ne, 2) + " m\n";
        out += "SR: " + std::to_string(report->sr) + "\n";
        out += "SPL: " + fixed(report->spl, 3) + "\n";
        out += "OSR: " + std::to_string(report->osr) + "\n";
        if (report->divergence_step) {
            out += "divergence step: " + std::to_string(*report->divergence_step) +
                   " (first trajectory position off the reference route)\n";
        } else {
            out += "divergence step: none (the agent stopped on the reference route before its end)\n";
        }
        const int focus = focus_decision(*report, decisions);
        if (focus >= 0) out += "focus decision: " + std::to_string(focus) + "\n";
    }
    out += "\n=== OUTPUT-FORMAT ===\n";
    out += kCorrectorOutputFormat;
    out += "\n";
    return out;
}

ParsedRevision parse_revision(std::string_view reply, const TopoMap& map) {
    ParsedRevision out;
    const auto doc = extract_json_object(reply);
    if (!doc) {
        out.error = "reply is not a JSON object";
        return out;
    }
    const auto step_it = doc->find("step");
    if (step_it == doc->end() || !step_it->is_number_integer()) {
        out.error = "field 'step' missing or not an integer";
        return out;
    }
    const auto step = step_it->get<long long>();
    const auto& ann = map.annotations();
    if (step < 0 || static_cast<std::size_t>(step) >= ann.size() ||
        !ann[static_cast<std::size_t>(step)].triple) {
        out.error = "step " + std::to_string(step) + " is not a recorded decision";
        return out;
    }
    DecisionTriple t;
    for (auto [key, dst] : {std::pair{"thinking", &t.thinking}, std::pair{"planning", &t.planning}}) {
        auto it = doc->find(key);
        if (it == doc->end() || !it->is_string() || it->get<std::string>().empty()) {
            out.error = std::string("field '") + key + "' missing or empty";
            return out;
        }
        *dst = it->get<std::string>();
    }
    auto act = doc->find("action");
    if (act == doc->end() || !act->is_string()) {
        out.error = "field 'action' missing or not a string";
        return out;
    }
    t.action = Action::parse(act->get<std::string>());
    const auto frontier = map.frontier_at(static_cast<std::size_t>(step));
    if (!t.action.is_stop() &&
        std::find(frontier.begin(), frontier.end(), t.action.target()) == frontier.end()) {
        out.error = "action '" + t.action.to_string() + "' was not available at decision " +
                    std::to_string(step) + " (candidates: " + join_ids(frontier) + ")";
        return out;
    }
    if (t == *ann[static_cast<std::size_t>(step)].triple) {
        out.error = "revision is identical to the original decision";
        return out;
    }
    out.step = static_cast<int>(step);
    out.triple = std::move(t);
    return out;
}

Correction correct(ModelBackend& backend, const std::string& ref_task_desc, const TopoMap& map,
                   const MetricReport& report, const CorrectorConfig& config) {
    Correction c;
    const std::vector<DecisionTriple> original = map.decisions();
    if (report.sr != 0) {
        if (!config.force) {
            c.skip_reason = "episode succeeded";
            return c;
        }
        c.revised = original;
        c.success_as_is = true;
        return c;
    }
    if (original.empty()) {
        c.skip_reason = "no decisions to correct";
        return c;
    }

    const std::string prompt =
        render_correction_prompt(map, config.evaluator_enabled ? &report : nullptr);
    ChatRequest req;
    req.system = ref_task_desc;
    req.user = prompt;
    req.tag = "correct";
    std::string last_error;
    for (int attempt = 0; attempt <= config.max_parse_retries; ++attempt) {
        ++c.attempts;
        const std::string reply = backend.complete(req);
        ParsedRevision parsed = parse_revision(reply, map);
        if (parsed.triple) {
            std::vector<DecisionTriple> revised = original;
            revised[static_cast<std::size_t>(parsed.step)] = std::move(*parsed.triple);
            c.revised = std::move(revised);
            c.step = parsed.step;
            return c;
        }
        last_error = parsed.error;
        req.user = render_retry(prompt, parsed.error);
    }
    c.skip_reason = "unusable corrector output after " + std::to_string(c.attempts) +
                    " attempts: " + last_error;
    log_warn("correction skipped for episode " + map.episode_id() + ": " + c.skip_reason);
    return c;
}

const ExperienceEntry& commit(ExperienceRepo& repo, EmbeddingBackend& embedder,
                              const LandmarkSet& landmarks, const TopoMap& map,
                              const std::vector<DecisionTriple>& original,
                              const std::vector<DecisionTriple>& revised, bool success_as_is) {
    if (landmarks.empty()) throw std::invalid_argument("commit needs landmarks");
    ExperienceEntry e;
    e.landmarks = landmarks.items();
    e.descriptions = map.descriptions();
    e.original = original;
    e.revised = revised;
    e.embedding = embed(embedder, landmarks).values;
    e.source_episode = map.episode_id();
    e.success_as_is = success_as_is;
    return repo.insert(std::move(e));
}

}  // namespace sevln
