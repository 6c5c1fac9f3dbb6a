#include "sevln/reasoning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sevln/backend.hpp"
#include "sevln/error.hpp"
#include "sevln/log.hpp"

namespace sevln {

using nlohmann::json;

const char* const kReasoningTaskDescription =
    "You are an agent navigating an indoor environment along a graph of viewpoints. At each "
    "step you see the views toward the neighboring viewpoints you can move to. Follow the "
    "instruction to reach the destination. Use the topological map of what you have seen and "
    "decided so far, and any past experience provided, which shows corrected decisions from "
    "similar tasks. Think about where you are relative to the instruction, plan the next part "
    "of the route, then choose exactly one candidate viewpoint, or stop when you have arrived.";

const char* const kDeciderSystemMessage =
    "You are the decision module of an indoor navigation agent. Follow the OUTPUT-FORMAT "
    "section of the prompt exactly.";

const char* const kOutputFormatCot =
    "Reply with one JSON object and nothing else:\n"
    "{\"thinking\": \"<analysis of the instruction, map and views>\", "
    "\"planning\": \"<the route you intend to follow next>\", "
    "\"action\": \"<one candidate id from CANDIDATES, or stop>\"}";

const char* const kOutputFormatActionOnly =
    "Reply with one JSON object and nothing else:\n"
    "{\"action\": \"<one candidate id from CANDIDATES, or stop>\"}";

namespace {

std::string section(std::string_view name, const std::string& body) {
    std::string out = "=== ";
    out += name;
    out += " ===\n";
    out += body;
    if (!body.empty() && body.back() != '\n') out += '\n';
    return out;
}

std::string assemble(const PromptBundle& b, std::size_t dropped_annotations,
                     std::size_t kept_fewshot) {
    std::string map_body;
    for (const auto& l : b.map.header) map_body += l + "\n";
    if (dropped_annotations > 0) {
        map_body += "(" + std::to_string(dropped_annotations) + " earlier annotations omitted)\n";
    }
    for (std::size_t i = dropped_annotations; i < b.map.annotations.size(); ++i) {
        map_body += b.map.annotations[i] + "\n";
    }

    std::string out;
    out += section("TASK", b.task_desc) + "\n";
    out += section("INSTRUCTION", b.instruction) + "\n";
    out += section("MAP", map_body) + "\n";
    if (kept_fewshot > 0) {
        std::vector<std::string> kept(b.fewshot.begin(),
                                      b.fewshot.begin() + static_cast<std::ptrdiff_t>(kept_fewshot));
        std::string body;
        for (std::size_t i = 0; i < kept.size(); ++i) {
            if (i) body += "\n\n";
            body += kept[i];
        }
        out += section("EXPERIENCE", body) + "\n";
    }
    out += section("CANDIDATES", render_candidates(b.observation)) + "\n";
    out += section("OUTPUT-FORMAT", b.cot_enabled ? kOutputFormatCot : kOutputFormatActionOnly);
    return out;
}

}  // namespace

std::string render_candidates(const Observation& obs) {
    std::string out = "current node: " + obs.current + " (step " + std::to_string(obs.step_index) + ")\n";
    for (const auto& c : obs.candidates) {
        out += "- " + c.target + " (bearing " + format_bearing(c.bearing) + " deg): " +
               escape_field(c.caption) + "\n";
    }
    out += "- stop: end the episode at the current node\n";
    return out;
}

std::string render_prompt(const PromptBundle& b) {
    std::size_t dropped = 0;
    std::size_t kept = b.fewshot.size();
    std::string text = assemble(b, dropped, kept);
    while (text.size() > b.budget && dropped < b.map.annotations.size()) {
        ++dropped;
        text = assemble(b, dropped, kept);
    }
    while (text.size() > b.budget && kept > 0) {
        --kept;
        text = assemble(b, dropped, kept);
    }
    if (text.size() > b.budget) {
        throw BudgetError("prompt budget " + std::to_string(b.budget) +
                          " is smaller than the irreducible sections (" +
                          std::to_string(text.size()) + " characters)");
    }
    return text;
}

void DeciderConfig::validate() const {
    if (max_parse_retries < 0) throw ConfigError("max_parse_retries must be >= 0");
    if (budget == 0) throw ConfigError("prompt budget must be positive");
    if (fallback_policy != "stop") {
        throw ConfigError("unsupported fallback policy '" + fallback_policy + "'");
    }
}

std::optional<json> extract_json_object(std::string_view reply) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        return std::nullopt;
    }
    try {
        json doc = json::parse(reply.substr(open, close - open + 1));
        if (!doc.is_object()) return std::nullopt;
        return doc;
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
}

ParsedDecision parse_decision(std::string_view reply, const std::vector<NodeId>& candidates,
                              bool cot_enabled) {
    ParsedDecision out;
    const auto doc = extract_json_object(reply);
    if (!doc) {
        out.error = "reply is not a JSON object";
        return out;
    }
    auto text_field = [&](const char* key, std::string& dst) -> bool {
        auto it = doc->find(key);
        if (it == doc->end() || !it->is_string()) {
            out.error = std::string("field '") + key + "' missing or not a string";
            return false;
        }
        dst = it->get<std::string>();
        return true;
    };

    std::string action_text;
    if (!text_field("action", action_text)) return out;
    DecisionTriple t;
    if (cot_enabled) {
        if (!text_field("thinking", t.thinking) || !text_field("planning", t.planning)) return out;
        if (t.thinking.empty() || t.planning.empty()) {
            out.error = "fields 'thinking' and 'planning' must not be empty";
            return out;
        }
    }
    t.action = Action::parse(action_text);
    if (!t.action.is_stop() &&
        std::find(candidates.begin(), candidates.end(), t.action.target()) == candidates.end()) {
        std::string allowed;
        for (const auto& c : candidates) allowed += c + ", ";
        out.error = "action '" + action_text + "' is not one of: " + allowed + "stop";
        return out;
    }
    out.triple = std::move(t);
    return out;
}

std::string render_retry(const std::string& prompt, const std::string& error) {
    return prompt + "\n=== PREVIOUS REPLY REJECTED ===\n" + error +
           "\nReply again, following OUTPUT-FORMAT exactly.\n";
}

Decision decide(ModelBackend& backend, const std::string& prompt,
                const std::vector<NodeId>& candidates, const DeciderConfig& config) {
    if (candidates.empty()) throw std::invalid_argument("decide needs at least one candidate");
    config.validate();

    Decision d;
    ChatRequest req;
    req.system = kDeciderSystemMessage;
    req.user = prompt;
    req.tag = "decide";
    for (int attempt = 0; attempt <= config.max_parse_retries; ++attempt) {
        ++d.attempts;
        const std::string reply = backend.complete(req);
        ParsedDecision parsed = parse_decision(reply, candidates, config.cot_enabled);
        if (parsed.triple) {
            d.triple = std::move(*parsed.triple);
            return d;
        }
        d.last_error = parsed.error;
        req.user = render_retry(prompt, parsed.error);
    }
    log_warn("decider fell back to stop after " + std::to_string(d.attempts) +
             " unparseable replies (" + d.last_error + ")");
    d.fallback = true;
    d.triple = DecisionTriple{std::string(kFallbackThinking), "stop here", Action::stop()};
    return d;
}

}  // namespace sevln
