#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sevln/memory.hpp"
#include "sevln/nav_env.hpp"

namespace sevln {

class ModelBackend;

inline constexpr std::size_t kDefaultPromptBudget = 24000;
inline constexpr std::string_view kOutputFormatVersion = "v1";

extern const char* const kReasoningTaskDescription;
/// Short system message for decide calls; the full task text sits in the prompt.
extern const char* const kDeciderSystemMessage;
extern const char* const kOutputFormatCot;
extern const char* const kOutputFormatActionOnly;

/// Everything one decision prompt is assembled from, in section order.
struct PromptBundle {
    std::string task_desc = kReasoningTaskDescription;
    std::string instruction;
    MapText map;
    /// Rendered experiences, best first.
    std::vector<std::string> fewshot;
    Observation observation;
    bool cot_enabled = true;
    std::size_t budget = kDefaultPromptBudget;
};

/// Sections TASK, INSTRUCTION, MAP, EXPERIENCE (omitted when empty),
/// CANDIDATES, OUTPUT-FORMAT. Over budget, the oldest map annotations go
/// first, then the lowest-ranked experiences. Throws BudgetError when the
/// remaining sections alone exceed the budget.
std::string render_prompt(const PromptBundle& bundle);

std::string render_candidates(const Observation& obs);

struct DeciderConfig {
    bool cot_enabled = true;
    int max_parse_retries = 2;
    std::size_t budget = kDefaultPromptBudget;
    std::string fallback_policy = "stop";

    void validate() const;
};

struct Decision {
    DecisionTriple triple;
    int attempts = 0;
    bool fallback = false;
    std::string last_error;
};

inline constexpr std::string_view kFallbackThinking = "fallback: unparseable model output";

/// First balanced-looking {...} span of a reply, parsed; nullopt if none.
std::optional<nlohmann::json> extract_json_object(std::string_view reply);

struct ParsedDecision {
    std::optional<DecisionTriple> triple;
    std::string error;
};

ParsedDecision parse_decision(std::string_view reply, const std::vector<NodeId>& candidates,
                              bool cot_enabled);

/// Asks the backend for a decision, re-prompting with the parse error up to
/// max_parse_retries times, then falling back to Stop. The returned action is
/// always Stop or one of `candidates`. Backend transport errors propagate.
Decision decide(ModelBackend& backend, const std::string& prompt,
                const std::vector<NodeId>& candidates, const DeciderConfig& config);

/// Retry message appended to the original prompt after a rejected reply.
std::string render_retry(const std::string& prompt, const std::string& error);

}  // namespace sevln
