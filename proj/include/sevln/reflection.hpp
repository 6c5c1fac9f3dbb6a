#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sevln/experience.hpp"
#include "sevln/memory.hpp"
#include "sevln/nav_env.hpp"

namespace sevln {

class ModelBackend;
class EmbeddingBackend;
class LandmarkSet;

/// Outcome of one episode: navigation error (geodesic meters), success,
/// success weighted by path length, oracle success, and the first trajectory
/// position that left the reference path.
struct MetricReport {
    std::string episode_id;
    double ne = 0.0;
    int sr = 0;
    double spl = 0.0;
    int osr = 0;
    std::optional<int> divergence_step;

    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

nlohmann::json report_to_json(const MetricReport& r);

/// Smallest t with nav[t] != gt[t]; nullopt when nav is a prefix of (or equal
/// to) gt. A nav path running past the end of gt diverges at gt.size().
std::optional<int> divergence_step(const std::vector<NodeId>& nav, const std::vector<NodeId>& gt);

/// Success and oracle success count a node as arrived when its geodesic
/// distance to the goal is within kSuccessRadius. Episodes that ended in an
/// error never count as successful.
MetricReport evaluate(const NavGraph& graph, const Episode& episode, const EpisodeState& state);

/// evaluate() for a bare trajectory that ended normally.
MetricReport evaluate_trajectory(const NavGraph& graph, const Episode& episode,
                                 const std::vector<NodeId>& trajectory);

/// Decision index the corrector should examine: the decision that produced
/// the divergence, otherwise the last decision (a premature stop).
int focus_decision(const MetricReport& report, std::size_t decision_count);

extern const char* const kReflectionTaskDescription;
extern const char* const kCorrectorOutputFormat;

struct CorrectorConfig {
    int max_parse_retries = 2;
    /// When off, metrics and the divergence hint are withheld from the prompt.
    bool evaluator_enabled = true;
    /// Correct even a successful episode (yields a success-as-is revision).
    bool force = false;
};

struct Correction {
    /// Full revised decision list; empty optional means correction skipped.
    std::optional<std::vector<DecisionTriple>> revised;
    int step = -1;
    int attempts = 0;
    bool success_as_is = false;
    std::string skip_reason;
};

std::string render_correction_prompt(const TopoMap& map, const MetricReport* report);

struct ParsedRevision {
    std::optional<DecisionTriple> triple;
    int step = -1;
    std::string error;
};

ParsedRevision parse_revision(std::string_view reply, const TopoMap& map);

/// Revises the first unreasonable decision. Never throws for bad model output;
/// unusable replies end in a skipped correction. Transport errors propagate.
Correction correct(ModelBackend& backend, const std::string& ref_task_desc, const TopoMap& map,
                   const MetricReport& report, const CorrectorConfig& config = {});

/// Embeds the landmarks and appends a new experience to the repository.
const ExperienceEntry& commit(ExperienceRepo& repo, EmbeddingBackend& embedder,
                              const LandmarkSet& landmarks, const TopoMap& map,
                              const std::vector<DecisionTriple>& original,
                              const std::vector<DecisionTriple>& revised, bool success_as_is);

}  // namespace sevln
