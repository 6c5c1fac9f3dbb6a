#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sevln/backend.hpp"
#include "sevln/experience.hpp"
#include "sevln/memory.hpp"
#include "sevln/nav_env.hpp"
#include "sevln/reasoning.hpp"
#include "sevln/reflection.hpp"
#include "sevln/retrieval.hpp"

namespace sevln {

enum class RunMode { evaluate, evolve };

RunMode parse_run_mode(std::string_view text);
std::string_view to_string(RunMode m);

struct RunConfig {
    std::filesystem::path world;
    std::filesystem::path episodes;
    std::filesystem::path vocab;  // optional landmark vocabulary
    BackendConfig backend;
    EmbedderConfig embedder;
    std::size_t shots = kDefaultShots;
    bool cot_enabled = true;
    bool reflection_enabled = true;
    bool evaluator_enabled = true;
    /// Commit successful episodes unchanged (evolve mode).
    bool success_as_is = true;
    bool exact_match_filter = false;
    int max_steps = kDefaultMaxSteps;
    int max_parse_retries = 2;
    std::size_t budget = kDefaultPromptBudget;
    std::filesystem::path repo;  // empty: in-memory repository
    RunMode mode = RunMode::evaluate;
    std::uint64_t seed = 0;
    std::filesystem::path out;   // runs root; empty: nothing written
    int workers = 1;             // evaluate mode only

    /// Throws ConfigError.
    void validate() const;
    /// Relative paths resolve against `base_dir`. Unknown keys are rejected.
    static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

/// Creates the model backend for one episode.
using BackendFactory =
    std::function<std::unique_ptr<ModelBackend>(const Episode& episode, std::uint64_t seed)>;

BackendFactory make_backend_factory(const BackendConfig& config);

struct EpisodeResult {
    MetricReport report;
    Termination termination = Termination::none;
    std::string error;
    std::vector<NodeId> trajectory;
    int steps = 0;
    TopoMap map;
    LandmarkSet landmarks;
    /// (created_seq, similarity) of the experiences shown to the decider.
    std::vector<std::pair<std::int64_t, double>> retrieved;
    int fallbacks = 0;
    std::optional<ExperienceEntry> committed;
    std::string reflection_note;
    std::vector<TranscriptRow> transcript;
};

/// One closed-loop episode. Module failures end the episode with
/// Termination::error instead of throwing. In evolve mode with reflection on,
/// the corrected (or success-as-is) decisions are committed to `repo`.
EpisodeResult run_episode(const RunConfig& config, const NavGraph& graph, const Episode& episode,
                          ExperienceRepo& repo, ModelBackend& backend, EmbeddingBackend& embedder,
                          const std::optional<std::vector<std::string>>& vocab = std::nullopt);

struct Aggregates {
    double ne = 0.0;   // mean meters
    double sr = 0.0;   // percent
    double spl = 0.0;  // percent
    double osr = 0.0;  // percent
};

/// Means over `reports`, summed in order; nullopt when empty.
std::optional<Aggregates> aggregate(const std::vector<MetricReport>& reports);

struct EpisodeRow {
    MetricReport report;
    std::string termination;
    int steps = 0;
    bool committed = false;
    std::string error;
};

struct SuiteReport {
    std::string label;
    nlohmann::json config;
    std::vector<EpisodeRow> rows;
    std::optional<Aggregates> aggregates;
    std::size_t repo_size_before = 0;
    std::size_t repo_size_after = 0;

    std::vector<MetricReport> reports() const;
    std::size_t failed_episodes() const;
    nlohmann::json to_json() const;
    static SuiteReport from_json(const nlohmann::json& doc);
    std::string to_csv() const;
};

struct SuiteRun {
    SuiteReport report;
    std::vector<EpisodeResult> episodes;
};

/// Runs every episode of `world`. Evaluate mode uses config.workers threads
/// against a read-only `repo`; evolve mode is sequential and commits between
/// episodes, flushing to disk when the repo is file-backed.
SuiteRun run_suite(const RunConfig& config, const World& world, ExperienceRepo& repo,
                   const BackendFactory& factory = {});

/// report.json, report.csv and episodes/<id>/{map.txt, transcript.json}.
void write_suite(const SuiteRun& run, const std::filesystem::path& dir);

enum class SweepAxis { shots, grid, repo_size, evaluator };

SweepAxis parse_sweep_axis(std::string_view text);
std::string_view to_string(SweepAxis a);

struct SweepCell {
    std::string label;
    RunConfig config;
    std::optional<std::size_t> repo_prefix;
};

/// shots {0,2,5}; grid (CoT, reflection) in table order; repo-size
/// {0,10,30,50}; evaluator {on, off}. Grid and evaluator cells run in evolve
/// mode since reflection only acts there.
std::vector<SweepCell> sweep_cells(const RunConfig& base, SweepAxis axis);

struct SweepResult {
    SweepAxis axis = SweepAxis::shots;
    std::vector<SweepCell> cells;
    /// One entry per cell; empty when the cell failed.
    std::vector<std::optional<SuiteRun>> runs;
    std::vector<std::string> errors;

    std::string combined_csv() const;
};

/// Every cell starts from its own in-memory copy of `base_repo`.
SweepResult run_sweep(const RunConfig& base, SweepAxis axis, const World& world,
                      const ExperienceRepo& base_repo, const BackendFactory& factory = {});

/// Writes one directory per cell plus sweep.csv.
void write_sweep(const SweepResult& result, const std::filesystem::path& dir);

/// Opens config.repo (or an empty in-memory repo) with the embedder dimension.
ExperienceRepo open_repo(const RunConfig& config);
std::optional<std::vector<std::string>> load_vocab(const RunConfig& config);

/// Fresh "<root>/<YYYYmmdd-HHMMSS>[-n]" directory.
std::filesystem::path make_run_dir(const std::filesystem::path& root);

}  // namespace sevln
