// sevln: run, sweep and validate navigation suites.
//
// Exit codes: 0 success, 1 world/config error, 2 partial suite failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sevln/error.hpp"
#include "sevln/harness.hpp"
#include "sevln/log.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

struct Overrides {
    std::string world;
    std::string episodes;
    std::string config;
    std::string mode;
    std::optional<std::size_t> shots;
    bool no_cot = false;
    bool no_reflection = false;
    bool no_evaluator = false;
    std::string repo;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--world", o.world, "Graph JSON file");
    cmd->add_option("--episodes", o.episodes, "Episodes JSON file");
    cmd->add_option("--config", o.config, "Run config JSON")->required();
    cmd->add_option("--mode", o.mode, "evaluate or evolve")
        ->check(CLI::IsMember({"evaluate", "evolve"}));
    cmd->add_option("--shots", o.shots, "Experiences shown to the decider");
    cmd->add_flag("--no-cot", o.no_cot, "Action-only output format");
    cmd->add_flag("--no-reflection", o.no_reflection, "Disable correction and commits");
    cmd->add_flag("--no-evaluator", o.no_evaluator, "Withhold metrics from the corrector");
    cmd->add_option("--repo", o.repo, "Experience repository (JSONL)");
    cmd->add_option("--out", o.out, "Runs root directory");
    cmd->add_option("--seed", o.seed, "Seed for stochastic policies");
    cmd->add_option("--workers", o.workers, "Parallel episodes in evaluate mode");
}

sevln::RunConfig resolve_config(const Overrides& o) {
    sevln::RunConfig c = sevln::RunConfig::load(o.config);
    if (!o.world.empty()) c.world = o.world;
    if (!o.episodes.empty()) c.episodes = o.episodes;
    if (!o.mode.empty()) c.mode = sevln::parse_run_mode(o.mode);
    if (o.shots) c.shots = *o.shots;
    if (o.no_cot) c.cot_enabled = false;
    if (o.no_reflection) c.reflection_enabled = false;
    if (o.no_evaluator) c.evaluator_enabled = false;
    if (!o.repo.empty()) c.repo = o.repo;
    if (!o.out.empty()) c.out = o.out;
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    c.validate();
    return c;
}

void print_summary(const std::string& label, const sevln::SuiteReport& r) {
    std::printf("%-32s episodes=%zu", label.c_str(), r.rows.size());
    if (r.aggregates) {
        std::printf(" NE=%.2f OSR=%.1f%% SR=%.1f%% SPL=%.1f%%", r.aggregates->ne,
                    r.aggregates->osr, r.aggregates->sr, r.aggregates->spl);
    } else {
        std::printf(" NE=- OSR=- SR=- SPL=-");
    }
    std::printf(" repo=%zu->%zu", r.repo_size_before, r.repo_size_after);
    if (r.failed_episodes() > 0) std::printf(" failed=%zu", r.failed_episodes());
    std::printf("\n");
}

int cmd_run(const Overrides& o) {
    const sevln::RunConfig config = resolve_config(o);
    const sevln::World world = sevln::load_world(config.world, config.episodes);
    sevln::ExperienceRepo repo = sevln::open_repo(config);
    const sevln::SuiteRun run = sevln::run_suite(config, world, repo);
    if (config.mode == sevln::RunMode::evolve && !config.repo.empty()) repo.flush();
    print_summary(std::string(sevln::to_string(config.mode)), run.report);
    if (!config.out.empty()) {
        const auto dir = sevln::make_run_dir(config.out);
        sevln::write_suite(run, dir);
        std::printf("wrote %s\n", dir.string().c_str());
    }
    return run.report.failed_episodes() > 0 ? kExitPartial : kExitOk;
}

int cmd_sweep(const Overrides& o, const std::string& axis_name) {
    const sevln::SweepAxis axis = sevln::parse_sweep_axis(axis_name);
    const sevln::RunConfig config = resolve_config(o);
    const sevln::World world = sevln::load_world(config.world, config.episodes);
    const sevln::ExperienceRepo repo = sevln::open_repo(config);
    const sevln::SweepResult result = sevln::run_sweep(config, axis, world, repo);
    bool partial = false;
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        if (result.runs[i]) {
            print_summary(result.cells[i].label, result.runs[i]->report);
            partial = partial || result.runs[i]->report.failed_episodes() > 0;
        } else {
            std::printf("%-32s FAILED: %s\n", result.cells[i].label.c_str(), result.errors[i].c_str());
            partial = true;
        }
    }
    if (!config.out.empty()) {
        const auto dir = sevln::make_run_dir(config.out);
        sevln::write_sweep(result, dir);
        std::printf("wrote %s\n", dir.string().c_str());
    }
    return partial ? kExitPartial : kExitOk;
}

int cmd_validate(const std::string& world_file, const std::string& episodes_file) {
    const sevln::World world = sevln::load_world(world_file, episodes_file);
    std::printf("ok: %zu nodes, %zu edges, %zu episodes\n", world.graph.node_count(),
                world.graph.edge_count(), world.episodes.size());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-evolving navigation agent harness"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "quiet, warn or info")
        ->check(CLI::IsMember({"quiet", "warn", "info"}));

    Overrides run_opts;
    CLI::App* run = app.add_subcommand("run", "Run one suite");
    add_run_options(run, run_opts);

    Overrides sweep_opts;
    std::string axis;
    CLI::App* sweep = app.add_subcommand("sweep", "Run an ablation sweep");
    sweep->add_option("--axis", axis, "shots, grid, repo-size or evaluator")
        ->required()
        ->check(CLI::IsMember({"shots", "grid", "repo-size", "evaluator"}));
    add_run_options(sweep, sweep_opts);

    std::string world_file, episodes_file;
    CLI::App* validate = app.add_subcommand("validate", "Check a world and its episodes");
    validate->add_option("--world", world_file, "Graph JSON file")->required();
    validate->add_option("--episodes", episodes_file, "Episodes JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    sevln::set_log_level(log_level == "quiet"  ? sevln::LogLevel::quiet
                         : log_level == "info" ? sevln::LogLevel::info
                                               : sevln::LogLevel::warn);
    try {
        if (*run) return cmd_run(run_opts);
        if (*sweep) return cmd_sweep(sweep_opts, axis);
        return cmd_validate(world_file, episodes_file);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
