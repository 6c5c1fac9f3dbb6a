// Live smoke test: one bundled episode against the remote backend configured
// in data/configs/live.json (or the config given as the first argument).
// Needs the API key variable named in that config. Not run by ctest.

#include <cstdio>
#include <cstdlib>
#include <exception>

#include "sevln/harness.hpp"
#include "sevln/log.hpp"
#include "support/fixtures.hpp"

using namespace sevln;

int main(int argc, char** argv) {
    set_log_level(LogLevel::info);
    const std::filesystem::path config_path =
        argc > 1 ? std::filesystem::path(argv[1]) : fixtures::data_path("configs/live.json");
    try {
        RunConfig config = RunConfig::load(config_path);
        config.validate();
        if (std::getenv(config.backend.api_key_env.c_str()) == nullptr) {
            std::printf("SKIP  live smoke: %s is not set\n", config.backend.api_key_env.c_str());
            return 0;
        }
        World world = load_world(config.world, config.episodes);
        world.episodes.resize(1);
        ExperienceRepo repo = open_repo(config);
        const SuiteRun run = run_suite(config, world, repo);
        const EpisodeResult& ep = run.episodes.at(0);

        const fixtures::TempDir tmp;
        write_suite(run, tmp.path());
        const auto transcript = tmp.path() / "episodes" / ep.report.episode_id / "transcript.json";
        const bool wrote = std::filesystem::exists(transcript) && !ep.transcript.empty();
        const auto decisions = ep.map.decisions();
        const bool parsed = ep.termination != Termination::error && ep.fallbacks == 0 &&
                            decisions.size() == ep.map.annotations().size();

        std::printf("%s  live smoke: %s, %d steps, %zu calls, fallbacks %d, NE %.2f, SR %d\n",
                    wrote && parsed ? "PASS" : "FAIL", ep.report.episode_id.c_str(), ep.steps,
                    ep.transcript.size(), ep.fallbacks, ep.report.ne, ep.report.sr);
        if (!ep.error.empty()) std::printf("      error: %s\n", ep.error.c_str());
        return wrote && parsed ? 0 : 1;
    } catch (const std::exception& e) {
        std::printf("FAIL  live smoke: %s\n", e.what());
        return 1;
    }
}
