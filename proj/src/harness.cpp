#include "sevln/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <thread>

#include "sevln/error.hpp"
#include "sevln/log.hpp"
#include "sevln/policies.hpp"

namespace sevln {

using nlohmann::json;
namespace fs = std::filesystem;

RunMode parse_run_mode(std::string_view text) {
    if (text == "evaluate") return RunMode::evaluate;
    if (text == "evolve") return RunMode::evolve;
    throw ConfigError("mode must be 'evaluate' or 'evolve', got '" + std::string(text) + "'");
}

std::string_view to_string(RunMode m) { return m == RunMode::evolve ? "evolve" : "evaluate"; }

// ---------------------------------------------------------------------------
// RunConfig

namespace {

void validate_settings(const RunConfig& c) {
    if (c.embedder.dimension == 0) throw ConfigError("embedder dimension must be positive");
    if (c.max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (c.max_parse_retries < 0) throw ConfigError("max_parse_retries must be >= 0");
    if (c.budget == 0) throw ConfigError("budget must be positive");
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
}

}  // namespace

void RunConfig::validate() const {
    if (world.empty() || episodes.empty()) throw ConfigError("config needs 'world' and 'episodes'");
    backend.validate();
    validate_settings(*this);
}

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "world", "episodes", "vocab", "backend", "embedder", "shots", "cot_enabled",
        "reflection_enabled", "evaluator_enabled", "success_as_is", "exact_match_filter",
        "max_steps", "max_parse_retries", "budget", "repo", "mode", "seed", "out", "workers"};
    return keys;
}

fs::path resolve(const json& v, const fs::path& base_dir) {
    fs::path p = v.get<std::string>();
    if (p.empty() || p.is_absolute()) return p;
    return (base_dir / p).lexically_normal();
}

}  // namespace

RunConfig RunConfig::from_json(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
    for (const auto& [key, _] : doc.items()) {
        if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    RunConfig c;
    try {
        if (doc.contains("world")) c.world = resolve(doc["world"], base_dir);
        if (doc.contains("episodes")) c.episodes = resolve(doc["episodes"], base_dir);
        if (doc.contains("vocab")) c.vocab = resolve(doc["vocab"], base_dir);
        if (doc.contains("repo")) c.repo = resolve(doc["repo"], base_dir);
        if (doc.contains("out")) c.out = resolve(doc["out"], base_dir);
        if (doc.contains("backend")) c.backend = BackendConfig::from_json(doc["backend"], base_dir);
        if (doc.contains("embedder")) c.embedder = EmbedderConfig::from_json(doc["embedder"]);
        c.shots = doc.value("shots", c.shots);
        c.cot_enabled = doc.value("cot_enabled", c.cot_enabled);
        c.reflection_enabled = doc.value("reflection_enabled", c.reflection_enabled);
        c.evaluator_enabled = doc.value("evaluator_enabled", c.evaluator_enabled);
        c.success_as_is = doc.value("success_as_is", c.success_as_is);
        c.exact_match_filter = doc.value("exact_match_filter", c.exact_match_filter);
        c.max_steps = doc.value("max_steps", c.max_steps);
        c.max_parse_retries = doc.value("max_parse_retries", c.max_parse_retries);
        c.budget = doc.value("budget", c.budget);
        if (doc.contains("mode")) c.mode = parse_run_mode(doc["mode"].get<std::string>());
        c.seed = doc.value("seed", c.seed);
        c.workers = doc.value("workers", c.workers);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return from_json(doc, path.parent_path());
}

json RunConfig::to_json() const {
    json j;
    j["world"] = world.generic_string();
    j["episodes"] = episodes.generic_string();
    if (!vocab.empty()) j["vocab"] = vocab.generic_string();
    j["backend"] = backend.to_json();
    j["embedder"] = embedder.to_json();
    j["shots"] = shots;
    j["cot_enabled"] = cot_enabled;
    j["reflection_enabled"] = reflection_enabled;
    j["evaluator_enabled"] = evaluator_enabled;
    j["success_as_is"] = success_as_is;
    j["exact_match_filter"] = exact_match_filter;
    j["max_steps"] = max_steps;
    j["max_parse_retries"] = max_parse_retries;
    j["budget"] = budget;
    if (!repo.empty()) j["repo"] = repo.generic_string();
    j["mode"] = std::string(to_string(mode));
    j["seed"] = seed;
    return j;
}

BackendFactory make_backend_factory(const BackendConfig& config) {
    config.validate();
    if (config.kind == "remote") {
        return [config](const Episode&, std::uint64_t) -> std::unique_ptr<ModelBackend> {
            return std::make_unique<RemoteChatBackend>(config);
        };
    }
    if (!config.policy.empty()) {
        const Policy policy = parse_policy(config.policy);
        return [policy](const Episode& ep, std::uint64_t seed) {
            return make_policy_backend(policy, ep, seed);
        };
    }
    const Script script = Script::load(config.script);
    return [script](const Episode&, std::uint64_t) -> std::unique_ptr<ModelBackend> {
        return std::make_unique<ScriptedBackend>(script);
    };
}

// ---------------------------------------------------------------------------
// Episode runner

EpisodeResult run_episode(const RunConfig& config, const NavGraph& graph, const Episode& episode,
                          ExperienceRepo& repo, ModelBackend& backend, EmbeddingBackend& embedder,
                          const std::optional<std::vector<std::string>>& vocab) {
    EpisodeResult r;
    r.map = TopoMap(episode.id);
    EpisodeState state = start_episode(episode, config.max_steps);

    DeciderConfig dc;
    dc.cot_enabled = config.cot_enabled;
    dc.max_parse_retries = config.max_parse_retries;
    dc.budget = config.budget;

    try {
        r.landmarks = extract_landmarks(backend, episode.instruction, vocab);
        FewShotBlock fewshot;
        if (config.shots > 0 && !repo.empty()) {
            const QueryVector q = embed(embedder, r.landmarks);
            RetrieveOptions opts;
            opts.exact_match_filter = config.exact_match_filter;
            opts.landmarks = &r.landmarks;
            fewshot = retrieve(repo, q, config.shots, opts);
        }
        r.retrieved = fewshot.entries_used;

        while (!state.terminated()) {
            const Observation obs = observe(graph, state);
            r.map.update(obs, annotate(backend, kMemoryTaskDescription, obs));

            PromptBundle bundle;
            bundle.instruction = episode.instruction;
            bundle.map = render_map_parts(r.map);
            bundle.fewshot = fewshot.items;
            bundle.observation = obs;
            bundle.cot_enabled = config.cot_enabled;
            bundle.budget = config.budget;
            const Decision d = decide(backend, render_prompt(bundle), obs.candidate_ids(), dc);
            if (d.fallback) ++r.fallbacks;
            r.map.attach_decision(d.triple);
            state = step(graph, state, d.triple.action);
        }
    } catch (const std::exception& e) {
        state = abort_episode(state, e.what());
        log_warn("episode " + episode.id + " aborted: " + e.what());
    }

    r.report = evaluate(graph, episode, state);
    r.termination = state.termination;
    r.error = state.error_message;
    r.trajectory = state.trajectory;
    r.steps = state.steps_taken;

    const bool reflect = config.mode == RunMode::evolve && config.reflection_enabled &&
                         state.termination != Termination::error &&
                         (r.report.sr == 0 || config.success_as_is);
    if (reflect) {
        try {
            CorrectorConfig cc;
            cc.max_parse_retries = config.max_parse_retries;
            cc.evaluator_enabled = config.evaluator_enabled;
            cc.force = config.success_as_is;
            const Correction c =
                correct(backend, kReflectionTaskDescription, r.map, r.report, cc);
            if (c.revised) {
                r.committed = commit(repo, embedder, r.landmarks, r.map, r.map.decisions(),
                                     *c.revised, c.success_as_is);
                r.reflection_note = c.success_as_is
                                        ? "committed as success"
                                        : "corrected decision " + std::to_string(c.step);
            } else {
                r.reflection_note = c.skip_reason;
            }
        } catch (const std::exception& e) {
            r.reflection_note = std::string("reflection failed: ") + e.what();
            log_warn("episode " + episode.id + ": " + r.reflection_note);
        }
    }
    r.transcript = backend.transcript();
    return r;
}

// ---------------------------------------------------------------------------
// Reports

std::optional<Aggregates> aggregate(const std::vector<MetricReport>& reports) {
    if (reports.empty()) return std::nullopt;
    double ne = 0, sr = 0, spl = 0, osr = 0;
    for (const auto& r : reports) {
        ne += r.ne;
        sr += r.sr;
        spl += r.spl;
        osr += r.osr;
    }
    const double n = static_cast<double>(reports.size());
    return Aggregates{ne / n, 100.0 * sr / n, 100.0 * spl / n, 100.0 * osr / n};
}

std::vector<MetricReport> SuiteReport::reports() const {
    std::vector<MetricReport> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.report);
    return out;
}

std::size_t SuiteReport::failed_episodes() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.termination == to_string(Termination::error);
    return n;
}

json SuiteReport::to_json() const {
    json j;
    j["label"] = label;
    j["config"] = config;
    j["repo_size_before"] = repo_size_before;
    j["repo_size_after"] = repo_size_after;
    j["episode_count"] = rows.size();
    if (aggregates) {
        j["aggregates"] = {{"ne", aggregates->ne},
                           {"sr_pct", aggregates->sr},
                           {"spl_pct", aggregates->spl},
                           {"osr_pct", aggregates->osr}};
    } else {
        j["aggregates"] = {{"ne", nullptr}, {"sr_pct", nullptr}, {"spl_pct", nullptr},
                           {"osr_pct", nullptr}};
    }
    json eps = json::array();
    for (const auto& row : rows) {
        json e = report_to_json(row.report);
        e["termination"] = row.termination;
        e["steps"] = row.steps;
        e["committed"] = row.committed;
        if (!row.error.empty()) e["error"] = row.error;
        eps.push_back(std::move(e));
    }
    j["episodes"] = std::move(eps);
    return j;
}

SuiteReport SuiteReport::from_json(const json& doc) {
    SuiteReport s;
    s.label = doc.at("label").get<std::string>();
    s.config = doc.at("config");
    s.repo_size_before = doc.at("repo_size_before").get<std::size_t>();
    s.repo_size_after = doc.at("repo_size_after").get<std::size_t>();
    for (const auto& e : doc.at("episodes")) {
        EpisodeRow row;
        row.report.episode_id = e.at("episode_id").get<std::string>();
        row.report.ne = e.at("ne").get<double>();
        row.report.sr = e.at("sr").get<int>();
        row.report.spl = e.at("spl").get<double>();
        row.report.osr = e.at("osr").get<int>();
        if (!e.at("divergence_step").is_null()) {
            row.report.divergence_step = e.at("divergence_step").get<int>();
        }
        row.termination = e.at("termination").get<std::string>();
        row.steps = e.at("steps").get<int>();
        row.committed = e.at("committed").get<bool>();
        row.error = e.value("error", std::string());
        s.rows.push_back(std::move(row));
    }
    const auto& agg = doc.at("aggregates");
    if (!agg.at("ne").is_null()) {
        s.aggregates = Aggregates{agg.at("ne").get<double>(), agg.at("sr_pct").get<double>(),
                                  agg.at("spl_pct").get<double>(), agg.at("osr_pct").get<double>()};
    }
    return s;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string SuiteReport::to_csv() const {
    std::string out = "episode_id,ne,osr,sr,spl,divergence_step,termination,steps,committed\n";
    for (const auto& row : rows) {
        const auto& r = row.report;
        out += csv_field(r.episode_id) + "," + num(r.ne) + "," + std::to_string(r.osr) + "," +
               std::to_string(r.sr) + "," + num(r.spl) + "," +
               (r.divergence_step ? std::to_string(*r.divergence_step) : std::string()) + "," +
               row.termination + "," + std::to_string(row.steps) + "," +
               (row.committed ? "1" : "0") + "\n";
    }
    if (aggregates) {
        out += "mean," + num(aggregates->ne) + "," + num(aggregates->osr) + "," +
               num(aggregates->sr) + "," + num(aggregates->spl) + ",,,,\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Suite

std::optional<std::vector<std::string>> load_vocab(const RunConfig& config) {
    if (config.vocab.empty()) return std::nullopt;
    return load_vocabulary(config.vocab);
}

ExperienceRepo open_repo(const RunConfig& config) {
    if (config.repo.empty()) return ExperienceRepo(config.embedder.dimension);
    return ExperienceRepo::open(config.repo, config.embedder.dimension);
}

SuiteRun run_suite(const RunConfig& config, const World& world, ExperienceRepo& repo,
                   const BackendFactory& factory_in) {
    validate_settings(config);
    if (repo.dimension() != config.embedder.dimension) {
        throw ConfigError("repository dimension " + std::to_string(repo.dimension()) +
                          " does not match embedder dimension " +
                          std::to_string(config.embedder.dimension));
    }
    const BackendFactory factory = factory_in ? factory_in : make_backend_factory(config.backend);
    const auto vocab = load_vocab(config);

    SuiteRun run;
    run.report.config = config.to_json();
    run.report.repo_size_before = repo.size();
    run.episodes.resize(world.episodes.size());

    auto run_one = [&](std::size_t i, ExperienceRepo& target) {
        const Episode& ep = world.episodes[i];
        std::unique_ptr<EmbeddingBackend> embedder;
        std::unique_ptr<ModelBackend> backend;
        try {
            embedder = make_embedder(config.embedder);
            backend = factory(ep, config.seed);
        } catch (const std::exception& e) {
            EpisodeResult r;
            r.map = TopoMap(ep.id);
            EpisodeState s = abort_episode(start_episode(ep, config.max_steps), e.what());
            r.report = evaluate(world.graph, ep, s);
            r.termination = s.termination;
            r.error = s.error_message;
            r.trajectory = s.trajectory;
            log_warn("episode " + ep.id + " aborted: " + e.what());
            run.episodes[i] = std::move(r);
            return;
        }
        run.episodes[i] = run_episode(config, world.graph, ep, target, *backend, *embedder, vocab);
    };

    if (config.mode == RunMode::evolve) {
        for (std::size_t i = 0; i < world.episodes.size(); ++i) {
            log_info("episode " + world.episodes[i].id);
            run_one(i, repo);
            if (run.episodes[i].committed && !repo.path().empty()) repo.flush();
        }
    } else {
        // Commits are disabled in evaluate mode, so every worker may share the repo.
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < world.episodes.size(); i = next++) run_one(i, repo);
        };
        const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(config.workers),
                                                    world.episodes.size());
        if (n <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
    }

    for (const auto& r : run.episodes) {
        EpisodeRow row;
        row.report = r.report;
        row.termination = std::string(to_string(r.termination));
        row.steps = r.steps;
        row.committed = r.committed.has_value();
        row.error = r.error;
        run.report.rows.push_back(std::move(row));
    }
    run.report.aggregates = aggregate(run.report.reports());
    run.report.repo_size_after = repo.size();
    return run;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

std::string safe_name(const std::string& id) {
    std::string out;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_' || c == '.';
        out += ok ? c : '_';
    }
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

}  // namespace

void write_suite(const SuiteRun& run, const fs::path& dir) {
    fs::create_directories(dir / "episodes");
    write_file(dir / "report.json", run.report.to_json().dump(2) + "\n");
    write_file(dir / "report.csv", run.report.to_csv());
    for (const auto& ep : run.episodes) {
        const fs::path ep_dir = dir / "episodes" / safe_name(ep.report.episode_id);
        fs::create_directories(ep_dir);
        write_file(ep_dir / "map.txt", render_map(ep.map));
        write_file(ep_dir / "transcript.json", transcript_to_json(ep.transcript).dump(2) + "\n");
    }
}

// ---------------------------------------------------------------------------
// Sweeps

SweepAxis parse_sweep_axis(std::string_view text) {
    if (text == "shots") return SweepAxis::shots;
    if (text == "grid") return SweepAxis::grid;
    if (text == "repo-size") return SweepAxis::repo_size;
    if (text == "evaluator") return SweepAxis::evaluator;
    throw ConfigError("axis must be shots, grid, repo-size or evaluator, got '" +
                      std::string(text) + "'");
}

std::string_view to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::shots: return "shots";
        case SweepAxis::grid: return "grid";
        case SweepAxis::repo_size: return "repo-size";
        case SweepAxis::evaluator: return "evaluator";
    }
    return "unknown";
}

std::vector<SweepCell> sweep_cells(const RunConfig& base, SweepAxis axis) {
    std::vector<SweepCell> cells;
    switch (axis) {
        case SweepAxis::shots:
            for (std::size_t n : {0, 2, 5}) {
                SweepCell c{std::to_string(n) + "-shots", base, std::nullopt};
                c.config.shots = n;
                cells.push_back(std::move(c));
            }
            break;
        case SweepAxis::grid:
            for (bool cot : {false, true}) {
                for (bool refl : {false, true}) {
                    SweepCell c{std::string(cot ? "w/ CoT" : "w/o CoT") + " | " +
                                    (refl ? "w/ Reflection" : "w/o Reflection"),
                                base, std::nullopt};
                    c.config.cot_enabled = cot;
                    c.config.reflection_enabled = refl;
                    c.config.mode = RunMode::evolve;
                    cells.push_back(std::move(c));
                }
            }
            break;
        case SweepAxis::repo_size:
            for (std::size_t k : {0, 10, 30, 50}) {
                cells.push_back({std::to_string(k) + "-entries", base, k});
            }
            break;
        case SweepAxis::evaluator:
            for (bool on : {true, false}) {
                SweepCell c{on ? "w/ evaluator" : "w/o evaluator", base, std::nullopt};
                c.config.evaluator_enabled = on;
                c.config.reflection_enabled = true;
                c.config.mode = RunMode::evolve;
                cells.push_back(std::move(c));
            }
            break;
    }
    return cells;
}

SweepResult run_sweep(const RunConfig& base, SweepAxis axis, const World& world,
                      const ExperienceRepo& base_repo, const BackendFactory& factory) {
    SweepResult result;
    result.axis = axis;
    result.cells = sweep_cells(base, axis);
    for (const auto& cell : result.cells) {
        try {
            ExperienceRepo repo = base_repo.rebound({});
            if (cell.repo_prefix) {
                if (base_repo.size() < *cell.repo_prefix) {
                    throw ConfigError("repo-size cell needs " + std::to_string(*cell.repo_prefix) +
                                      " entries, repository has " +
                                      std::to_string(base_repo.size()));
                }
                repo = base_repo.prefix(*cell.repo_prefix);
            }
            SuiteRun run = run_suite(cell.config, world, repo, factory);
            run.report.label = cell.label;
            run.report.config["sweep_axis"] = std::string(to_string(axis));
            result.runs.emplace_back(std::move(run));
            result.errors.emplace_back();
        } catch (const std::exception& e) {
            log_warn("sweep cell '" + cell.label + "' failed: " + e.what());
            result.runs.emplace_back(std::nullopt);
            result.errors.emplace_back(e.what());
        }
    }
    return result;
}

std::string SweepResult::combined_csv() const {
    std::string out =
        "setting,cot,reflection,evaluator,shots,repo_size,episodes,ne,osr,sr,spl,"
        "repo_size_after,error\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const RunConfig& c = cells[i].config;
        out += csv_field(cells[i].label) + "," + (c.cot_enabled ? "w/" : "w/o") + "," +
               (c.reflection_enabled ? "w/" : "w/o") + "," + (c.evaluator_enabled ? "w/" : "w/o") +
               "," + std::to_string(c.shots) + ",";
        const auto& run = runs[i];
        if (!run) {
            out += (cells[i].repo_prefix ? std::to_string(*cells[i].repo_prefix) : std::string()) +
                   ",,,,,,," + csv_field(errors[i]) + "\n";
            continue;
        }
        const SuiteReport& r = run->report;
        out += std::to_string(r.repo_size_before) + "," + std::to_string(r.rows.size()) + ",";
        if (r.aggregates) {
            out += num(r.aggregates->ne) + "," + num(r.aggregates->osr) + "," +
                   num(r.aggregates->sr) + "," + num(r.aggregates->spl) + ",";
        } else {
            out += ",,,,";
        }
        out += std::to_string(r.repo_size_after) + ",\n";
    }
    return out;
}

void write_sweep(const SweepResult& result, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        if (!result.runs[i]) continue;
        write_suite(*result.runs[i],
                    dir / (std::to_string(i) + "_" + safe_name(result.cells[i].label)));
    }
    write_file(dir / "sweep.csv", result.combined_csv());
}

fs::path make_run_dir(const fs::path& root) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
    fs::path dir = root / buf;
    for (int n = 1; fs::exists(dir); ++n) dir = root / (std::string(buf) + "-" + std::to_string(n));
    fs::create_directories(dir);
    return dir;
}

}  // namespace sevln
