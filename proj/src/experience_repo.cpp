#include "sevln/experience.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sevln/error.hpp"

namespace sevln {

using nlohmann::json;

json triple_to_json(const DecisionTriple& t) {
    return {{"thinking", t.thinking}, {"planning", t.planning}, {"action", t.action.to_string()}};
}

DecisionTriple triple_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("decision triple must be an object");
    DecisionTriple t;
    t.thinking = j.at("thinking").get<std::string>();
    t.planning = j.at("planning").get<std::string>();
    t.action = Action::parse(j.at("action").get<std::string>());
    return t;
}

json entry_to_json(const ExperienceEntry& e) {
    json original = json::array();
    for (const auto& t : e.original) original.push_back(triple_to_json(t));
    json revised = json::array();
    for (const auto& t : e.revised) revised.push_back(triple_to_json(t));
    return {{"landmarks", e.landmarks},
            {"descriptions", e.descriptions},
            {"original", std::move(original)},
            {"revised", std::move(revised)},
            {"embedding", e.embedding},
            {"source_episode", e.source_episode},
            {"created_seq", e.created_seq},
            {"success_as_is", e.success_as_is}};
}

ExperienceEntry entry_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("entry must be a JSON object");
    ExperienceEntry e;
    try {
        e.landmarks = j.at("landmarks").get<std::vector<std::string>>();
        e.descriptions = j.at("descriptions").get<std::vector<std::string>>();
        for (const auto& t : j.at("original")) e.original.push_back(triple_from_json(t));
        for (const auto& t : j.at("revised")) e.revised.push_back(triple_from_json(t));
        e.embedding = j.at("embedding").get<std::vector<float>>();
        e.source_episode = j.at("source_episode").get<std::string>();
        e.created_seq = j.at("created_seq").get<std::int64_t>();
        e.success_as_is = j.at("success_as_is").get<bool>();
    } catch (const json::exception& ex) {
        throw ParseError(ex.what());
    }
    return e;
}

void validate_entry(const ExperienceEntry& e, std::size_t dimension) {
    if (e.embedding.size() != dimension) {
        throw DimensionError("embedding dimension " + std::to_string(e.embedding.size()) +
                             " does not match repository dimension " + std::to_string(dimension));
    }
    double sq = 0.0;
    for (float v : e.embedding) {
        if (!std::isfinite(v)) throw ValidationError("embedding contains a non-finite value");
        sq += static_cast<double>(v) * v;
    }
    if (!(sq > 0.0)) throw ValidationError("embedding has zero norm");
    if (!e.success_as_is && e.revised == e.original) {
        throw ValidationError("revised decisions equal the original and entry is not success-as-is");
    }
}

ExperienceRepo::ExperienceRepo(std::size_t dimension, std::filesystem::path path)
    : dimension_(dimension), path_(std::move(path)) {
    if (dimension_ == 0) throw DimensionError("repository dimension must be positive");
}

ExperienceRepo ExperienceRepo::load(const std::filesystem::path& path, std::size_t dimension) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open experience store '" + path.string() + "'");
    ExperienceRepo repo(dimension, path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string locus = path.string() + ":" + std::to_string(line_no);
        ExperienceEntry e;
        try {
            e = entry_from_json(json::parse(line));
            validate_entry(e, dimension);
        } catch (const json::parse_error& ex) {
            throw ParseError(locus + ": " + ex.what());
        } catch (const ParseError& ex) {
            throw ParseError(locus + ": " + ex.what());
        } catch (const DimensionError& ex) {
            throw DimensionError(locus + ": " + ex.what());
        } catch (const ValidationError& ex) {
            throw ValidationError(locus + ": " + ex.what());
        }
        if (e.created_seq < repo.next_seq_) {
            throw ValidationError(locus + ": created_seq " + std::to_string(e.created_seq) +
                                  " is not strictly increasing");
        }
        repo.next_seq_ = e.created_seq + 1;
        repo.entries_.push_back(std::move(e));
    }
    repo.flushed_ = repo.entries_.size();
    return repo;
}

ExperienceRepo ExperienceRepo::open(const std::filesystem::path& path, std::size_t dimension) {
    if (std::filesystem::exists(path)) return load(path, dimension);
    return ExperienceRepo(dimension, path);
}

const ExperienceEntry& ExperienceRepo::insert(ExperienceEntry entry) {
    entry.created_seq = next_seq_;
    validate_entry(entry, dimension_);
    ++next_seq_;
    entries_.push_back(std::move(entry));
    return entries_.back();
}

void ExperienceRepo::flush() {
    if (path_.empty() || flushed_ == entries_.size()) return;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to experience store '" + path_.string() + "'");
    for (std::size_t i = flushed_; i < entries_.size(); ++i) {
        out << entry_to_json(entries_[i]).dump() << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed for '" + path_.string() + "'");
    flushed_ = entries_.size();
}

void ExperienceRepo::save_as(const std::filesystem::path& path) const {
    if (path.empty()) throw IoError("experience store has no path");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        for (const auto& e : entries_) out << entry_to_json(e).dump() << '\n';
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

void ExperienceRepo::save() const { save_as(path_); }

ExperienceRepo ExperienceRepo::prefix(std::size_t k) const {
    ExperienceRepo out(dimension_);
    const std::size_t n = std::min(k, entries_.size());
    out.entries_.assign(entries_.begin(), entries_.begin() + static_cast<std::ptrdiff_t>(n));
    out.next_seq_ = n == 0 ? 0 : out.entries_.back().created_seq + 1;
    return out;
}

ExperienceRepo ExperienceRepo::rebound(std::filesystem::path path) const {
    ExperienceRepo out = *this;
    out.path_ = std::move(path);
    out.flushed_ = 0;
    return out;
}

void repo_insert(ExperienceRepo& repo, ExperienceEntry entry) { repo.insert(std::move(entry)); }

void repo_save(const ExperienceRepo& repo) { repo.save(); }

ExperienceRepo repo_load(const std::filesystem::path& path, std::size_t dimension) {
    return ExperienceRepo::load(path, dimension);
}

}  // namespace sevln
