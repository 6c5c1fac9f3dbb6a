#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sevln/memory.hpp"

namespace sevln {

inline constexpr std::size_t kDefaultEmbeddingDimension = 768;

/// Long-term memory record: landmarks, scene descriptions, the decisions as
/// taken and the decisions after correction.
struct ExperienceEntry {
    std::vector<std::string> landmarks;
    std::vector<std::string> descriptions;
    std::vector<DecisionTriple> original;
    std::vector<DecisionTriple> revised;
    std::vector<float> embedding;
    std::string source_episode;
    std::int64_t created_seq = -1;
    bool success_as_is = false;

    friend bool operator==(const ExperienceEntry&, const ExperienceEntry&) = default;
};

nlohmann::json triple_to_json(const DecisionTriple& t);
DecisionTriple triple_from_json(const nlohmann::json& j);

nlohmann::json entry_to_json(const ExperienceEntry& e);
ExperienceEntry entry_from_json(const nlohmann::json& j);

/// Checks every entry invariant except created_seq ordering. Throws
/// ValidationError / DimensionError.
void validate_entry(const ExperienceEntry& e, std::size_t dimension);

/// Append-only experience store persisted as JSON Lines.
///
/// insert() assigns the next created_seq; flush() appends entries not yet on
/// disk; save() rewrites the whole file. Nothing mutates or reorders existing
/// entries.
class ExperienceRepo {
public:
    explicit ExperienceRepo(std::size_t dimension = kDefaultEmbeddingDimension,
                            std::filesystem::path path = {});

    static ExperienceRepo load(const std::filesystem::path& path, std::size_t dimension);
    /// load() when the file exists, otherwise an empty repo bound to `path`.
    static ExperienceRepo open(const std::filesystem::path& path, std::size_t dimension);

    const ExperienceEntry& insert(ExperienceEntry entry);
    void flush();
    void save() const;
    void save_as(const std::filesystem::path& path) const;

    /// Copy holding the first `k` entries (by created_seq), unbound from disk.
    ExperienceRepo prefix(std::size_t k) const;
    /// Copy bound to `path`; nothing is considered flushed.
    ExperienceRepo rebound(std::filesystem::path path) const;

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<ExperienceEntry>& entries() const { return entries_; }
    const std::filesystem::path& path() const { return path_; }
    std::int64_t next_seq() const { return next_seq_; }

private:
    std::size_t dimension_;
    std::filesystem::path path_;
    std::vector<ExperienceEntry> entries_;
    std::int64_t next_seq_ = 0;
    std::size_t flushed_ = 0;
};

/// Free-function forms matching the store's public contract.
void repo_insert(ExperienceRepo& repo, ExperienceEntry entry);
void repo_save(const ExperienceRepo& repo);
ExperienceRepo repo_load(const std::filesystem::path& path, std::size_t dimension);

}  // namespace sevln
