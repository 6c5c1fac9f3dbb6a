#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sevln/experience.hpp"

namespace sevln {

class ModelBackend;

/// Ordered, lowercase, de-duplicated landmark phrases.
class LandmarkSet {
public:
    LandmarkSet() = default;
    /// Trims, lowercases and drops empties and repeats (first occurrence wins).
    explicit LandmarkSet(const std::vector<std::string>& raw);

    const std::vector<std::string>& items() const { return items_; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }
    /// Landmarks concatenated with single spaces, in set order.
    std::string joined() const;

    friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

private:
    std::vector<std::string> items_;
};

/// Vocabulary file: one landmark per line, '#' starts a comment.
std::vector<std::string> parse_vocabulary(std::string_view text);
std::vector<std::string> load_vocabulary(const std::filesystem::path& path);

/// Lowercase alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Instruction tokens longer than three characters that are not navigation
/// verbs, directions or function words.
std::vector<std::string> fallback_landmarks(std::string_view instruction);

extern const char* const kLandmarkTaskDescription;
std::string render_landmark_request(const std::string& instruction);

/// Parses a JSON string array out of a model reply; nullopt if none found.
std::optional<std::vector<std::string>> parse_string_array(std::string_view reply);

LandmarkSet extract_landmarks(ModelBackend& backend, const std::string& instruction,
                              const std::optional<std::vector<std::string>>& vocab = std::nullopt);

// ---------------------------------------------------------------------------
// Embedding

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<float> encode(const std::string& text) = 0;
};

/// Bag-of-words embedder: each token adds 1 to bucket fnv1a64(token) mod d,
/// then the vector is L2-normalized.
class HashingEmbedder : public EmbeddingBackend {
public:
    explicit HashingEmbedder(std::size_t dimension = kDefaultEmbeddingDimension);

    static std::uint64_t hash_token(std::string_view token);

    std::size_t dimension() const override { return dimension_; }
    std::vector<float> encode(const std::string& text) override;

private:
    std::size_t dimension_;
};

struct EmbedderConfig {
    std::string kind = "hashing";  // hashing | remote
    std::size_t dimension = kDefaultEmbeddingDimension;
    std::string endpoint;
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_s = 30.0;
    int retries = 3;

    static EmbedderConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

/// Embedding-service client ({"model","input"} -> data[0].embedding).
class RemoteEmbedder : public EmbeddingBackend {
public:
    explicit RemoteEmbedder(EmbedderConfig config);

    std::size_t dimension() const override { return config_.dimension; }
    std::vector<float> encode(const std::string& text) override;

private:
    EmbedderConfig config_;
    std::string api_key_;
};

std::unique_ptr<EmbeddingBackend> make_embedder(const EmbedderConfig& config);

struct QueryVector {
    std::vector<float> values;
};

QueryVector embed(EmbeddingBackend& embedder, const LandmarkSet& landmarks);

/// Cosine similarity, clamped to [-1, 1]. Throws DimensionError on length
/// mismatch and ValidationError on a zero-norm argument.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Retrieval

inline constexpr std::size_t kDefaultShots = 2;
inline constexpr std::size_t kExperienceCharCap = 1200;

struct FewShotBlock {
    std::string rendered;
    /// (created_seq, similarity), best first.
    std::vector<std::pair<std::int64_t, double>> entries_used;
    /// One rendered experience per selected entry, same order.
    std::vector<std::string> items;
};

struct RetrieveOptions {
    /// Keep only entries whose landmark list equals `landmarks`.
    bool exact_match_filter = false;
    const LandmarkSet* landmarks = nullptr;
};

/// Renders one entry; `rank` is 1-based. Capped at kExperienceCharCap by
/// dropping the oldest descriptions first.
std::string render_experience(const ExperienceEntry& entry, std::size_t rank);

/// Joins rendered experiences with blank lines.
std::string join_experiences(const std::vector<std::string>& items);

/// Top-n entries by cosine similarity, ties to the smaller created_seq.
FewShotBlock retrieve(const ExperienceRepo& repo, const QueryVector& q, std::size_t n,
                      const RetrieveOptions& options = {});

}  // namespace sevln
