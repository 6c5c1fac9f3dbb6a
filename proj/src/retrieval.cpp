#include "sevln/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <unordered_set>

#include "sevln/backend.hpp"
#include "sevln/error.hpp"
#include "sevln/nav_env.hpp"
#include "sevln/simd/kernels.hpp"

namespace sevln {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

const std::unordered_set<std::string>& stop_words() {
    static const std::unordered_set<std::string> words = {
        "about",  "above",   "across",  "after",   "again",   "ahead",   "along",  "also",
        "around", "back",    "before",  "behind",  "below",   "beside",  "between", "center",
        "climb",  "come",    "continue", "down",   "east",    "enter",   "exit",    "facing",
        "first",  "follow",  "forward", "from",    "front",   "go",      "going",   "head",
        "inside", "into",    "just",    "keep",    "last",    "leave",   "left",    "make",
        "middle", "move",    "near",    "next",    "north",   "once",    "onto",    "opposite",
        "other",  "outside", "over",    "pass",    "past",    "proceed", "reach",   "right",
        "second", "side",    "slight",  "slightly", "south",  "stand",   "step",    "steps",
        "stop",   "straight", "take",   "that",    "then",    "there",   "third",   "this",
        "through", "toward", "towards", "turn",    "until",   "walk",    "wait",    "west",
        "when",   "where",   "which",   "with",    "your",    "yourself", "should", "will",
        "have",   "very",    "little",  "bit",     "away",
        "using",  "find",    "start",   "starting", "upon",    "under",   "each",    "both",    "they",    "them",    "their",
        "what",   "while",   "within",  "without", "would",   "could",   "those",   "these",
    };
    return words;
}

}  // namespace

LandmarkSet::LandmarkSet(const std::vector<std::string>& raw) {
    std::set<std::string> seen;
    for (const auto& r : raw) {
        std::string s = lower(trim(r));
        if (s.empty() || !seen.insert(s).second) continue;
        items_.push_back(std::move(s));
    }
}

std::string LandmarkSet::joined() const {
    std::string out;
    for (const auto& l : items_) {
        if (!out.empty()) out += ' ';
        out += l;
    }
    return out;
}

std::vector<std::string> parse_vocabulary(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::string entry = lower(trim(line));
        if (!entry.empty()) out.push_back(std::move(entry));
        pos = end + 1;
    }
    return out;
}

std::vector<std::string> load_vocabulary(const std::filesystem::path& path) {
    return parse_vocabulary(read_text_file(path));
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> fallback_landmarks(std::string_view instruction) {
    std::vector<std::string> out;
    for (auto& t : tokenize(instruction)) {
        if (t.size() <= 3 || stop_words().count(t)) continue;
        if (std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); })) continue;
        out.push_back(std::move(t));
    }
    return out;
}

const char* const kLandmarkTaskDescription =
    "You extract landmarks from indoor navigation instructions. Landmarks are the destination "
    "and the rooms or objects the route refers to. Reply with a JSON array of lowercase "
    "strings and nothing else.";

std::string render_landmark_request(const std::string& instruction) {
    return "INSTRUCTION: " + instruction +
           "\nList the destination and landmark nouns of this instruction as a JSON array, "
           "for example [\"kitchen\", \"sofa\"].";
}

std::optional<std::vector<std::string>> parse_string_array(std::string_view reply) {
    const auto open = reply.find('[');
    const auto close = reply.rfind(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        return std::nullopt;
    }
    json doc;
    try {
        doc = json::parse(reply.substr(open, close - open + 1));
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
    if (!doc.is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& v : doc) {
        if (v.is_string()) out.push_back(v.get<std::string>());
    }
    return out;
}

LandmarkSet extract_landmarks(ModelBackend& backend, const std::string& instruction,
                              const std::optional<std::vector<std::string>>& vocab) {
    if (trim(instruction).empty()) throw std::invalid_argument("instruction must not be empty");

    ChatRequest req;
    req.system = kLandmarkTaskDescription;
    req.user = render_landmark_request(instruction);
    req.tag = "landmarks";
    std::string reply;
    try {
        reply = backend.complete(req);
    } catch (const BackendError& e) {
        throw BackendError(std::string("landmark extraction failed: ") + e.what());
    }

    LandmarkSet set(parse_string_array(reply).value_or(std::vector<std::string>{}));
    if (vocab && !set.empty()) {
        const LandmarkSet allowed(*vocab);
        std::vector<std::string> kept;
        for (const auto& l : set.items()) {
            if (std::find(allowed.items().begin(), allowed.items().end(), l) != allowed.items().end()) {
                kept.push_back(l);
            }
        }
        set = LandmarkSet(kept);
    }
    if (set.empty()) set = LandmarkSet(fallback_landmarks(instruction));
    if (set.empty()) set = LandmarkSet(tokenize(instruction));
    if (set.empty()) set = LandmarkSet({instruction});
    return set;
}

// ---------------------------------------------------------------------------
// Embedding

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw DimensionError("embedding dimension must be positive");
}

std::uint64_t HashingEmbedder::hash_token(std::string_view token) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : token) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<float> HashingEmbedder::encode(const std::string& text) {
    std::vector<double> acc(dimension_, 0.0);
    for (const auto& tok : tokenize(text)) acc[hash_token(tok) % dimension_] += 1.0;
    double sq = 0.0;
    for (double v : acc) sq += v * v;
    if (sq == 0.0) throw EmbeddingError("text has no tokens to embed");
    const double inv = 1.0 / std::sqrt(sq);
    std::vector<float> out(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) out[i] = static_cast<float>(acc[i] * inv);
    return out;
}

EmbedderConfig EmbedderConfig::from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("embedder config must be an object");
    EmbedderConfig c;
    try {
        c.kind = doc.value("kind", c.kind);
        c.dimension = doc.value("dimension", c.dimension);
        c.endpoint = doc.value("endpoint", c.endpoint);
        c.model = doc.value("model", c.model);
        c.api_key_env = doc.value("api_key_env", c.api_key_env);
        c.timeout_s = doc.value("timeout_s", c.timeout_s);
        c.retries = doc.value("retries", c.retries);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("embedder config: ") + e.what());
    }
    if (c.kind != "hashing" && c.kind != "remote") {
        throw ConfigError("unknown embedder kind '" + c.kind + "'");
    }
    if (c.dimension == 0) throw ConfigError("embedder dimension must be positive");
    return c;
}

json EmbedderConfig::to_json() const {
    json j = {{"kind", kind}, {"dimension", dimension}};
    if (kind == "remote") {
        j["endpoint"] = endpoint;
        j["model"] = model;
        j["api_key_env"] = api_key_env;
    }
    return j;
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty() || config_.model.empty()) {
        throw ConfigError("remote embedder requires 'endpoint' and 'model'");
    }
    (void)split_url(config_.endpoint);
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError("environment variable " + config_.api_key_env + " is not set");
    }
    api_key_ = key;
}

std::vector<float> RemoteEmbedder::encode(const std::string& text) {
    json reply;
    try {
        reply = post_json_with_retry(config_.endpoint, api_key_,
                                     {{"model", config_.model}, {"input", text}},
                                     config_.timeout_s, config_.retries, 0.5);
    } catch (const BackendError& e) {
        throw EmbeddingError(e.what());
    }
    std::vector<float> v;
    try {
        v = reply.at("data").at(0).at("embedding").get<std::vector<float>>();
    } catch (const json::exception& e) {
        throw EmbeddingError(std::string("embedding reply malformed: ") + e.what());
    }
    if (v.size() != config_.dimension) {
        throw EmbeddingError("embedding service returned dimension " + std::to_string(v.size()) +
                             ", configured " + std::to_string(config_.dimension));
    }
    return v;
}

std::unique_ptr<EmbeddingBackend> make_embedder(const EmbedderConfig& config) {
    if (config.kind == "remote") return std::make_unique<RemoteEmbedder>(config);
    return std::make_unique<HashingEmbedder>(config.dimension);
}

QueryVector embed(EmbeddingBackend& embedder, const LandmarkSet& landmarks) {
    if (landmarks.empty()) throw std::invalid_argument("cannot embed an empty landmark set");
    QueryVector q{embedder.encode(landmarks.joined())};
    if (q.values.size() != embedder.dimension()) {
        throw EmbeddingError("embedder returned the wrong dimension");
    }
    double sq = 0.0;
    for (float v : q.values) sq += static_cast<double>(v) * v;
    if (!(sq > 0.0)) throw EmbeddingError("embedder returned a zero vector");
    return q;
}

namespace {

double cosine_from(const simd::DotNorms& s) {
    if (!(s.norm_a > 0.0) || !(s.norm_b > 0.0)) {
        throw ValidationError("cosine of a zero-norm vector is undefined");
    }
    const double c = s.dot / (std::sqrt(s.norm_a) * std::sqrt(s.norm_b));
    return std::clamp(c, -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const float> a, std::span<const float> b) {
    return cosine_from(simd::dot_norms(a, b));
}

double cosine(std::span<const double> a, std::span<const double> b) {
    return cosine_from(simd::dot_norms(a, b));
}

// ---------------------------------------------------------------------------
// Retrieval

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

// Cuts at a byte budget without splitting a UTF-8 sequence.
std::string utf8_cut(std::string s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return s;
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    s.resize(cut);
    return s;
}

}  // namespace

std::string render_experience(const ExperienceEntry& entry, std::size_t rank) {
    std::size_t focus = 0;
    while (focus < entry.revised.size() && focus < entry.original.size() &&
           entry.revised[focus] == entry.original[focus]) {
        ++focus;
    }
    if (focus >= entry.revised.size()) focus = 0;

    std::string decision = "none";
    if (!entry.revised.empty()) {
        const DecisionTriple& t = entry.revised[focus];
        decision = "thinking " + t.thinking + ", planning " + t.planning + ", action " +
                   t.action.to_string();
    }

    std::vector<std::string> descriptions = entry.descriptions;
    auto build = [&] {
        return "EXPERIENCE " + std::to_string(rank) + " — landmarks: " +
               join(entry.landmarks, ", ") + "; situation: " + join(descriptions, " / ") +
               "; corrected decision: " + decision;
    };
    std::string text = build();
    while (text.size() > kExperienceCharCap && !descriptions.empty()) {
        descriptions.erase(descriptions.begin());
        text = build();
    }
    return utf8_cut(std::move(text), kExperienceCharCap);
}

std::string join_experiences(const std::vector<std::string>& items) { return join(items, "\n\n"); }

FewShotBlock retrieve(const ExperienceRepo& repo, const QueryVector& q, std::size_t n,
                      const RetrieveOptions& options) {
    FewShotBlock block;
    if (n == 0 || repo.empty()) return block;
    if (q.values.size() != repo.dimension()) {
        throw DimensionError("query dimension " + std::to_string(q.values.size()) +
                             " does not match repository dimension " +
                             std::to_string(repo.dimension()));
    }

    const auto& entries = repo.entries();
    struct Scored {
        double score;
        std::size_t index;
    };
    std::vector<Scored> scored;
    scored.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (options.exact_match_filter && options.landmarks &&
            LandmarkSet(entries[i].landmarks) != *options.landmarks) {
            continue;
        }
        scored.push_back({cosine(q.values, entries[i].embedding), i});
    }
    const std::size_t take = std::min(n, scored.size());
    // entries are stored in created_seq order, so index order is the tiebreak
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), [](const Scored& a, const Scored& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.index < b.index;
                      });
    for (std::size_t k = 0; k < take; ++k) {
        const ExperienceEntry& e = entries[scored[k].index];
        block.entries_used.emplace_back(e.created_seq, scored[k].score);
        block.items.push_back(render_experience(e, k + 1));
    }
    block.rendered = join_experiences(block.items);
    return block;
}

}  // namespace sevln
