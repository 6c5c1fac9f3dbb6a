#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sevln {

/// One chat call. `tag` names the call site (annotate, landmarks, decide,
/// correct) for transcripts and scripted responders.
struct ChatRequest {
    std::string system;
    std::string user;
    std::size_t max_reply = 4096;  // characters
    std::string tag;
    /// Optional image attachments (data URLs) for live scene description.
    /// Scripted backends ignore them.
    std::vector<std::string> images;

    friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct TranscriptRow {
    ChatRequest request;
    std::string reply;

    friend bool operator==(const TranscriptRow&, const TranscriptRow&) = default;
};

nlohmann::json transcript_to_json(const std::vector<TranscriptRow>& rows);
std::vector<TranscriptRow> transcript_from_json(const nlohmann::json& doc);

/// Abstract language-model service. complete() validates the request and
/// appends every successful exchange to the transcript.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    std::string complete(const ChatRequest& req);
    const std::vector<TranscriptRow>& transcript() const { return transcript_; }
    std::size_t calls() const { return transcript_.size(); }

protected:
    virtual std::string do_complete(const ChatRequest& req) = 0;

private:
    std::vector<TranscriptRow> transcript_;
};

struct ScriptRule {
    enum class Match { call_index, substring, any };

    Match match = Match::any;
    std::size_t index = 0;   // for call_index
    std::string needle;      // for substring, searched in system and user text
    std::string reply;
    bool sticky = false;     // sticky rules are never consumed
};

enum class Exhaustion { repeat_last, error };

struct Script {
    std::vector<ScriptRule> rules;
    Exhaustion on_exhausted = Exhaustion::repeat_last;

    /// {"on_exhausted": "repeat-last"|"error", "replies": [{"index"|"match"|-, "reply", "sticky"?}]}
    static Script from_json(const nlohmann::json& doc);
    static Script load(const std::filesystem::path& path);
};

/// Deterministic replay of a fixed script. On each call the first unconsumed
/// rule that matches wins.
class ScriptedBackend : public ModelBackend {
public:
    explicit ScriptedBackend(Script script);

    /// Replays `rows` by call index, so identical requests get identical replies.
    static ScriptedBackend from_transcript(const std::vector<TranscriptRow>& rows);

protected:
    std::string do_complete(const ChatRequest& req) override;

private:
    Script script_;
    std::vector<bool> consumed_;
    std::size_t call_ = 0;
    std::optional<std::string> last_;
};

/// Scripted backend whose replies come from a function of (request, call index).
class ResponderBackend : public ModelBackend {
public:
    using Responder = std::function<std::string(const ChatRequest&, std::size_t)>;

    explicit ResponderBackend(Responder fn) : fn_(std::move(fn)) {}

protected:
    std::string do_complete(const ChatRequest& req) override { return fn_(req, call_++); }

private:
    Responder fn_;
    std::size_t call_ = 0;
};

struct BackendConfig {
    std::string kind = "scripted";  // scripted | remote
    // scripted
    std::string policy;             // oracle | stop | two-phase | random-walk
    std::filesystem::path script;   // JSON script fixture (used when policy is empty)
    // remote
    std::string endpoint;
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_s = 60.0;
    int retries = 3;
    double backoff_initial_s = 0.5;
    int max_tokens = 1024;

    void validate() const;
    static BackendConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
    nlohmann::json to_json() const;
};

/// Chat-completions client. Throws ConfigError from the constructor when the
/// API key variable is unset or the endpoint is malformed.
class RemoteChatBackend : public ModelBackend {
public:
    explicit RemoteChatBackend(BackendConfig config);

    /// Request body for `req`; exposed for wire-format tests.
    nlohmann::json request_body(const ChatRequest& req) const;

protected:
    std::string do_complete(const ChatRequest& req) override;

private:
    BackendConfig config_;
    std::string api_key_;
    std::string origin_;  // scheme://host[:port]
    std::string path_;
};

/// Splits "scheme://host[:port]/path" into origin and path.
std::pair<std::string, std::string> split_url(const std::string& url);

/// POSTs `body` to `url` with bearer auth, retrying transport errors and
/// 429/5xx responses with exponential backoff. Returns the parsed reply.
nlohmann::json post_json_with_retry(const std::string& url, const std::string& api_key,
                                    const nlohmann::json& body, double timeout_s, int retries,
                                    double backoff_initial_s);

}  // namespace sevln
