#include "sevln/backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "sevln/error.hpp"
#include "sevln/nav_env.hpp"

namespace sevln {

using nlohmann::json;

json transcript_to_json(const std::vector<TranscriptRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json row = {{"tag", r.request.tag},
                    {"system", r.request.system},
                    {"user", r.request.user},
                    {"max_reply", r.request.max_reply},
                    {"reply", r.reply}};
        if (!r.request.images.empty()) row["images"] = r.request.images.size();
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<TranscriptRow> transcript_from_json(const json& doc) {
    if (!doc.is_array()) throw ParseError("transcript must be a JSON array");
    std::vector<TranscriptRow> rows;
    for (const auto& r : doc) {
        TranscriptRow row;
        row.request.tag = r.value("tag", "");
        row.request.system = r.at("system").get<std::string>();
        row.request.user = r.at("user").get<std::string>();
        row.request.max_reply = r.value("max_reply", std::size_t{4096});
        row.reply = r.at("reply").get<std::string>();
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ModelBackend::complete(const ChatRequest& req) {
    if (req.system.empty() || req.user.empty()) {
        throw std::invalid_argument("chat request needs non-empty system and user text");
    }
    std::string reply = do_complete(req);
    if (reply.size() > req.max_reply) reply.resize(req.max_reply);
    transcript_.push_back(TranscriptRow{req, reply});
    return reply;
}

// ---------------------------------------------------------------------------
// Scripted

Script Script::from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("script must be a JSON object");
    Script s;
    const std::string policy = doc.value("on_exhausted", "repeat-last");
    if (policy == "repeat-last") s.on_exhausted = Exhaustion::repeat_last;
    else if (policy == "error") s.on_exhausted = Exhaustion::error;
    else throw ParseError("script: unknown on_exhausted '" + policy + "'");

    const auto it = doc.find("replies");
    if (it == doc.end() || !it->is_array() || it->empty()) {
        throw ParseError("script: 'replies' must be a non-empty array");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json& r = (*it)[i];
        const std::string locus = "script: replies[" + std::to_string(i) + "]";
        if (!r.is_object() || !r.contains("reply") || !r["reply"].is_string()) {
            throw ParseError(locus + ": needs a string 'reply'");
        }
        ScriptRule rule;
        rule.reply = r["reply"].get<std::string>();
        rule.sticky = r.value("sticky", false);
        if (r.contains("index")) {
            rule.match = ScriptRule::Match::call_index;
            rule.index = r["index"].get<std::size_t>();
        } else if (r.contains("match")) {
            rule.match = ScriptRule::Match::substring;
            rule.needle = r["match"].get<std::string>();
        }
        s.rules.push_back(std::move(rule));
    }
    return s;
}

Script Script::load(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

ScriptedBackend::ScriptedBackend(Script script)
    : script_(std::move(script)), consumed_(script_.rules.size(), false) {
    if (script_.rules.empty()) throw std::invalid_argument("script must not be empty");
}

ScriptedBackend ScriptedBackend::from_transcript(const std::vector<TranscriptRow>& rows) {
    Script s;
    s.on_exhausted = Exhaustion::error;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ScriptRule r;
        r.match = ScriptRule::Match::call_index;
        r.index = i;
        r.reply = rows[i].reply;
        s.rules.push_back(std::move(r));
    }
    return ScriptedBackend(std::move(s));
}

std::string ScriptedBackend::do_complete(const ChatRequest& req) {
    const std::size_t call = call_++;
    for (std::size_t i = 0; i < script_.rules.size(); ++i) {
        const ScriptRule& r = script_.rules[i];
        if (consumed_[i]) continue;
        bool hit = false;
        switch (r.match) {
            case ScriptRule::Match::call_index: hit = r.index == call; break;
            case ScriptRule::Match::substring:
                hit = req.user.find(r.needle) != std::string::npos ||
                      req.system.find(r.needle) != std::string::npos;
                break;
            case ScriptRule::Match::any: hit = true; break;
        }
        if (!hit) continue;
        if (!r.sticky) consumed_[i] = true;
        last_ = r.reply;
        return r.reply;
    }
    if (script_.on_exhausted == Exhaustion::repeat_last && last_) return *last_;
    throw BackendError("script exhausted at call " + std::to_string(call));
}

// ---------------------------------------------------------------------------
// Config

void BackendConfig::validate() const {
    if (kind == "remote") {
        if (endpoint.empty() || model.empty()) {
            throw ConfigError("remote backend requires 'endpoint' and 'model'");
        }
        if (retries < 0) throw ConfigError("backend retries must be >= 0");
    } else if (kind == "scripted") {
        if (policy.empty() && script.empty()) {
            throw ConfigError("scripted backend requires 'policy' or 'script'");
        }
    } else {
        throw ConfigError("unknown backend kind '" + kind + "'");
    }
}

BackendConfig BackendConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("backend config must be an object");
    BackendConfig c;
    try {
        c.kind = doc.value("kind", c.kind);
        c.policy = doc.value("policy", c.policy);
        if (doc.contains("script")) {
            std::filesystem::path p = doc["script"].get<std::string>();
            c.script = p.is_absolute() ? p : base_dir / p;
        }
        c.endpoint = doc.value("endpoint", c.endpoint);
        c.model = doc.value("model", c.model);
        c.api_key_env = doc.value("api_key_env", c.api_key_env);
        c.timeout_s = doc.value("timeout_s", c.timeout_s);
        c.retries = doc.value("retries", c.retries);
        c.backoff_initial_s = doc.value("backoff_initial_s", c.backoff_initial_s);
        c.max_tokens = doc.value("max_tokens", c.max_tokens);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("backend config: ") + e.what());
    }
    c.validate();
    return c;
}

json BackendConfig::to_json() const {
    json j = {{"kind", kind}};
    if (kind == "scripted") {
        if (!policy.empty()) j["policy"] = policy;
        if (!script.empty()) j["script"] = script.generic_string();
    } else {
        j["endpoint"] = endpoint;
        j["model"] = model;
        j["api_key_env"] = api_key_env;
        j["timeout_s"] = timeout_s;
        j["retries"] = retries;
        j["max_tokens"] = max_tokens;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Remote

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + url + "' has no scheme");
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("endpoint scheme must be http or https");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    if (path_start == scheme_end + 3) throw ConfigError("endpoint '" + url + "' has no host");
    return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

std::string read_api_key(const std::string& env_name) {
    if (env_name.empty()) throw ConfigError("api_key_env must name an environment variable");
    const char* v = std::getenv(env_name.c_str());
    if (v == nullptr || *v == '\0') {
        throw ConfigError("environment variable " + env_name + " is not set");
    }
    return v;
}

}  // namespace

json post_json_with_retry(const std::string& url, const std::string& api_key, const json& body,
                          double timeout_s, int retries, double backoff_initial_s) {
    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        if (attempt > 0 && backoff_initial_s > 0.0) {
            const double wait = backoff_initial_s * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        }
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendError("HTTP " + std::to_string(res->status) + " from " + origin + path);
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw BackendError(std::string("unparseable service reply: ") + e.what());
        }
    }
    throw BackendError("request to " + origin + path + " failed after " +
                       std::to_string(retries + 1) + " attempts (" + last_error + ")");
}

RemoteChatBackend::RemoteChatBackend(BackendConfig config) : config_(std::move(config)) {
    config_.kind = "remote";
    config_.validate();
    api_key_ = read_api_key(config_.api_key_env);
    std::tie(origin_, path_) = split_url(config_.endpoint);
}

json RemoteChatBackend::request_body(const ChatRequest& req) const {
    json user;
    if (req.images.empty()) {
        user = {{"role", "user"}, {"content", req.user}};
    } else {
        json parts = json::array({{{"type", "text"}, {"text", req.user}}});
        for (const auto& img : req.images) {
            parts.push_back({{"type", "image_url"}, {"image_url", {{"url", img}}}});
        }
        user = {{"role", "user"}, {"content", parts}};
    }
    return {{"model", config_.model},
            {"messages", json::array({{{"role", "system"}, {"content", req.system}}, user})},
            {"max_tokens", config_.max_tokens}};
}

std::string RemoteChatBackend::do_complete(const ChatRequest& req) {
    const json reply = post_json_with_retry(config_.endpoint, api_key_, request_body(req),
                                            config_.timeout_s, config_.retries,
                                            config_.backoff_initial_s);
    try {
        const json& content = reply.at("choices").at(0).at("message").at("content");
        if (content.is_null()) return {};
        return content.get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("chat reply missing choices[0].message.content: ") +
                           e.what());
    }
}

}  // namespace sevln
