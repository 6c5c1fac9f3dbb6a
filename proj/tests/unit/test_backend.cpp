#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "sevln/backend.hpp"
#include "sevln/error.hpp"
#include "sevln/retrieval.hpp"

using namespace sevln;
using nlohmann::json;

namespace {

ChatRequest req(std::string user, std::string tag = "decide") {
    ChatRequest r;
    r.system = "sys";
    r.user = std::move(user);
    r.tag = std::move(tag);
    return r;
}

// Local chat service answering with a fixed sequence of status codes.
class FakeService {
public:
    explicit FakeService(std::vector<int> statuses) : statuses_(std::move(statuses)) {
        server_.Post("/v1/chat", [this](const httplib::Request& rq, httplib::Response& rs) {
            const std::size_t n = hits_++;
            last_body_ = rq.body;
            last_auth_ = rq.get_header_value("Authorization");
            const int status = n < statuses_.size() ? statuses_[n] : 200;
            rs.status = status;
            if (status == 200) {
                rs.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})",
                               "application/json");
            } else {
                rs.set_content("{}", "application/json");
            }
        });
        server_.Post("/v1/embed", [this](const httplib::Request&, httplib::Response& rs) {
            ++hits_;
            rs.set_content(R"({"data":[{"embedding":[0.6, 0.8, 0.0]}]})", "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeService() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }
    std::size_t hits() const { return hits_; }
    std::string last_body_;
    std::string last_auth_;

private:
    httplib::Server server_;
    std::vector<int> statuses_;
    std::atomic<std::size_t> hits_{0};
    int port_ = 0;
    std::thread thread_;
};

BackendConfig remote_config(const std::string& endpoint) {
    BackendConfig c;
    c.kind = "remote";
    c.endpoint = endpoint;
    c.model = "test-model";
    c.api_key_env = "SEVLN_TEST_KEY";
    c.retries = 3;
    c.backoff_initial_s = 0.0;
    c.timeout_s = 5.0;
    c.max_tokens = 77;
    return c;
}

}  // namespace

TEST_CASE("complete validates requests and records the transcript") {
    ScriptedBackend b(Script::from_json(json::parse(R"({"replies": [{"reply": "abcdef"}]})")));
    ChatRequest r = req("u");
    r.max_reply = 3;
    CHECK(b.complete(r) == "abc");
    REQUIRE(b.calls() == 1);
    CHECK(b.transcript()[0].request == r);
    CHECK(b.transcript()[0].reply == "abc");
    CHECK_THROWS_AS(b.complete(req("")), std::invalid_argument);
    ChatRequest no_sys = req("u");
    no_sys.system.clear();
    CHECK_THROWS_AS(b.complete(no_sys), std::invalid_argument);
    CHECK(b.calls() == 1);
}

TEST_CASE("script rules: index, substring, sticky, first match wins") {
    const Script s = Script::from_json(json::parse(R"({
        "on_exhausted": "error",
        "replies": [
            {"index": 2, "reply": "third"},
            {"match": "kitchen", "reply": "K", "sticky": true},
            {"reply": "any-1"},
            {"reply": "any-2"}
        ]})"));
    ScriptedBackend b(s);
    CHECK(b.complete(req("hall")) == "any-1");
    CHECK(b.complete(req("kitchen")) == "K");
    CHECK(b.complete(req("kitchen")) == "third");
    CHECK(b.complete(req("kitchen")) == "K");
    CHECK(b.complete(req("hall")) == "any-2");
    CHECK_THROWS_AS(b.complete(req("hall")), BackendError);
    CHECK(b.complete(req("kitchen")) == "K");
}

TEST_CASE("substring rules also search the system text") {
    ScriptedBackend b(Script::from_json(
        json::parse(R"({"on_exhausted": "error", "replies": [{"match": "sys", "reply": "S"}]})")));
    CHECK(b.complete(req("x")) == "S");
}

TEST_CASE("repeat-last exhaustion") {
    ScriptedBackend b(Script::from_json(json::parse(R"({"replies": [{"reply": "a"}, {"reply": "b"}]})")));
    CHECK(b.complete(req("1")) == "a");
    CHECK(b.complete(req("2")) == "b");
    CHECK(b.complete(req("3")) == "b");
    ScriptedBackend never(Script::from_json(json::parse(R"({"replies": [{"index": 5, "reply": "a"}]})")));
    CHECK_THROWS_AS(never.complete(req("1")), BackendError);
}

TEST_CASE("script parse errors") {
    CHECK_THROWS_AS(Script::from_json(json::array()), ParseError);
    CHECK_THROWS_AS(Script::from_json(json::parse(R"({"replies": []})")), ParseError);
    CHECK_THROWS_AS(Script::from_json(json::parse(R"({"replies": [{"index": 1}]})")), ParseError);
    CHECK_THROWS_AS(Script::from_json(json::parse(R"({"on_exhausted": "loop", "replies": [{"reply": "a"}]})")),
                    ParseError);
    CHECK_THROWS_AS(Script::load("/nonexistent/script.json"), IoError);
}

TEST_CASE("transcript replay reproduces replies by call index") {
    ScriptedBackend first(Script::from_json(json::parse(
        R"({"replies": [{"match": "a", "reply": "A"}, {"match": "b", "reply": "B"}, {"reply": "Z"}]})")));
    for (const char* u : {"b", "a", "q"}) first.complete(req(u, "t"));
    const auto rows = transcript_from_json(json::parse(transcript_to_json(first.transcript()).dump()));
    CHECK(rows == first.transcript());
    ScriptedBackend replay = ScriptedBackend::from_transcript(rows);
    for (const auto& r : rows) CHECK(replay.complete(r.request) == r.reply);
    CHECK(replay.transcript() == first.transcript());
    CHECK_THROWS_AS(replay.complete(req("extra")), BackendError);
}

TEST_CASE("backend config") {
    const auto c = BackendConfig::from_json(json::parse(R"({"kind": "scripted", "script": "s.json"})"), "/base");
    CHECK(c.script == std::filesystem::path("/base/s.json"));
    CHECK_THROWS_AS(BackendConfig::from_json(json::parse(R"({"kind": "scripted"})"), "."), ConfigError);
    CHECK_THROWS_AS(BackendConfig::from_json(json::parse(R"({"kind": "psychic", "policy": "oracle"})"), "."),
                    ConfigError);
    CHECK_THROWS_AS(BackendConfig::from_json(json::parse(R"({"kind": "remote", "model": "m"})"), "."),
                    ConfigError);
    CHECK_THROWS_AS(BackendConfig::from_json(json::parse(R"({"kind": "remote", "endpoint": 3, "model": "m"})"), "."),
                    ConfigError);
    const auto remote = BackendConfig::from_json(
        json::parse(R"({"kind": "remote", "endpoint": "https://h/v1", "model": "m"})"), ".");
    CHECK(remote.to_json().at("api_key_env") == "OPENAI_API_KEY");
    CHECK_FALSE(remote.to_json().contains("api_key"));
}

TEST_CASE("split_url") {
    CHECK(split_url("https://api.example.com/v1/chat/completions") ==
          std::pair<std::string, std::string>{"https://api.example.com", "/v1/chat/completions"});
    CHECK(split_url("http://localhost:8080") == std::pair<std::string, std::string>{"http://localhost:8080", "/"});
    CHECK_THROWS_AS(split_url("localhost/v1"), ConfigError);
    CHECK_THROWS_AS(split_url("ftp://h/x"), ConfigError);
    CHECK_THROWS_AS(split_url("http:///x"), ConfigError);
}

TEST_CASE("remote backend needs its key variable") {
    ::unsetenv("SEVLN_TEST_KEY");
    CHECK_THROWS_AS(RemoteChatBackend(remote_config("http://127.0.0.1:1/v1/chat")), ConfigError);
}

TEST_CASE("chat request wire format") {
    ::setenv("SEVLN_TEST_KEY", "k-123", 1);
    const RemoteChatBackend b(remote_config("http://127.0.0.1:1/v1/chat"));
    const json body = b.request_body(req("hello there"));
    CHECK(body == json::parse(R"({"model": "test-model", "max_tokens": 77, "messages": [
        {"role": "system", "content": "sys"},
        {"role": "user", "content": "hello there"}]})"));
    ChatRequest with_image = req("look");
    with_image.images = {"data:image/png;base64,AAAA"};
    const json vb = b.request_body(with_image);
    CHECK(vb["messages"][1]["content"] == json::parse(R"([
        {"type": "text", "text": "look"},
        {"type": "image_url", "image_url": {"url": "data:image/png;base64,AAAA"}}])"));
}

TEST_CASE("remote backend retries 429 and 5xx then succeeds") {
    ::setenv("SEVLN_TEST_KEY", "k-123", 1);
    FakeService svc({500, 429, 503});
    RemoteChatBackend b(remote_config(svc.url("/v1/chat")));
    CHECK(b.complete(req("hi")) == "hello");
    CHECK(svc.hits() == 4);
    CHECK(svc.last_auth_ == "Bearer k-123");
    CHECK(json::parse(svc.last_body_)["messages"][1]["content"] == "hi");
}

TEST_CASE("remote backend gives up after its retry budget") {
    ::setenv("SEVLN_TEST_KEY", "k-123", 1);
    FakeService svc({500, 500, 500, 500, 500});
    BackendConfig c = remote_config(svc.url("/v1/chat"));
    c.retries = 2;
    RemoteChatBackend b(c);
    CHECK_THROWS_AS(b.complete(req("hi")), BackendError);
    CHECK(svc.hits() == 3);
    CHECK(b.calls() == 0);
}

TEST_CASE("client errors are not retried") {
    ::setenv("SEVLN_TEST_KEY", "k-123", 1);
    FakeService svc({401});
    RemoteChatBackend b(remote_config(svc.url("/v1/chat")));
    CHECK_THROWS_AS(b.complete(req("hi")), BackendError);
    CHECK(svc.hits() == 1);
}

TEST_CASE("remote embedder") {
    ::setenv("SEVLN_TEST_KEY", "k-123", 1);
    FakeService svc({});
    EmbedderConfig c;
    c.kind = "remote";
    c.endpoint = svc.url("/v1/embed");
    c.model = "emb";
    c.api_key_env = "SEVLN_TEST_KEY";
    c.dimension = 3;
    auto e = make_embedder(c);
    CHECK(e->encode("piano") == std::vector<float>{0.6f, 0.8f, 0.0f});
    c.dimension = 4;
    auto wrong = make_embedder(c);
    CHECK_THROWS_AS(wrong->encode("piano"), EmbeddingError);
}
