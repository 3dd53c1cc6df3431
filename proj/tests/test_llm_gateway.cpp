#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rforge/error.hpp"
#include "rforge/llm_gateway.hpp"
#include "rforge/prompting.hpp"
#include "support.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace rforge;
using nlohmann::json;

namespace {

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

/// Local chat-completions stand-in that fails the first `failures` requests.
class FakeServer {
public:
  explicit FakeServer(int failures, int fail_status = 503) : failures_(failures) {
    svr_.Post("/v1/chat/completions", [this, fail_status](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      if (hits_ <= failures_) {
        res.status = fail_status;
        res.set_content("busy", "text/plain");
        return;
      }
      json j{{"choices", {{{"message", {{"role", "assistant"}, {"content", "```\nreturn 1\n```"}}}}}},
             {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 3}}}};
      res.set_content(j.dump(), "application/json");
    });
    port_ = svr_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }
  ~FakeServer() {
    svr_.stop();
    thread_.join();
  }
  [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  [[nodiscard]] int hits() const { return hits_; }
  std::string last_body_;
  std::string last_auth_;

private:
  httplib::Server svr_;
  std::thread thread_;
  int port_ = 0;
  int failures_;
  std::atomic<int> hits_{0};
};

AdapterConfig http_config(const std::string& url) {
  AdapterConfig cfg;
  cfg.kind = AdapterKind::Http;
  cfg.base_url = url;
  cfg.backoff_seconds = 0.01;
  cfg.timeout_seconds = 5.0;
  cfg.api_key_env = "RFORGE_TEST_KEY";
  return cfg;
}

Conversation two_turns() {
  Conversation c;
  c.append(Role::System, "sys");
  c.append(Role::User, "first");
  c.append(Role::Assistant, "reply");
  c.append(Role::User, "second");
  return c;
}

} // namespace

TEST_CASE("conversation alternation") {
  Conversation c;
  CHECK(code_of([&] { c.append(Role::Assistant, "x"); }) == "invalid_conversation");
  c.append(Role::User, "a");
  CHECK(code_of([&] { c.append(Role::User, "b"); }) == "invalid_conversation");
  CHECK(code_of([&] { c.append(Role::System, "s"); }) == "invalid_conversation");
  c.append(Role::Assistant, "b");
  c.append(Role::User, "c");
  CHECK(c.messages.size() == 3);
  c.adapter_id = "replay";
  c.prompt_tokens = 4;
  c.latency_seconds = 0.25;
  CHECK(conversation_from_json(conversation_to_json(c)) == c);
  CHECK(conversation_from_json(conversation_to_json(two_turns())) == two_turns());
}

TEST_CASE("replay fixtures") {
  const auto m = parse_replay_fixture("=== iteration 0 ===\nalpha\n=== iteration 2 ===\nbeta\ngamma\n");
  REQUIRE(m.size() == 2);
  CHECK(m.at(0) == "alpha\n");
  CHECK(m.at(2) == "beta\ngamma\n");
  CHECK(code_of([] { (void)parse_replay_fixture("junk\n=== iteration 0 ===\n"); }) == "invalid_fixture");
  CHECK(code_of([] { (void)parse_replay_fixture("=== iteration 0 ===\na\n=== iteration 0 ===\nb\n"); }) ==
        "invalid_fixture");

  ReplayAdapter a(m);
  Conversation c;
  c.append(Role::User, "design");
  CHECK(complete(c, a, 0) == "alpha\n");
  CHECK(c.messages.back() == Message{Role::Assistant, "alpha\n"});
  CHECK(code_of([&] { (void)complete(c, a, 1); }) == "invalid_conversation");
  c.append(Role::User, "again");
  CHECK(code_of([&] { (void)complete(c, a, 1); }) == "missing_fixture");
  CHECK(c.messages.back().role == Role::User);

  for (const auto& id : testing::task_ids()) {
    const auto dir = load_task_profile(assets_dir(), id).dir;
    const auto replay = ReplayAdapter::from_file(dir / "fixtures" / "replay.txt");
    const auto table = TranslationTable::load(dir);
    CHECK(table.size() >= 2);
    // Every scripted response carries a listing with a committed translation.
    for (std::size_t k = 0;; ++k) {
      Conversation conv;
      conv.append(Role::User, "x");
      std::string text;
      ReplayAdapter copy = replay;
      if (code_of([&] { text = copy.respond(conv, k); }) == "missing_fixture") {
        CHECK(k >= 1);
        break;
      }
      CAPTURE(id);
      CAPTURE(k);
      CHECK(table.lookup(extract_reward_source(text)).has_value());
    }
  }
}

TEST_CASE("reward source extraction") {
  CHECK(extract_reward_source("Here:\n```python\nx = 1\nreturn x\n```\nDone.") == "x = 1\nreturn x\n");
  CHECK(extract_reward_source("```\nreturn 2\n```\n```\nreturn 3\n```") == "return 2\n");
  CHECK(extract_reward_source("Sure.\n\na = 1\n# note\nreturn a\n\nThat's it.") == "a = 1\n# note\nreturn a\n");
  CHECK(extract_reward_source("intro\nx = 1\nprose\ny = 2\nz = 3\nreturn y + z\nend") == "y = 2\nz = 3\nreturn y + z\n");
  CHECK(code_of([] { (void)extract_reward_source("No code at all."); }) == "no_reward_code");
  CHECK(code_of([] { (void)extract_reward_source("```\n\n```"); }) == "no_reward_code");
}

TEST_CASE("translation lookup ignores surrounding blank lines") {
  TranslationTable t;
  t.add("\n\nreturn x\n", "return x");
  CHECK(t.lookup("return x") == std::optional<std::string>("return x"));
  CHECK(t.lookup("return x\n\n\n") == std::optional<std::string>("return x"));
  CHECK_FALSE(t.lookup("return  x").has_value());
}

TEST_CASE("http adapter needs a credential") {
  ::unsetenv("RFORGE_TEST_KEY");
  CHECK(code_of([] { HttpAdapter a(http_config("http://127.0.0.1:9/v1")); }) == "credential_missing");
  AdapterConfig cfg;
  cfg.kind = AdapterKind::Replay;
  cfg.fixture_path = "/nonexistent/replay.txt";
  CHECK(code_of([&] { (void)make_adapter(cfg); }) != "none");
}

TEST_CASE("http adapter retries transient failures") {
  ::setenv("RFORGE_TEST_KEY", "k123", 1);
  {
    FakeServer srv(2);
    HttpAdapter a(http_config(srv.url()));
    auto conv = two_turns();
    CHECK(a.respond(conv, 0) == "```\nreturn 1\n```");
    CHECK(a.attempts() == 3);
    CHECK(srv.hits() == 3);
    CHECK(a.last_prompt_tokens() == 11);
    CHECK(a.last_completion_tokens() == 3);
    CHECK(srv.last_auth_ == "Bearer k123");
    const auto body = json::parse(srv.last_body_);
    CHECK(body["model"] == "gpt-4");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["messages"].size() == 4);
    CHECK(body["messages"][3]["content"] == "second");
  }
  {
    FakeServer srv(10);
    HttpAdapter a(http_config(srv.url()));
    CHECK(code_of([&] { (void)a.respond(two_turns(), 0); }) == "adapter_failure");
    CHECK(a.attempts() == 3);
  }
  {
    FakeServer srv(10, 401);
    HttpAdapter a(http_config(srv.url()));
    CHECK(code_of([&] { (void)a.respond(two_turns(), 0); }) == "adapter_failure");
    CHECK(a.attempts() == 1);
  }
  {
    auto cfg = http_config("http://127.0.0.1:1/v1");
    cfg.retries = 1;
    HttpAdapter a(cfg);
    CHECK(code_of([&] { (void)a.respond(two_turns(), 0); }) == "adapter_failure");
    CHECK(a.attempts() == 2);
  }
}

TEST_CASE("short-history requests send the system message and the latest turn") {
  ::setenv("RFORGE_TEST_KEY", "k", 1);
  auto cfg = http_config("http://127.0.0.1:9/v1");
  cfg.full_history = false;
  HttpAdapter a(cfg);
  const auto body = json::parse(a.request_body(two_turns()));
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["content"] == "second");
}
