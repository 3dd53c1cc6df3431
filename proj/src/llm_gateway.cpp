#include "rforge/llm_gateway.hpp"

#include "rforge/error.hpp"
#include "rforge/prompting.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

namespace rforge {

using nlohmann::json;

std::string_view role_name(Role r) {
  switch (r) {
  case Role::System: return "system";
  case Role::User: return "user";
  case Role::Assistant: return "assistant";
  }
  return "?";
}

namespace {

Role parse_role(std::string_view s) {
  for (auto r : {Role::System, Role::User, Role::Assistant}) {
    if (role_name(r) == s) return r;
  }
  throw Error("invalid_conversation", "unknown role '" + std::string(s) + "'");
}

std::string_view trim_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.remove_prefix(1);
  return s;
}

} // namespace

void Conversation::append(Role role, std::string text) {
  auto fail = [](const std::string& m) { throw Error("invalid_conversation", m); };
  if (role == Role::System) {
    if (!messages.empty()) fail("a system message may only open the conversation");
  } else {
    const bool after_system = messages.empty() || messages.back().role == Role::System;
    const Role expected = after_system ? Role::User : (messages.back().role == Role::User ? Role::Assistant : Role::User);
    if (role != expected) fail("expected a " + std::string(role_name(expected)) + " message");
  }
  messages.push_back({role, std::move(text)});
}

std::string conversation_to_json(const Conversation& c) {
  json j;
  j["adapter"] = c.adapter_id;
  j["model"] = c.model_id;
  j["prompt_tokens"] = c.prompt_tokens;
  j["completion_tokens"] = c.completion_tokens;
  j["latency_seconds"] = c.latency_seconds;
  json msgs = json::array();
  for (const auto& m : c.messages) msgs.push_back({{"role", role_name(m.role)}, {"content", m.text}});
  j["messages"] = msgs;
  return j.dump(2) + "\n";
}

Conversation conversation_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    Conversation c;
    c.adapter_id = j.at("adapter").get<std::string>();
    c.model_id = j.at("model").get<std::string>();
    c.prompt_tokens = j.value("prompt_tokens", std::size_t{0});
    c.completion_tokens = j.value("completion_tokens", std::size_t{0});
    c.latency_seconds = j.value("latency_seconds", 0.0);
    for (const auto& m : j.at("messages")) {
      c.append(parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>());
    }
    return c;
  } catch (const json::exception& e) {
    throw Error("invalid_conversation", e.what());
  }
}

// ---------------------------------------------------------------------------
// Replay

std::map<std::size_t, std::string> parse_replay_fixture(std::string_view text) {
  static const std::regex header(R"(^=== iteration (\d+) ===\r?$)");
  std::map<std::size_t, std::string> out;
  std::optional<std::size_t> current;
  std::string body;
  auto flush = [&] {
    if (!current) return;
    if (!out.emplace(*current, body).second) {
      throw Error("invalid_fixture", "iteration " + std::to_string(*current) + " appears twice");
    }
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    const bool last = end == std::string_view::npos;
    if (last) end = text.size();
    const std::string line(text.substr(pos, end - pos));
    std::smatch m;
    if (std::regex_match(line, m, header)) {
      flush();
      current = std::stoul(m[1].str());
      body.clear();
    } else if (current) {
      body += line;
      if (!last) body += '\n';
    } else if (!line.empty()) {
      throw Error("invalid_fixture", "text before the first iteration header");
    }
    pos = end + 1;
  }
  flush();
  return out;
}

ReplayAdapter::ReplayAdapter(std::map<std::size_t, std::string> responses) : responses_(std::move(responses)) {}

ReplayAdapter ReplayAdapter::from_file(const std::filesystem::path& path) {
  return ReplayAdapter(parse_replay_fixture(read_text_file(path)));
}

std::string ReplayAdapter::respond(const Conversation&, std::size_t iteration) {
  auto it = responses_.find(iteration);
  if (it == responses_.end()) {
    throw Error("missing_fixture", "no scripted response for iteration " + std::to_string(iteration));
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// HTTP

HttpAdapter::HttpAdapter(AdapterConfig cfg) : cfg_(std::move(cfg)) {
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) throw Error("credential_missing", cfg_.api_key_env + " is not set");
  key_ = key;
}

std::string HttpAdapter::request_body(const Conversation& conv) const {
  json msgs = json::array();
  auto push = [&](const Message& m) { msgs.push_back({{"role", role_name(m.role)}, {"content", m.text}}); };
  if (cfg_.full_history) {
    for (const auto& m : conv.messages) push(m);
  } else {
    if (!conv.messages.empty() && conv.messages.front().role == Role::System) push(conv.messages.front());
    if (!conv.messages.empty()) push(conv.messages.back());
  }
  json body;
  body["model"] = cfg_.model;
  body["temperature"] = cfg_.temperature;
  body["messages"] = msgs;
  return body.dump();
}

std::string HttpAdapter::respond(const Conversation& conv, std::size_t) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.base_url, m, url)) throw Error("invalid_config", "malformed base URL '" + cfg_.base_url + "'");
  const std::string host = m[1].str();
  std::string path = m[2].matched ? m[2].str() : std::string();
  while (!path.empty() && path.back() == '/') path.pop_back();
  path += "/chat/completions";

  const auto body = request_body(conv);
  std::string last_error;
  attempts_ = 0;
  double backoff = cfg_.backoff_seconds;
  for (std::size_t attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    ++attempts_;
    httplib::Client cli(host);
    const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
    const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers{{"Authorization", "Bearer " + key_}};
    auto res = cli.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error("adapter_failure", "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
      const auto j = json::parse(res->body);
      const auto& usage = j.contains("usage") ? j["usage"] : json::object();
      prompt_tokens_ = usage.value("prompt_tokens", std::size_t{0});
      completion_tokens_ = usage.value("completion_tokens", std::size_t{0});
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error("adapter_failure", std::string("malformed completion response: ") + e.what());
    }
  }
  throw Error("adapter_failure",
              "request failed after " + std::to_string(attempts_) + " attempts: " + last_error);
}

std::unique_ptr<Adapter> make_adapter(const AdapterConfig& cfg) {
  if (cfg.kind == AdapterKind::Replay) return std::make_unique<ReplayAdapter>(ReplayAdapter::from_file(cfg.fixture_path));
  return std::make_unique<HttpAdapter>(cfg);
}

std::string complete(Conversation& conv, Adapter& adapter, std::size_t iteration) {
  if (conv.messages.empty() || conv.messages.back().role != Role::User) {
    throw Error("invalid_conversation", "the last message must be a user turn");
  }
  conv.adapter_id = adapter.id();
  conv.model_id = adapter.model();
  const bool timed = adapter.id() != "replay";
  const auto t0 = std::chrono::steady_clock::now();
  auto text = adapter.respond(conv, iteration);
  if (timed) conv.latency_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (auto* http = dynamic_cast<HttpAdapter*>(&adapter)) {
    conv.prompt_tokens += http->last_prompt_tokens();
    conv.completion_tokens += http->last_completion_tokens();
  }
  conv.append(Role::Assistant, text);
  return text;
}

// ---------------------------------------------------------------------------
// Extraction

std::string extract_reward_source(std::string_view response) {
  std::vector<std::string_view> lines;
  std::vector<std::size_t> starts;
  for (std::size_t pos = 0; pos <= response.size();) {
    auto end = response.find('\n', pos);
    if (end == std::string_view::npos) end = response.size();
    starts.push_back(pos);
    lines.push_back(response.substr(pos, end - pos));
    pos = end + 1;
  }
  auto is_fence = [](std::string_view l) {
    const auto first = l.find_first_not_of(" \t");
    return first != std::string_view::npos && l.substr(first).starts_with("```");
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_fence(lines[i])) continue;
    std::size_t k = i + 1;
    while (k < lines.size() && !is_fence(lines[k])) ++k;
    if (k == lines.size()) break;  // unterminated fence: fall through to the line scan
    const auto begin = starts[i + 1];
    const auto block = response.substr(begin, starts[k] - begin);
    if (block.find_first_not_of(" \t\r\n") != std::string_view::npos) return std::string(block);
    i = k;  // blank block
  }

  static const std::regex code_line(R"(^\s*([A-Za-z_][A-Za-z_0-9]*(\[[^\]]*\])?\s*=[^=].*|return\b.*)$)");
  static const std::regex filler(R"(^\s*(#.*)?$)");
  std::size_t best_begin = 0;
  std::size_t best_len = 0;
  std::size_t run_begin = 0;
  std::size_t code_in_run = 0;
  std::size_t last_code = 0;
  auto close_run = [&] {
    if (code_in_run > 0 && last_code + 1 - run_begin > best_len) {
      best_begin = run_begin;
      best_len = last_code + 1 - run_begin;
    }
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line(lines[i]);
    if (std::regex_match(line, code_line)) {
      if (code_in_run == 0) run_begin = i;
      ++code_in_run;
      last_code = i;
    } else if (std::regex_match(line, filler) && code_in_run > 0) {
      continue;
    } else {
      close_run();
      code_in_run = 0;
    }
  }
  close_run();
  if (best_len == 0) throw Error("no_reward_code", "no reward code found in the response");
  const auto end_line = best_begin + best_len - 1;
  const auto begin = starts[best_begin];
  auto end = starts[end_line] + lines[end_line].size();
  if (end < response.size()) ++end;  // keep the final newline
  return std::string(response.substr(begin, end - begin));
}

// ---------------------------------------------------------------------------
// Translations

TranslationTable TranslationTable::load(const std::filesystem::path& task_dir) {
  TranslationTable t;
  const auto listings = task_dir / "listings";
  if (!std::filesystem::is_directory(listings)) return t;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(listings)) {
    if (e.path().extension() == ".py") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto dsl = task_dir / "dsl" / (f.stem().string() + ".rw");
    if (!std::filesystem::exists(dsl)) throw Error("invalid_fixture", "listing " + f.string() + " has no translation");
    t.add(read_text_file(f), read_text_file(dsl));
  }
  return t;
}

void TranslationTable::add(std::string listing, std::string dsl) {
  table_[std::string(trim_newlines(listing))] = std::move(dsl);
}

std::optional<std::string> TranslationTable::lookup(std::string_view source) const {
  auto it = table_.find(trim_newlines(source));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

} // namespace rforge
