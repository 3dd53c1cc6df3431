#pragma once

// Language-model adapters (live chat-completions over HTTP, scripted replay)
// and reward-source extraction.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rforge {

enum class Role : std::uint8_t { System, User, Assistant };

[[nodiscard]] std::string_view role_name(Role r);

struct Message {
  Role role = Role::User;
  std::string text;

  friend bool operator==(const Message&, const Message&) = default;
};

struct Conversation {
  std::vector<Message> messages;
  std::string adapter_id;
  std::string model_id;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  double latency_seconds = 0.0;

  /// Enforces alternation: an optional leading system message, then user and
  /// assistant turns starting with user. Throws Error("invalid_conversation").
  void append(Role role, std::string text);

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

[[nodiscard]] std::string conversation_to_json(const Conversation& c);
[[nodiscard]] Conversation conversation_from_json(std::string_view text);

enum class AdapterKind : std::uint8_t { Http, Replay };

struct AdapterConfig {
  AdapterKind kind = AdapterKind::Replay;
  // http
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  double temperature = 0.0;
  double timeout_seconds = 120.0;
  std::size_t retries = 2;
  double backoff_seconds = 1.0;  // doubled after each failed attempt
  std::string api_key_env = "REWARD_FORGE_API_KEY";
  /// Resend the whole conversation, or only the system message and the
  /// latest user turn.
  bool full_history = true;
  // replay
  std::filesystem::path fixture_path;
};

class Adapter {
public:
  virtual ~Adapter() = default;
  /// Text of the assistant reply to `conv` (whose last message is a user
  /// turn). `iteration` is the refinement iteration being designed.
  virtual std::string respond(const Conversation& conv, std::size_t iteration) = 0;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual std::string model() const = 0;
};

/// Multi-document fixture: each response starts after a line
/// "=== iteration <k> ===".
[[nodiscard]] std::map<std::size_t, std::string> parse_replay_fixture(std::string_view text);

class ReplayAdapter final : public Adapter {
public:
  explicit ReplayAdapter(std::map<std::size_t, std::string> responses);
  static ReplayAdapter from_file(const std::filesystem::path& path);

  /// Throws Error("missing_fixture") past the fixture range.
  std::string respond(const Conversation& conv, std::size_t iteration) override;
  [[nodiscard]] std::string id() const override { return "replay"; }
  [[nodiscard]] std::string model() const override { return "scripted"; }

private:
  std::map<std::size_t, std::string> responses_;
};

class HttpAdapter final : public Adapter {
public:
  /// Throws Error("credential_missing") when the key variable is unset.
  explicit HttpAdapter(AdapterConfig cfg);

  /// Throws Error("adapter_failure") after retries + 1 failed attempts.
  std::string respond(const Conversation& conv, std::size_t iteration) override;
  [[nodiscard]] std::string id() const override { return "http"; }
  [[nodiscard]] std::string model() const override { return cfg_.model; }

  [[nodiscard]] std::size_t attempts() const noexcept { return attempts_; }
  [[nodiscard]] std::size_t last_prompt_tokens() const noexcept { return prompt_tokens_; }
  [[nodiscard]] std::size_t last_completion_tokens() const noexcept { return completion_tokens_; }

  /// Request body for a conversation.
  [[nodiscard]] std::string request_body(const Conversation& conv) const;

private:
  AdapterConfig cfg_;
  std::string key_;
  std::size_t attempts_ = 0;
  std::size_t prompt_tokens_ = 0;
  std::size_t completion_tokens_ = 0;
};

[[nodiscard]] std::unique_ptr<Adapter> make_adapter(const AdapterConfig& cfg);

/// Appends the assistant reply to `conv` and returns it. Throws
/// Error("invalid_conversation") unless the last message is a user turn.
std::string complete(Conversation& conv, Adapter& adapter, std::size_t iteration);

/// Contents of the first fenced code block, else the longest run of
/// assignment / return lines. Throws Error("no_reward_code").
[[nodiscard]] std::string extract_reward_source(std::string_view response);

/// Committed hand translations from code listings to the reward language,
/// keyed by listing text.
class TranslationTable {
public:
  TranslationTable() = default;
  /// Pairs listings/<stem>.py with dsl/<stem>.rw under `task_dir`.
  static TranslationTable load(const std::filesystem::path& task_dir);

  void add(std::string listing, std::string dsl);
  [[nodiscard]] std::optional<std::string> lookup(std::string_view source) const;
  [[nodiscard]] std::size_t size() const noexcept { return table_.size(); }

private:
  std::map<std::string, std::string, std::less<>> table_;
};

} // namespace rforge
