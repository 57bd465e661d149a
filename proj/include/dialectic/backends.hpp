#pragma once

// Generation, critic and judge backends. Remote variants speak the
// chat-completions style protocol described in docs/protocol.md; mock variants
// are deterministic and need no network.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dialectic/cot_grammar.hpp"
#include "dialectic/dataset.hpp"

namespace dialectic {

/// Caps the number of in-flight remote requests across every client sharing
/// the limiter.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int capacity);

  int capacity() const noexcept { return capacity_; }

  class Permit {
   public:
    explicit Permit(ConcurrencyLimiter& owner);
    ~Permit();
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    ConcurrencyLimiter& owner_;
  };

 private:
  int capacity_;
  int in_use_ = 0;
  std::mutex mutex_;
  std::condition_variable cv_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};  // doubles after each failed attempt
};

struct RemoteConfig {
  std::string endpoint;  // scheme://host[:port][/prefix]
  std::string api_key;   // sent as a bearer token when non-empty
  std::string model = "default";
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  std::shared_ptr<ConcurrencyLimiter> limiter = std::make_shared<ConcurrencyLimiter>(4);
};

/// Environment variable read by the CLI for the API key.
inline constexpr const char* kApiKeyEnv = "DIALECTIC_API_KEY";

/// One chat-completions endpoint with retry and the shared concurrency cap.
/// Retries transport errors, 429 and 5xx; everything else fails immediately.
class ChatTransport {
 public:
  explicit ChatTransport(RemoteConfig config);

  /// POSTs `body` to <endpoint>/v1/chat/completions and returns the decoded
  /// JSON reply. `request_id` is sent as X-Request-Id and stays the same across
  /// retries.
  nlohmann::json post(const nlohmann::json& body, const std::string& request_id) const;

  /// The assistant message content of choices[0].
  static std::string first_content(const nlohmann::json& reply);

  const RemoteConfig& config() const noexcept { return config_; }

 private:
  nlohmann::json post_once(const std::string& payload, const std::string& request_id) const;

  RemoteConfig config_;
  std::string base_url_;
  std::string path_;
};

// ---------------------------------------------------------------------------
// Generation

struct GenerationRequest {
  std::string prompt_id;
  std::string prompt_text;
  std::optional<std::string> image_ref;  // file path, http(s) URL or data URL
  int n = 1;
  double temperature = 1.0;
  int max_tokens = 1024;
  std::uint64_t seed = 0;

  void validate() const;
};

class Generator {
 public:
  virtual ~Generator() = default;
  /// Exactly `req.n` responses, in request order.
  virtual std::vector<RawResponse> generate_group(const GenerationRequest& req) = 0;
};

/// Samples from the toy template space with a fixed preference over
/// templates; temperature 0 is greedy.
class MockGenerator final : public Generator {
 public:
  std::vector<RawResponse> generate_group(const GenerationRequest& req) override;
};

/// Sends `n` independent single-completion requests, bounded by the limiter.
class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(RemoteConfig config) : transport_(std::move(config)) {}
  std::vector<RawResponse> generate_group(const GenerationRequest& req) override;

  /// The request body for completion `index` of a group (exposed for tests and
  /// the protocol doc).
  static nlohmann::json request_body(const GenerationRequest& req, int index,
                                     const std::string& model);

 private:
  ChatTransport transport_;
};

/// Reads a local image and returns a data URL; URLs are returned unchanged.
std::string image_url_for(const std::string& image_ref);

// ---------------------------------------------------------------------------
// Critic (logical-consistency scorer for think blocks)

class Critic {
 public:
  virtual ~Critic() = default;
  /// Raw score, nominally in [0, 1]; the reward engine clamps.
  virtual double score(std::string_view think_text) = 0;
};

/// 0 without complete dialectic units, else min(1, 0.4 + 0.3 * units).
double critic_score_mock(std::string_view think_text);

class MockCritic final : public Critic {
 public:
  double score(std::string_view think_text) override { return critic_score_mock(think_text); }
};

/// Always returns the same value; handy for pinning reward fixtures.
class FixedCritic final : public Critic {
 public:
  explicit FixedCritic(double value) : value_(value) {}
  double score(std::string_view) override { return value_; }

 private:
  double value_;
};

inline constexpr std::string_view kDefaultCriticPrompt =
    "You are a strict reviewer of forensic reasoning. Score the logical self-consistency and "
    "causal validity of the following reasoning from 0.0 to 1.0. Reply with the number only.";

/// Expects the reply content to be a single real number.
class RemoteCritic final : public Critic {
 public:
  explicit RemoteCritic(RemoteConfig config, std::string system_prompt = std::string(kDefaultCriticPrompt))
      : transport_(std::move(config)), system_prompt_(std::move(system_prompt)) {}
  double score(std::string_view think_text) override;

 private:
  ChatTransport transport_;
  std::string system_prompt_;
};

// ---------------------------------------------------------------------------
// Explanation judge

/// What a judge sees. There is deliberately no field naming the model that
/// produced the explanation.
struct JudgeRequest {
  std::string sample_id;
  std::string explanation;
  std::vector<ChecklistItem> checklist;
};

/// Prompt text sent to a remote judge.
std::string build_judge_prompt(const JudgeRequest& req);

struct JudgeScores {
  double relevance = 0;
  double logicality = 0;
  double completeness = 0;
  bool operator==(const JudgeScores&) const = default;
};

/// Strict reply template, one field per line in this order:
///   Relevance: <number>
///   Logicality: <number>
///   Completeness: <number>
/// Returns nullopt for anything else. Values are not clamped here.
std::optional<JudgeScores> parse_judge_reply(std::string_view reply);

std::string format_judge_reply(const JudgeScores& scores);

class Judge {
 public:
  virtual ~Judge() = default;
  /// The judge's raw reply text.
  virtual std::string reply(const JudgeRequest& req) = 0;
};

/// Rubric mode scores from word overlap with the checklist (see
/// mock_judge_scores); fixed mode always replies with the same scores.
class MockJudge final : public Judge {
 public:
  MockJudge() = default;
  explicit MockJudge(JudgeScores fixed) : fixed_(fixed) {}
  std::string reply(const JudgeRequest& req) override;

 private:
  std::optional<JudgeScores> fixed_;
};

/// Deterministic rubric:
///   relevance    = 100 * share of explanation content words found in the checklist
///   logicality   = 100 * critic_score_mock(explanation)
///   completeness = 100 * share of checklist items sharing a content word with it
/// Content words are lowercase alphanumeric runs of length >= 4.
JudgeScores mock_judge_scores(const JudgeRequest& req);

class RemoteJudge final : public Judge {
 public:
  explicit RemoteJudge(RemoteConfig config) : transport_(std::move(config)) {}
  std::string reply(const JudgeRequest& req) override;

 private:
  ChatTransport transport_;
};

}  // namespace dialectic
