#include "dialectic/backends.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "dialectic/errors.hpp"
#include "dialectic/random.hpp"
#include "dialectic/response_templates.hpp"

namespace dialectic {
namespace {

using nlohmann::json;

constexpr std::string_view kCompletionsPath = "/v1/chat/completions";

std::string base64(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string mime_for(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".ppm") return "image/x-portable-pixmap";
  if (ext == ".webp") return "image/webp";
  return "image/png";
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::set<std::string> content_words(std::string_view text) {
  std::set<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 4) words.insert(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else
      flush();
  }
  flush();
  return words;
}

// Mock preference over the template space: dialectic beats unidirectional,
// short beats long, malformed is rare.
constexpr std::array<double, kTemplateCount> kMockLogits{-1.0, 1.0, 0.0, 0.5, -0.5,
                                                         1.0,  0.0, 0.5, -0.5};

}  // namespace

// ---------------------------------------------------------------------------

ConcurrencyLimiter::ConcurrencyLimiter(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("concurrency cap must be >= 1");
}

ConcurrencyLimiter::Permit::Permit(ConcurrencyLimiter& owner) : owner_(owner) {
  std::unique_lock lock(owner_.mutex_);
  owner_.cv_.wait(lock, [&] { return owner_.in_use_ < owner_.capacity_; });
  ++owner_.in_use_;
}

ConcurrencyLimiter::Permit::~Permit() {
  {
    std::lock_guard lock(owner_.mutex_);
    --owner_.in_use_;
  }
  owner_.cv_.notify_one();
}

ChatTransport::ChatTransport(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw std::invalid_argument("remote backend requires an endpoint");
  if (!config_.limiter) config_.limiter = std::make_shared<ConcurrencyLimiter>(1);
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("endpoint must look like scheme://host[:port][/prefix]: " +
                                config_.endpoint);
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  base_url_ = config_.endpoint.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : config_.endpoint.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + std::string(kCompletionsPath);
}

json ChatTransport::post_once(const std::string& payload, const std::string& request_id) const {
  httplib::Client client(base_url_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers{{"X-Request-Id", request_id}};
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  ConcurrencyLimiter::Permit permit(*config_.limiter);
  const auto res = client.Post(path_, headers, payload, "application/json");
  if (!res) throw TransportError("request " + request_id + " failed: " + httplib::to_string(res.error()));
  if (res->status == 429) throw RateLimitError(res->body);
  if (res->status < 200 || res->status >= 300) throw HttpStatusError(res->status, res->body);
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw MalformedPayloadError(std::string("reply is not JSON: ") + e.what());
  }
}

json ChatTransport::post(const json& body, const std::string& request_id) const {
  const auto payload = body.dump();
  auto delay = config_.retry.backoff_base;
  const int attempts = std::max(1, config_.retry.max_attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      return post_once(payload, request_id);
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= attempts) throw;
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

std::string ChatTransport::first_content(const json& reply) {
  if (!reply.is_object()) throw MalformedPayloadError("reply must be a JSON object");
  const auto choices = reply.find("choices");
  if (choices == reply.end() || !choices->is_array() || choices->empty())
    throw MalformedPayloadError("reply has no choices");
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object())
    throw MalformedPayloadError("choices[0].message missing");
  const auto& msg = first["message"];
  if (!msg.contains("content") || !msg["content"].is_string())
    throw MalformedPayloadError("choices[0].message.content must be a string");
  return msg["content"].get<std::string>();
}

// ---------------------------------------------------------------------------

void GenerationRequest::validate() const {
  if (n < 1) throw std::invalid_argument("generation request needs n >= 1");
  if (!std::isfinite(temperature) || temperature < 0)
    throw std::invalid_argument("temperature must be finite and >= 0");
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");
}

std::vector<RawResponse> MockGenerator::generate_group(const GenerationRequest& req) {
  req.validate();
  const auto prompt_hash = stable_hash(req.prompt_id);
  const int context = static_cast<int>(prompt_hash % 1000);

  std::array<double, kTemplateCount> weights{};
  int greedy = 0;
  for (int t = 0; t < kTemplateCount; ++t)
    if (kMockLogits[t] > kMockLogits[greedy]) greedy = t;
  if (req.temperature > 0) {
    for (int t = 0; t < kTemplateCount; ++t)
      weights[t] = std::exp((kMockLogits[t] - kMockLogits[greedy]) / req.temperature);
  }

  std::vector<RawResponse> out;
  out.reserve(static_cast<std::size_t>(req.n));
  for (int i = 0; i < req.n; ++i) {
    int t = greedy;
    if (req.temperature > 0) {
      Rng rng(mix_seed(mix_seed(req.seed, prompt_hash), static_cast<std::uint64_t>(i)));
      t = sample_index(weights, rng);
    }
    out.push_back(render_template(t, context));
  }
  return out;
}

std::string image_url_for(const std::string& image_ref) {
  if (starts_with(image_ref, "http://") || starts_with(image_ref, "https://") ||
      starts_with(image_ref, "data:"))
    return image_ref;
  std::ifstream in(image_ref, std::ios::binary);
  if (!in) throw ValidationError("cannot read image " + image_ref);
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return "data:" + mime_for(image_ref) + ";base64," + base64(bytes);
}

json RemoteGenerator::request_body(const GenerationRequest& req, int index, const std::string& model) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", req.prompt_text}});
  if (req.image_ref)
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_url_for(*req.image_ref)}}}});
  return json{{"model", model},
              {"request_id", req.prompt_id + "#" + std::to_string(index)},
              {"messages", json::array({{{"role", "user"}, {"content", std::move(content)}}})},
              {"n", 1},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens},
              {"seed", req.seed + static_cast<std::uint64_t>(index)}};
}

std::vector<RawResponse> RemoteGenerator::generate_group(const GenerationRequest& req) {
  req.validate();
  const auto n = static_cast<std::size_t>(req.n);
  std::vector<json> bodies;
  bodies.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    bodies.push_back(request_body(req, static_cast<int>(i), transport_.config().model));

  std::vector<std::optional<RawResponse>> results(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < n; i = next++) {
      try {
        const auto id = bodies[i]["request_id"].get<std::string>();
        const auto reply = transport_.post(bodies[i], id);
        RawResponse r;
        r.text = ChatTransport::first_content(reply);
        r.token_count = whitespace_token_count(r.text);
        if (const auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
          if (const auto ct = usage->find("completion_tokens");
              ct != usage->end() && ct->is_number_unsigned())
            r.token_count = ct->get<std::size_t>();
        }
        results[i] = std::move(r);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  {
    const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(transport_.config().limiter->capacity()));
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  std::vector<RawResponse> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------

double critic_score_mock(std::string_view think_text) {
  const auto units = extract_units(think_text).size();
  if (units == 0) return 0.0;
  return std::min(1.0, 0.4 + 0.3 * static_cast<double>(units));
}

double RemoteCritic::score(std::string_view think_text) {
  const json body{{"model", transport_.config().model},
                  {"messages", json::array({{{"role", "system"}, {"content", system_prompt_}},
                                            {{"role", "user"}, {"content", std::string(think_text)}}})},
                  {"temperature", 0}};
  const auto id = "critic-" + std::to_string(stable_hash(think_text));
  const auto content = ChatTransport::first_content(transport_.post(body, id));
  const auto value = parse_number(content);
  if (!value) throw MalformedPayloadError("critic reply is not a number: '" + content + "'");
  return *value;
}

// ---------------------------------------------------------------------------

std::string build_judge_prompt(const JudgeRequest& req) {
  std::ostringstream os;
  os << "You are grading an explanation of whether an image is real or AI-generated.\n"
     << "Score three dimensions from 0 to 100:\n"
     << "- Relevance: consistency with the visual content described by the checklist.\n"
     << "- Logicality: coherent reasoning without redundancy.\n"
     << "- Completeness: coverage of the details and core information in the checklist.\n\n"
     << "Checklist:\n";
  for (const auto& item : req.checklist)
    os << "- [" << to_string(item.dimension) << ", supports "
       << (item.supports == Verdict::Real ? "real" : "fake") << "] " << item.statement << '\n';
  os << "\nExplanation:\n" << req.explanation << "\n\n"
     << "Reply with exactly three lines:\nRelevance: <number>\nLogicality: <number>\n"
        "Completeness: <number>\n";
  return os.str();
}

std::optional<JudgeScores> parse_judge_reply(std::string_view reply) {
  static constexpr std::array<std::string_view, 3> kFields{"Relevance:", "Logicality:",
                                                           "Completeness:"};
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= reply.size();) {
    auto end = reply.find('\n', start);
    if (end == std::string_view::npos) end = reply.size();
    if (auto line = trim(reply.substr(start, end - start)); !line.empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.size() != kFields.size()) return std::nullopt;
  std::array<double, 3> values{};
  for (std::size_t i = 0; i < kFields.size(); ++i) {
    if (!starts_with(lines[i], kFields[i])) return std::nullopt;
    const auto v = parse_number(lines[i].substr(kFields[i].size()));
    if (!v) return std::nullopt;
    values[i] = *v;
  }
  return JudgeScores{values[0], values[1], values[2]};
}

std::string format_judge_reply(const JudgeScores& s) {
  std::ostringstream os;
  os.precision(17);
  os << "Relevance: " << s.relevance << "\nLogicality: " << s.logicality
     << "\nCompleteness: " << s.completeness << '\n';
  return os.str();
}

JudgeScores mock_judge_scores(const JudgeRequest& req) {
  const auto words = content_words(req.explanation);
  if (words.empty()) return {};

  std::set<std::string> checklist_words;
  std::size_t covered = 0;
  for (const auto& item : req.checklist) {
    const auto item_words = content_words(item.statement);
    checklist_words.insert(item_words.begin(), item_words.end());
    if (std::any_of(item_words.begin(), item_words.end(),
                    [&](const std::string& w) { return words.count(w) > 0; }))
      ++covered;
  }
  const auto hits = static_cast<double>(std::count_if(
      words.begin(), words.end(), [&](const std::string& w) { return checklist_words.count(w) > 0; }));

  JudgeScores s;
  s.relevance = 100.0 * hits / static_cast<double>(words.size());
  s.logicality = 100.0 * critic_score_mock(req.explanation);
  s.completeness = req.checklist.empty()
                       ? 0.0
                       : 100.0 * static_cast<double>(covered) / static_cast<double>(req.checklist.size());
  return s;
}

std::string MockJudge::reply(const JudgeRequest& req) {
  return format_judge_reply(fixed_ ? *fixed_ : mock_judge_scores(req));
}

std::string RemoteJudge::reply(const JudgeRequest& req) {
  const json body{{"model", transport_.config().model},
                  {"messages", json::array({{{"role", "user"}, {"content", build_judge_prompt(req)}}})},
                  {"temperature", 0}};
  return ChatTransport::first_content(transport_.post(body, "judge-" + req.sample_id));
}

}  // namespace dialectic
