#include "dialectic/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dialectic/backends.hpp"
#include "dialectic/cot_grammar.hpp"
#include "dialectic/dataset.hpp"
#include "dialectic/errors.hpp"
#include "dialectic/eval.hpp"
#include "dialectic/grpo.hpp"
#include "dialectic/image.hpp"
#include "dialectic/perturb.hpp"
#include "dialectic/random.hpp"
#include "dialectic/reward.hpp"
#include "dialectic/toy_lab.hpp"

namespace dialectic::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kDetectPrompt =
    "Is this image real or AI-generated? Reason inside <think></think> using [Clue], [Why fake]/[Why real] "
    "and the opposing [If real]/[If fake] counter-argument for each clue, then answer with exactly Real or "
    "Fake inside <answer></answer>.";

struct Globals {
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  std::string endpoint;
  int concurrency = 4;
  fs::path output_dir = ".";
};

void log(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << "[dialectic] " << msg << '\n';
}

std::uint64_t require_seed(const Globals& g, const std::string& command) {
  if (!g.seed) throw ValidationError(command + " is stochastic and needs --seed");
  return *g.seed;
}

fs::path output_path(const Globals& g, const std::string& flag_value, const std::string& default_name) {
  return flag_value.empty() ? g.output_dir / default_name : fs::path(flag_value);
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct JsonLine {
  std::size_t line = 0;
  json value;
};

std::vector<JsonLine> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<JsonLine> rows;
  std::vector<std::string> problems;
  std::string text;
  for (std::size_t n = 1; std::getline(in, text); ++n) {
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back({n, json::parse(text)});
      if (!rows.back().value.is_object()) problems.push_back("line " + std::to_string(n) + ": not a JSON object");
    } catch (const json::parse_error& e) {
      problems.push_back("line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (!problems.empty()) throw ValidationError(problems);
  return rows;
}

std::string line_prefix(const JsonLine& row) { return "line " + std::to_string(row.line) + ": "; }

RemoteConfig remote_config(const Globals& g) {
  if (g.endpoint.empty()) throw ValidationError("a remote backend needs --endpoint");
  if (g.concurrency < 1) throw ValidationError("--concurrency must be >= 1");
  RemoteConfig cfg;
  cfg.endpoint = g.endpoint;
  if (const char* key = std::getenv(kApiKeyEnv)) cfg.api_key = key;
  cfg.limiter = std::make_shared<ConcurrencyLimiter>(g.concurrency);
  return cfg;
}

// ---------------------------------------------------------------------------
// reward score

struct RewardFlags {
  std::string input;
  std::string output;
  RewardWeights weights;
  std::size_t l_max = 1000;
  bool normalize_length = false;
  std::string critic = "mock";
  bool critic_fallback = false;
};

int reward_score(const Globals& g, const RewardFlags& f) {
  f.weights.validate();
  LengthConfig length{f.l_max, f.normalize_length};
  length.validate();

  std::unique_ptr<Critic> critic;
  if (f.critic == "mock")
    critic = std::make_unique<MockCritic>();
  else if (f.critic == "remote")
    critic = std::make_unique<RemoteCritic>(remote_config(g));
  else
    throw ValidationError("unknown critic '" + f.critic + "' (mock or remote)");

  const auto rows = read_jsonl(f.input);
  std::vector<std::string> problems;
  std::vector<std::pair<json, RawResponse>> items;
  std::vector<Verdict> truths;
  for (const auto& row : rows) {
    const auto& v = row.value;
    const std::string p = line_prefix(row);
    if (!v.contains("id") || !v["id"].is_string()) problems.push_back(p + "missing string field 'id'");
    if (!v.contains("text") || !v["text"].is_string()) problems.push_back(p + "missing string field 'text'");
    std::optional<Verdict> truth;
    if (v.contains("truth") && v["truth"].is_string()) {
      const auto s = v["truth"].get<std::string>();
      if (s == "Real") truth = Verdict::Real;
      if (s == "Fake") truth = Verdict::Fake;
    }
    if (!truth) problems.push_back(p + "'truth' must be \"Real\" or \"Fake\"");
    if (v.contains("token_count") && !v["token_count"].is_number_unsigned())
      problems.push_back(p + "'token_count' must be a non-negative integer");
    if (!problems.empty()) continue;
    RawResponse raw = RawResponse::from_text(v["text"].get<std::string>());
    if (v.contains("token_count")) raw.token_count = v["token_count"].get<std::size_t>();
    json head{{"id", v["id"]}, {"prompt_id", v.value("prompt_id", v["id"].get<std::string>())}};
    items.emplace_back(std::move(head), std::move(raw));
    truths.push_back(*truth);
  }
  if (!problems.empty()) throw ValidationError(problems);

  const auto policy = f.critic_fallback ? CriticFailure::Substitute : CriticFailure::Fail;
  const fs::path out_path = output_path(g, f.output, "rewards.jsonl");
  auto out = open_output(out_path);
  std::size_t degraded = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto b = reward_total(items[i].second, truths[i], *critic, f.weights, length, policy);
    degraded += b.critic_degraded;
    json line = items[i].first;
    line.update(to_json(b));
    out << line.dump() << '\n';
  }
  log(g, "scored " + std::to_string(items.size()) + " responses -> " + out_path.string());
  if (degraded) std::cerr << "warning: critic unavailable for " << degraded << " responses, logic reward set to 0\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// grpo advantages

struct AdvantageFlags {
  std::string input;
  std::string output;
  double std_floor = 1e-4;
};

int grpo_advantages(const Globals& g, const AdvantageFlags& f) {
  if (!(f.std_floor > 0)) throw ValidationError("--std-floor must be > 0");
  const auto rows = read_jsonl(f.input);
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = rows[i].value;
    if (!v.contains("prompt_id") || !v["prompt_id"].is_string() || !v.contains("total") ||
        !v["total"].is_number()) {
      problems.push_back(line_prefix(rows[i]) + "needs string 'prompt_id' and numeric 'total'");
      continue;
    }
    const auto pid = v["prompt_id"].get<std::string>();
    auto [it, fresh] = members.try_emplace(pid);
    if (fresh) order.push_back(pid);
    it->second.push_back(i);
  }
  for (const auto& pid : order)
    if (members[pid].size() < 2) problems.push_back("group '" + pid + "' has a single response");
  if (!problems.empty()) throw ValidationError(problems);

  const fs::path out_path = output_path(g, f.output, "advantages.jsonl");
  auto out = open_output(out_path);
  for (const auto& pid : order) {
    const auto& idx = members[pid];
    Vector<double> rewards(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) rewards[static_cast<Eigen::Index>(k)] = rows[idx[k]].value["total"].get<double>();
    const auto adv = compute_advantages(rewards, f.std_floor);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& v = rows[idx[k]].value;
      json line{{"id", v.value("id", json())},
                {"prompt_id", pid},
                {"reward", rewards[static_cast<Eigen::Index>(k)]},
                {"advantage", adv[static_cast<Eigen::Index>(k)]}};
      out << line.dump() << '\n';
    }
  }
  log(g, std::to_string(order.size()) + " groups -> " + out_path.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// toy

struct ToyTrainFlags {
  std::string output;
  int contexts = 4;
  TrainConfig train;
  bool raw_length = false;
};

int toy_train(const Globals& g, ToyTrainFlags f) {
  f.train.seed = require_seed(g, "toy train");
  if (f.raw_length) f.train.reward.length.normalize = false;
  f.train.reward.weights.validate();
  f.train.grpo.validate();
  const auto task = ToyTask::alternating(f.contexts);
  const auto trace = train(task, f.train);
  const fs::path out_path = output_path(g, f.output, "toy_trace.jsonl");
  auto out = open_output(out_path);
  write_trace(trace, out);
  const int last = f.train.steps;
  std::printf("step %d: P(correct)=%.4f P(dialectic)=%.4f E[reward]=%.4f\n", last, trace.mean_p_correct(last),
              trace.mean_p_dialectic(last), trace.mean_expected_reward(last));
  log(g, "trace -> " + out_path.string());
  return kExitOk;
}

struct GradcheckFlags {
  int points = 20;
  double step = 1e-5;
  double tolerance = 1e-5;
};

int toy_gradcheck(const Globals& g, const GradcheckFlags& f) {
  const auto seed = require_seed(g, "toy gradcheck");
  const auto r = gradient_check(seed, f.points, f.step);
  std::printf("max relative error: %.3e over %zu coordinates\n", r.max_rel_error, r.coordinates_checked);
  std::printf("max |surrogate| at old policy: %.3e\n", r.max_abs_value_at_old);
  return r.max_rel_error < f.tolerance && r.max_abs_value_at_old <= 1e-9 ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------
// rollout collect

struct RolloutFlags {
  std::string dataset;
  std::string output;
  std::string predictions;
  int group_size = 8;
  double temperature = 1.0;
  int max_tokens = 1024;
};

int rollout_collect(const Globals& g, const RolloutFlags& f) {
  const auto seed = require_seed(g, "rollout collect");
  const auto records = load(f.dataset);
  std::unique_ptr<Generator> gen;
  if (g.endpoint.empty())
    gen = std::make_unique<MockGenerator>();
  else
    gen = std::make_unique<RemoteGenerator>(remote_config(g));

  const fs::path out_path = output_path(g, f.output, "rollouts.jsonl");
  const fs::path pred_path = output_path(g, f.predictions, "predictions.jsonl");
  auto out = open_output(out_path);
  std::vector<Prediction> preds;
  preds.reserve(records.size());
  for (const auto& rec : records) {
    GenerationRequest req;
    req.prompt_id = rec.id;
    req.prompt_text = kDetectPrompt;
    if (!g.endpoint.empty()) req.image_ref = rec.image_ref;
    req.n = f.group_size;
    req.temperature = f.temperature;
    req.max_tokens = f.max_tokens;
    req.seed = seed;
    req.validate();
    const auto group = gen->generate_group(req);
    for (std::size_t i = 0; i < group.size(); ++i) {
      json line{{"id", rec.id + "#" + std::to_string(i)},
                {"prompt_id", rec.id},
                {"text", group[i].text},
                {"token_count", group[i].token_count},
                {"truth", std::string(to_string(rec.label))}};
      out << line.dump() << '\n';
    }
    const auto parsed = parse(group.front());
    preds.push_back({rec.id, parsed.verdict, parsed.think_block.value_or(group.front().text), std::nullopt});
  }
  save_predictions(preds, pred_path);
  log(g, std::to_string(records.size()) + " groups -> " + out_path.string() + ", " + pred_path.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct DetectFlags {
  std::string dataset;
  std::string predictions;
  std::string output;
};

int eval_detect(const Globals& g, const DetectFlags& f) {
  const auto records = load(f.dataset);
  const auto preds = load_predictions(f.predictions);
  const auto report = detection_metrics(records, preds);
  const fs::path out_path = output_path(g, f.output, "detect_report.json");
  open_output(out_path) << to_json(report).dump(2) << '\n';
  std::cout << render_table(report);
  if (report.missing) std::cout << report.missing << " records had no verdict and were scored wrong\n";
  return kExitOk;
}

struct YesNoFlags {
  std::string dataset;
  std::string predictions;
  std::string polarity;
  std::string output;
};

int eval_yesno(const Globals& g, const YesNoFlags& f) {
  const auto records = load(f.dataset);
  const auto preds = load_predictions(f.predictions);
  const auto report = yesno_eval(records, preds, load_polarity(f.polarity));
  const fs::path out_path = output_path(g, f.output, "yesno_report.json");
  open_output(out_path) << to_json(report).dump(2) << '\n';
  std::cout << render_table(report);
  return kExitOk;
}

struct ExplainFlags {
  std::string dataset;
  std::string predictions;
  std::string output;
  std::string judge = "mock";
  std::vector<double> fixed_scores;
};

int eval_explain(const Globals& g, const ExplainFlags& f) {
  const auto records = load(f.dataset);
  const auto preds = load_predictions(f.predictions);
  std::unique_ptr<Judge> judge;
  if (f.judge == "mock") {
    judge = std::make_unique<MockJudge>();
  } else if (f.judge == "fixed") {
    if (f.fixed_scores.size() != 3) throw ValidationError("--scores needs three values");
    judge = std::make_unique<MockJudge>(JudgeScores{f.fixed_scores[0], f.fixed_scores[1], f.fixed_scores[2]});
  } else if (f.judge == "remote") {
    judge = std::make_unique<RemoteJudge>(remote_config(g));
  } else {
    throw ValidationError("unknown judge '" + f.judge + "' (mock, fixed or remote)");
  }
  const int workers = f.judge == "remote" ? std::max(1, g.concurrency) : 1;
  const auto result = judge_explanations(preds, records, *judge, workers);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  const fs::path out_path = output_path(g, f.output, "explain_report.json");
  open_output(out_path) << to_json(result).dump(2) << '\n';
  std::printf("Rel %.2f  Exp %.2f  Com %.2f  (%zu scored, %zu skipped)\n", result.mean.relevance,
              result.mean.logicality, result.mean.completeness, result.per_sample.size(), result.skipped);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// perturb

struct PerturbRunFlags {
  std::string input_dir;
  std::vector<std::string> only;
};

int perturb_run(const Globals& g, const PerturbRunFlags& f) {
  const auto seed = require_seed(g, "perturb run");
  const fs::path root(f.input_dir);
  if (!fs::is_directory(root)) throw ValidationError(f.input_dir + " is not a directory");

  std::vector<PerturbationSpec> suite;
  for (const auto& spec : table_vi_suite())
    if (f.only.empty() || std::find(f.only.begin(), f.only.end(), spec.slug()) != f.only.end()) suite.push_back(spec);
  if (suite.empty()) throw ValidationError("--only matched no perturbation");

  std::vector<fs::path> images;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && is_supported_image(entry.path())) images.push_back(fs::relative(entry.path(), root));
  std::sort(images.begin(), images.end());

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::vector<std::string> errors;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < images.size();) {
      const auto& rel = images[i];
      try {
        const Image img = read_image(root / rel);
        for (auto spec : suite) {
          if (spec.kind == PerturbationKind::GaussianNoise) spec.seed = mix_seed(seed, stable_hash(rel.generic_string()));
          write_image(apply(spec, img), g.output_dir / spec.slug() / rel);
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        errors.push_back(rel.generic_string() + ": " + e.what());
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, g.concurrency)), images.size());
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (!errors.empty()) {
    std::sort(errors.begin(), errors.end());
    throw ValidationError(errors);
  }
  std::printf("%zu images x %zu perturbations -> %s\n", images.size(), suite.size(), g.output_dir.string().c_str());
  return kExitOk;
}

struct PerturbReportFlags {
  std::string clean;
  std::string reports_dir;
  bool percentage_points = false;
};

DetectionReport read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return detection_report_from_json(json::parse(in));
}

int perturb_report(const Globals&, const PerturbReportFlags& f) {
  const auto clean = read_report(f.clean);
  std::vector<std::pair<PerturbationSpec, DetectionReport>> rows;
  for (const auto& spec : table_vi_suite()) {
    const auto path = fs::path(f.reports_dir) / (spec.slug() + ".json");
    if (fs::exists(path)) rows.emplace_back(spec, read_report(path));
  }
  if (rows.empty()) throw ValidationError("no <slug>.json reports found in " + f.reports_dir);
  const auto rep =
      robustness_report(clean, rows, f.percentage_points ? DeltaMode::PercentagePoint : DeltaMode::Relative);
  std::cout << render_table(rep);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// dataset

int dataset_validate(const Globals& g, const std::string& file) {
  const auto result = load_with_report(file);
  for (const auto& e : result.errors) std::cerr << file << ": " << e << '\n';
  if (!result.errors.empty()) return kExitValidation;
  std::printf("%zu records OK\n", result.records.size());
  log(g, "validated " + file);
  return kExitOk;
}

int dataset_stats(const std::string& file, bool benchmark_only) {
  auto records = load(file);
  if (benchmark_only) records = split_benchmark(records).benchmark;
  std::cout << to_json(balance_report(records)).dump(2) << '\n';
  return kExitOk;
}

struct SynthFlags {
  std::size_t count = 100;
  std::string output;
};

int dataset_synth(const Globals& g, const SynthFlags& f) {
  const auto seed = require_seed(g, "dataset synth");
  const fs::path out_path = output_path(g, f.output, "synthetic.jsonl");
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save(synthetic_records(f.count, seed), out_path);
  log(g, std::to_string(f.count) + " records -> " + out_path.string());
  return kExitOk;
}

void add_reward_weight_flags(CLI::App* cmd, RewardWeights& w) {
  cmd->add_option("--w-acc", w.accuracy, "accuracy weight")->capture_default_str();
  cmd->add_option("--w-fmt", w.format, "format weight")->capture_default_str();
  cmd->add_option("--w-struc", w.structure, "structure weight")->capture_default_str();
  cmd->add_option("--w-logic", w.logic, "logic weight")->capture_default_str();
  cmd->add_option("--w-len", w.length, "length weight")->capture_default_str();
}

}  // namespace

int route(int argc, char** argv) {
  CLI::App app{"Dialectic reasoning rewards, GRPO utilities and detection evaluation"};
  app.name("dialectic");
  app.footer(std::string("Environment:\n  ") + kApiKeyEnv +
             "  bearer token for --endpoint backends\n\nExit codes: 0 ok, 1 invalid input, 2 backend failure, "
             "64 usage");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file whose keys mirror the flags (flags win)");

  Globals g;
  app.add_option("--seed", g.seed, "seed for stochastic commands");
  app.add_flag("-v,--verbose", g.verbose, "progress messages on stderr");
  app.add_option("--endpoint", g.endpoint, "remote backend base URL (scheme://host[:port][/prefix])");
  app.add_option("--concurrency", g.concurrency, "maximum in-flight backend requests")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--output-dir", g.output_dir, "directory for default output files")->capture_default_str();

  int exit_code = kExitOk;
  auto run = [&exit_code](auto fn) { return [&exit_code, fn] { exit_code = fn(); }; };

  // reward
  auto* reward = app.add_subcommand("reward", "composite reward scoring")->require_subcommand(1);
  RewardFlags rf;
  auto* score = reward->add_subcommand("score", "score responses against ground truth");
  score->add_option("input", rf.input, "JSONL of {id, prompt_id, text, token_count?, truth}")->required();
  score->add_option("-o,--output", rf.output, "output JSONL (default <output-dir>/rewards.jsonl)");
  add_reward_weight_flags(score, rf.weights);
  score->add_option("--l-max", rf.l_max, "length budget in tokens")->capture_default_str();
  score->add_flag("--normalize-length", rf.normalize_length, "divide the length reward by l_max");
  score->add_option("--critic", rf.critic, "mock or remote")->capture_default_str();
  score->add_flag("--critic-fallback", rf.critic_fallback, "score logic 0 instead of failing when the critic is down");
  score->callback(run([&] { return reward_score(g, rf); }));

  // grpo
  auto* grpo = app.add_subcommand("grpo", "GRPO utilities")->require_subcommand(1);
  AdvantageFlags af;
  auto* adv = grpo->add_subcommand("advantages", "group-relative advantages from scored rewards");
  adv->add_option("input", af.input, "JSONL with prompt_id and total (reward score output)")->required();
  adv->add_option("-o,--output", af.output, "output JSONL (default <output-dir>/advantages.jsonl)");
  adv->add_option("--std-floor", af.std_floor, "added to the group std")->capture_default_str();
  adv->callback(run([&] { return grpo_advantages(g, af); }));

  // toy
  auto* toy = app.add_subcommand("toy", "built-in toy policy")->require_subcommand(1);
  ToyTrainFlags tf;
  auto* toy_train_cmd = toy->add_subcommand("train", "train the toy softmax policy with GRPO");
  toy_train_cmd->add_option("-o,--output", tf.output, "trace JSONL (default <output-dir>/toy_trace.jsonl)");
  toy_train_cmd->add_option("--contexts", tf.contexts, "number of contexts")->capture_default_str();
  toy_train_cmd->add_option("--group-size", tf.train.grpo.group_size, "responses per group")->capture_default_str();
  toy_train_cmd->add_option("--steps", tf.train.steps, "training steps")->capture_default_str();
  toy_train_cmd->add_option("--lr", tf.train.learning_rate, "learning rate")->capture_default_str();
  toy_train_cmd->add_option("--clip-eps", tf.train.grpo.clip_eps, "ratio clip range")->capture_default_str();
  toy_train_cmd->add_option("--kl-coeff", tf.train.grpo.kl_coeff, "KL penalty weight")->capture_default_str();
  add_reward_weight_flags(toy_train_cmd, tf.train.reward.weights);
  toy_train_cmd->add_flag("--raw-length", tf.raw_length, "use the unnormalized length reward");
  toy_train_cmd->callback(run([&] { return toy_train(g, tf); }));

  GradcheckFlags gf;
  auto* gradcheck = toy->add_subcommand("gradcheck", "analytic vs finite-difference surrogate gradient");
  gradcheck->add_option("--points", gf.points, "random parameter points")->capture_default_str();
  gradcheck->add_option("--step", gf.step, "finite-difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", gf.tolerance, "pass threshold")->capture_default_str();
  gradcheck->callback(run([&] { return toy_gradcheck(g, gf); }));

  // rollout
  auto* rollout = app.add_subcommand("rollout", "response generation")->require_subcommand(1);
  RolloutFlags rof;
  auto* collect = rollout->add_subcommand("collect", "sample a group of responses per record (mock unless --endpoint)");
  collect->add_option("dataset", rof.dataset, "dataset JSONL")->required();
  collect->add_option("-o,--output", rof.output, "rollouts JSONL (default <output-dir>/rollouts.jsonl)");
  collect->add_option("--predictions", rof.predictions,
                      "predictions JSONL from each group's first response (default <output-dir>/predictions.jsonl)");
  collect->add_option("--group-size", rof.group_size, "responses per record")->capture_default_str();
  collect->add_option("--temperature", rof.temperature, "sampling temperature")->capture_default_str();
  collect->add_option("--max-tokens", rof.max_tokens, "completion token cap")->capture_default_str();
  collect->callback(run([&] { return rollout_collect(g, rof); }));

  // eval
  auto* eval = app.add_subcommand("eval", "evaluation")->require_subcommand(1);
  DetectFlags df;
  auto* detect = eval->add_subcommand("detect", "detection metrics");
  detect->add_option("dataset", df.dataset, "dataset JSONL")->required();
  detect->add_option("predictions", df.predictions, "predictions JSONL")->required();
  detect->add_option("-o,--output", df.output, "report JSON (default <output-dir>/detect_report.json)");
  detect->callback(run([&] { return eval_detect(g, df); }));

  YesNoFlags yf;
  auto* yesno = eval->add_subcommand("yesno", "yes/no question mode");
  yesno->add_option("dataset", yf.dataset, "dataset JSONL")->required();
  yesno->add_option("predictions", yf.predictions, "predictions JSONL")->required();
  yesno->add_option("polarity", yf.polarity, "JSONL of {record_id, affirmative_means}")->required();
  yesno->add_option("-o,--output", yf.output, "report JSON (default <output-dir>/yesno_report.json)");
  yesno->callback(run([&] { return eval_yesno(g, yf); }));

  ExplainFlags ef;
  auto* explain = eval->add_subcommand("explain", "judge-scored explanation quality");
  explain->add_option("dataset", ef.dataset, "dataset JSONL")->required();
  explain->add_option("predictions", ef.predictions, "predictions JSONL")->required();
  explain->add_option("-o,--output", ef.output, "report JSON (default <output-dir>/explain_report.json)");
  explain->add_option("--judge", ef.judge, "mock, fixed or remote")->capture_default_str();
  explain->add_option("--scores", ef.fixed_scores, "three scores for --judge fixed")->expected(3);
  explain->callback(run([&] { return eval_explain(g, ef); }));

  // perturb
  auto* perturb = app.add_subcommand("perturb", "robustness perturbations")->require_subcommand(1);
  PerturbRunFlags pf;
  auto* prun = perturb->add_subcommand("run", "write <output-dir>/<slug>/<relative path> for every image");
  prun->add_option("input_dir", pf.input_dir, "directory of PNG/JPEG/PPM images")->required();
  prun->add_option("--only", pf.only, "restrict to these slugs, e.g. jpeg_70");
  prun->callback(run([&] { return perturb_run(g, pf); }));

  PerturbReportFlags prf;
  auto* preport = perturb->add_subcommand("report", "change table from detect reports");
  preport->add_option("clean", prf.clean, "clean detect_report.json")->required();
  preport->add_option("reports_dir", prf.reports_dir, "directory holding <slug>.json reports")->required();
  preport->add_flag("--points", prf.percentage_points, "percentage-point instead of relative changes");
  preport->callback(run([&] { return perturb_report(g, prf); }));

  // dataset
  auto* dataset = app.add_subcommand("dataset", "dataset files")->require_subcommand(1);
  std::string validate_file;
  auto* dvalidate = dataset->add_subcommand("validate", "check every record, reporting per-line errors");
  dvalidate->add_option("file", validate_file, "dataset JSONL")->required();
  dvalidate->callback(run([&] { return dataset_validate(g, validate_file); }));

  std::string stats_file;
  bool benchmark_only = false;
  auto* dstats = dataset->add_subcommand("stats", "label and category balance");
  dstats->add_option("file", stats_file, "dataset JSONL")->required();
  dstats->add_flag("--benchmark", benchmark_only, "only the benchmark split");
  dstats->callback(run([&] { return dataset_stats(stats_file, benchmark_only); }));

  SynthFlags sf;
  auto* dsynth = dataset->add_subcommand("synth", "write a balanced synthetic dataset");
  dsynth->add_option("--count", sf.count, "number of records")->capture_default_str();
  dsynth->add_option("-o,--output", sf.output, "output JSONL (default <output-dir>/synthetic.jsonl)");
  dsynth->callback(run([&] { return dataset_synth(g, sf); }));

  if (argc <= 1) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input:\n" << e.what() << '\n';
    return kExitValidation;
  } catch (const BackendError& e) {
    std::cerr << "backend failure: " << e.what() << '\n';
    return kExitTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return exit_code;
}

}  // namespace dialectic::cli
