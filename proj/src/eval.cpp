#include "dialectic/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dialectic/errors.hpp"

namespace dialectic {
namespace {

using nlohmann::json;

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> errors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      for (const auto& p : e.problems()) errors.push_back("line " + std::to_string(line_no) + ": " + p);
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

std::unordered_map<std::string, const Prediction*> index_predictions(
    const std::vector<SampleRecord>& records, const std::vector<Prediction>& predictions) {
  std::unordered_set<std::string> ids;
  for (const auto& r : records) ids.insert(r.id);
  std::unordered_map<std::string, const Prediction*> by_id;
  std::vector<std::string> errors;
  for (const auto& p : predictions) {
    if (!ids.count(p.record_id)) {
      errors.push_back("prediction for unknown record '" + p.record_id + "'");
      continue;
    }
    if (!by_id.emplace(p.record_id, &p).second)
      errors.push_back("duplicate prediction for record '" + p.record_id + "'");
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return by_id;
}

// Builds a report from one "effective verdict" per record; nullopt scores as
// the wrong class.
DetectionReport score(const std::vector<SampleRecord>& records,
                      const std::vector<std::optional<Verdict>>& effective) {
  Confusion c;
  std::size_t missing = 0;
  std::map<Category, std::pair<std::size_t, std::size_t>> per_cat;  // correct, total
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& v = effective[i];
    const bool correct = v && *v == r.label;
    if (!v) ++missing;
    if (r.label == Verdict::Fake)
      (correct ? c.tp : c.fn) += 1;
    else
      (correct ? c.tn : c.fp) += 1;
    auto& [ok, total] = per_cat[r.category];
    ok += correct ? 1 : 0;
    total += 1;
  }
  auto rep = report_from_counts(c);
  rep.missing = missing;
  for (const auto& [cat, ct] : per_cat) rep.per_category_acc[cat] = ratio(ct.first, ct.second);
  return rep;
}

Verdict verdict_field(const json& j, const char* key) {
  const auto s = j.at(key).get<std::string>();
  if (s == "Real") return Verdict::Real;
  if (s == "Fake") return Verdict::Fake;
  throw ValidationError(std::string(key) + " must be \"Real\" or \"Fake\", got '" + s + "'");
}

}  // namespace

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  for_each_json_line(path, [&](const json& j) {
    Prediction p;
    p.record_id = j.at("record_id").get<std::string>();
    if (const auto it = j.find("verdict"); it != j.end() && !it->is_null())
      p.verdict = verdict_field(j, "verdict");
    p.explanation = j.value("explanation", "");
    if (const auto it = j.find("model"); it != j.end() && it->is_string()) p.model = it->get<std::string>();
    out.push_back(std::move(p));
  });
  return out;
}

void save_predictions(const std::vector<Prediction>& predictions, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : predictions) {
    json j{{"record_id", p.record_id},
           {"verdict", p.verdict ? json(std::string(to_string(*p.verdict))) : json(nullptr)},
           {"explanation", p.explanation}};
    if (p.model) j["model"] = *p.model;
    out << j.dump() << '\n';
  }
}

DetectionReport report_from_counts(const Confusion& c) {
  DetectionReport rep;
  rep.counts = c;
  rep.overall_acc = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
  rep.fake_acc = ratio(c.tp, c.tp + c.fn);
  rep.real_acc = ratio(c.tn, c.tn + c.fp);
  rep.fake_f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  rep.real_f1 = ratio(2 * c.tn, 2 * c.tn + c.fn + c.fp);
  // mean of the two F1 fractions as one integer ratio, so it rounds once
  const std::size_t fake_den = 2 * c.tp + c.fp + c.fn;
  const std::size_t real_den = 2 * c.tn + c.fn + c.fp;
  if (fake_den == 0 || real_den == 0)
    rep.macro_f1 = fake_den ? ratio(2 * c.tp, 2 * fake_den) : ratio(2 * c.tn, 2 * real_den);
  else
    rep.macro_f1 = ratio(2 * c.tp * real_den + 2 * c.tn * fake_den, 2 * fake_den * real_den);
  return rep;
}

DetectionReport detection_metrics(const std::vector<SampleRecord>& records,
                                  const std::vector<Prediction>& predictions) {
  const auto by_id = index_predictions(records, predictions);
  std::vector<std::optional<Verdict>> effective;
  effective.reserve(records.size());
  for (const auto& r : records) {
    const auto it = by_id.find(r.id);
    effective.push_back(it == by_id.end() ? std::nullopt : it->second->verdict);
  }
  return score(records, effective);
}

DetectionReport yesno_eval(const std::vector<SampleRecord>& records,
                           const std::vector<Prediction>& predictions,
                           const std::map<std::string, QuestionPolarity>& polarity,
                           const YesNoConverter& convert_prediction) {
  const auto by_id = index_predictions(records, predictions);
  std::vector<std::string> missing_polarity;
  for (const auto& r : records)
    if (!polarity.count(r.id)) missing_polarity.push_back("no question polarity for record '" + r.id + "'");
  if (!missing_polarity.empty()) throw ValidationError(std::move(missing_polarity));

  // A Yes/No answer that agrees with the converted truth is as good as the
  // true label; a disagreeing one is as bad as the opposite label.
  std::vector<std::optional<Verdict>> effective;
  effective.reserve(records.size());
  for (const auto& r : records) {
    const auto it = by_id.find(r.id);
    if (it == by_id.end() || !it->second->verdict) {
      effective.emplace_back();
      continue;
    }
    const auto pol = polarity.at(r.id);
    const bool agree = convert_prediction(*it->second->verdict, pol) == to_yes_no(r.label, pol);
    effective.emplace_back(agree ? r.label : opposite(r.label));
  }
  return score(records, effective);
}

std::map<std::string, QuestionPolarity> load_polarity(const std::filesystem::path& path) {
  std::map<std::string, QuestionPolarity> out;
  for_each_json_line(path, [&](const json& j) {
    out[j.at("record_id").get<std::string>()] = QuestionPolarity{verdict_field(j, "affirmative_means")};
  });
  return out;
}

ExplainResult judge_explanations(const std::vector<Prediction>& predictions,
                                 const std::vector<SampleRecord>& records, Judge& judge, int workers) {
  std::unordered_map<std::string, const SampleRecord*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r);
  std::vector<JudgeRequest> requests;
  std::vector<std::string> unknown;
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.record_id);
    if (it == by_id.end()) {
      unknown.push_back("prediction for unknown record '" + p.record_id + "'");
      continue;
    }
    requests.push_back({p.record_id, p.explanation, it->second->checklist});
  }
  if (!unknown.empty()) throw ValidationError(std::move(unknown));

  const auto n = requests.size();
  std::vector<std::string> replies(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < n; i = next++) {
      try {
        replies[i] = judge.reply(requests[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto count = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(worker);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  ExplainResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = requests[i].sample_id;
    const auto parsed = parse_judge_reply(replies[i]);
    if (!parsed) {
      ++out.skipped;
      out.warnings.push_back("sample " + id + ": unparseable judge reply skipped");
      continue;
    }
    ExplainScore s{parsed->relevance, parsed->logicality, parsed->completeness};
    for (auto [name, value] : {std::pair{"relevance", &s.relevance}, std::pair{"logicality", &s.logicality},
                               std::pair{"completeness", &s.completeness}}) {
      const double clamped = std::clamp(*value, 0.0, 100.0);
      if (clamped != *value) {
        std::ostringstream os;
        os << "sample " << id << ": " << name << ' ' << *value << " clamped to " << clamped;
        out.warnings.push_back(os.str());
        *value = clamped;
      }
    }
    out.per_sample.emplace_back(id, s);
  }
  if (!out.per_sample.empty()) {
    for (const auto& [id, s] : out.per_sample) {
      out.mean.relevance += s.relevance;
      out.mean.logicality += s.logicality;
      out.mean.completeness += s.completeness;
    }
    const double k = static_cast<double>(out.per_sample.size());
    out.mean.relevance /= k;
    out.mean.logicality /= k;
    out.mean.completeness /= k;
  }
  return out;
}

nlohmann::json to_json(const DetectionReport& r) {
  json cats = json::object();
  for (const auto& [c, acc] : r.per_category_acc) cats[std::string(to_string(c))] = acc;
  return json{{"overall_acc", r.overall_acc},
              {"macro_f1", r.macro_f1},
              {"real_acc", r.real_acc},
              {"fake_acc", r.fake_acc},
              {"real_f1", r.real_f1},
              {"fake_f1", r.fake_f1},
              {"per_category_acc", std::move(cats)},
              {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}}},
              {"missing", r.missing}};
}

DetectionReport detection_report_from_json(const nlohmann::json& j) {
  try {
    DetectionReport r;
    r.overall_acc = j.at("overall_acc").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.real_acc = j.at("real_acc").get<double>();
    r.fake_acc = j.at("fake_acc").get<double>();
    r.real_f1 = j.at("real_f1").get<double>();
    r.fake_f1 = j.at("fake_f1").get<double>();
    for (const auto& [name, acc] : j.at("per_category_acc").items()) {
      const auto c = parse_category(name);
      if (!c) throw ValidationError("unknown category '" + name + "' in report");
      r.per_category_acc[*c] = acc.get<double>();
    }
    const auto& c = j.at("counts");
    r.counts = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                c.at("tn").get<std::size_t>(), c.at("fn").get<std::size_t>()};
    r.missing = j.value("missing", std::size_t{0});
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed detection report: ") + e.what());
  }
}

nlohmann::json to_json(const ExplainResult& r) {
  json samples = json::array();
  for (const auto& [id, s] : r.per_sample)
    samples.push_back({{"record_id", id},
                       {"relevance", s.relevance},
                       {"logicality", s.logicality},
                       {"completeness", s.completeness}});
  return json{{"mean",
               {{"relevance", r.mean.relevance},
                {"logicality", r.mean.logicality},
                {"completeness", r.mean.completeness}}},
              {"scored", r.per_sample.size()},
              {"skipped", r.skipped},
              {"warnings", r.warnings},
              {"samples", std::move(samples)}};
}

std::string render_table(const DetectionReport& r, const std::optional<ExplainScore>& explain) {
  std::vector<std::string> head{"Acc", "F1", "Real", "Fake", "Hum", "Obj", "Sce", "Ani"};
  std::vector<std::string> cells;
  auto pct = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
    return std::string(buf);
  };
  auto num = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return std::string(buf);
  };
  for (double v : {r.overall_acc, r.macro_f1, r.real_acc, r.fake_acc}) cells.push_back(pct(v));
  for (auto c : kCategories) {
    const auto it = r.per_category_acc.find(c);
    cells.push_back(it == r.per_category_acc.end() ? "-" : pct(it->second));
  }
  if (explain) {
    head.insert(head.end(), {"Rel", "Exp", "Com"});
    for (double v : {explain->relevance, explain->logicality, explain->completeness}) cells.push_back(num(v));
  }
  std::ostringstream os;
  char buf[32];
  for (const auto& h : head) {
    std::snprintf(buf, sizeof buf, "%7s", h.c_str());
    os << buf;
  }
  os << '\n';
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%7s", c.c_str());
    os << buf;
  }
  os << '\n';
  return os.str();
}

}  // namespace dialectic
