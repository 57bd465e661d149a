#pragma once

// Brute-force detection metrics in exact rational arithmetic. Written
// independently of the library: no shared helpers besides the record types.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dialectic/dataset.hpp"
#include "dialectic/eval.hpp"

namespace oracle {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t n, std::int64_t d) {
    if (d == 0) return {0, 1};  // empty class scores 0
    const auto g = std::gcd(n, d);
    return {n / g, d / g};
  }
  Rational operator+(const Rational& o) const { return make(num * o.den + o.num * den, den * o.den); }
  Rational half() const { return make(num, den * 2); }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct Expected {
  double overall_acc, macro_f1, real_acc, fake_acc, real_f1, fake_f1;
  std::map<dialectic::Category, double> per_category;
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0, missing = 0;
};

inline Expected brute_force(const std::vector<dialectic::SampleRecord>& records,
                            const std::vector<dialectic::Prediction>& preds) {
  Expected e;
  std::map<dialectic::Category, std::pair<std::int64_t, std::int64_t>> cat;
  for (const auto& r : records) {
    std::optional<dialectic::Verdict> said;
    for (const auto& p : preds)  // quadratic on purpose: no index structure to share bugs with
      if (p.record_id == r.id) said = p.verdict;
    const bool is_fake = r.label == dialectic::Verdict::Fake;
    const bool hit = said.has_value() && *said == r.label;
    if (!said) ++e.missing;
    if (is_fake && hit) ++e.tp;
    if (is_fake && !hit) ++e.fn;
    if (!is_fake && hit) ++e.tn;
    if (!is_fake && !hit) ++e.fp;
    cat[r.category].first += hit;
    cat[r.category].second += 1;
  }
  const auto acc = Rational::make(e.tp + e.tn, e.tp + e.tn + e.fp + e.fn);
  const auto fake_recall = Rational::make(e.tp, e.tp + e.fn);
  const auto real_recall = Rational::make(e.tn, e.tn + e.fp);
  // F1 = 2PR/(P+R) = 2tp / (2tp + fp + fn) for each class taken as positive
  const auto fake_f1 = Rational::make(2 * e.tp, 2 * e.tp + e.fp + e.fn);
  const auto real_f1 = Rational::make(2 * e.tn, 2 * e.tn + e.fn + e.fp);
  e.overall_acc = acc.to_double();
  e.fake_acc = fake_recall.to_double();
  e.real_acc = real_recall.to_double();
  e.fake_f1 = fake_f1.to_double();
  e.real_f1 = real_f1.to_double();
  e.macro_f1 = (fake_f1 + real_f1).half().to_double();
  for (const auto& [c, v] : cat) e.per_category[c] = Rational::make(v.first, v.second).to_double();
  return e;
}

/// Random records and predictions: some predictions missing, some with no
/// verdict, labels and categories random.
inline void random_fixture(std::mt19937_64& rng, std::size_t n, std::vector<dialectic::SampleRecord>& records,
                           std::vector<dialectic::Prediction>& preds) {
  records = dialectic::synthetic_records(n, rng());
  preds.clear();
  std::uniform_int_distribution<int> coin(0, 1), cat(0, 3), outcome(0, 9);
  for (auto& r : records) {
    r.label = coin(rng) ? dialectic::Verdict::Fake : dialectic::Verdict::Real;
    r.category = dialectic::kCategories[static_cast<std::size_t>(cat(rng))];
    const int o = outcome(rng);
    if (o == 0) continue;  // no prediction at all
    dialectic::Prediction p{r.id, std::nullopt, "expl", std::nullopt};
    if (o > 1) p.verdict = coin(rng) ? dialectic::Verdict::Fake : dialectic::Verdict::Real;
    preds.push_back(p);
  }
  std::shuffle(preds.begin(), preds.end(), rng);
}

inline bool matches(const dialectic::DetectionReport& got, const Expected& want) {
  return got.overall_acc == want.overall_acc && got.macro_f1 == want.macro_f1 && got.real_acc == want.real_acc &&
         got.fake_acc == want.fake_acc && got.real_f1 == want.real_f1 && got.fake_f1 == want.fake_f1 &&
         got.per_category_acc == want.per_category && static_cast<std::int64_t>(got.counts.tp) == want.tp &&
         static_cast<std::int64_t>(got.counts.fp) == want.fp && static_cast<std::int64_t>(got.counts.tn) == want.tn &&
         static_cast<std::int64_t>(got.counts.fn) == want.fn &&
         static_cast<std::int64_t>(got.missing) == want.missing;
}

}  // namespace oracle
