#pragma once

// Detection metrics (Fake is the positive class), Yes/No-mode evaluation and
// judge-based explanation scoring.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dialectic/backends.hpp"
#include "dialectic/cot_grammar.hpp"
#include "dialectic/dataset.hpp"

namespace dialectic {

struct Prediction {
  std::string record_id;
  std::optional<Verdict> verdict;  // absent when no verdict could be extracted
  std::string explanation;
  std::optional<std::string> model;  // never forwarded to judges
};

/// Line-delimited {"record_id", "verdict": "Real"|"Fake"|null, "explanation", "model"?}.
std::vector<Prediction> load_predictions(const std::filesystem::path& path);
void save_predictions(const std::vector<Prediction>& predictions, const std::filesystem::path& path);

struct Confusion {
  std::size_t tp = 0;  // fake predicted fake
  std::size_t fp = 0;  // real not predicted real
  std::size_t tn = 0;  // real predicted real
  std::size_t fn = 0;  // fake not predicted fake
  bool operator==(const Confusion&) const = default;
};

struct DetectionReport {
  double overall_acc = 0;
  double macro_f1 = 0;
  double real_acc = 0;
  double fake_acc = 0;
  double real_f1 = 0;
  double fake_f1 = 0;
  std::map<Category, double> per_category_acc;  // only categories present
  Confusion counts;
  std::size_t missing = 0;  // records scored wrong for lack of a verdict

  bool operator==(const DetectionReport&) const = default;
};

/// Every record is scored; records without a prediction, or with no verdict,
/// count as wrong. Throws ValidationError on an unknown or duplicated
/// record_id.
DetectionReport detection_metrics(const std::vector<SampleRecord>& records,
                                  const std::vector<Prediction>& predictions);

/// Derived fields from raw counts; exposed so reports can be audited.
DetectionReport report_from_counts(const Confusion& counts);

using YesNoConverter = std::function<YesNo(Verdict, QuestionPolarity)>;

/// Converts both prediction and truth through each record's question polarity
/// and scores agreement. Throws ValidationError when a record has no polarity.
DetectionReport yesno_eval(const std::vector<SampleRecord>& records,
                           const std::vector<Prediction>& predictions,
                           const std::map<std::string, QuestionPolarity>& polarity,
                           const YesNoConverter& convert_prediction = to_yes_no);

/// Line-delimited {"record_id", "affirmative_means": "Real"|"Fake"}.
std::map<std::string, QuestionPolarity> load_polarity(const std::filesystem::path& path);

struct ExplainScore {
  double relevance = 0;
  double logicality = 0;
  double completeness = 0;
  bool operator==(const ExplainScore&) const = default;
};

struct ExplainResult {
  std::vector<std::pair<std::string, ExplainScore>> per_sample;  // record order
  ExplainScore mean;
  std::size_t skipped = 0;  // unparseable judge replies
  std::vector<std::string> warnings;
};

/// Asks the judge about every prediction (in parallel up to `workers`).
/// Scores are clamped to [0, 100] with a warning; unparseable replies are
/// skipped and counted. Transport failures propagate.
ExplainResult judge_explanations(const std::vector<Prediction>& predictions,
                                 const std::vector<SampleRecord>& records, Judge& judge,
                                 int workers = 1);

nlohmann::json to_json(const DetectionReport& report);
DetectionReport detection_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExplainResult& result);

/// Aligned table: Acc F1 Real Fake | Hum Obj Sce Ani [| Rel Exp Com], values
/// in percent.
std::string render_table(const DetectionReport& report, const std::optional<ExplainScore>& explain = std::nullopt);

}  // namespace dialectic
