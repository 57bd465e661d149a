#pragma once

// Annotated detection records, one JSON object per line. See
// docs/dataset_format.md for the field-by-field layout.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dialectic/cot_grammar.hpp"

namespace dialectic {

enum class Category { Human, Object, Scene, Animal };
enum class Source { FakeClue, SynthScars, OpenImage, Internet, Other };
enum class Dimension { Lighting, Reflection, Texture, Anatomy, Geometry, Optics, SceneLogic, Other };
enum class Split { Train, Benchmark };

inline constexpr std::array<Category, 4> kCategories{Category::Human, Category::Object,
                                                     Category::Scene, Category::Animal};

std::string_view to_string(Category c) noexcept;
std::string_view to_string(Source s) noexcept;
std::string_view to_string(Dimension d) noexcept;
std::string_view to_string(Split s) noexcept;

std::optional<Category> parse_category(std::string_view s);
std::optional<Source> parse_source(std::string_view s);
std::optional<Dimension> parse_dimension(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

/// Normalized rectangle, every coordinate in image-relative units.
struct BoundingBox {
  double x = 0, y = 0, w = 0, h = 0;
  bool operator==(const BoundingBox&) const = default;
};

struct ClueAnnotation {
  std::string text;
  std::optional<BoundingBox> bbox;
  Dimension dimension = Dimension::Other;
  bool operator==(const ClueAnnotation&) const = default;
};

struct ChecklistItem {
  Dimension dimension = Dimension::Other;
  std::string statement;
  Verdict supports = Verdict::Real;
  bool operator==(const ChecklistItem&) const = default;
};

struct SampleRecord {
  std::string id;
  std::string image_ref;
  Verdict label = Verdict::Real;
  Category category = Category::Object;
  Source source = Source::Other;
  std::vector<ClueAnnotation> clues;
  std::vector<ChecklistItem> checklist;
  std::string explanation;
  Split split = Split::Train;
  bool operator==(const SampleRecord&) const = default;
};

/// Problems with one record; empty when the record is valid. Does not check
/// cross-record uniqueness.
std::vector<std::string> validate(const SampleRecord& record);

nlohmann::json to_json(const SampleRecord& record);
/// Throws ValidationError listing every schema problem of the object.
SampleRecord record_from_json(const nlohmann::json& j);

struct LoadResult {
  std::vector<SampleRecord> records;
  std::vector<std::string> errors;  // "line N: ..." messages
};

/// Parses every line and collects all errors instead of stopping at the first.
LoadResult load_with_report(const std::filesystem::path& path);

/// All-or-nothing load. Throws ValidationError with the full per-line report,
/// or std::runtime_error when the file cannot be opened.
std::vector<SampleRecord> load(const std::filesystem::path& path);

void save(const std::vector<SampleRecord>& records, const std::filesystem::path& path);

struct BalanceReport {
  std::size_t total = 0;
  std::size_t real = 0;
  std::size_t fake = 0;
  double real_ratio = 0;
  double fake_ratio = 0;
  std::map<Category, std::size_t> per_category;
  std::string status;  // "empty", "even" or "uneven"
};

BalanceReport balance_report(const std::vector<SampleRecord>& records);

struct SplitResult {
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> benchmark;
  BalanceReport benchmark_balance;
};

SplitResult split_benchmark(const std::vector<SampleRecord>& records);

nlohmann::json to_json(const BalanceReport& report);

/// `count` records spread evenly over labels and categories, for dry runs and
/// tests. Deterministic in (count, seed).
std::vector<SampleRecord> synthetic_records(std::size_t count, std::uint64_t seed,
                                            Split split = Split::Benchmark);

}  // namespace dialectic
