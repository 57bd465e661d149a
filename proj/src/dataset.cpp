#include "dialectic/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "dialectic/errors.hpp"

namespace dialectic {
namespace {

using nlohmann::json;

template <typename Enum, std::size_t N>
struct EnumTable {
  std::array<std::pair<Enum, std::string_view>, N> entries;

  std::string_view name(Enum e) const noexcept {
    for (const auto& [v, n] : entries)
      if (v == e) return n;
    return "";
  }
  std::optional<Enum> parse(std::string_view s) const {
    for (const auto& [v, n] : entries)
      if (n == s) return v;
    return std::nullopt;
  }
};

constexpr EnumTable<Category, 4> kCategoryNames{{{
    {Category::Human, "Human"},
    {Category::Object, "Object"},
    {Category::Scene, "Scene"},
    {Category::Animal, "Animal"},
}}};

constexpr EnumTable<Source, 5> kSourceNames{{{
    {Source::FakeClue, "fakeclue"},
    {Source::SynthScars, "synthscars"},
    {Source::OpenImage, "openimage"},
    {Source::Internet, "internet"},
    {Source::Other, "other"},
}}};

constexpr EnumTable<Dimension, 8> kDimensionNames{{{
    {Dimension::Lighting, "lighting"},
    {Dimension::Reflection, "reflection"},
    {Dimension::Texture, "texture"},
    {Dimension::Anatomy, "anatomy"},
    {Dimension::Geometry, "geometry"},
    {Dimension::Optics, "optics"},
    {Dimension::SceneLogic, "scene_logic"},
    {Dimension::Other, "other"},
}}};

constexpr EnumTable<Split, 2> kSplitNames{{{
    {Split::Train, "train"},
    {Split::Benchmark, "benchmark"},
}}};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Collects schema problems while reading one JSON object.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string where, std::vector<std::string>& errors)
      : obj_(obj), where_(std::move(where)), errors_(errors) {}

  std::optional<std::string> string(const char* key, bool required = true) {
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) {
      if (required) fail(std::string("missing field '") + key + "'");
      return std::nullopt;
    }
    if (!it->is_string()) {
      fail(std::string("field '") + key + "' must be a string");
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  template <typename Enum, std::size_t N>
  std::optional<Enum> enumeration(const char* key, const EnumTable<Enum, N>& table) {
    const auto s = string(key);
    if (!s) return std::nullopt;
    auto v = table.parse(*s);
    if (!v) fail(std::string("unknown ") + key + " '" + *s + "'");
    return v;
  }

  const json* array(const char* key) {
    const auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return nullptr;
    if (!it->is_array()) {
      fail(std::string("field '") + key + "' must be an array");
      return nullptr;
    }
    return &*it;
  }

  void fail(const std::string& msg) { errors_.push_back(where_ + ": " + msg); }

 private:
  const json& obj_;
  std::string where_;
  std::vector<std::string>& errors_;
};

std::optional<BoundingBox> read_bbox(const json& j, const std::string& where,
                                     std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back(where + ": bbox must be an object {x, y, w, h}");
    return std::nullopt;
  }
  BoundingBox box;
  bool ok = true;
  for (auto [key, dst] : {std::pair{"x", &box.x}, std::pair{"y", &box.y}, std::pair{"w", &box.w},
                          std::pair{"h", &box.h}}) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
      errors.push_back(where + ": bbox." + key + " must be a number");
      ok = false;
    } else {
      *dst = it->get<double>();
    }
  }
  return ok ? std::optional(box) : std::nullopt;
}

std::vector<std::string> validate_bbox(const BoundingBox& b) {
  std::vector<std::string> out;
  for (double v : {b.x, b.y, b.w, b.h})
    if (!std::isfinite(v)) {
      out.push_back("bbox has a non-finite coordinate");
      return out;
    }
  if (b.x < 0 || b.y < 0) out.push_back("bbox origin must be nonnegative");
  if (b.w <= 0 || b.h <= 0) out.push_back("bbox width and height must be positive");
  if (b.x + b.w > 1) out.push_back("bbox x+w = " + std::to_string(b.x + b.w) + " exceeds 1");
  if (b.y + b.h > 1) out.push_back("bbox y+h = " + std::to_string(b.y + b.h) + " exceeds 1");
  return out;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

std::string_view to_string(Category c) noexcept { return kCategoryNames.name(c); }
std::string_view to_string(Source s) noexcept { return kSourceNames.name(s); }
std::string_view to_string(Dimension d) noexcept { return kDimensionNames.name(d); }
std::string_view to_string(Split s) noexcept { return kSplitNames.name(s); }

std::optional<Category> parse_category(std::string_view s) { return kCategoryNames.parse(s); }
std::optional<Source> parse_source(std::string_view s) { return kSourceNames.parse(s); }
std::optional<Dimension> parse_dimension(std::string_view s) { return kDimensionNames.parse(s); }
std::optional<Split> parse_split(std::string_view s) { return kSplitNames.parse(s); }

std::vector<std::string> validate(const SampleRecord& record) {
  std::vector<std::string> out;
  if (blank(record.id)) out.push_back("id must be non-empty");
  if (blank(record.image_ref)) out.push_back("image_ref must be non-empty");
  for (std::size_t i = 0; i < record.clues.size(); ++i) {
    if (!record.clues[i].bbox) continue;
    for (auto& p : validate_bbox(*record.clues[i].bbox))
      out.push_back("clues[" + std::to_string(i) + "]: " + p);
  }
  for (std::size_t i = 0; i < record.checklist.size(); ++i)
    if (blank(record.checklist[i].statement))
      out.push_back("checklist[" + std::to_string(i) + "]: statement must be non-empty");
  return out;
}

nlohmann::json to_json(const SampleRecord& r) {
  json clues = json::array();
  for (const auto& c : r.clues) {
    json jc{{"text", c.text}, {"dimension", to_string(c.dimension)}};
    if (c.bbox) jc["bbox"] = {{"x", c.bbox->x}, {"y", c.bbox->y}, {"w", c.bbox->w}, {"h", c.bbox->h}};
    clues.push_back(std::move(jc));
  }
  json checklist = json::array();
  for (const auto& item : r.checklist)
    checklist.push_back({{"dimension", to_string(item.dimension)},
                         {"statement", item.statement},
                         {"supports", lower(to_string(item.supports))}});
  return json{{"id", r.id},
              {"image_ref", r.image_ref},
              {"label", to_string(r.label)},
              {"category", to_string(r.category)},
              {"source", to_string(r.source)},
              {"clues", std::move(clues)},
              {"checklist", std::move(checklist)},
              {"explanation", r.explanation},
              {"split", to_string(r.split)}};
}

SampleRecord record_from_json(const nlohmann::json& j) {
  std::vector<std::string> errors;
  if (!j.is_object()) throw ValidationError("record must be a JSON object");

  std::string where = "record";
  if (const auto it = j.find("id"); it != j.end() && it->is_string())
    where = "record '" + it->get<std::string>() + "'";
  FieldReader f(j, where, errors);

  SampleRecord r;
  if (auto v = f.string("id")) r.id = *v;
  if (auto v = f.string("image_ref")) r.image_ref = *v;
  if (auto v = f.string("label")) {
    if (*v == "Real" || *v == "Fake")
      r.label = *parse_verdict(*v);
    else
      f.fail("unknown label '" + *v + "'");
  }
  if (auto v = f.enumeration("category", kCategoryNames)) r.category = *v;
  if (auto v = f.enumeration("source", kSourceNames)) r.source = *v;
  if (auto v = f.enumeration("split", kSplitNames)) r.split = *v;
  if (auto v = f.string("explanation", false)) r.explanation = *v;

  if (const auto* clues = f.array("clues")) {
    for (std::size_t i = 0; i < clues->size(); ++i) {
      const auto& jc = (*clues)[i];
      const auto cw = where + " clues[" + std::to_string(i) + "]";
      if (!jc.is_object()) {
        errors.push_back(cw + ": must be an object");
        continue;
      }
      FieldReader cf(jc, cw, errors);
      ClueAnnotation c;
      if (auto v = cf.string("text")) c.text = *v;
      if (auto v = cf.enumeration("dimension", kDimensionNames)) c.dimension = *v;
      if (const auto it = jc.find("bbox"); it != jc.end() && !it->is_null())
        c.bbox = read_bbox(*it, cw, errors);
      r.clues.push_back(std::move(c));
    }
  }
  if (const auto* checklist = f.array("checklist")) {
    for (std::size_t i = 0; i < checklist->size(); ++i) {
      const auto& ji = (*checklist)[i];
      const auto iw = where + " checklist[" + std::to_string(i) + "]";
      if (!ji.is_object()) {
        errors.push_back(iw + ": must be an object");
        continue;
      }
      FieldReader cf(ji, iw, errors);
      ChecklistItem item;
      if (auto v = cf.enumeration("dimension", kDimensionNames)) item.dimension = *v;
      if (auto v = cf.string("statement")) item.statement = *v;
      if (auto v = cf.string("supports")) {
        if (*v == "real")
          item.supports = Verdict::Real;
        else if (*v == "fake")
          item.supports = Verdict::Fake;
        else
          cf.fail("unknown supports '" + *v + "'");
      }
      r.checklist.push_back(std::move(item));
    }
  }

  for (auto& p : validate(r)) errors.push_back(where + ": " + p);
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return r;
}

LoadResult load_with_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file " + path.string());

  LoadResult out;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto prefix = "line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      out.errors.push_back(prefix + "invalid JSON (" + e.what() + ")");
      continue;
    }
    try {
      auto record = record_from_json(j);
      if (auto [it, inserted] = first_line.emplace(record.id, line_no); !inserted) {
        out.errors.push_back(prefix + "duplicate id '" + record.id + "' (first seen on line " +
                             std::to_string(it->second) + ", again on line " +
                             std::to_string(line_no) + ")");
        continue;
      }
      out.records.push_back(std::move(record));
    } catch (const ValidationError& e) {
      for (const auto& p : e.problems()) out.errors.push_back(prefix + p);
    }
  }
  return out;
}

std::vector<SampleRecord> load(const std::filesystem::path& path) {
  auto result = load_with_report(path);
  if (!result.errors.empty()) throw ValidationError(std::move(result.errors));
  return std::move(result.records);
}

void save(const std::vector<SampleRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

BalanceReport balance_report(const std::vector<SampleRecord>& records) {
  BalanceReport rep;
  rep.total = records.size();
  for (const auto& r : records) {
    (r.label == Verdict::Real ? rep.real : rep.fake) += 1;
    rep.per_category[r.category] += 1;
  }
  if (rep.total == 0) {
    rep.status = "empty";
    return rep;
  }
  rep.real_ratio = static_cast<double>(rep.real) / static_cast<double>(rep.total);
  rep.fake_ratio = static_cast<double>(rep.fake) / static_cast<double>(rep.total);
  rep.status = rep.real == rep.fake ? "even" : "uneven";
  return rep;
}

SplitResult split_benchmark(const std::vector<SampleRecord>& records) {
  SplitResult out;
  for (const auto& r : records) (r.split == Split::Benchmark ? out.benchmark : out.train).push_back(r);
  out.benchmark_balance = balance_report(out.benchmark);
  return out;
}

nlohmann::json to_json(const BalanceReport& rep) {
  json cats = json::object();
  for (auto c : kCategories) {
    const auto it = rep.per_category.find(c);
    cats[std::string(to_string(c))] = it == rep.per_category.end() ? 0 : it->second;
  }
  return json{{"total", rep.total},        {"real", rep.real},
              {"fake", rep.fake},          {"real_ratio", rep.real_ratio},
              {"fake_ratio", rep.fake_ratio}, {"per_category", std::move(cats)},
              {"status", rep.status}};
}

std::vector<SampleRecord> synthetic_records(std::size_t count, std::uint64_t seed, Split split) {
  std::mt19937_64 rng(seed);
  std::vector<SampleRecord> out;
  out.reserve(count);
  static constexpr std::array<Dimension, 6> dims{Dimension::Lighting, Dimension::Reflection,
                                                 Dimension::Texture,  Dimension::Anatomy,
                                                 Dimension::Optics,   Dimension::Geometry};
  for (std::size_t i = 0; i < count; ++i) {
    SampleRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    r.id = id;
    r.image_ref = "images/" + r.id + ".png";
    r.label = i % 2 == 0 ? Verdict::Real : Verdict::Fake;
    r.category = kCategories[(i / 2) % kCategories.size()];
    r.source = r.label == Verdict::Real ? Source::OpenImage : Source::FakeClue;
    r.split = split;
    const auto dim = dims[rng() % dims.size()];
    const double x = static_cast<double>(rng() % 50) / 100.0;
    const double y = static_cast<double>(rng() % 50) / 100.0;
    r.clues.push_back({std::string(to_string(dim)) + " cue near the subject",
                       BoundingBox{x, y, 0.25, 0.25}, dim});
    r.checklist.push_back({dim, "the " + std::string(to_string(dim)) + " is physically consistent",
                           Verdict::Real});
    r.checklist.push_back({Dimension::Texture, "fine texture shows repetition artifacts",
                           Verdict::Fake});
    r.explanation = r.label == Verdict::Real ? "the lighting and texture are physically consistent"
                                             : "fine texture shows repetition artifacts";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dialectic
