#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hopbench/decimal.hpp"
#include "hopbench/error.hpp"

namespace hopbench {

using json = nlohmann::ordered_json;

enum class Kind {
  FC, CT, AR, TR, RK,
  FC_CT, FC_AR, FC_TR, FC_RK, CT_TR, CT_RK, AR_TR, AR_RK,
  FC_CT_TR, FC_CT_RK, FC_AR_TR, FC_AR_RK,
};

inline constexpr std::array<Kind, 17> kAllKinds = {
    Kind::FC,    Kind::CT,    Kind::AR,    Kind::TR,       Kind::RK,       Kind::FC_CT,    Kind::FC_AR,    Kind::FC_TR,
    Kind::FC_RK, Kind::CT_TR, Kind::CT_RK, Kind::AR_TR,    Kind::AR_RK,    Kind::FC_CT_TR, Kind::FC_CT_RK, Kind::FC_AR_TR,
    Kind::FC_AR_RK,
};

enum class Modality { Text, Table, Chart };
enum class Difficulty { Easy, Medium, Hard };
enum class Cmp { Greater, Less };
enum class Direction { Increase, Decrease };
enum class Position { Highest, Lowest };
enum class ArOp { Plus, Minus };
enum class Scope { Year, AllYears, EachYear };
enum class ArForm { TwoYearEquality, CrossColumnThreshold, CumulativeThreshold };
enum class CumulativeMode { RunningPrefix, GrandTotal };

inline constexpr std::array<Modality, 3> kAllModalities = {Modality::Text, Modality::Table, Modality::Chart};
inline constexpr std::array<Difficulty, 3> kAllDifficulties = {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard};

enum class SpecErrc { IllFormed, UnknownName };

inline const char* to_string(SpecErrc c) { return c == SpecErrc::IllFormed ? "IllFormed" : "UnknownName"; }

using SpecError = CodedError<SpecErrc>;

#define HOPBENCH_NAMES(Type, ...)                                                              \
  inline const auto& names_of(Type) {                                                          \
    static const std::vector<std::pair<Type, std::string_view>> table = {__VA_ARGS__};         \
    return table;                                                                              \
  }                                                                                            \
  inline std::string_view to_string(Type v) {                                                  \
    for (const auto& [k, n] : names_of(Type{})) {                                              \
      if (k == v) return n;                                                                    \
    }                                                                                          \
    return "?";                                                                                \
  }

HOPBENCH_NAMES(Kind, {Kind::FC, "FC"}, {Kind::CT, "CT"}, {Kind::AR, "AR"}, {Kind::TR, "TR"}, {Kind::RK, "RK"},
               {Kind::FC_CT, "FC+CT"}, {Kind::FC_AR, "FC+AR"}, {Kind::FC_TR, "FC+TR"}, {Kind::FC_RK, "FC+RK"},
               {Kind::CT_TR, "CT+TR"}, {Kind::CT_RK, "CT+RK"}, {Kind::AR_TR, "AR+TR"}, {Kind::AR_RK, "AR+RK"},
               {Kind::FC_CT_TR, "FC+CT+TR"}, {Kind::FC_CT_RK, "FC+CT+RK"}, {Kind::FC_AR_TR, "FC+AR+TR"},
               {Kind::FC_AR_RK, "FC+AR+RK"})
HOPBENCH_NAMES(Modality, {Modality::Text, "text"}, {Modality::Table, "table"}, {Modality::Chart, "chart"})
HOPBENCH_NAMES(Difficulty, {Difficulty::Easy, "Easy"}, {Difficulty::Medium, "Medium"}, {Difficulty::Hard, "Hard"})
HOPBENCH_NAMES(Cmp, {Cmp::Greater, "greater"}, {Cmp::Less, "less"})
HOPBENCH_NAMES(Direction, {Direction::Increase, "increase"}, {Direction::Decrease, "decrease"})
HOPBENCH_NAMES(Position, {Position::Highest, "highest"}, {Position::Lowest, "lowest"})
HOPBENCH_NAMES(ArOp, {ArOp::Plus, "plus"}, {ArOp::Minus, "minus"})
HOPBENCH_NAMES(Scope, {Scope::Year, "year"}, {Scope::AllYears, "all-years"}, {Scope::EachYear, "each-year"})
HOPBENCH_NAMES(ArForm, {ArForm::TwoYearEquality, "two-year-equality"},
               {ArForm::CrossColumnThreshold, "cross-column-threshold"},
               {ArForm::CumulativeThreshold, "cumulative-threshold"})
HOPBENCH_NAMES(CumulativeMode, {CumulativeMode::RunningPrefix, "running-prefix"},
               {CumulativeMode::GrandTotal, "grand-total"})

#undef HOPBENCH_NAMES

template <typename E>
E parse_enum(std::string_view text) {
  for (const auto& [k, n] : names_of(E{})) {
    if (n == text) return k;
  }
  throw SpecError(SpecErrc::UnknownName, std::string(text));
}

struct KindParts {
  bool fc = false, ct = false, ar = false, tr = false, rk = false;
  int count() const { return fc + ct + ar + tr + rk; }
};

inline KindParts parts_of(Kind k) {
  const auto name = to_string(k);
  KindParts p;
  p.fc = name.find("FC") != std::string_view::npos;
  p.ct = name.find("CT") != std::string_view::npos;
  p.ar = name.find("AR") != std::string_view::npos;
  p.tr = name.find("TR") != std::string_view::npos;
  p.rk = name.find("RK") != std::string_view::npos;
  return p;
}

inline std::set<Modality> footprint_of(Kind k) {
  const auto p = parts_of(k);
  std::set<Modality> out;
  if (p.fc) out.insert(Modality::Text);
  if (p.ct || p.ar) out.insert(Modality::Table);
  if (p.tr || p.rk) out.insert(Modality::Chart);
  return out;
}

inline int hop_count_of(Kind k) { return parts_of(k).count(); }

inline Difficulty difficulty_of(Kind k) {
  const int h = hop_count_of(k);
  return h == 1 ? Difficulty::Easy : h == 2 ? Difficulty::Medium : Difficulty::Hard;
}

inline std::vector<Kind> kinds_of(Difficulty d) {
  std::vector<Kind> out;
  for (auto k : kAllKinds) {
    if (difficulty_of(k) == d) out.push_back(k);
  }
  return out;
}

// Kinds whose truth is "the unique entity satisfying the description".
inline bool is_definite_description(Kind k) {
  switch (k) {
    case Kind::CT_TR: case Kind::AR_TR: case Kind::FC_CT: case Kind::FC_AR: case Kind::FC_TR:
    case Kind::FC_CT_TR: case Kind::FC_AR_TR:
      return true;
    default:
      return false;
  }
}

// Kinds of the form "during the years when <condition on X>, <rank of Y>".
inline bool is_conditional(Kind k) {
  return k == Kind::CT_RK || k == Kind::AR_RK || k == Kind::FC_CT_RK || k == Kind::FC_AR_RK;
}

struct CtPart {
  std::string column;
  Scope scope = Scope::Year;
  std::optional<int> year;
  Cmp cmp = Cmp::Greater;
  Decimal threshold;

  bool operator==(const CtPart&) const = default;
};

struct ArPart {
  ArForm form = ArForm::TwoYearEquality;
  std::string column;
  std::string column2;  // cross-column form only
  std::optional<int> year1, year2;  // two-year form only
  ArOp op = ArOp::Minus;
  Decimal result;  // two-year form only
  Scope scope = Scope::EachYear;
  std::optional<int> year;
  Cmp cmp = Cmp::Greater;
  Decimal threshold;
  CumulativeMode cumulative = CumulativeMode::RunningPrefix;

  bool operator==(const ArPart&) const = default;
};

struct TrPart {
  std::string column;
  int from = 0;
  int to = 0;
  Direction direction = Direction::Increase;

  bool operator==(const TrPart&) const = default;
};

struct RkPart {
  std::string column;
  std::optional<int> year;  // unset inside conditionals
  Position position = Position::Highest;

  bool operator==(const RkPart&) const = default;
};

struct StatementSpec {
  Kind kind = Kind::FC;
  std::optional<CtPart> ct;
  std::optional<ArPart> ar;
  std::optional<TrPart> tr;
  std::optional<RkPart> rk;
  std::string subject;
  std::optional<std::string> condition_entity;
  std::optional<std::string> fact_ref;
  bool truth = false;

  std::set<Modality> footprint() const { return footprint_of(kind); }
  int hop_count() const { return hop_count_of(kind); }

  bool operator==(const StatementSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Serialization

inline json opt_year(const std::optional<int>& y) { return y ? json(*y) : json(nullptr); }
inline std::optional<int> read_year(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<int>();
}

inline json to_json(const CtPart& p) {
  return {{"column", p.column}, {"scope", to_string(p.scope)}, {"year", opt_year(p.year)},
          {"cmp", to_string(p.cmp)}, {"threshold", p.threshold.str()}};
}
inline json to_json(const ArPart& p) {
  json j = {{"form", to_string(p.form)}, {"column", p.column}};
  switch (p.form) {
    case ArForm::TwoYearEquality:
      j["year1"] = opt_year(p.year1);
      j["year2"] = opt_year(p.year2);
      j["op"] = to_string(p.op);
      j["result"] = p.result.str();
      break;
    case ArForm::CrossColumnThreshold:
      j["column2"] = p.column2;
      j["op"] = to_string(p.op);
      j["scope"] = to_string(p.scope);
      j["year"] = opt_year(p.year);
      j["cmp"] = to_string(p.cmp);
      j["threshold"] = p.threshold.str();
      break;
    case ArForm::CumulativeThreshold:
      j["cmp"] = to_string(p.cmp);
      j["threshold"] = p.threshold.str();
      j["cumulative"] = to_string(p.cumulative);
      break;
  }
  return j;
}
inline json to_json(const TrPart& p) {
  return {{"column", p.column}, {"from", p.from}, {"to", p.to}, {"direction", to_string(p.direction)}};
}
inline json to_json(const RkPart& p) {
  return {{"column", p.column}, {"year", opt_year(p.year)}, {"position", to_string(p.position)}};
}

inline json to_json(const StatementSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["subject"] = s.subject;
  j["condition_entity"] = s.condition_entity ? json(*s.condition_entity) : json(nullptr);
  j["fact_ref"] = s.fact_ref ? json(*s.fact_ref) : json(nullptr);
  if (s.ct) j["ct"] = to_json(*s.ct);
  if (s.ar) j["ar"] = to_json(*s.ar);
  if (s.tr) j["tr"] = to_json(*s.tr);
  if (s.rk) j["rk"] = to_json(*s.rk);
  json fp = json::array();
  for (auto m : s.footprint()) fp.push_back(to_string(m));
  j["footprint"] = fp;
  j["hop_count"] = s.hop_count();
  j["truth"] = s.truth;
  return j;
}

inline CtPart ct_from_json(const json& j) {
  CtPart p;
  p.column = j.at("column").get<std::string>();
  p.scope = parse_enum<Scope>(j.at("scope").get<std::string>());
  p.year = read_year(j, "year");
  p.cmp = parse_enum<Cmp>(j.at("cmp").get<std::string>());
  p.threshold = Decimal::parse(j.at("threshold").get<std::string>());
  return p;
}
inline ArPart ar_from_json(const json& j) {
  ArPart p;
  p.form = parse_enum<ArForm>(j.at("form").get<std::string>());
  p.column = j.at("column").get<std::string>();
  switch (p.form) {
    case ArForm::TwoYearEquality:
      p.year1 = read_year(j, "year1");
      p.year2 = read_year(j, "year2");
      p.op = parse_enum<ArOp>(j.at("op").get<std::string>());
      p.result = Decimal::parse(j.at("result").get<std::string>());
      break;
    case ArForm::CrossColumnThreshold:
      p.column2 = j.at("column2").get<std::string>();
      p.op = parse_enum<ArOp>(j.at("op").get<std::string>());
      p.scope = parse_enum<Scope>(j.at("scope").get<std::string>());
      p.year = read_year(j, "year");
      p.cmp = parse_enum<Cmp>(j.at("cmp").get<std::string>());
      p.threshold = Decimal::parse(j.at("threshold").get<std::string>());
      break;
    case ArForm::CumulativeThreshold:
      p.cmp = parse_enum<Cmp>(j.at("cmp").get<std::string>());
      p.threshold = Decimal::parse(j.at("threshold").get<std::string>());
      p.cumulative = parse_enum<CumulativeMode>(j.at("cumulative").get<std::string>());
      break;
  }
  return p;
}
inline TrPart tr_from_json(const json& j) {
  return {j.at("column").get<std::string>(), j.at("from").get<int>(), j.at("to").get<int>(),
          parse_enum<Direction>(j.at("direction").get<std::string>())};
}
inline RkPart rk_from_json(const json& j) {
  return {j.at("column").get<std::string>(), read_year(j, "year"),
          parse_enum<Position>(j.at("position").get<std::string>())};
}

inline StatementSpec spec_from_json(const json& j) {
  StatementSpec s;
  s.kind = parse_enum<Kind>(j.at("kind").get<std::string>());
  s.subject = j.at("subject").get<std::string>();
  if (j.contains("condition_entity") && !j["condition_entity"].is_null()) {
    s.condition_entity = j["condition_entity"].get<std::string>();
  }
  if (j.contains("fact_ref") && !j["fact_ref"].is_null()) s.fact_ref = j["fact_ref"].get<std::string>();
  if (j.contains("ct")) s.ct = ct_from_json(j["ct"]);
  if (j.contains("ar")) s.ar = ar_from_json(j["ar"]);
  if (j.contains("tr")) s.tr = tr_from_json(j["tr"]);
  if (j.contains("rk")) s.rk = rk_from_json(j["rk"]);
  s.truth = j.at("truth").get<bool>();
  return s;
}

}  // namespace hopbench
