#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hopbench/decimal.hpp"
#include "hopbench/error.hpp"
#include "hopbench/fact.hpp"
#include "hopbench/sampler.hpp"
#include "hopbench/statement.hpp"

namespace hopbench {

enum class OracleErrc { MissingValue, UnknownFact, IllFormed };

inline const char* to_string(OracleErrc c) {
  switch (c) {
    case OracleErrc::MissingValue: return "MissingValue";
    case OracleErrc::UnknownFact: return "UnknownFact";
    case OracleErrc::IllFormed: return "IllFormed";
  }
  return "OracleError";
}

using OracleError = CodedError<OracleErrc>;

inline bool compare(const Decimal& v, Cmp cmp, const Decimal& threshold) {
  return cmp == Cmp::Greater ? v > threshold : v < threshold;
}

inline Decimal apply(ArOp op, const Decimal& a, const Decimal& b) { return op == ArOp::Plus ? a + b : a - b; }

inline const Decimal& value_at(const InstanceSkeleton& s, std::string_view column, std::size_t e, std::size_t y) {
  const auto& cell = s.cell(column, e, y);
  if (!cell) {
    throw OracleError(OracleErrc::MissingValue, std::string(column) + " for " + s.entities[e] + " in " +
                                                    std::to_string(s.years[y]));
  }
  return *cell;
}

inline std::size_t entity_or_throw(const InstanceSkeleton& s, std::string_view id) {
  auto e = s.entity_index(id);
  if (!e) throw OracleError(OracleErrc::IllFormed, "entity '" + std::string(id) + "' not in instance");
  return *e;
}

inline std::size_t year_or_throw(const InstanceSkeleton& s, std::optional<int> year) {
  if (!year) throw OracleError(OracleErrc::IllFormed, "year required");
  auto y = s.year_index(*year);
  if (!y) throw OracleError(OracleErrc::IllFormed, "year " + std::to_string(*year) + " outside instance");
  return *y;
}

// ---------------------------------------------------------------------------
// Per-entity predicates

inline bool ct_at(const InstanceSkeleton& s, std::size_t e, const CtPart& p, std::size_t y) {
  return compare(value_at(s, p.column, e, y), p.cmp, p.threshold);
}

inline bool eval_CT(const InstanceSkeleton& s, std::size_t e, const CtPart& p) {
  if (p.scope == Scope::Year) return ct_at(s, e, p, year_or_throw(s, p.year));
  bool all = true;
  for (std::size_t y = 0; y < s.years.size(); ++y) all = ct_at(s, e, p, y) && all;
  return all;
}

inline bool ar_cross_at(const InstanceSkeleton& s, std::size_t e, const ArPart& p, std::size_t y) {
  return compare(apply(p.op, value_at(s, p.column, e, y), value_at(s, p.column2, e, y)), p.cmp, p.threshold);
}

inline bool ar_cumulative(const InstanceSkeleton& s, std::size_t e, const ArPart& p) {
  Decimal sum;
  bool all = true;
  for (std::size_t y = 0; y < s.years.size(); ++y) {
    sum = sum + value_at(s, p.column, e, y);
    if (p.cumulative == CumulativeMode::RunningPrefix) all = compare(sum, p.cmp, p.threshold) && all;
  }
  return p.cumulative == CumulativeMode::RunningPrefix ? all : compare(sum, p.cmp, p.threshold);
}

inline bool eval_AR(const InstanceSkeleton& s, std::size_t e, const ArPart& p) {
  switch (p.form) {
    case ArForm::TwoYearEquality: {
      const auto& a = value_at(s, p.column, e, year_or_throw(s, p.year1));
      const auto& b = value_at(s, p.column, e, year_or_throw(s, p.year2));
      return apply(p.op, a, b) == p.result;
    }
    case ArForm::CrossColumnThreshold: {
      if (p.scope == Scope::Year) return ar_cross_at(s, e, p, year_or_throw(s, p.year));
      bool all = true;
      for (std::size_t y = 0; y < s.years.size(); ++y) all = ar_cross_at(s, e, p, y) && all;
      return all;
    }
    case ArForm::CumulativeThreshold:
      return ar_cumulative(s, e, p);
  }
  return false;
}

inline bool eval_TR(const InstanceSkeleton& s, std::size_t e, const TrPart& p) {
  const auto from = year_or_throw(s, p.from);
  const auto to = year_or_throw(s, p.to);
  if (to <= from) throw OracleError(OracleErrc::IllFormed, "trend range needs at least two years");
  for (std::size_t y = from; y < to; ++y) {
    const auto& a = value_at(s, p.column, e, y);
    const auto& b = value_at(s, p.column, e, y + 1);
    if (p.direction == Direction::Increase ? !(b > a) : !(b < a)) return false;
  }
  return true;
}

// e is the unique argmax (argmin) in year y.
inline bool eval_RK(const InstanceSkeleton& s, std::size_t e, std::size_t y, const RkPart& p) {
  const auto& mine = value_at(s, p.column, e, y);
  for (std::size_t o = 0; o < s.entities.size(); ++o) {
    if (o == e) continue;
    const auto& other = value_at(s, p.column, o, y);
    if (p.position == Position::Highest ? !(mine > other) : !(mine < other)) return false;
  }
  return true;
}

// Y* = {y : condition(y)}; true iff Y* is nonempty and consequent(y) holds on all of it.
inline bool eval_conditional(const InstanceSkeleton& s, const std::function<bool(std::size_t)>& condition,
                             const std::function<bool(std::size_t)>& consequent) {
  bool any = false;
  bool all = true;
  for (std::size_t y = 0; y < s.years.size(); ++y) {
    if (!condition(y)) continue;
    any = true;
    all = consequent(y) && all;
  }
  return any && all;
}

// Exactly one entity satisfies the description and it is `claimed`.
inline bool eval_definite_description(const InstanceSkeleton& s, const std::function<bool(std::size_t)>& description,
                                      std::size_t claimed) {
  std::size_t count = 0;
  bool claimed_ok = false;
  for (std::size_t e = 0; e < s.entities.size(); ++e) {
    if (description(e)) {
      ++count;
      claimed_ok = claimed_ok || e == claimed;
    }
  }
  return count == 1 && claimed_ok;
}

inline const VerifiedFact& fact_or_throw(const FactTable& facts, std::string_view fact_ref) {
  auto it = facts.find(fact_ref);
  if (it == facts.end()) throw OracleError(OracleErrc::UnknownFact, std::string(fact_ref));
  return it->second;
}

inline bool eval_FC(const FactTable& facts, std::string_view fact_ref, std::string_view claimed) {
  return fact_or_throw(facts, fact_ref).owner_entity == claimed;
}

// ---------------------------------------------------------------------------
// Well-formedness

inline void require(bool ok, const std::string& what) {
  if (!ok) throw OracleError(OracleErrc::IllFormed, what);
}

inline void validate(const StatementSpec& spec, const InstanceSkeleton& s) {
  const auto parts = parts_of(spec.kind);
  const auto name = std::string(to_string(spec.kind));
  require(parts.fc == spec.fact_ref.has_value(), name + ": fact_ref presence");
  require(parts.ct == spec.ct.has_value(), name + ": CT part presence");
  require(parts.ar == spec.ar.has_value(), name + ": AR part presence");
  require(parts.tr == spec.tr.has_value(), name + ": TR part presence");
  require(parts.rk == spec.rk.has_value(), name + ": RK part presence");
  require(s.entity_index(spec.subject).has_value(), name + ": subject not in instance");
  require(is_conditional(spec.kind) == spec.condition_entity.has_value(), name + ": condition entity presence");
  if (spec.condition_entity) require(s.entity_index(*spec.condition_entity).has_value(), name + ": condition entity");
  const bool easy = hop_count_of(spec.kind) == 1;
  const bool conditional = is_conditional(spec.kind);
  const bool joint_trend = spec.kind == Kind::CT_TR || spec.kind == Kind::AR_TR || spec.kind == Kind::FC_CT_TR ||
                           spec.kind == Kind::FC_AR_TR;
  auto year_ok = [&](const std::optional<int>& y) { return y && s.year_index(*y).has_value(); };
  if (spec.ct) {
    const auto& p = *spec.ct;
    require(s.is_table_column(p.column), name + ": CT must reference a table column");
    if (conditional) {
      require(p.scope == Scope::EachYear, name + ": conditional CT is per-year");
    } else if (joint_trend) {
      require(p.scope == Scope::AllYears, name + ": CT scope must be all-years");
    } else if (easy) {
      require(p.scope == Scope::Year || p.scope == Scope::AllYears, name + ": CT scope");
    } else {
      require(p.scope == Scope::Year, name + ": CT scope must be a single year");
    }
    if (p.scope == Scope::Year) require(year_ok(p.year), name + ": CT year");
  }
  if (spec.ar) {
    const auto& p = *spec.ar;
    require(s.is_table_column(p.column), name + ": AR must reference a table column");
    if (conditional) {
      require(p.form == ArForm::CrossColumnThreshold && p.scope == Scope::EachYear, name + ": AR form");
    } else if (joint_trend) {
      require(p.form == ArForm::CumulativeThreshold, name + ": AR form must be cumulative");
    } else {
      require(p.form == ArForm::TwoYearEquality, name + ": AR form must be two-year equality");
    }
    if (p.form == ArForm::TwoYearEquality) {
      require(year_ok(p.year1) && year_ok(p.year2) && *p.year1 != *p.year2, name + ": AR years");
    }
    if (p.form == ArForm::CrossColumnThreshold) {
      require(s.is_table_column(p.column2) && p.column2 != p.column, name + ": AR second column");
    }
  }
  if (spec.tr) {
    const auto& p = *spec.tr;
    require(p.column == s.chart_column, name + ": TR must reference the chart column");
    require(s.year_index(p.from) && s.year_index(p.to) && p.to > p.from, name + ": TR range");
    if (joint_trend) require(p.from == s.years.front() && p.to == s.years.back(), name + ": TR covers all years");
  }
  if (spec.rk) {
    const auto& p = *spec.rk;
    require(p.column == s.chart_column, name + ": RK must reference the chart column");
    if (conditional) {
      require(!p.year, name + ": conditional RK has no fixed year");
    } else {
      require(year_ok(p.year), name + ": RK year");
    }
  }
}

// ---------------------------------------------------------------------------
// Dispatch

// Per-entity description for the table/chart parts of a definite-description
// kind, or the one-hop predicate for Easy kinds.
inline bool describes(const StatementSpec& spec, const InstanceSkeleton& s, std::size_t e) {
  bool ok = true;
  if (spec.ct) ok = eval_CT(s, e, *spec.ct) && ok;
  if (spec.ar) ok = eval_AR(s, e, *spec.ar) && ok;
  if (spec.tr) ok = eval_TR(s, e, *spec.tr) && ok;
  if (spec.rk) ok = eval_RK(s, e, year_or_throw(s, spec.rk->year), *spec.rk) && ok;
  return ok;
}

inline bool conditional_holds(const StatementSpec& spec, const InstanceSkeleton& s, std::size_t subject) {
  const auto c = entity_or_throw(s, *spec.condition_entity);
  auto condition = [&](std::size_t y) {
    return spec.ct ? ct_at(s, c, *spec.ct, y) : ar_cross_at(s, c, *spec.ar, y);
  };
  auto consequent = [&](std::size_t y) { return eval_RK(s, subject, y, *spec.rk); };
  return eval_conditional(s, condition, consequent);
}

// Truth of a statement. For kinds with a text part, the claimed entity of
// the table/chart part is the owner of the referenced fact; for FC alone it
// is the named subject.
inline bool eval(const StatementSpec& spec, const InstanceSkeleton& s, const FactTable& facts) {
  validate(spec, s);
  const auto parts = parts_of(spec.kind);
  if (spec.kind == Kind::FC) return eval_FC(facts, *spec.fact_ref, spec.subject);
  std::size_t claimed;
  if (parts.fc) {
    const auto& owner = fact_or_throw(facts, *spec.fact_ref).owner_entity;
    auto e = s.entity_index(owner);
    if (!e) return false;
    claimed = *e;
  } else {
    claimed = entity_or_throw(s, spec.subject);
  }
  if (is_conditional(spec.kind)) return conditional_holds(spec, s, claimed);
  if (is_definite_description(spec.kind)) {
    return eval_definite_description(s, [&](std::size_t e) { return describes(spec, s, e); }, claimed);
  }
  return describes(spec, s, claimed);
}

}  // namespace hopbench
