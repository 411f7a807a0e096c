#pragma once

#include <map>
#include <string>
#include <string_view>

namespace hopbench {

enum class Specificity { EntitySpecific, Generic };

inline std::string_view to_string(Specificity s) {
  return s == Specificity::EntitySpecific ? "entity-specific" : "generic";
}

// A declarative sentence attributed to exactly one entity. The owner's
// display name occurs in `text` exactly once so it can be substituted.
struct VerifiedFact {
  std::string fact_id;
  std::string owner_entity;
  std::string text;
  std::string source_chunk;
  Specificity specificity = Specificity::EntitySpecific;

  bool operator==(const VerifiedFact&) const = default;
};

using FactTable = std::map<std::string, VerifiedFact, std::less<>>;

}  // namespace hopbench
