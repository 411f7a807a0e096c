#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hopbench/csv.hpp"
#include "hopbench/decimal.hpp"
#include "hopbench/error.hpp"
#include "hopbench/fact.hpp"

namespace hopbench {

enum class IngestErrc {
  DuplicateRow,
  NonContiguousYears,
  UnknownColumn,
  BadValue,
  EmptyInput,
  EmptyDocument,
  NoCommonEntities,
  IOFailure,
};

inline const char* to_string(IngestErrc c) {
  switch (c) {
    case IngestErrc::DuplicateRow: return "DuplicateRow";
    case IngestErrc::NonContiguousYears: return "NonContiguousYears";
    case IngestErrc::UnknownColumn: return "UnknownColumn";
    case IngestErrc::BadValue: return "BadValue";
    case IngestErrc::EmptyInput: return "EmptyInput";
    case IngestErrc::EmptyDocument: return "EmptyDocument";
    case IngestErrc::NoCommonEntities: return "NoCommonEntities";
    case IngestErrc::IOFailure: return "IOFailure";
  }
  return "IngestError";
}

using IngestError = CodedError<IngestErrc>;

struct ColumnMeta {
  std::string name;
  std::string unit;
  std::string description;

  bool operator==(const ColumnMeta&) const = default;
};

using Cell = std::optional<Decimal>;

struct EntityRecord {
  std::string entity_id;
  std::string display_name;
  // column name -> one cell per year of the owning TabularSource
  std::map<std::string, std::vector<Cell>, std::less<>> values;

  const Cell& cell(std::string_view column, std::size_t year_index) const {
    return values.find(column)->second.at(year_index);
  }
};

struct TabularSource {
  std::vector<EntityRecord> entities;  // sorted by entity_id
  std::vector<ColumnMeta> columns;
  std::vector<int> years;  // strictly increasing, contiguous

  const EntityRecord* find(std::string_view id) const {
    for (const auto& e : entities) {
      if (e.entity_id == id) return &e;
    }
    return nullptr;
  }
  const ColumnMeta* column(std::string_view name) const {
    for (const auto& c : columns) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

struct RawRow {
  std::string entity_id;
  std::string display_name;
  int year = 0;
  std::vector<std::pair<std::string, std::string>> fields;  // column -> raw text
};

struct ParseOptions {
  // Columns whose unit label differs are dropped. Empty keeps every column.
  std::string unit_family = "million";
};

inline bool is_missing_token(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "-";
}

inline TabularSource parse_tabular(std::span<const RawRow> rows, std::span<const ColumnMeta> schema,
                                   const ParseOptions& options = {}) {
  if (rows.empty()) throw IngestError(IngestErrc::EmptyInput, "no tabular rows");

  std::set<std::string, std::less<>> known;
  TabularSource out;
  for (const auto& col : schema) {
    if (!known.insert(col.name).second) {
      throw IngestError(IngestErrc::DuplicateRow, "schema lists column '" + col.name + "' twice");
    }
    if (options.unit_family.empty() || col.unit == options.unit_family) out.columns.push_back(col);
  }

  std::set<int> years;
  std::set<std::pair<std::string, int>> seen;
  std::map<std::string, std::string> names;
  for (const auto& row : rows) {
    if (!seen.emplace(row.entity_id, row.year).second) {
      throw IngestError(IngestErrc::DuplicateRow,
                        "entity '" + row.entity_id + "' year " + std::to_string(row.year));
    }
    for (const auto& [col, text] : row.fields) {
      if (!known.contains(col)) throw IngestError(IngestErrc::UnknownColumn, col);
    }
    years.insert(row.year);
    names.emplace(row.entity_id, row.display_name);
  }
  out.years.assign(years.begin(), years.end());
  for (std::size_t i = 1; i < out.years.size(); ++i) {
    if (out.years[i] != out.years[i - 1] + 1) {
      throw IngestError(IngestErrc::NonContiguousYears,
                        "gap between " + std::to_string(out.years[i - 1]) + " and " + std::to_string(out.years[i]));
    }
  }

  std::map<std::string, EntityRecord> by_id;
  for (const auto& [id, name] : names) {
    EntityRecord rec{id, name, {}};
    for (const auto& col : out.columns) rec.values[col.name].assign(out.years.size(), std::nullopt);
    by_id.emplace(id, std::move(rec));
  }
  for (const auto& row : rows) {
    auto& rec = by_id.at(row.entity_id);
    const auto yi = static_cast<std::size_t>(row.year - out.years.front());
    for (const auto& [col, text] : row.fields) {
      auto it = rec.values.find(col);
      if (it == rec.values.end()) continue;  // dropped by unit filter
      if (is_missing_token(text)) continue;
      auto value = Decimal::try_parse(text);
      if (!value) {
        throw IngestError(IngestErrc::BadValue, "entity '" + row.entity_id + "' column '" + col + "': '" + text + "'");
      }
      it->second[yi] = *value;
    }
  }
  for (auto& [id, rec] : by_id) out.entities.push_back(std::move(rec));
  return out;
}

// Canonical tabular file: header `entity_id,display_name,year,<columns...>`,
// entities sorted by id, years ascending, missing cells empty, decimals with
// their original scale. Rows where every cell is missing are omitted.
inline void write_table(std::ostream& out, const TabularSource& table, char delimiter = ',') {
  csv::Record header{"entity_id", "display_name", "year"};
  for (const auto& c : table.columns) header.push_back(c.name);
  csv::write_row(out, header, delimiter);
  for (const auto& e : table.entities) {
    for (std::size_t yi = 0; yi < table.years.size(); ++yi) {
      csv::Record row{e.entity_id, e.display_name, std::to_string(table.years[yi])};
      bool any = false;
      for (const auto& c : table.columns) {
        const auto& cell = e.cell(c.name, yi);
        any = any || cell.has_value();
        row.push_back(cell ? cell->str() : "");
      }
      if (any) csv::write_row(out, row, delimiter);
    }
  }
}

inline std::vector<RawRow> read_table_rows(std::istream& in, char delimiter = ',') {
  auto records = csv::read(in, delimiter);
  if (records.empty()) throw IngestError(IngestErrc::EmptyInput, "tabular file has no header");
  const auto& header = records.front();
  if (header.size() < 3 || header[0] != "entity_id" || header[1] != "display_name" || header[2] != "year") {
    throw IngestError(IngestErrc::BadValue, "header must start with entity_id, display_name, year");
  }
  std::vector<RawRow> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw IngestError(IngestErrc::BadValue, "row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                                                  " fields, header has " + std::to_string(header.size()));
    }
    RawRow row;
    row.entity_id = rec[0];
    row.display_name = rec[1];
    try {
      std::size_t used = 0;
      row.year = std::stoi(rec[2], &used);
      if (used != rec[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw IngestError(IngestErrc::BadValue, "row " + std::to_string(r) + " year '" + rec[2] + "'");
    }
    for (std::size_t i = 3; i < rec.size(); ++i) row.fields.emplace_back(header[i], rec[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Schema file: header `name,unit,description`.
inline std::vector<ColumnMeta> read_schema(std::istream& in, char delimiter = ',') {
  auto records = csv::read(in, delimiter);
  if (records.empty() || records.front().size() < 2 || records.front()[0] != "name" || records.front()[1] != "unit") {
    throw IngestError(IngestErrc::BadValue, "schema header must be name,unit,description");
  }
  std::vector<ColumnMeta> cols;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    cols.push_back({rec.at(0), rec.size() > 1 ? rec[1] : "", rec.size() > 2 ? rec[2] : ""});
  }
  return cols;
}

inline void write_schema(std::ostream& out, std::span<const ColumnMeta> cols, char delimiter = ',') {
  csv::write_row(out, {"name", "unit", "description"}, delimiter);
  for (const auto& c : cols) csv::write_row(out, {c.name, c.unit, c.description}, delimiter);
}

// ---------------------------------------------------------------------------
// Text

struct TextChunk {
  std::string chunk_id;
  std::string entity_id;
  std::string source_item;
  std::vector<std::string> paragraphs;  // always 3 slots

  std::string joined() const {
    std::string out;
    for (const auto& p : paragraphs) {
      if (p.empty()) continue;
      if (!out.empty()) out += "\n\n";
      out += p;
    }
    return out;
  }
  bool operator==(const TextChunk&) const = default;
};

struct Document {
  std::string source_item;
  std::vector<std::string> paragraphs;
};

inline constexpr std::size_t kParagraphsPerChunk = 3;

// Non-overlapping windows of three consecutive paragraphs. A trailing
// remainder of one or two paragraphs is appended to the last paragraph of the
// final chunk (separated by a newline); a document shorter than three
// paragraphs yields one chunk whose unused slots are empty.
inline std::vector<TextChunk> chunk_text(std::span<const std::string> paragraphs, std::string_view entity_id,
                                         std::string_view source_item) {
  if (paragraphs.empty()) {
    throw IngestError(IngestErrc::EmptyDocument, std::string(entity_id) + "/" + std::string(source_item));
  }
  std::vector<TextChunk> chunks;
  const std::size_t full = paragraphs.size() / kParagraphsPerChunk;
  auto make = [&](std::size_t index) {
    TextChunk c;
    c.chunk_id = std::string(entity_id) + "/" + std::string(source_item) + "/" + std::to_string(index);
    c.entity_id = entity_id;
    c.source_item = source_item;
    return c;
  };
  for (std::size_t k = 0; k < full; ++k) {
    auto c = make(k);
    for (std::size_t j = 0; j < kParagraphsPerChunk; ++j) c.paragraphs.push_back(paragraphs[k * kParagraphsPerChunk + j]);
    chunks.push_back(std::move(c));
  }
  const std::size_t rest = paragraphs.size() % kParagraphsPerChunk;
  if (rest > 0) {
    if (chunks.empty()) {
      auto c = make(0);
      for (std::size_t j = 0; j < kParagraphsPerChunk; ++j) c.paragraphs.push_back(j < rest ? paragraphs[j] : "");
      chunks.push_back(std::move(c));
    } else {
      auto& last = chunks.back().paragraphs.back();
      for (std::size_t j = full * kParagraphsPerChunk; j < paragraphs.size(); ++j) last += "\n" + paragraphs[j];
    }
  }
  return chunks;
}

// Paragraphs are separated by blank lines; lines inside a paragraph are
// joined with single spaces.
inline std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty()) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      if (!current.empty()) current += ' ';
      current += line;
    }
    pos = nl + 1;
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

// One directory per entity, one file per source item (file stem).
inline std::map<std::string, std::vector<Document>> read_text_dir(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IngestError(IngestErrc::IOFailure, "not a directory: " + root.string());
  std::map<std::string, std::vector<Document>> out;
  std::vector<fs::path> entity_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) entity_dirs.push_back(e.path());
  }
  std::sort(entity_dirs.begin(), entity_dirs.end());
  for (const auto& dir : entity_dirs) {
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(dir)) {
      if (f.is_regular_file()) files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    auto& docs = out[dir.filename().string()];
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      if (!in) throw IngestError(IngestErrc::IOFailure, "cannot read " + f.string());
      std::stringstream ss;
      ss << in.rdbuf();
      docs.push_back({f.stem().string(), split_paragraphs(ss.str())});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alignment

struct SourceBundle {
  TabularSource tabular;
  std::map<std::string, std::vector<TextChunk>> text;
  std::map<std::string, std::vector<VerifiedFact>> facts;

  FactTable fact_table() const {
    FactTable t;
    for (const auto& [id, list] : facts) {
      for (const auto& f : list) t.emplace(f.fact_id, f);
    }
    return t;
  }
};

enum class DropReason { NoText, NoTable, MissingYear, NoCompleteColumn };

inline const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::NoText: return "no-text";
    case DropReason::NoTable: return "no-table";
    case DropReason::MissingYear: return "missing-year";
    case DropReason::NoCompleteColumn: return "no-complete-column";
  }
  return "?";
}

struct DroppedEntity {
  std::string entity_id;
  DropReason reason;
  bool operator==(const DroppedEntity&) const = default;
};

struct AlignResult {
  SourceBundle bundle;
  std::vector<DroppedEntity> dropped;  // sorted by entity id
};

inline bool has_complete_column(const EntityRecord& e) {
  for (const auto& [col, cells] : e.values) {
    if (std::all_of(cells.begin(), cells.end(), [](const Cell& c) { return c.has_value(); })) return true;
  }
  return false;
}

inline bool covers_all_years(const EntityRecord& e, std::size_t n_years) {
  for (std::size_t y = 0; y < n_years; ++y) {
    bool any = false;
    for (const auto& [col, cells] : e.values) any = any || cells[y].has_value();
    if (!any) return false;
  }
  return true;
}

// Keeps entities present in both sources that have at least one value every
// year and at least one column complete across all years.
inline AlignResult align(const TabularSource& tabular, const std::map<std::string, std::vector<TextChunk>>& text) {
  AlignResult result;
  result.bundle.tabular.columns = tabular.columns;
  result.bundle.tabular.years = tabular.years;
  std::map<std::string, DropReason> dropped;
  for (const auto& e : tabular.entities) {
    auto it = text.find(e.entity_id);
    if (it == text.end() || it->second.empty()) {
      dropped.emplace(e.entity_id, DropReason::NoText);
    } else if (!covers_all_years(e, tabular.years.size())) {
      dropped.emplace(e.entity_id, DropReason::MissingYear);
    } else if (!has_complete_column(e)) {
      dropped.emplace(e.entity_id, DropReason::NoCompleteColumn);
    } else {
      result.bundle.tabular.entities.push_back(e);
      result.bundle.text.emplace(e.entity_id, it->second);
    }
  }
  for (const auto& [id, chunks] : text) {
    if (!tabular.find(id)) dropped.emplace(id, DropReason::NoTable);
  }
  for (const auto& [id, reason] : dropped) result.dropped.push_back({id, reason});
  if (result.bundle.tabular.entities.empty()) {
    throw IngestError(IngestErrc::NoCommonEntities, std::to_string(dropped.size()) + " entities dropped");
  }
  return result;
}

inline std::map<std::string, std::vector<TextChunk>> chunk_documents(
    const std::map<std::string, std::vector<Document>>& docs) {
  std::map<std::string, std::vector<TextChunk>> out;
  for (const auto& [entity, list] : docs) {
    auto& chunks = out[entity];
    for (const auto& d : list) {
      if (d.paragraphs.empty()) continue;
      auto c = chunk_text(d.paragraphs, entity, d.source_item);
      chunks.insert(chunks.end(), c.begin(), c.end());
    }
  }
  return out;
}

}  // namespace hopbench
