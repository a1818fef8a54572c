#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "app/report_io.hpp"

namespace adaptlm::app {

// Column value classes:
//   int      optional '-' then digits
//   real     decimal number, inf, -inf or nan
//   real_na  real or NA
//   bool     0 or 1
//   string   non-empty, no tab
//   text     any (may be empty)
enum class ColumnType { int_, real, real_na, bool_, string, text };

struct ColumnSpec {
  std::string name;
  ColumnType type;
};

struct TableSchema {
  std::string name;
  char separator = '\t';
  std::vector<ColumnSpec> columns;
};

const TableSchema& table_schema(const std::string& name);
// Header must match exactly; every row must have every column. Throws
// Error(format) naming the line and column.
void validate_table(std::string_view contents, const TableSchema& schema, const std::string& origin);

// JSON schemas use a subset of JSON Schema: type (string or list), enum,
// required, properties, additionalProperties (false or a schema), items,
// minItems. "number" also admits null, for non-finite values.
const Json& json_schema(const std::string& name);
void validate_json(const Json& doc, const Json& schema, const std::string& origin);

// Schema for an output file name ("trials.tsv", "run.json", ...); nullopt for
// files without one (checkpoints, vocabularies, corpora, config echoes).
std::optional<std::string> schema_for_file(const std::string& filename);

// Validates every file in `dir` that has a schema; returns their names.
std::vector<std::string> validate_output_dir(const std::filesystem::path& dir);

std::vector<std::string> schema_names();

}  // namespace adaptlm::app
