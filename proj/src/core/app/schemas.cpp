#include "app/schemas.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "analysis/export.hpp"
#include "analysis/surprisal.hpp"
#include "error.hpp"

namespace adaptlm::app {

namespace {

using CT = ColumnType;

std::vector<ColumnSpec> columns_from_header(const std::string& header, char sep, const std::map<std::string, CT>& types) {
  std::vector<ColumnSpec> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = header.find(sep, start);
    const auto name = header.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    out.push_back({name, types.at(name)});
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

const std::map<std::string, TableSchema>& tables() {
  static const std::map<std::string, TableSchema> t = [] {
    std::map<std::string, TableSchema> m;
    auto add = [&m](std::string name, std::vector<ColumnSpec> cols, char sep = '\t') {
      m[name] = TableSchema{name, sep, std::move(cols)};
    };
    const std::map<std::string, CT> record_types{
        {"text_id", CT::string},    {"sentence_index", CT::int_},  {"token_index", CT::int_},
        {"token", CT::string},      {"surprisal", CT::real},       {"word_length", CT::int_},
        {"sentence_position", CT::int_}, {"is_unk", CT::bool_},   {"is_eos", CT::bool_},
        {"condition", CT::string},  {"pair_id", CT::int_},         {"in_region", CT::bool_},
        {"non_adaptive_surprisal", CT::real}, {"adaptive_surprisal", CT::real}, {"reading_time", CT::real_na}};
    add("records", columns_from_header(analysis::kRecordsHeader, '\t', record_types));
    add("lmem", columns_from_header(analysis::kLmemHeader, '\t', record_types));
    add("plot", {{"x", CT::real}, {"y", CT::real}, {"condition", CT::string}, {"series", CT::string}}, ',');
    add("train_log", {{"epoch", CT::int_},
                      {"learning_rate", CT::real},
                      {"train_perplexity", CT::real},
                      {"valid_perplexity", CT::real},
                      {"best_valid_perplexity", CT::real},
                      {"improved", CT::bool_}});
    add("phases", {{"protocol", CT::string},
                   {"phase", CT::string},
                   {"perplexity", CT::real},
                   {"tokens", CT::int_},
                   {"diverged", CT::bool_}});
    add("comparison", {{"scope", CT::string},
                       {"adaptive", CT::real},
                       {"non_adaptive", CT::real},
                       {"tokens", CT::int_},
                       {"reduction", CT::real}});
    add("trials", {{"list_id", CT::int_},
                   {"trial_index", CT::int_},
                   {"item_order", CT::int_},
                   {"pair_id", CT::int_},
                   {"presented", CT::string},
                   {"ambiguous_region", CT::real},
                   {"unambiguous_region", CT::real},
                   {"penalty", CT::real},
                   {"presented_region", CT::real}});
    add("stimulus_lists", {{"list_id", CT::int_},
                           {"trial_index", CT::int_},
                           {"pair_id", CT::int_},
                           {"condition", CT::string},
                           {"region_start", CT::int_},
                           {"region_len", CT::int_},
                           {"tokens", CT::string}});
    add("items", {{"pair_id", CT::int_},
                  {"condition", CT::string},
                  {"region_start", CT::int_},
                  {"region_len", CT::int_},
                  {"tokens", CT::string}});
    add("sentences", {{"set", CT::string}, {"index", CT::int_}, {"tokens", CT::string}});
    add("sweep_cells", {{"repetition", CT::int_},
                        {"learning_rate", CT::real},
                        {"test_set", CT::string},
                        {"perplexity", CT::real},
                        {"diverged", CT::bool_}});
    add("sweep", {{"learning_rate", CT::real},
                  {"test_set", CT::string},
                  {"mean", CT::real},
                  {"sd", CT::real},
                  {"reduction", CT::real},
                  {"diverged_runs", CT::int_}});
    add("forgetting", {{"g1", CT::string},
                       {"g2", CT::string},
                       {"a", CT::real},
                       {"b", CT::real},
                       {"c", CT::real},
                       {"diverged", CT::bool_},
                       {"control", CT::bool_}});
    return m;
  }();
  return t;
}

bool is_int(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_real(std::string_view s) {
  if (s == "inf" || s == "-inf" || s == "nan") return true;
  if (s.empty()) return false;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool cell_ok(std::string_view s, CT type) {
  switch (type) {
    case CT::int_: return is_int(s);
    case CT::real: return is_real(s);
    case CT::real_na: return s == "NA" || is_real(s);
    case CT::bool_: return s == "0" || s == "1";
    case CT::string: return !s.empty();
    case CT::text: return true;
  }
  return false;
}

const char* type_name(CT type) {
  switch (type) {
    case CT::int_: return "int";
    case CT::real: return "real";
    case CT::real_na: return "real or NA";
    case CT::bool_: return "bool";
    case CT::string: return "string";
    case CT::text: return "text";
  }
  return "?";
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

const char* const kJsonSchemas = R"json({
  "regression": {
    "type": "object",
    "required": ["n", "names", "coefficients", "standard_errors", "t_values", "residual_variance", "r_squared"],
    "properties": {
      "n": {"type": "integer"},
      "names": {"type": "array", "items": {"type": "string"}},
      "coefficients": {"type": "array", "items": {"type": "number"}},
      "standard_errors": {"type": "array", "items": {"type": "number"}},
      "t_values": {"type": "array", "items": {"type": "number"}},
      "residual_variance": {"type": "number"},
      "r_squared": {"type": "number"}
    },
    "additionalProperties": false
  },
  "protocol_report": {
    "type": "object",
    "required": ["protocol", "seed", "config", "diverged", "phases"],
    "properties": {
      "protocol": {"type": "string"},
      "seed": {"type": "integer"},
      "config": {"type": "object", "additionalProperties": {"type": "string"}},
      "diverged": {"type": "boolean"},
      "phases": {"type": "array", "items": {
        "type": "object",
        "required": ["label", "perplexity", "tokens", "diverged"],
        "properties": {
          "label": {"type": "string"},
          "perplexity": {"type": "number"},
          "tokens": {"type": "integer"},
          "diverged": {"type": "boolean"}
        },
        "additionalProperties": false
      }}
    },
    "additionalProperties": false
  },
  "run": {
    "type": "object",
    "required": ["tool", "version", "command", "seed", "precision", "config", "inputs"],
    "properties": {
      "tool": {"enum": ["adaptlm"]},
      "version": {"type": "string"},
      "command": {"enum": ["train", "adapt-eval", "gardenpath", "dative-sweep", "forgetting", "gen-stimuli", "export-lmem"]},
      "seed": {"type": "integer"},
      "precision": {"enum": ["f32", "f64"]},
      "config": {"type": "object", "additionalProperties": {"type": "string"}},
      "inputs": {"type": "object", "additionalProperties": {
        "type": "object",
        "required": ["path", "sha256"],
        "properties": {"path": {"type": "string"}, "sha256": {"type": "string"}},
        "additionalProperties": false
      }}
    },
    "additionalProperties": false
  },
  "train_summary": {
    "type": "object",
    "required": ["vocab_size", "sentences", "vocab_sha256", "checkpoint_sha256", "final_valid_perplexity", "log"],
    "properties": {
      "vocab_size": {"type": "integer"},
      "sentences": {"type": "object", "required": ["train", "valid"], "properties": {
        "train": {"type": "integer"}, "valid": {"type": "integer"}}, "additionalProperties": false},
      "vocab_sha256": {"type": "string"},
      "checkpoint_sha256": {"type": "string"},
      "final_valid_perplexity": {"type": "number"},
      "log": {
        "type": "object",
        "required": ["initial_valid_perplexity", "best_epoch", "stopped_early", "epochs_run"],
        "properties": {
          "initial_valid_perplexity": {"type": "number"},
          "best_epoch": {"type": "integer"},
          "stopped_early": {"type": "boolean"},
          "epochs_run": {"type": "integer"}
        },
        "additionalProperties": false
      }
    },
    "additionalProperties": false
  },
  "adapt_eval_report": {
    "type": "object",
    "required": ["learning_rate", "tuned_on", "incremental", "genre"],
    "properties": {
      "learning_rate": {"type": "number"},
      "tuned_on": {"type": ["string", "null"]},
      "tuning": {"type": "array", "items": {"type": "object", "required": ["learning_rate", "perplexity"],
        "properties": {"learning_rate": {"type": "number"}, "perplexity": {"type": "number"}},
        "additionalProperties": false}},
      "incremental": {"$ref": "protocol_report"},
      "genre": {"$ref": "protocol_report"}
    },
    "additionalProperties": false
  },
  "trends": {
    "type": "object",
    "required": ["lists", "critical_trials", "diverged", "ambiguous", "unambiguous"],
    "properties": {
      "lists": {"type": "integer"},
      "critical_trials": {"type": "integer"},
      "diverged": {"type": "boolean"},
      "ambiguous": {"type": "object", "required": ["series", "slope", "t_value", "fit"], "properties": {
        "series": {"type": "string"}, "slope": {"type": "number"}, "t_value": {"type": "number"},
        "fit": {"$ref": "regression"}}, "additionalProperties": false},
      "unambiguous": {"type": "object", "required": ["series", "slope", "t_value", "fit"], "properties": {
        "series": {"type": "string"}, "slope": {"type": "number"}, "t_value": {"type": "number"},
        "fit": {"$ref": "regression"}}, "additionalProperties": false}
    },
    "additionalProperties": false
  },
  "sweep_report": {
    "type": "object",
    "required": ["direction", "repetitions", "grid", "best_learning_rate", "any_diverged", "at_best", "at_10x_best"],
    "properties": {
      "direction": {"enum": ["DO", "PO"]},
      "repetitions": {"type": "integer"},
      "grid": {"type": "array", "minItems": 1, "items": {"type": "number"}},
      "best_learning_rate": {"type": "number"},
      "any_diverged": {"type": "boolean"},
      "at_best": {"type": "object", "additionalProperties": {"type": "number"}},
      "at_10x_best": {"type": ["object", "null"], "additionalProperties": {"type": "number"}}
    },
    "additionalProperties": false
  },
  "forgetting_report": {
    "type": "object",
    "required": ["learning_rate", "pairs", "mean"],
    "properties": {
      "learning_rate": {"type": "number"},
      "pairs": {"type": "integer"},
      "mean": {"type": "object", "required": ["a", "b", "c"], "properties": {
        "a": {"type": "number"}, "b": {"type": "number"}, "c": {"type": "number"}},
        "additionalProperties": false}
    },
    "additionalProperties": false
  },
  "lmem_proxy": {
    "type": "object",
    "required": ["rows", "dropped_unk", "response", "fit"],
    "properties": {
      "rows": {"type": "integer"},
      "dropped_unk": {"type": "integer"},
      "response": {"type": "string"},
      "fit": {"$ref": "regression"}
    },
    "additionalProperties": false
  }
})json";

const Json& all_json_schemas() {
  static const Json s = Json::parse(kJsonSchemas);
  return s;
}

bool type_matches(const Json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number() || v.is_null();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  fail(ErrorKind::format, "schema uses unknown type '" + type + "'");
}

void check(const Json& v, const Json& schema, const std::string& where) {
  if (schema.contains("$ref")) {
    check(v, json_schema(schema["$ref"].get<std::string>()), where);
    return;
  }
  if (schema.contains("type")) {
    const auto& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(v, t.get<std::string>());
    } else {
      for (const auto& alt : t) ok = ok || type_matches(v, alt.get<std::string>());
    }
    if (!ok) fail(ErrorKind::format, where + ": expected type " + t.dump() + ", got " + v.type_name());
  }
  if (schema.contains("enum")) {
    const auto& e = schema["enum"];
    if (std::find(e.begin(), e.end(), v) == e.end()) {
      fail(ErrorKind::format, where + ": value " + v.dump() + " not in " + e.dump());
    }
  }
  if (v.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema["required"]) {
        if (!v.contains(key.get<std::string>())) {
          fail(ErrorKind::format, where + ": missing key '" + key.get<std::string>() + "'");
        }
      }
    }
    const Json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
    for (const auto& [key, value] : v.items()) {
      if (props && props->contains(key)) {
        check(value, (*props)[key], where + "." + key);
      } else if (schema.contains("additionalProperties")) {
        const auto& extra = schema["additionalProperties"];
        if (extra.is_boolean()) {
          if (!extra.get<bool>()) fail(ErrorKind::format, where + ": unexpected key '" + key + "'");
        } else {
          check(value, extra, where + "." + key);
        }
      }
    }
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) {
      fail(ErrorKind::format, where + ": fewer than " + schema["minItems"].dump() + " items");
    }
    if (schema.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], schema["items"], where + "[" + std::to_string(i) + "]");
    }
  }
}

const std::map<std::string, std::string>& file_schemas() {
  static const std::map<std::string, std::string> m{
      {"run.json", "run"},
      {"train.json", "train_summary"},
      {"train_log.tsv", "train_log"},
      {"report.json", "adapt_eval_report"},
      {"phases.tsv", "phases"},
      {"comparison.tsv", "comparison"},
      {"trials.tsv", "trials"},
      {"lists.tsv", "stimulus_lists"},
      {"items.tsv", "items"},
      {"sets.tsv", "sentences"},
      {"trends.json", "trends"},
      {"plot.csv", "plot"},
      {"cells.tsv", "sweep_cells"},
      {"sweep.tsv", "sweep"},
      {"sweep.json", "sweep_report"},
      {"forgetting.tsv", "forgetting"},
      {"forgetting.json", "forgetting_report"},
      {"lmem.tsv", "lmem"},
      {"proxy.json", "lmem_proxy"},
  };
  return m;
}

}  // namespace

const TableSchema& table_schema(const std::string& name) {
  const auto it = tables().find(name);
  if (it == tables().end()) fail(ErrorKind::invalid_argument, "no table schema named '" + name + "'");
  return it->second;
}

void validate_table(std::string_view contents, const TableSchema& schema, const std::string& origin) {
  std::string header;
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    if (i) header += schema.separator;
    header += schema.columns[i].name;
  }
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    const auto end = contents.find('\n', start);
    if (end == std::string_view::npos) fail(ErrorKind::format, origin + ": missing final newline");
    const auto line = contents.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (lineno == 1) {
      if (line != header) fail(ErrorKind::format, origin + ": header does not match schema '" + schema.name + "'");
      continue;
    }
    const auto cells = split(line, schema.separator);
    if (cells.size() != schema.columns.size()) {
      fail(ErrorKind::format, origin + " line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(schema.columns.size()) + " fields, got " +
                                  std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!cell_ok(cells[c], schema.columns[c].type)) {
        fail(ErrorKind::format, origin + " line " + std::to_string(lineno) + ": column '" + schema.columns[c].name +
                                    "' expects " + type_name(schema.columns[c].type) + ", got '" +
                                    std::string(cells[c]) + "'");
      }
    }
  }
  if (lineno == 0) fail(ErrorKind::format, origin + ": empty table");
}

const Json& json_schema(const std::string& name) {
  const auto& all = all_json_schemas();
  if (!all.contains(name)) fail(ErrorKind::invalid_argument, "no JSON schema named '" + name + "'");
  return all[name];
}

void validate_json(const Json& doc, const Json& schema, const std::string& origin) { check(doc, schema, origin); }

std::optional<std::string> schema_for_file(const std::string& filename) {
  const auto it = file_schemas().find(filename);
  if (it != file_schemas().end()) return it->second;
  if (filename.starts_with("surprisal") && filename.ends_with(".tsv")) return "records";
  return std::nullopt;
}

std::vector<std::string> validate_output_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorKind::io, dir.string() + " is not a directory");
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  std::vector<std::string> validated;
  for (const auto& name : names) {
    const auto schema = schema_for_file(name);
    if (!schema) continue;
    const auto path = dir / name;
    const auto contents = read_text_file(path);
    if (name.ends_with(".json")) {
      validate_json(parse_json(contents, path.string()), json_schema(*schema), name);
    } else {
      validate_table(contents, table_schema(*schema), path.string());
    }
    validated.push_back(name);
  }
  return validated;
}

std::vector<std::string> schema_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : tables()) out.push_back(k);
  for (const auto& [k, v] : all_json_schemas().items()) out.push_back(k);
  return out;
}

}  // namespace adaptlm::app
