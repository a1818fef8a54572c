#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "adaptation/protocols.hpp"
#include "analysis/regression.hpp"
#include "fingerprint.hpp"
#include "lm/training.hpp"

namespace adaptlm::app {

using Json = nlohmann::ordered_json;

// Non-finite values become null.
Json number(double v);

Json to_json(const analysis::RegressionResult& r);
Json to_json(const adaptation::ProtocolReport& r);
Json to_json(const lm::TrainingLog& log);

// Two-space indented, trailing newline.
std::string dump(const Json& j);
Json parse_json(std::string_view text, const std::string& origin);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);
Fingerprint file_fingerprint(const std::filesystem::path& path);

// Tab-joined fields.
std::string tsv_row(std::initializer_list<std::string> fields);

}  // namespace adaptlm::app
