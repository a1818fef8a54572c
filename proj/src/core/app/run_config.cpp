#include "app/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace adaptlm::app {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorKind::usage, "setting '" + key + "' = '" + value + "' is not " + expected);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto res = std::from_chars(v.data(), end, out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != end) bad_value(key, v, "a number");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto res = std::from_chars(v.data(), end, out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != end) bad_value(key, v, "a non-negative integer");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::usage, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) fail(ErrorKind::usage, origin + ":" + std::to_string(lineno) + ": empty key");
    c.values_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    fail(ErrorKind::usage, "override '" + std::string(assignment) + "' must look like key=value");
  }
  const auto key = trim(assignment.substr(0, eq));
  if (key.empty()) fail(ErrorKind::usage, "override '" + std::string(assignment) + "' has an empty key");
  values_[key] = trim(assignment.substr(eq + 1));
}

void RunConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string RunConfig::require(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) fail(ErrorKind::usage, "missing required setting '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(key, values_.at(key)) : fallback;
}

std::size_t RunConfig::get_size(const std::string& key, std::size_t fallback) const {
  return has(key) ? static_cast<std::size_t>(parse_u64(key, values_.at(key))) : fallback;
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? parse_u64(key, values_.at(key)) : fallback;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = values_.at(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::optional<double> RunConfig::get_optional_double(const std::string& key, std::optional<double> fallback) const {
  if (!has(key)) return fallback;
  const auto& v = values_.at(key);
  if (v == "off" || v == "none") return std::nullopt;
  return parse_double(key, v);
}

std::vector<double> RunConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(values_.at(key))) out.push_back(parse_double(key, item));
  if (out.empty()) bad_value(key, values_.at(key), "a non-empty list");
  return out;
}

std::vector<std::string> RunConfig::get_strings(const std::string& key,
                                                const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  auto out = split_list(values_.at(key));
  if (out.empty()) bad_value(key, values_.at(key), "a non-empty list");
  return out;
}

void RunConfig::check_known(const std::set<std::string>& allowed, const std::string& command) const {
  for (const auto& [k, v] : values_) {
    if (!allowed.contains(k)) fail(ErrorKind::usage, "setting '" + k + "' is not recognised by '" + command + "'");
  }
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) {
    if (k != "out_dir") out << k << " = " << v << '\n';
  }
  return out.str();
}

}  // namespace adaptlm::app
