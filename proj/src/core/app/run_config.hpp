#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace adaptlm::app {

// Flat key = value settings. Lines starting with '#' are comments; later
// assignments and command-line overrides replace earlier ones.
class RunConfig {
 public:
  static RunConfig parse(std::string_view text, const std::string& origin = "config");
  static RunConfig from_file(const std::filesystem::path& path);

  // Accepts "key=value"; throws Error(usage) otherwise.
  void apply_override(std::string_view assignment);
  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key) { values_.erase(key); }

  bool has(const std::string& key) const { return values_.contains(key); }
  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // "off" or "none" mean no value.
  std::optional<double> get_optional_double(const std::string& key, std::optional<double> fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const;

  // Throws Error(usage) naming the first key outside `allowed`.
  void check_known(const std::set<std::string>& allowed, const std::string& command) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  // Sorted "key = value" lines, without out_dir, loadable with parse().
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace adaptlm::app
