#include "app/report_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace adaptlm::app {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

namespace {

Json numbers(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

}  // namespace

Json to_json(const analysis::RegressionResult& r) {
  Json j;
  j["n"] = r.n;
  j["names"] = r.names;
  j["coefficients"] = numbers(r.coefficients);
  j["standard_errors"] = numbers(r.standard_errors);
  j["t_values"] = numbers(r.t_values);
  j["residual_variance"] = number(r.residual_variance);
  j["r_squared"] = number(r.r_squared);
  return j;
}

Json to_json(const adaptation::ProtocolReport& r) {
  Json j;
  j["protocol"] = r.protocol;
  j["seed"] = r.seed;
  Json config = Json::object();
  for (const auto& [k, v] : r.config) config[k] = v;
  j["config"] = config;
  j["diverged"] = r.diverged;
  Json phases = Json::array();
  for (const auto& p : r.phases) {
    phases.push_back({{"label", p.label}, {"perplexity", number(p.perplexity)}, {"tokens", p.tokens},
                      {"diverged", p.diverged}});
  }
  j["phases"] = phases;
  return j;
}

Json to_json(const lm::TrainingLog& log) {
  Json j;
  j["initial_valid_perplexity"] = number(log.initial_valid_perplexity);
  j["best_epoch"] = log.best_epoch;
  j["stopped_early"] = log.stopped_early;
  j["epochs_run"] = log.epochs.size();
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json(std::string_view text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::format, origin + ": invalid JSON: " + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorKind::io, "short write to " + path.string());
}

Fingerprint file_fingerprint(const std::filesystem::path& path) { return sha256(read_text_file(path)); }

std::string tsv_row(std::initializer_list<std::string> fields) {
  std::string out;
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out += '\t';
    out += f;
    first = false;
  }
  return out + "\n";
}

}  // namespace adaptlm::app
