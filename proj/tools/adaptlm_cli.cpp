#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adaptlm/adaptlm.h"

namespace {

const char* const kCommands[] = {"train",      "adapt-eval",  "gardenpath", "dative-sweep",
                                 "forgetting", "gen-stimuli", "export-lmem"};

int report(alm_status status) {
  if (status != ALM_OK) std::fprintf(stderr, "adaptlm: %s\n", alm_last_error());
  switch (status) {
    case ALM_OK: return 0;
    case ALM_ERR_USAGE:
    case ALM_ERR_IO: return 1;
    case ALM_ERR_DATA: return 2;
    case ALM_ERR_DIVERGED: return 3;
    case ALM_ERR_INTERNAL: return 2;
  }
  return 2;
}

std::string keys_of(const char* command) {
  size_t needed = 0;
  if (alm_command_help(command, nullptr, 0, &needed) != ALM_OK) return {};
  std::string buf(needed + 1, '\0');
  alm_command_help(command, buf.data(), buf.size(), nullptr);
  buf.resize(needed);
  return buf;
}

class Config {
 public:
  Config() { alm_config_new(&c_); }
  ~Config() { alm_config_free(c_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  alm_config* get() const { return c_; }

 private:
  alm_config* c_ = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive LSTM language model experiments"};
  app.set_version_flag("--version", std::string(alm_version()));
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> assignments;
  const char* chosen = nullptr;
  for (const char* name : kCommands) {
    auto* sub = app.add_subcommand(name, std::string("run ") + name);
    sub->add_option("--config", config_file, "key = value settings file")->check(CLI::ExistingFile);
    sub->add_option("settings", assignments, "key=value overrides, applied after --config");
    sub->footer("Settings:\n" + keys_of(name));
    sub->callback([&chosen, name] { chosen = name; });
  }
  std::string dir;
  auto* validate = app.add_subcommand("validate", "check an output directory against the file schemas");
  validate->add_option("dir", dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (validate->parsed()) {
    size_t n = 0;
    const alm_status st = alm_validate_output_dir(dir.c_str(), &n);
    if (st == ALM_OK) std::printf("%zu files valid\n", n);
    return report(st);
  }

  Config config;
  if (!config.get()) return report(ALM_ERR_INTERNAL);
  if (!config_file.empty()) {
    if (const auto st = alm_config_load_file(config.get(), config_file.c_str()); st != ALM_OK) return report(st);
  }
  for (const auto& a : assignments) {
    if (const auto st = alm_config_set(config.get(), a.c_str()); st != ALM_OK) return report(st);
  }
  return report(alm_run(chosen, config.get()));
}
