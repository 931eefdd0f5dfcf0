#include "fallball/experiment.hpp"

#include "CLI11.hpp"

#include <iomanip>
#include <iostream>

namespace {

constexpr int kUsageError = 2;

void print_schema(std::ostream& os) {
  os << "# fallball " << fallball::kVersion << " config keys (key = value, '#' starts a comment)\n";
  for (const auto& k : fallball::config_schema()) {
    os << std::left << std::setw(34) << k.name << std::setw(10) << fallball::to_string(k.type)
       << (k.default_value.empty() ? std::string("-") : k.default_value) << "\n    " << k.help << "\n";
  }
  os << "\nRequired keys per experiment:\n";
  for (const char* name : {"simulate", "lyapunov", "noncontraction", "tau", "heart", "counts", "sufficiency",
                           "wedge-equivalence", "wedge-unfold", "identity-check"}) {
    os << "  " << std::left << std::setw(18) << name;
    for (const auto& key : fallball::required_keys(*fallball::parse_experiment_kind(name))) os << ' ' << key;
    if (std::string(name) == "simulate") os << " horizon.events|horizon.time";
    os << "\n";
  }
  os << "\nFALLBALL_OUTPUT_ROOT prefixes a relative output.dir.\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Falling-balls experiment runner"};
  app.set_version_flag("--version", std::string(fallball::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment and write its artifacts");
  run->add_option("config", config_path, "Config file")->required();
  int jobs = 0;
  run->add_option("-j,--jobs", jobs, "Override the jobs key");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse and check a config without running it");
  validate->add_option("config", validate_path, "Config file")->required();

  app.add_subcommand("schema", "Print the config key reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (app.got_subcommand("schema")) {
      print_schema(std::cout);
      return 0;
    }
    if (app.got_subcommand("validate")) {
      const auto cfg = fallball::load_config(validate_path);
      std::cout << "ok " << fallball::to_string(cfg.kind) << " config_hash=" << cfg.hash() << "\n";
      return 0;
    }
    auto cfg = fallball::load_config(config_path);
    if (jobs > 0) cfg.jobs = jobs;
    const auto result = fallball::run_experiment(cfg);
    std::cout << "wrote " << result.output_dir.string() << "\n";
    for (const auto& flag : result.red_flags) std::cout << "red flag: " << flag << "\n";
    return result.exit_code;
  } catch (const fallball::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
}
