// pfqkd: key-rate sweeps, λ optimisation, WCP baseline, oracle check and
// distribution dumps for the heralded fully passive QKD source.
//
// Settings resolve as defaults, then the config file (--config, or the
// PFQKD_CONFIG environment variable), then command-line flags.

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "pfqkd/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Heralded fully passive QKD key-rate simulator"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::map<std::string, std::string> flags;
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file (default: $PFQKD_CONFIG)");

  const std::pair<const char*, const char*> keys[] = {
      {"lambda", "pair parameter for sweep/verify/dists"},
      {"lambda-min", "lower end of the lambda range"},
      {"lambda-max", "upper end of the lambda range"},
      {"lambda-steps", "lambda grid size (sweep: 0 uses --lambda)"},
      {"distance-min", "first distance, km"},
      {"distance-max", "last distance, km"},
      {"distance-step", "distance step, km"},
      {"n-cut", "pair-number truncation order"},
      {"tail-eps", "allowed truncated pair-number mass"},
      {"q", "basis reconciliation factor"},
      {"f", "error-correction inefficiency"},
      {"pulse-rate", "pulse repetition rate, Hz"},
      {"eta-h", "herald detector efficiency"},
      {"eta-d", "Bob detector efficiency"},
      {"dark", "dark-count probability for herald and Bob detectors"},
      {"dark-h", "herald dark-count probability"},
      {"dark-b", "Bob dark-count probability"},
      {"e-d", "misalignment error"},
      {"alpha", "fiber loss, dB/km"},
      {"classes", "comma-separated key classes, e.g. H,V,+,-"},
      {"out", "output CSV path (default stdout)"},
  };
  for (const auto& [key, help] : keys) {
    const std::string k = key;
    app.add_option_function<std::string>("--" + k, [&flags, k](const std::string& v) { flags[k] = v; }, help);
  }

  std::string command;
  for (const char* name : {"sweep", "optimize", "baseline", "verify", "dists"}) {
    app.add_subcommand(name)->callback([&command, name] { command = name; });
  }
  app.get_subcommand("sweep")->description("per-pulse and per-second key rates over lambda and distance");
  app.get_subcommand("optimize")->description("throughput-optimal lambda at each distance");
  app.get_subcommand("baseline")->description("optimal active weak-coherent-pulse rate at each distance");
  app.get_subcommand("verify")->description("compare the herald model with the exact oracle");
  app.get_subcommand("dists")->description("dump the heralded photon-number tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pfqkd::kExitUsage;
  }

  pfqkd::RunConfig cfg;
  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv("PFQKD_CONFIG"); env && *env) config_path = env;
    }
    if (!config_path.empty()) pfqkd::load_config_file(cfg, config_path);
    // --dark sets both detectors, so apply it before the per-detector flags.
    if (auto it = flags.find("dark"); it != flags.end()) cfg.set("dark", it->second);
    for (const auto& [k, v] : flags)
      if (k != "dark") cfg.set(k, v);
    cfg.command = command;
  } catch (const pfqkd::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return pfqkd::kExitUsage;
  }

  if (cfg.out.empty()) return pfqkd::run(cfg, std::cout, std::cerr);
  // Open the file only after a successful run so a failure leaves it untouched.
  std::ostringstream buffer;
  const int status = pfqkd::run(cfg, buffer, std::cerr);
  if (status != pfqkd::kExitOk) return status;
  std::ofstream file(cfg.out, std::ios::binary);
  if (!(file << buffer.str())) {
    std::cerr << "error: cannot write output file '" << cfg.out << "'\n";
    return pfqkd::kExitComputation;
  }
  return pfqkd::kExitOk;
}
