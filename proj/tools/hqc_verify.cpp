// Batch verification driver.
//   hqc_verify verify --config <path> [--suite <name>]* [--out <path>] [--seed <int>]
//   hqc_verify explain <check-id>
//   hqc_verify list-checks
// Exit status: 0 all enabled checks pass, 1 some check fails or errors, 2 usage or config error.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "hqc/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of the quaternionic-to-hypercomplex correspondence"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "run the check suites over a (model, c) grid");
  std::string config_path, out_path;
  std::vector<std::string> suites;
  std::optional<uint64_t> seed;
  verify->add_option("--config", config_path, "JSON config file")->required();
  verify->add_option("--suite", suites, "restrict to these suites (repeatable)")
      ->check(CLI::IsMember({"structure", "swann", "moment", "reduction", "twist"}));
  verify->add_option("--out", out_path, "report path (overrides the config's 'out')");
  verify->add_option("--seed", seed, "sampling seed (overrides the config's 'seed')");

  auto* explain = app.add_subcommand("explain", "print a check's formula, anchor and tolerance");
  std::string check_id;
  explain->add_option("check-id", check_id)->required();

  auto* list = app.add_subcommand("list-checks", "list all check ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*list) {
    for (const auto& c : hqc::check_catalog()) std::printf("%-34s %s\n", c.id.c_str(), c.suite.c_str());
    return 0;
  }
  if (*explain) {
    try {
      std::cout << hqc::explain_check(check_id);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    return 0;
  }

  hqc::RunConfig cfg;
  try {
    cfg = hqc::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!suites.empty()) cfg.suites = std::set<std::string>(suites.begin(), suites.end());
  if (seed) cfg.seed = *seed;
  if (!out_path.empty()) cfg.out = out_path;
  if (cfg.out.empty()) cfg.out = "verification_report.json";

  hqc::VerificationReport report = hqc::run(cfg);
  std::cout << hqc::text_summary(report);
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write report to " << cfg.out << "\n";
    return 2;
  }
  out << hqc::dump_json(hqc::report_json(report));
  std::cout << "report: " << cfg.out << "\n";
  return report.all_pass() ? 0 : 1;
}
