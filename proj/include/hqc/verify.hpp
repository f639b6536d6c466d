#pragma once

// Batch verification: the check catalog, run configuration, per-suite runners
// over a (model, c) grid and the deterministic JSON report.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "hqc/models.hpp"
#include "hqc/reduction.hpp"

namespace hqc {

// How a residual is judged against its tolerance.
enum class Comparator {
  Below,        // pass iff residual <= tolerance
  Above,        // pass iff residual > tolerance (positive quantity that must not vanish)
  Obstruction,  // predicted obstruction: EXPECTED-FAIL iff residual > tolerance
};

struct CheckInfo {
  std::string id;
  std::string suite;
  std::string anchor;   // quoted statement, or "plumbing"
  std::string formula;  // what is computed
  double tolerance;
};

const std::vector<CheckInfo>& check_catalog();
// Throws ParameterError for an unknown id.
const CheckInfo& find_check(const std::string& id);
std::string explain_check(const std::string& id);

enum class Status { Pass, Fail, ExpectedFail, Skipped, Error };
std::string to_string(Status s);

struct CheckEntry {
  std::string id;
  std::string suite;
  std::string anchor;
  std::string model;
  int n = 0;
  std::optional<double> c;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string comparator = "<=";
  Status status = Status::Fail;
  std::string detail;

  bool pass() const { return status == Status::Pass || status == Status::ExpectedFail || status == Status::Skipped; }
};

struct ModelConfig {
  std::string name;  // flat | hopf | hpn | deformed-flat
  int n = 1;
  double lambda = 2.0;               // hopf
  std::optional<std::array<double, 4>> q;  // hopf, unit quaternion (w, x, y, z)
};

struct RunConfig {
  std::vector<ModelConfig> models;
  std::vector<double> c_values;      // empty: {-4(n+1), 1, -1} per model
  double A = 1.0;
  int samples = 50;
  uint64_t seed = 1;
  std::map<std::string, double> tolerances;
  std::set<std::string> suites = {"structure", "swann", "moment", "reduction", "twist"};
  int reduction_anchors = 3;
  int twist_points = 5;
  int covering_points = 10;
  std::string out;
};

// Validates and fills defaults; throws ParameterError on invalid input.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
ModelPtr build_model(const ModelConfig& mc);

struct VerificationReport {
  RunConfig config;
  std::vector<CheckEntry> entries;
  int pass_count() const;
  int fail_count() const;
  bool all_pass() const { return fail_count() == 0; }
};

VerificationReport run(const RunConfig& cfg);

// JSON document (schema_version, environment, entries, summary); doubles are
// printed with 17 significant digits.
nlohmann::json report_json(const VerificationReport& r);
std::string dump_json(const nlohmann::json& j);
std::string text_summary(const VerificationReport& r);

}  // namespace hqc
