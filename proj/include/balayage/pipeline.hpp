#pragma once

#include "balayage/config.hpp"
#include "balayage/error.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace balayage {

/// One pass/fail comparison: value <= limit or value >= limit.
struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool at_most = true;
  bool pass = false;

  double margin() const { return at_most ? limit - value : value - limit; }
};

Check check_at_most(std::string name, double value, double limit);
Check check_at_least(std::string name, double value, double limit);

struct SuiteCase {
  std::string name;
  DomainSpec spec;
  int degree = 8;
  bool ball = false;
};

/// Ball, off-center ball, ellipse 4x^2 + y^2 < 1, ellipsoid (1,1,2), annuli
/// r = 1, R = 2 in 2D and 3D, and a union of two unit disks.
std::vector<SuiteCase> default_suite();

struct SuiteOptions {
  double tolerance = 1e-3;         // inequality slack
  double oracle_relative = 2e-2;   // relative oracle match
  double ball_gap = 2e-3;          // equality gap on balls, at most
  double nonball_gap = 0.02;       // equality gap elsewhere, at least
  double trace_slack = 5e-3;       // proof-trace bound <= r_D + slack
  double trace_consistency = 2e-2; // proof-trace bound >= lambda1 - this
  bool proof_traces = true;        // planar rows only
  int proof_resolution = 64;
  int transport_n = 2000;
  std::uint64_t seed = 0;
};

struct SuiteRow {
  std::string name;
  bool ball = false;
  int dim = 2;
  int degree = 8;
  double volume = 0.0;
  std::optional<double> surface;
  std::optional<double> lower;  // N V / P
  double r_omega = 0.0;
  double lambda1 = 0.0;
  double certificate = 0.0;
  std::optional<double> trace_bound;
  std::optional<double> r_D;
  std::optional<bool> omega_in_S;
  std::optional<double> oracle;
  std::vector<Check> checks;
  bool pass = true;
};

struct VerificationReport {
  std::vector<SuiteRow> rows;
  bool pass = true;
};

/// r_Omega - lambda1.
double equality_gap(const SuiteRow& row);

VerificationReport verify_suite(const SuiteOptions& options = {}, const std::vector<SuiteCase>& cases = default_suite());

nlohmann::json to_json(const VerificationReport& report);
void write_csv(std::ostream& out, const VerificationReport& report);

/// Process exit codes.
enum ExitCode { exit_pass = 0, exit_check_failed = 1, exit_invalid_config = 2, exit_non_convergence = 3 };

/// Runs `lambda1`, `balayage`, `brenier`, `proof-trace`, `oracle` or `verify`,
/// writing report.json, report.csv, config.echo.json and field dumps to the
/// output directory. Progress goes to `log`.
int run(const std::string& command, const RunConfig& config, std::ostream& log);

/// Exit code for an error, after writing its reason object to `output`/report.json
/// (skipped when `output` is empty) and to `log`.
int report_error(const std::string& command, const Error& error, const std::string& output, std::ostream& log);

}  // namespace balayage
