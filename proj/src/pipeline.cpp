#include "balayage/pipeline.hpp"

#include "balayage/error.hpp"
#include "balayage/lambda1.hpp"
#include "balayage/oracles.hpp"
#include "balayage/partial_balayage.hpp"
#include "balayage/proof_trace.hpp"
#include "balayage/transport.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace balayage {

namespace fs = std::filesystem;

Check check_at_most(std::string name, double value, double limit) {
  return {std::move(name), value, limit, true, value <= limit};
}

Check check_at_least(std::string name, double value, double limit) {
  return {std::move(name), value, limit, false, value >= limit};
}

namespace {

// Shortest round-trip decimal form, so CSV output is byte-stable.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

nlohmann::json opt_json(const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); }

nlohmann::json to_json(const Check& c) {
  return {{"check", c.name},     {"value", c.value},   {"limit", c.limit},
          {"relation", c.at_most ? "<=" : ">="}, {"margin", c.margin()}, {"pass", c.pass}};
}

nlohmann::json checks_json(const std::vector<Check>& checks) {
  auto a = nlohmann::json::array();
  for (const auto& c : checks) a.push_back(to_json(c));
  return a;
}

void write_checks_csv(std::ostream& out, const std::vector<Check>& checks) {
  out << "check,value,limit,relation,margin,pass\n";
  for (const auto& c : checks)
    out << c.name << ',' << num(c.value) << ',' << num(c.limit) << ',' << (c.at_most ? "<=" : ">=") << ','
        << num(c.margin()) << ',' << (c.pass ? 1 : 0) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) { open_out(path) << j.dump(2) << '\n'; }

std::vector<double> as_double(const std::vector<std::uint8_t>& mask) { return {mask.begin(), mask.end()}; }

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const DomainSpec& require_domain(const RunConfig& config, const std::string& command) {
  if (!config.domain) throw invalid_input("command '" + command + "' needs a 'domain'");
  return *config.domain;
}

Lambda1Options lambda1_options(const RunConfig& config) {
  Lambda1Options o;
  o.degree = config.degree;
  o.boundary_count = config.boundary_samples;
  o.stage_tolerance = config.tolerances.optimizer;
  return o;
}

struct Outcome {
  nlohmann::json result;
  std::vector<Check> checks;
  bool custom_csv = false;  // report.csv already written
};

constexpr double oracle_relative = 2e-2;
constexpr double certificate_relative = 1e-2;

void sandwich_checks(std::vector<Check>& checks, double lambda, const Bounds& b, double tol) {
  checks.push_back(check_at_most("lambda1<=r_omega", lambda, b.upper + tol));
  if (b.lower) checks.push_back(check_at_least("lambda1>=NV/P", lambda, *b.lower - tol));
}

Outcome run_lambda1(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto& spec = require_domain(config, "lambda1");
  const Stopwatch clock;
  const auto r = estimate_lambda1(spec, lambda1_options(config));
  log << "lambda1: value " << r.value << " certificate " << r.certificate << " (" << clock.seconds() << " s)\n";

  {
    auto csv = open_out(out / "residuals.csv");
    csv << (spec.dim() == 2 ? "x,y,residual\n" : "x,y,z,residual\n");
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      for (int d = 0; d < spec.dim(); ++d) csv << num(r.samples[i][d]) << ',';
      csv << num(r.residuals[i]) << '\n';
    }
  }

  Outcome o;
  auto stages = nlohmann::json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"p", s.p}, {"surrogate", s.surrogate}, {"true_max", s.true_max}, {"iterations", s.iterations}});
  const auto b = bounds(spec);
  const auto exact = oracle_lambda1(spec);
  o.result = {{"value", r.value},
              {"certificate", r.certificate},
              {"interior_max", r.interior_max},
              {"degree", r.degree},
              {"coefficients", std::vector<double>(r.coefficients.data(), r.coefficients.data() + r.coefficients.size())},
              {"residual_csv_path", "residuals.csv"},
              {"samples", r.samples.size()},
              {"stages", stages},
              {"lower_bound", opt_json(b.lower)},
              {"upper_bound", b.upper},
              {"oracle", opt_json(exact)}};

  sandwich_checks(o.checks, r.value, b, config.tolerances.verification);
  o.checks.push_back(check_at_most("certificate_stability", (r.certificate - r.value) / r.value, certificate_relative));
  if (exact) o.checks.push_back(check_at_most("oracle_relative", std::abs(r.value - *exact) / *exact, oracle_relative));
  return o;
}

Outcome run_balayage(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto& spec = require_domain(config, "balayage");
  const auto& bc = config.balayage;
  if (bc.atoms.empty() && bc.patches.empty()) throw invalid_input("'balayage' needs at least one atom or patch");

  const auto container = rasterize(spec, config.resolution);
  const auto& shape = container->shape();
  std::vector<double> mu(container->size(), 0.0);
  for (const auto& p : bc.patches)
    for (std::size_t i = 0; i < mu.size(); ++i)
      if (container->inside(i) && p.domain.contains(shape.center(i))) mu[i] += p.density;
  for (const auto& a : bc.atoms)
    if (!spec.contains(a.location)) throw invalid_input("atom outside the container");
  const MeasureDensity mu_measure(container, mu, bc.atoms);
  const auto nu = MeasureDensity::uniform(container, bc.nu_density.value_or(static_cast<double>(spec.dim())));

  BalayageOptions opt;
  opt.tolerance = config.tolerances.complementarity;
  const Stopwatch clock;
  const auto r = partial_balayage(container, mu_measure, nu, opt);
  const auto s = check_structure(r);
  log << "balayage: " << r.sweeps << " sweeps, residual " << r.complementarity_residual << " (" << clock.seconds()
      << " s)\n";

  write_gfd((out / "mu.gfd").string(), shape, r.mu_density);
  write_gfd((out / "eta.gfd").string(), shape, r.eta.density);
  write_gfd((out / "deficiency.gfd").string(), shape, r.deficiency.values);
  write_gfd((out / "saturated.gfd").string(), shape, as_double(r.saturated_mask));

  std::size_t saturated = 0;
  for (auto m : r.saturated_mask) saturated += m;
  Outcome o;
  o.result = {{"mass", {{"mu", r.mass.mu_mass}, {"eta", r.mass.eta_mass}, {"leakage", r.mass.leakage}}},
              {"complementarity_residual", r.complementarity_residual},
              {"sweeps", r.sweeps},
              {"threshold", r.threshold},
              {"saturated_cells", saturated},
              {"saturated_components", r.saturated_components},
              {"container_cells", container->inside_count()},
              {"h", container->h()},
              {"structure",
               {{"saturated_deviation", s.saturated_deviation},
                {"unsaturated_deviation", s.unsaturated_deviation},
                {"cap_excess", s.cap_excess},
                {"min_deficiency", s.min_deficiency}}},
              {"fields", {"mu.gfd", "eta.gfd", "deficiency.gfd", "saturated.gfd"}}};
  const double tol = config.tolerances.complementarity;
  o.checks.push_back(check_at_most("complementarity_residual", r.complementarity_residual, tol));
  o.checks.push_back(check_at_most("eta<=nu", s.cap_excess, tol));
  o.checks.push_back(check_at_least("deficiency>=0", s.min_deficiency, -tol));
  return o;
}

Outcome run_brenier(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto& spec = require_domain(config, "brenier");
  const int n = config.transport_n;
  const int dim = spec.dim();
  const double V = volume(spec);
  const double r_D = equivalent_radius(V, dim);
  const Stopwatch clock;
  const auto t = solve_assignment(sample_uniform(spec, n, config.seed), sample_ball(dim, Vec::Zero(), r_D, n, config.seed));
  const double gap = dual_feasibility_gap(t);
  DiagnosticsOptions dopt;
  dopt.interior = spec;
  dopt.interior_margin = 4.0 * std::pow(V / n, 1.0 / dim);
  dopt.seed = config.seed + 1;
  const auto d = brenier_diagnostics(t, r_D, dopt);
  log << "brenier: cost " << t.total_cost << ", dual gap " << gap << " (" << clock.seconds() << " s)\n";

  {
    auto csv = open_out(out / "assignment.csv");
    csv << "source,target";
    for (const char* p : {"x", "y"})
      for (int k = 0; k < dim; ++k) csv << ',' << p << k;
    csv << '\n';
    for (std::size_t i = 0; i < t.source.size(); ++i) {
      csv << i << ',' << t.assignment[i];
      for (int k = 0; k < dim; ++k) csv << ',' << num(t.source.points[i][k]);
      for (int k = 0; k < dim; ++k) csv << ',' << num(t.slope(i)[k]);
      csv << '\n';
    }
  }

  Outcome o;
  o.result = {{"n", n},
              {"r_D", r_D},
              {"total_cost", t.total_cost},
              {"dual_gap", gap},
              {"assignment_csv_path", "assignment.csv"},
              {"diagnostics",
               {{"max_target_norm", d.max_target_norm},
                {"range_ok", d.range_ok},
                {"fitted", d.fitted},
                {"skipped", d.skipped},
                {"trace_fraction", d.trace_fraction},
                {"min_trace", d.min_trace},
                {"median_trace", d.median_trace},
                {"median_det", d.median_det},
                {"det_edges", d.det_edges},
                {"det_histogram", d.det_histogram},
                {"cycles_tested", d.cycles_tested},
                {"monotonicity_violations", d.monotonicity_violations}}}};
  o.checks.push_back(check_at_most("dual_gap", gap, 1e-9));
  o.checks.push_back(check_at_most("max_target_norm", d.max_target_norm, r_D + 1e-12));
  o.checks.push_back(check_at_most("monotonicity_violations", d.monotonicity_violations, 0));
  return o;
}

Outcome run_proof_trace(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto& spec = require_domain(config, "proof-trace");
  ProofTraceOptions opt;
  opt.resolution = config.resolution;
  opt.n_transport = config.transport_n;
  opt.seed = config.seed;
  opt.balayage.tolerance = config.tolerances.complementarity;
  const Stopwatch clock;
  const auto t = proof_trace_upper_bound(spec, opt);
  log << "proof-trace: bound " << t.bound << ", r_D " << t.r_D << " (" << clock.seconds() << " s)\n";
  const auto direct = estimate_lambda1(spec, lambda1_options(config));

  Outcome o;
  o.result = to_json(t);
  o.result["lambda1_direct"] = direct.value;
  auto fields = nlohmann::json::array();
  if (!t.short_circuited) {
    const auto& shape = t.container->shape();
    std::vector<double> level(t.container->levels());
    write_gfd((out / "container.gfd").string(), shape, level);
    write_gfd((out / "w_eps.gfd").string(), shape, t.w_eps);
    write_gfd((out / "g_mu.gfd").string(), shape, t.g_mu);
    write_gfd((out / "g_eta.gfd").string(), shape, t.g_eta);
    write_gfd((out / "eta.gfd").string(), shape, t.eta);
    write_gfd((out / "saturated.gfd").string(), shape, as_double(t.saturated));
    fields = {"container.gfd", "w_eps.gfd", "g_mu.gfd", "g_eta.gfd", "eta.gfd", "saturated.gfd"};
  }
  o.result["fields"] = fields;

  o.checks.push_back(check_at_most("omega_outside_S", static_cast<double>(t.omega_outside_S), 0.0));
  o.checks.push_back(check_at_most("bound<=r_D", t.bound, t.r_D + 5e-3));
  o.checks.push_back(check_at_least("bound>=lambda1", t.bound, direct.value - 2e-2));
  if (!t.short_circuited)
    o.checks.push_back(check_at_most("complementarity_residual", t.complementarity_residual, opt.balayage.tolerance));
  return o;
}

Outcome run_oracle(const RunConfig& config, const fs::path&, std::ostream&) {
  const auto rec = oracle(require_domain(config, "oracle"));
  Outcome o;
  o.result = to_json(rec);
  if (rec.lambda1) {
    o.checks.push_back(check_at_most("oracle<=r_omega", *rec.lambda1, rec.upper_bound + 1e-12));
    if (rec.lower_bound) o.checks.push_back(check_at_least("oracle>=NV/P", *rec.lambda1, *rec.lower_bound - 1e-12));
  }
  return o;
}

Outcome run_verify(const RunConfig& config, const fs::path& out, std::ostream& log) {
  SuiteOptions opt;
  opt.tolerance = config.tolerances.verification;
  opt.proof_resolution = config.resolution;
  opt.transport_n = config.transport_n;
  opt.seed = config.seed;
  const Stopwatch clock;
  const auto report = verify_suite(opt);
  log << "verify: " << report.rows.size() << " rows (" << clock.seconds() << " s)\n";
  {
    auto csv = open_out(out / "report.csv");
    write_csv(csv, report);
  }
  Outcome o;
  o.result = to_json(report);
  for (const auto& row : report.rows)
    for (const auto& c : row.checks) {
      auto named = c;
      named.name = row.name + "." + c.name;
      o.checks.push_back(named);
    }
  o.custom_csv = true;
  return o;
}

}  // namespace

std::vector<SuiteCase> default_suite() {
  std::vector<SuiteCase> s;
  s.push_back({"annulus-2d", DomainSpec::annulus(2, Vec::Zero(), 1.0, 2.0), 8, false});
  s.push_back({"annulus-3d", DomainSpec::annulus(3, Vec::Zero(), 1.0, 2.0), 8, false});
  s.push_back({"ball", DomainSpec::ball(2, Vec::Zero(), 1.0), 8, true});
  s.push_back({"ball-off-center", DomainSpec::ball(3, Vec(0.3, -0.2, 0.5), 1.0), 8, true});
  s.push_back({"ellipse", DomainSpec::ellipsoid(2, Vec::Zero(), Vec(2.0, 1.0, 1.0)), 8, false});
  s.push_back({"ellipsoid", DomainSpec::ellipsoid(3, Vec::Zero(), Vec(1.0, 1.0, 2.0)), 8, false});
  s.push_back({"union-2d",
               DomainSpec::union_of_balls(2, {{Vec(-0.75, 0.0, 0.0), 1.0}, {Vec(0.75, 0.0, 0.0), 1.0}}), 12, false});
  return s;
}

double equality_gap(const SuiteRow& row) { return row.r_omega - row.lambda1; }

VerificationReport verify_suite(const SuiteOptions& options, const std::vector<SuiteCase>& cases) {
  std::vector<SuiteCase> ordered = cases;
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.name < b.name; });

  VerificationReport report;
  for (const auto& c : ordered) {
    SuiteRow row;
    row.name = c.name;
    row.ball = c.ball;
    row.dim = c.spec.dim();
    row.degree = c.degree;
    row.volume = volume(c.spec);
    if (c.spec.kind() != DomainKind::union_of_balls) row.surface = surface_area(c.spec);
    const auto b = bounds(c.spec);
    row.lower = b.lower;
    row.r_omega = b.upper;

    Lambda1Options lo;
    lo.degree = c.degree;
    const auto est = estimate_lambda1(c.spec, lo);
    row.lambda1 = est.value;
    row.certificate = est.certificate;
    row.oracle = oracle_lambda1(c.spec);

    sandwich_checks(row.checks, row.lambda1, b, options.tolerance);
    row.checks.push_back(c.ball ? check_at_most("equality_gap", equality_gap(row), options.ball_gap)
                                : check_at_least("equality_gap", equality_gap(row), options.nonball_gap));
    row.checks.push_back(
        check_at_most("certificate_stability", (row.certificate - row.lambda1) / row.lambda1, certificate_relative));
    if (row.oracle)
      row.checks.push_back(
          check_at_most("oracle_relative", std::abs(row.lambda1 - *row.oracle) / *row.oracle, options.oracle_relative));

    if (options.proof_traces && row.dim == 2) {
      ProofTraceOptions po;
      po.resolution = options.proof_resolution;
      po.n_transport = options.transport_n;
      po.seed = options.seed;
      const auto t = proof_trace_upper_bound(c.spec, po);
      row.trace_bound = t.bound;
      row.r_D = t.r_D;
      row.omega_in_S = t.omega_in_S;
      row.checks.push_back(check_at_most("trace_omega_outside_S", static_cast<double>(t.omega_outside_S), 0.0));
      row.checks.push_back(check_at_most("trace_bound<=r_D", t.bound, t.r_D + options.trace_slack));
      row.checks.push_back(check_at_least("trace_bound>=lambda1", t.bound, row.lambda1 - options.trace_consistency));
    }
    row.pass = std::all_of(row.checks.begin(), row.checks.end(), [](const Check& k) { return k.pass; });
    report.pass = report.pass && row.pass;
    report.rows.push_back(std::move(row));
  }
  return report;
}

nlohmann::json to_json(const VerificationReport& report) {
  auto rows = nlohmann::json::array();
  auto failed = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"name", r.name},
                    {"N", r.dim},
                    {"ball", r.ball},
                    {"degree", r.degree},
                    {"V", r.volume},
                    {"P", opt_json(r.surface)},
                    {"NV/P", opt_json(r.lower)},
                    {"r_omega", r.r_omega},
                    {"lambda1", r.lambda1},
                    {"certificate", r.certificate},
                    {"equality_gap", equality_gap(r)},
                    {"trace_bound", opt_json(r.trace_bound)},
                    {"r_D", opt_json(r.r_D)},
                    {"omega_in_S", r.omega_in_S ? nlohmann::json(*r.omega_in_S) : nlohmann::json(nullptr)},
                    {"oracle", opt_json(r.oracle)},
                    {"checks", checks_json(r.checks)},
                    {"pass", r.pass}});
    if (!r.pass) failed.push_back(r.name);
  }
  return {{"rows", rows},
          {"summary", {{"rows", report.rows.size()}, {"failed", failed}, {"pass", report.pass}}}};
}

void write_csv(std::ostream& out, const VerificationReport& report) {
  out << "name,N,V,P,NV/P,r_omega,lambda1,equality_gap,trace_bound,r_D,oracle,pass\n";
  for (const auto& r : report.rows)
    out << r.name << ',' << r.dim << ',' << num(r.volume) << ',' << opt_num(r.surface) << ',' << opt_num(r.lower) << ','
        << num(r.r_omega) << ',' << num(r.lambda1) << ',' << num(equality_gap(r)) << ',' << opt_num(r.trace_bound)
        << ',' << opt_num(r.r_D) << ',' << opt_num(r.oracle) << ',' << (r.pass ? 1 : 0) << '\n';
}

int report_error(const std::string& command, const Error& error, const std::string& output, std::ostream& log) {
  const int code = error.kind() == ErrorKind::non_convergence ? exit_non_convergence : exit_invalid_config;
  nlohmann::json report{{"command", command},
                        {"status", "error"},
                        {"reason", {{"check", code == exit_non_convergence ? "convergence" : "config"}, {"message", error.what()}}},
                        {"exit_code", code}};
  log << report["reason"].dump() << '\n';
  if (!output.empty()) {
    std::error_code ec;
    fs::create_directories(output, ec);
    if (!ec) write_json(fs::path(output) / "report.json", report);
  }
  return code;
}

int run(const std::string& command, const RunConfig& config, std::ostream& log) {
  const fs::path out(config.output);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    log << "error: cannot create output directory '" << out.string() << "': " << ec.message() << '\n';
    return exit_invalid_config;
  }
  write_json(out / "config.echo.json", to_json(config));

  nlohmann::json report{{"command", command}, {"seed", config.seed}};
  int code = exit_pass;
  try {
    Outcome o;
    if (command == "lambda1") o = run_lambda1(config, out, log);
    else if (command == "balayage") o = run_balayage(config, out, log);
    else if (command == "brenier") o = run_brenier(config, out, log);
    else if (command == "proof-trace") o = run_proof_trace(config, out, log);
    else if (command == "oracle") o = run_oracle(config, out, log);
    else if (command == "verify") o = run_verify(config, out, log);
    else throw invalid_input("unknown command '" + command + "'");

    auto failures = nlohmann::json::array();
    for (const auto& c : o.checks)
      if (!c.pass) failures.push_back(to_json(c));
    code = failures.empty() ? exit_pass : exit_check_failed;
    report["status"] = failures.empty() ? "pass" : "fail";
    report["reason"] = failures.empty() ? nlohmann::json(nullptr) : failures.front();
    report["failures"] = failures;
    report["checks"] = checks_json(o.checks);
    report["result"] = o.result;
    if (!o.custom_csv) {
      auto csv = open_out(out / "report.csv");
      write_checks_csv(csv, o.checks);
    }
    for (const auto& f : failures) log << "check failed: " << f.dump() << '\n';
  } catch (const Error& e) {
    return report_error(command, e, config.output, log);
  }
  report["exit_code"] = code;
  write_json(out / "report.json", report);
  return code;
}

}  // namespace balayage
