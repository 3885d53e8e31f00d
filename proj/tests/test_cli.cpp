#include "balayage/pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace balayage;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("balayage_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump();
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(BALAYAGE_CLI) + " " + args + " 2>/dev/null >/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

const json disk = {{"kind", "ball"}, {"dim", 2}, {"r", 1.0}};
const json ellipse = {{"kind", "ellipsoid"}, {"dim", 2}, {"radii", {0.5, 1.0}}};

}  // namespace

TEST_CASE("config parsing is strict") {
  const auto c = parse_config({{"domain", disk}});
  CHECK(c.resolution == 96);
  CHECK(c.degree == 8);
  CHECK(c.transport_n == 2000);
  CHECK(c.tolerances.complementarity == 1e-8);

  const std::vector<json> bad = {
      json::array(),
      {{"domian", disk}},
      {{"domain", disk}, {"tolerances", {{"complementarty", 1e-8}}}},
      {{"domain", disk}, {"tolerances", {{"optimizer", -1.0}}}},
      {{"domain", disk}, {"tolerances", {{"verification", 0.0}}}},
      {{"domain", disk}, {"resolution", 15}},
      {{"domain", disk}, {"resolution", 64.5}},
      {{"domain", disk}, {"degree", 1}},
      {{"domain", disk}, {"degree", 25}},
      {{"domain", disk}, {"seed", -3}},
      {{"domain", disk}, {"output", ""}},
      {{"domain", disk}, {"transport_n", 10}},
      {{"balayage", {{"atoms", json::array()}}}},
      {{"domain", disk}, {"balayage", {{"atoms", {{{"location", {0.0, 0.0}}, {"mass", 1.0}, {"extra", 1}}}}}}},
      {{"domain", disk}, {"balayage", {{"atoms", {{{"location", {0.0, 0.0, 0.0}}, {"mass", 1.0}}}}}}},
      {{"domain", disk}, {"balayage", {{"nu_density", -2.0}}}},
      {{"domain", {{"kind", "ball"}, {"dim", 2}, {"radius", 1.0}}}},
  };
  for (const auto& j : bad) CHECK_THROWS_AS(parse_config(j), Error);
}

TEST_CASE("annulus gap below 4h is rejected") {
  const json ring = {{"kind", "annulus"}, {"dim", 2}, {"r", 1.0}, {"R", 1.05}};
  CHECK_THROWS_AS(parse_config({{"domain", ring}, {"resolution", 32}}), Error);
  // 4h = 4 * 4.1 / 1024 < 0.05
  CHECK_NOTHROW(parse_config({{"domain", ring}, {"resolution", 1024}}));
}

TEST_CASE("config echo reparses to itself") {
  const json j = {{"domain", ellipse},
                  {"resolution", 48},
                  {"seed", 7},
                  {"tolerances", {{"verification", 2e-3}}},
                  {"balayage", {{"nu_density", 3.0}, {"atoms", {{{"location", {0.0, 0.1}}, {"mass", 0.5}}}}}}};
  const auto echo = to_json(parse_config(j));
  CHECK(to_json(parse_config(echo)) == echo);
  CHECK(echo["tolerances"]["complementarity"] == 1e-8);
  CHECK(echo["tolerances"]["verification"] == 2e-3);
}

TEST_CASE("checks and equality gap") {
  const auto a = check_at_most("a", 0.5, 1.0);
  CHECK(a.pass);
  CHECK(a.margin() == doctest::Approx(0.5));
  const auto b = check_at_least("b", 0.5, 1.0);
  CHECK_FALSE(b.pass);
  CHECK(b.margin() == doctest::Approx(-0.5));
  CHECK_FALSE(check_at_most("nan", std::nan(""), 1.0).pass);

  SuiteRow row;
  row.r_omega = 1.0 / std::sqrt(2.0);
  row.lambda1 = 2.0 / 3.0;
  CHECK(equality_gap(row) == doctest::Approx(0.0404).epsilon(1e-3));
}

TEST_CASE("suite subset without proof traces") {
  auto cases = default_suite();
  CHECK(cases.size() == 7);
  std::vector<SuiteCase> subset;
  for (const auto& c : cases)
    if (c.name == "ellipse" || c.name == "ball") subset.push_back(c);
  std::swap(subset[0], subset[1]);
  SuiteOptions opt;
  opt.proof_traces = false;
  const auto report = verify_suite(opt, subset);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].name == "ball");
  CHECK(report.rows[1].name == "ellipse");
  CHECK(report.pass);
  CHECK(equality_gap(report.rows[0]) <= 2e-3);
  CHECK(equality_gap(report.rows[1]) >= 0.02);
  for (const auto& r : report.rows) CHECK_FALSE(r.trace_bound.has_value());

  std::ostringstream csv;
  write_csv(csv, report);
  CHECK(csv.str().rfind("name,N,V,P,NV/P,r_omega,lambda1,", 0) == 0);
  const auto j = to_json(report);
  CHECK(j["summary"]["pass"] == true);
  CHECK(j["rows"][1]["oracle"].get<double>() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("oracle command reports 0.75 for the ellipsoid") {
  const auto dir = scratch("oracle");
  const json ellipsoid = {{"kind", "ellipsoid"}, {"dim", 3}, {"radii", {1.0, 1.0, 0.5}}};
  const auto cfg = write_config(dir, {{"domain", ellipsoid}});
  CHECK(cli("oracle --config " + cfg.string() + " --out " + (dir / "out").string()) == exit_pass);
  const auto r = read_json(dir / "out" / "report.json");
  CHECK(r["result"]["lambda1"].get<double>() == 0.75);
  CHECK(r["status"] == "pass");
  CHECK(fs::exists(dir / "out" / "config.echo.json"));
  CHECK(fs::exists(dir / "out" / "report.csv"));
}

TEST_CASE("invalid configs exit 2 with a reason") {
  const auto dir = scratch("invalid");
  const json ring = {{"kind", "annulus"}, {"dim", 2}, {"r", 1.0}, {"R", 1.05}};
  const auto cfg = write_config(dir, {{"domain", ring}, {"resolution", 32}});
  CHECK(cli("lambda1 --config " + cfg.string() + " --out " + (dir / "out").string()) == exit_invalid_config);
  const auto r = read_json(dir / "out" / "report.json");
  CHECK(r["status"] == "error");
  CHECK(r["reason"]["check"] == "config");
  CHECK(r["reason"]["message"].get<std::string>().find("annulus gap") != std::string::npos);

  const auto typo = write_config(dir, {{"domain", disk}, {"tolerances", {{"complementarty", 1e-8}}}});
  CHECK(cli("lambda1 --config " + typo.string()) == exit_invalid_config);
  CHECK(cli("lambda1") == exit_invalid_config);
  CHECK(cli("lambda1 --config " + (dir / "missing.json").string()) == exit_invalid_config);
  CHECK(cli("verify") == exit_invalid_config);
  CHECK(cli("frobnicate") == exit_invalid_config);
  const auto no_domain = write_config(dir, json::object());
  CHECK(cli("lambda1 --config " + no_domain.string() + " --out " + (dir / "nd").string()) == exit_invalid_config);
}

TEST_CASE("a failed check exits 1 and names the check") {
  // Two unit disks at centre distance 1 on a coarse lattice with few
  // transport points: the saturated set misses part of the domain.
  const auto dir = scratch("fail");
  const json lens = {{"kind", "union_of_balls"},
                     {"dim", 2},
                     {"components", {{{"center", {-0.5, 0.0}}, {"r", 1.0}}, {{"center", {0.5, 0.0}}, {"r", 1.0}}}}};
  const auto cfg = write_config(dir, {{"domain", lens}, {"resolution", 48}, {"transport_n", 300}});
  CHECK(cli("proof-trace --config " + cfg.string() + " --out " + (dir / "out").string()) == exit_check_failed);
  const auto r = read_json(dir / "out" / "report.json");
  CHECK(r["status"] == "fail");
  CHECK(r["reason"]["check"] == "omega_outside_S");
  CHECK(r["reason"]["margin"].get<double>() < 0.0);
}

TEST_CASE("solver non-convergence exits 3") {
  const auto dir = scratch("nonconv");
  const auto cfg = write_config(dir, {{"domain", disk},
                                      {"resolution", 16},
                                      {"tolerances", {{"complementarity", 1e-300}}},
                                      {"balayage", {{"atoms", {{{"location", {0.0, 0.0}}, {"mass", 1.0}}}}}}});
  CHECK(cli("balayage --config " + cfg.string() + " --out " + (dir / "out").string()) == exit_non_convergence);
  CHECK(read_json(dir / "out" / "report.json")["reason"]["check"] == "convergence");
}

TEST_CASE("reports are byte-identical across runs") {
  const auto dir = scratch("determinism");
  const json mu = {{"nu_density", 2.0},
                   {"atoms", {{{"location", {0.2, 0.1}}, {"mass", 0.3}}}},
                   {"patches", {{{"domain", {{"kind", "ball"}, {"dim", 2}, {"center", {-0.3, 0.0}}, {"r", 0.3}}}, {"density", 4.0}}}}};
  const std::vector<std::pair<std::string, json>> runs = {
      {"lambda1", {{"domain", ellipse}}},
      {"brenier", {{"domain", ellipse}, {"transport_n", 300}, {"seed", 11}}},
      {"balayage", {{"domain", disk}, {"resolution", 48}, {"balayage", mu}}},
      {"proof-trace", {{"domain", ellipse}, {"resolution", 64}, {"transport_n", 1000}}},
  };
  for (const auto& [command, config] : runs) {
    CAPTURE(command);
    const auto cfg = write_config(dir, config);
    for (const char* out : {"a", "b"})
      REQUIRE(cli(command + " --config " + cfg.string() + " --out " + (dir / command / out).string()) == exit_pass);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dir / command / "a")) {
      const auto name = entry.path().filename();
      if (name == "config.echo.json") continue;  // records the output path
      CAPTURE(name.string());
      CHECK(slurp(entry.path()) == slurp(dir / command / "b" / name));
      ++compared;
    }
    CHECK(compared >= 2);
  }
  const auto a = read_json(dir / "brenier" / "a" / "report.json");
  CHECK(a["seed"] == 11);
  CHECK(fs::exists(dir / "balayage" / "a" / "eta.gfd"));
  CHECK(fs::exists(dir / "brenier" / "a" / "assignment.csv"));
  CHECK(fs::exists(dir / "lambda1" / "a" / "residuals.csv"));

  const auto cfg = write_config(dir, runs[1].second);
  REQUIRE(cli("brenier --config " + cfg.string() + " --seed 12 --out " + (dir / "seeded").string()) == exit_pass);
  CHECK(read_json(dir / "seeded" / "report.json")["seed"] == 12);
  CHECK(slurp(dir / "seeded" / "assignment.csv") != slurp(dir / "brenier" / "a" / "assignment.csv"));
}

TEST_CASE("balayage command conserves mass inside a large container") {
  const auto dir = scratch("balayage");
  const auto cfg = write_config(
      dir, {{"domain", disk}, {"resolution", 64}, {"balayage", {{"atoms", {{{"location", {0.1, 0.0}}, {"mass", 1.0}}}}}}});
  REQUIRE(cli("balayage --config " + cfg.string() + " --out " + (dir / "out").string()) == exit_pass);
  const auto r = read_json(dir / "out" / "report.json")["result"];
  CHECK(r["mass"]["eta"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  // Saturated disk of area 1 / 2 around the atom, in cells of side 2.1 / 64 (padding included).
  const auto g = read_gfd((dir / "out" / "saturated.gfd").string());
  double cells = 0.0;
  for (double v : g.values) cells += v;
  CHECK(cells * g.shape.cell_measure() == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("verify --suite passes on the default suite") {
  const auto dir = scratch("verify");
  REQUIRE(cli("verify --suite --out " + (dir / "out").string()) == exit_pass);
  const auto r = read_json(dir / "out" / "report.json");
  const auto& rows = r["result"]["rows"];
  REQUIRE(rows.size() == 7);
  for (const auto& row : rows) {
    CAPTURE(row["name"].get<std::string>());
    CHECK(row["lambda1"].get<double>() <= row["r_omega"].get<double>() + 1e-3);
    CHECK(row["pass"] == true);
  }
  const auto csv = slurp(dir / "out" / "report.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
}
