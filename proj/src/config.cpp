#include "balayage/config.hpp"

#include "balayage/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace balayage {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw invalid_input("unknown key '" + it.key() + "' in " + where);
}

const nlohmann::json& object_at(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_object()) throw invalid_input(std::string("'") + key + "' must be an object");
  return v;
}

int integer_at(const nlohmann::json& j, const char* key, int lo, int hi) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw invalid_input(std::string("'") + key + "' must be an integer");
  const auto x = v.get<long long>();
  if (x < lo || x > hi) {
    std::ostringstream msg;
    msg << "'" << key << "' = " << x << " is outside [" << lo << ", " << hi << "]";
    throw invalid_input(msg.str());
  }
  return static_cast<int>(x);
}

double positive_at(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw invalid_input(std::string("'") + key + "' must be a number");
  const double x = v.get<double>();
  if (!(x > 0.0)) throw invalid_input(std::string("'") + key + "' must be positive");
  return x;
}

Vec point_at(const nlohmann::json& j, const char* key, int dim) {
  const auto& v = j.at(key);
  if (!v.is_array() || static_cast<int>(v.size()) != dim)
    throw invalid_input(std::string("'") + key + "' must be an array of " + std::to_string(dim) + " numbers");
  Vec p = Vec::Zero();
  for (int i = 0; i < dim; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) throw invalid_input(std::string("'") + key + "' entries must be numbers");
    p[i] = v[static_cast<std::size_t>(i)].get<double>();
  }
  return p;
}

BalayageConfig parse_balayage(const nlohmann::json& j, int dim) {
  reject_unknown(j, {"nu_density", "atoms", "patches"}, "balayage");
  BalayageConfig b;
  if (j.contains("nu_density")) b.nu_density = positive_at(j, "nu_density");
  if (j.contains("atoms")) {
    if (!j.at("atoms").is_array()) throw invalid_input("'atoms' must be an array");
    for (const auto& a : j.at("atoms")) {
      if (!a.is_object()) throw invalid_input("atom must be an object");
      reject_unknown(a, {"location", "mass"}, "atom");
      if (!a.contains("location") || !a.contains("mass")) throw invalid_input("atom needs 'location' and 'mass'");
      b.atoms.push_back({point_at(a, "location", dim), positive_at(a, "mass")});
    }
  }
  if (j.contains("patches")) {
    if (!j.at("patches").is_array()) throw invalid_input("'patches' must be an array");
    for (const auto& p : j.at("patches")) {
      if (!p.is_object()) throw invalid_input("patch must be an object");
      reject_unknown(p, {"domain", "density"}, "patch");
      if (!p.contains("domain") || !p.contains("density")) throw invalid_input("patch needs 'domain' and 'density'");
      DensityPatch patch{domain_from_json(p.at("domain")), positive_at(p, "density")};
      if (patch.domain.dim() != dim) throw invalid_input("patch dimension differs from the container");
      b.patches.push_back(std::move(patch));
    }
  }
  return b;
}

}  // namespace

void check_resolvable(const DomainSpec& spec, int resolution) {
  if (spec.kind() != DomainKind::annulus) return;
  const double h = spec.extent() / resolution;
  const double gap = spec.outer_radius() - spec.inner_radius();
  if (gap < 4.0 * h) {
    std::ostringstream msg;
    msg << "annulus gap " << gap << " is thinner than 4h = " << 4.0 * h << " at resolution " << resolution;
    throw invalid_input(msg.str());
  }
}

RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw invalid_input("config must be a JSON object");
  reject_unknown(j, {"domain", "resolution", "degree", "boundary_samples", "transport_n", "seed", "output", "tolerances", "balayage"},
                 "config");
  RunConfig c;
  if (j.contains("domain")) c.domain = domain_from_json(j.at("domain"));
  if (j.contains("resolution")) c.resolution = integer_at(j, "resolution", 16, 4096);
  if (j.contains("degree")) c.degree = integer_at(j, "degree", 2, 24);
  if (j.contains("boundary_samples")) c.boundary_samples = integer_at(j, "boundary_samples", 0, 1 << 24);
  if (j.contains("transport_n")) c.transport_n = integer_at(j, "transport_n", 50, 5000);
  if (j.contains("seed")) {
    const auto& seed = j.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0)) throw invalid_input("'seed' must be a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("output")) {
    if (!j.at("output").is_string() || j.at("output").get<std::string>().empty())
      throw invalid_input("'output' must be a nonempty string");
    c.output = j.at("output").get<std::string>();
  }
  if (j.contains("tolerances")) {
    const auto& t = object_at(j, "tolerances");
    reject_unknown(t, {"complementarity", "optimizer", "verification"}, "tolerances");
    if (t.contains("complementarity")) c.tolerances.complementarity = positive_at(t, "complementarity");
    if (t.contains("optimizer")) c.tolerances.optimizer = positive_at(t, "optimizer");
    if (t.contains("verification")) c.tolerances.verification = positive_at(t, "verification");
  }
  if (j.contains("balayage")) {
    if (!c.domain) throw invalid_input("'balayage' needs a 'domain' (the container O)");
    c.balayage = parse_balayage(object_at(j, "balayage"), c.domain->dim());
  }
  if (c.domain) check_resolvable(*c.domain, c.resolution);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw invalid_input("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  if (c.domain) j["domain"] = to_json(*c.domain);
  j["resolution"] = c.resolution;
  j["degree"] = c.degree;
  j["boundary_samples"] = c.boundary_samples;
  j["transport_n"] = c.transport_n;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["tolerances"] = {{"complementarity", c.tolerances.complementarity},
                     {"optimizer", c.tolerances.optimizer},
                     {"verification", c.tolerances.verification}};
  if (!c.domain) return j;
  nlohmann::json b = nlohmann::json::object();
  if (c.balayage.nu_density) b["nu_density"] = *c.balayage.nu_density;
  auto atoms = nlohmann::json::array();
  const int dim = c.domain->dim();
  for (const auto& a : c.balayage.atoms) {
    auto loc = nlohmann::json::array();
    for (int i = 0; i < dim; ++i) loc.push_back(a.location[i]);
    atoms.push_back({{"location", loc}, {"mass", a.mass}});
  }
  b["atoms"] = atoms;
  auto patches = nlohmann::json::array();
  for (const auto& p : c.balayage.patches) patches.push_back({{"domain", to_json(p.domain)}, {"density", p.density}});
  b["patches"] = patches;
  j["balayage"] = b;
  return j;
}

}  // namespace balayage
