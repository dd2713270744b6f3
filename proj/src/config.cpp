#include "msgw/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace msgw {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key()))
      throw ConfigError("unknown key '" + item.key() + "' in " + ctx);
  }
}

double get_number(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + ctx);
  if (!j[key].is_number()) throw ConfigError("'" + std::string(key) + "' in " + ctx + " must be a number");
  return j[key].get<double>();
}

double get_number_or(const json& j, const char* key, double fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError("'" + std::string(key) + "' in " + ctx + " must be a number");
  return j[key].get<double>();
}

long long get_integer_or(const json& j, const char* key, long long fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ConfigError("'" + std::string(key) + "' in " + ctx + " must be an integer");
  return j[key].get<long long>();
}

Vector get_vector(const json& j, int n, const std::string& ctx) {
  if (!j.is_array()) throw ConfigError(ctx + " must be an array");
  if (static_cast<int>(j.size()) != n)
    throw ConfigError(ctx + " must have " + std::to_string(n) + " entries");
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw ConfigError(ctx + " entries must be numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

LatticeSpec parse_lattice(const json& j) {
  check_keys(j, {"n_sites", "spacing", "positions", "boundary", "softening", "coupling_scale"},
             "lattice");
  LatticeSpec lat;
  if (!j.contains("n_sites") || !j["n_sites"].is_number_integer())
    throw ConfigError("lattice.n_sites must be an integer");
  lat.n_sites = j["n_sites"].get<int>();
  if (lat.n_sites < 1) throw ConfigError("lattice.n_sites must be positive");
  if (j.contains("positions") && j.contains("spacing"))
    throw ConfigError("lattice takes either 'spacing' or 'positions', not both");
  if (j.contains("positions")) {
    const Vector pos = get_vector(j["positions"], lat.n_sites, "lattice.positions");
    lat.positions.assign(pos.data(), pos.data() + pos.size());
  } else {
    const double h = get_number_or(j, "spacing", 1.0, "lattice");
    if (!(h > 0.0)) throw ConfigError("lattice.spacing must be positive");
    lat.positions.resize(lat.n_sites);
    for (int i = 0; i < lat.n_sites; ++i) lat.positions[i] = h * i;
  }
  if (j.contains("boundary")) {
    const std::string b = j["boundary"].get<std::string>();
    if (b == "open") lat.boundary = Boundary::Open;
    else if (b == "periodic") lat.boundary = Boundary::Periodic;
    else throw ConfigError("lattice.boundary must be 'open' or 'periodic'");
  }
  lat.softening = get_number_or(j, "softening", 1.0, "lattice");
  lat.coupling_scale = get_number_or(j, "coupling_scale", 1.0, "lattice");
  return lat;
}

SpeciesSpec parse_species(const json& j, size_t index) {
  const std::string ctx = "species[" + std::to_string(index) + "]";
  check_keys(j, {"name", "mass", "charge", "statistics", "count", "is_electron"}, ctx);
  SpeciesSpec sp;
  if (!j.contains("name") || !j["name"].is_string())
    throw ConfigError(ctx + " needs a string 'name'");
  sp.name = j["name"].get<std::string>();
  sp.mass = get_number_or(j, "mass", 1.0, ctx);
  sp.charge = get_number(j, "charge", ctx);
  if (!j.contains("statistics") || !j["statistics"].is_string())
    throw ConfigError(ctx + " needs 'statistics' of 'fermion' or 'boson'");
  const std::string st = j["statistics"].get<std::string>();
  if (st == "fermion") sp.statistics = Statistics::Fermion;
  else if (st == "boson") sp.statistics = Statistics::Boson;
  else throw ConfigError(ctx + ".statistics must be 'fermion' or 'boson'");
  sp.particle_count = get_number(j, "count", ctx);
  sp.is_electron = j.value("is_electron", false);
  return sp;
}

ScfConfig parse_solver(const json& j) {
  check_keys(j, {"scheme", "n_freq", "n_tau", "max_iter", "tol", "mixing", "mu_tol"}, "solver");
  ScfConfig cfg;
  if (j.contains("scheme")) cfg.scheme = scheme_from_string(j["scheme"].get<std::string>());
  cfg.n_freq = static_cast<int>(get_integer_or(j, "n_freq", cfg.n_freq, "solver"));
  cfg.n_tau = static_cast<int>(get_integer_or(j, "n_tau", cfg.n_tau, "solver"));
  cfg.max_iter = static_cast<int>(get_integer_or(j, "max_iter", cfg.max_iter, "solver"));
  cfg.tol = get_number_or(j, "tol", cfg.tol, "solver");
  cfg.mixing = get_number_or(j, "mixing", cfg.mixing, "solver");
  cfg.mu_tol = get_number_or(j, "mu_tol", cfg.mu_tol, "solver");
  return cfg;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"beta", "lattice", "species", "fields", "solver", "oracle", "sweep"}, "config");

  RunConfig cfg;
  const double beta = get_number(j, "beta", "config");
  if (!j.contains("lattice")) throw ConfigError("config needs a 'lattice' section");
  const LatticeSpec lattice = parse_lattice(j["lattice"]);

  if (!j.contains("species") || !j["species"].is_array() || j["species"].empty())
    throw ConfigError("config needs a non-empty 'species' array");
  std::vector<SpeciesSpec> species;
  for (size_t k = 0; k < j["species"].size(); ++k)
    species.push_back(parse_species(j["species"][k], k));

  ExternalFields fields;
  if (j.contains("fields")) {
    const json& jf = j["fields"];
    check_keys(jf, {"phi", "f"}, "fields");
    if (jf.contains("phi")) fields.phi = get_vector(jf["phi"], lattice.n_sites, "fields.phi");
    if (jf.contains("f")) {
      if (!jf["f"].is_object()) throw ConfigError("fields.f must map species names to arrays");
      fields.f.assign(species.size(), Vector::Zero(lattice.n_sites));
      for (const auto& item : jf["f"].items()) {
        int k = -1;
        for (size_t s = 0; s < species.size(); ++s)
          if (species[s].name == item.key()) k = static_cast<int>(s);
        if (k < 0) throw ConfigError("fields.f names unknown species '" + item.key() + "'");
        fields.f[k] = get_vector(item.value(), lattice.n_sites, "fields.f." + item.key());
      }
    }
  }

  cfg.model = make_model(std::move(species), lattice, beta, std::move(fields));
  if (j.contains("solver")) cfg.solver = parse_solver(j["solver"]);
  if (j.contains("oracle")) {
    const json& jo = j["oracle"];
    check_keys(jo, {"boson_cap", "dim_cap", "audit_boson_cap"}, "oracle");
    cfg.oracle.boson_cap = static_cast<int>(get_integer_or(jo, "boson_cap", cfg.oracle.boson_cap, "oracle"));
    cfg.oracle.dim_cap = get_integer_or(jo, "dim_cap", cfg.oracle.dim_cap, "oracle");
    if (jo.contains("audit_boson_cap")) {
      if (!jo["audit_boson_cap"].is_boolean()) throw ConfigError("oracle.audit_boson_cap must be a boolean");
      cfg.oracle_audit = jo["audit_boson_cap"].get<bool>();
    }
  }
  if (j.contains("sweep")) {
    const json& js = j["sweep"];
    check_keys(js, {"coupling_scales"}, "sweep");
    if (!js.contains("coupling_scales") || !js["coupling_scales"].is_array())
      throw ConfigError("sweep.coupling_scales must be an array of numbers");
    for (const auto& x : js["coupling_scales"]) {
      if (!x.is_number()) throw ConfigError("sweep.coupling_scales must be an array of numbers");
      cfg.sweep_scales.push_back(x.get<double>());
    }
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string render_config(const RunConfig& c) {
  json j;
  j["beta"] = c.model.beta;
  json lat;
  lat["n_sites"] = c.model.lattice.n_sites;
  lat["positions"] = c.model.lattice.positions;
  lat["boundary"] = c.model.lattice.boundary == Boundary::Open ? "open" : "periodic";
  lat["softening"] = c.model.lattice.softening;
  lat["coupling_scale"] = c.model.lattice.coupling_scale;
  j["lattice"] = lat;
  j["species"] = json::array();
  for (const SpeciesSpec& sp : c.model.species) {
    json s;
    s["name"] = sp.name;
    s["mass"] = sp.mass;
    s["charge"] = sp.charge;
    s["statistics"] = sp.statistics == Statistics::Fermion ? "fermion" : "boson";
    s["count"] = sp.particle_count;
    s["is_electron"] = sp.is_electron;
    j["species"].push_back(s);
  }
  json fields;
  fields["phi"] = std::vector<double>(c.model.fields.phi.data(),
                                      c.model.fields.phi.data() + c.model.fields.phi.size());
  json f = json::object();
  for (size_t k = 0; k < c.model.species.size(); ++k) {
    const Vector& fk = c.model.fields.f[k];
    f[c.model.species[k].name] = std::vector<double>(fk.data(), fk.data() + fk.size());
  }
  fields["f"] = f;
  j["fields"] = fields;
  json solver;
  solver["scheme"] = to_string(c.solver.scheme);
  solver["n_freq"] = c.solver.n_freq;
  solver["n_tau"] = c.solver.n_tau;
  solver["max_iter"] = c.solver.max_iter;
  solver["tol"] = c.solver.tol;
  solver["mixing"] = c.solver.mixing;
  solver["mu_tol"] = c.solver.mu_tol;
  j["solver"] = solver;
  json oracle;
  oracle["boson_cap"] = c.oracle.boson_cap;
  oracle["dim_cap"] = c.oracle.dim_cap;
  oracle["audit_boson_cap"] = c.oracle_audit;
  j["oracle"] = oracle;
  if (!c.sweep_scales.empty()) j["sweep"]["coupling_scales"] = c.sweep_scales;
  return j.dump(2) + "\n";
}

}  // namespace msgw
