#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "msgw/config.hpp"

using namespace msgw;

namespace {

const char* kMinimal = R"({
  "beta": 4.0,
  "lattice": {"n_sites": 3},
  "species": [{"name": "e", "charge": -1.0, "statistics": "fermion", "count": 1}]
})";

const char* kFull = R"({
  "beta": 2.5,
  "lattice": {"n_sites": 2, "positions": [0.0, 0.7], "boundary": "periodic",
              "softening": 0.25, "coupling_scale": 0.5},
  "species": [
    {"name": "e", "mass": 1.0, "charge": -1.0, "statistics": "fermion",
     "count": 1, "is_electron": true},
    {"name": "n", "mass": 100.0, "charge": 1.0, "statistics": "boson", "count": 1}
  ],
  "fields": {"phi": [0.1, -0.1], "f": {"n": [0.2, 0.3]}},
  "solver": {"scheme": "gw0", "n_freq": 64, "n_tau": 128, "max_iter": 50,
             "tol": 1e-8, "mixing": 0.7, "mu_tol": 1e-10},
  "oracle": {"boson_cap": 5, "dim_cap": 5000, "audit_boson_cap": true},
  "sweep": {"coupling_scales": [0.4, 0.2, 0.1]}
})";

// Replaces the first occurrence of `from` so each error case is a one-token
// mutation of a known-good config.
std::string mutate(const std::string& base, const std::string& from, const std::string& to) {
  std::string s = base;
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  s.replace(pos, from.size(), to);
  return s;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config fills documented defaults") {
  const RunConfig c = parse_config(kMinimal);

  CHECK(c.model.beta == 4.0);
  REQUIRE(c.model.lattice.n_sites == 3);
  CHECK(c.model.lattice.positions == std::vector<double>{0.0, 1.0, 2.0});
  CHECK(c.model.lattice.boundary == Boundary::Open);
  CHECK(c.model.lattice.softening == 1.0);
  CHECK(c.model.lattice.coupling_scale == 1.0);

  REQUIRE(c.model.species.size() == 1);
  const SpeciesSpec& sp = c.model.species[0];
  CHECK(sp.name == "e");
  CHECK(sp.mass == 1.0);
  CHECK(sp.charge == -1.0);
  CHECK(sp.statistics == Statistics::Fermion);
  CHECK(sp.particle_count == 1.0);
  CHECK(!sp.is_electron);

  REQUIRE(c.model.fields.phi.size() == 3);
  CHECK(c.model.fields.phi.norm() == 0.0);
  REQUIRE(c.model.fields.f.size() == 1);
  CHECK(c.model.fields.f[0].size() == 3);
  CHECK(c.model.fields.f[0].norm() == 0.0);
  CHECK(c.model.coulomb.rows() == 3);

  CHECK(c.solver.scheme == Scheme::SCGW);
  CHECK(c.solver.n_freq == 128);
  CHECK(c.solver.n_tau == 256);
  CHECK(c.solver.max_iter == 200);
  CHECK(c.solver.tol == 1e-10);
  CHECK(c.solver.mixing == 1.0);
  CHECK(c.solver.mu_tol == 1e-12);

  CHECK(c.oracle.boson_cap == 8);
  CHECK(c.oracle.dim_cap == 20000);
  CHECK(!c.oracle_audit);
  CHECK(c.sweep_scales.empty());
}

TEST_CASE("full config parses every section") {
  const RunConfig c = parse_config(kFull);

  CHECK(c.model.beta == 2.5);
  CHECK(c.model.lattice.positions == std::vector<double>{0.0, 0.7});
  CHECK(c.model.lattice.boundary == Boundary::Periodic);
  CHECK(c.model.lattice.softening == 0.25);
  CHECK(c.model.lattice.coupling_scale == 0.5);

  REQUIRE(c.model.species.size() == 2);
  CHECK(c.model.species[0].is_electron);
  CHECK(c.model.species[1].mass == 100.0);
  CHECK(c.model.species[1].statistics == Statistics::Boson);

  REQUIRE(c.model.fields.phi.size() == 2);
  CHECK(c.model.fields.phi(1) == -0.1);
  // f is keyed by species name; entries land on the matching species slot and
  // unlisted species get zeros.
  REQUIRE(c.model.fields.f.size() == 2);
  CHECK(c.model.fields.f[0].norm() == 0.0);
  CHECK(c.model.fields.f[1](0) == 0.2);
  CHECK(c.model.fields.f[1](1) == 0.3);

  CHECK(c.solver.scheme == Scheme::GW0);
  CHECK(c.solver.n_freq == 64);
  CHECK(c.solver.n_tau == 128);
  CHECK(c.solver.max_iter == 50);
  CHECK(c.solver.tol == 1e-8);
  CHECK(c.solver.mixing == 0.7);
  CHECK(c.solver.mu_tol == 1e-10);

  CHECK(c.oracle.boson_cap == 5);
  CHECK(c.oracle.dim_cap == 5000);
  CHECK(c.oracle_audit);
  CHECK(c.sweep_scales == std::vector<double>{0.4, 0.2, 0.1});
}

TEST_CASE("scheme names cover all four flavors") {
  for (const auto& [name, scheme] : {std::pair<const char*, Scheme>{"hartree_only", Scheme::HartreeOnly},
                                     {"gw0", Scheme::GW0},
                                     {"scgw", Scheme::SCGW},
                                     {"gw_gamma1", Scheme::GWGamma1}}) {
    const std::string text =
        mutate(kFull, "\"scheme\": \"gw0\"", std::string("\"scheme\": \"") + name + "\"");
    CHECK(parse_config(text).solver.scheme == scheme);
  }
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"gw0\"", "\"g0w0\"")), ConfigError);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK(error_of(mutate(kFull, "\"beta\"", "\"betta\"")).find("unknown key 'betta'") == 0);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"softening\"", "\"softning\"")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"mass\": 1.0", "\"spin\": 0.5")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"phi\"", "\"psi\"")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"mixing\"", "\"damping\"")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"dim_cap\"", "\"dim_max\"")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"coupling_scales\"", "\"lambdas\"")), ConfigError);
}

TEST_CASE("missing or malformed required keys throw") {
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"beta\": 4.0,", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"beta\": 4.0", "\"beta\": \"4\"")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"lattice\": {\"n_sites\": 3},", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"n_sites\": 3", "\"n_sites\": 3.5")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"n_sites\": 3", "\"n_sites\": 0")), ConfigError);
  // species section: required array, required per-species keys
  CHECK_THROWS_AS(
      parse_config(mutate(kMinimal,
                          "[{\"name\": \"e\", \"charge\": -1.0, \"statistics\": \"fermion\", \"count\": 1}]",
                          "[]")),
      ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"name\": \"e\", ", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"charge\": -1.0, ", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"statistics\": \"fermion\", ", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, ", \"count\": 1", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"fermion\"", "\"anyon\"")), ConfigError);
}

TEST_CASE("value errors surface as ConfigError") {
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"boundary\": \"periodic\"", "\"boundary\": \"twisted\"")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"n_freq\": 64", "\"n_freq\": 64.5")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"audit_boson_cap\": true", "\"audit_boson_cap\": 1")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "[0.4, 0.2, 0.1]", "\"0.4 0.2 0.1\"")), ConfigError);
  // spacing and positions are mutually exclusive
  CHECK(error_of(mutate(kFull, "\"positions\": [0.0, 0.7]", "\"positions\": [0.0, 0.7], \"spacing\": 0.7"))
            .find("not both") != std::string::npos);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "{\"n_sites\": 3}", "{\"n_sites\": 3, \"spacing\": 0.0}")),
                  ConfigError);
  // model-level validation runs inside parse_config
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"beta\": 4.0", "\"beta\": -1.0")), ConfigError);
  CHECK_THROWS_AS(parse_config(mutate(kMinimal, "\"charge\": -1.0", "\"charge\": 0.0")), ConfigError);
  const char* dup = "{\"name\": \"e\", \"charge\": -1.0, \"statistics\": \"fermion\", \"count\": 1}";
  CHECK(error_of(mutate(kMinimal, dup, std::string(dup) + ", " + dup))
            .find("duplicate species") != std::string::npos);
  // field shape checks
  CHECK_THROWS_AS(parse_config(mutate(kFull, "\"phi\": [0.1, -0.1]", "\"phi\": [0.1]")), ConfigError);
  CHECK(error_of(mutate(kFull, "\"f\": {\"n\":", "\"f\": {\"mu\":")).find("unknown species") !=
        std::string::npos);
  CHECK_THROWS_AS(parse_config(mutate(kFull, "[0.0, 0.7]", "[0.7, 0.0]")), ConfigError);
}

TEST_CASE("invalid JSON and top-level shape are reported") {
  CHECK(error_of("{\"beta\": 4.0,}").find("not valid JSON") != std::string::npos);
  CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_config(""), ConfigError);
}

TEST_CASE("render and parse form an idempotent pair") {
  for (const char* base : {kMinimal, kFull}) {
    const std::string once = render_config(parse_config(base));
    const std::string twice = render_config(parse_config(once));
    CHECK(once == twice);
    // the canonical form stores explicit positions, never spacing
    CHECK(once.find("\"spacing\"") == std::string::npos);
    CHECK(once.find("\"positions\"") != std::string::npos);
  }
}

TEST_CASE("config files load from disk") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "msgw_test_config.json";
  {
    std::ofstream out(path);
    out << kFull;
  }
  const RunConfig c = load_config_file(path.string());
  CHECK(render_config(c) == render_config(parse_config(kFull)));
  std::remove(path.string().c_str());

  CHECK_THROWS_AS(load_config_file((fs::temp_directory_path() / "msgw_no_such_file.json").string()),
                  ConfigError);
}
