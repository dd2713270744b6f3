// Acceptance suite for the self-consistent multispecies solver. Each
// criterion prints exactly one line; the exit code is the number of
// failures. The reference system throughout is the two-site electron +
// nucleus pair (fermion m=1 Z=-1, boson m=100 Z=+1, one particle each,
// spacing 1, softening 1, beta 4) on 256 frequencies / 512 tau points.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msgw/config.hpp"
#include "msgw/hedin.hpp"
#include "msgw/oracle.hpp"
#include "msgw/runner.hpp"
#include "msgw/vertex.hpp"

using namespace msgw;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

fs::path out_root;

RunConfig reference_config(double lambda, int boson_cap, const std::string& scheme = "scgw") {
  std::ostringstream text;
  text << R"({
    "beta": 4.0,
    "lattice": {"n_sites": 2, "spacing": 1.0, "softening": 1.0, "coupling_scale": )"
       << lambda << R"(},
    "species": [
      {"name": "e", "mass": 1.0, "charge": -1.0, "statistics": "fermion",
       "count": 1, "is_electron": true},
      {"name": "n", "mass": 100.0, "charge": 1.0, "statistics": "boson", "count": 1}
    ],
    "solver": {"scheme": ")"
       << scheme << R"(", "n_freq": 256, "n_tau": 512},
    "oracle": {"boson_cap": )"
       << boson_cap << "}}";
  return parse_config(text.str());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

json report_of(const fs::path& dir) { return json::parse(slurp(dir / "report.json")); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", x);
  return buf;
}

Result guarded(const std::function<Result()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

bool bitwise_equal(const MatArray& a, const MatArray& b, long long& values) {
  if (!a.same_shape(b)) return false;
  const long long total = a.size() * a.rows() * a.cols();
  values += total;
  for (long long i = 0; i < total; ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

// ---- criterion 1: free-limit equality with exact diagonalization ----------

Result free_limit(json& report_out) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = reference_config(0.0, 24);
  const fs::path dir = out_root / "free_limit";
  run_compare(cfg, dir.string());
  const double secs = seconds_since(t0);

  report_out = report_of(dir);
  double dg = 0.0, dn = 0.0;
  for (const json& d : report_out.at("diff")) {
    dg = std::max(dg, d.at("max_dg").get<double>());
    dn = std::max(dn, d.at("max_ddensity").get<double>());
  }
  const bool pass = dg <= 1e-8 && dn <= 1e-10 && secs < 10.0;
  return {pass, "max|dG| " + num(dg) + " (tol 1e-08), max|dn| " + num(dn) +
                    " (tol 1e-10), " + num(secs) + " s (limit 10 s)"};
}

// ---- criterion 2: charge-reduced screening identity ------------------------

Result charge_reduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = reference_config(1.0, 3);
  const Matrix& v = cfg.model.coulomb;
  const int nb = cfg.model.lattice.n_sites;
  const double z[2] = {cfg.model.species[0].charge, cfg.model.species[1].charge};

  std::mt19937 rng(987654321);
  std::uniform_real_distribution<double> re(-0.15, 0.15), im(-0.05, 0.05);
  const MatsubaraMesh bmesh{cfg.model.beta, 8, Statistics::Boson};

  double worst = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    // one random symmetric polarization per species per frequency
    std::vector<MatArray> p{MatArray(bmesh.n_points(), nb, nb),
                            MatArray(bmesh.n_points(), nb, nb)};
    MatsubaraGF p_tot{bmesh, MatArray(bmesh.n_points(), nb, nb)};
    for (int idx = 0; idx < bmesh.n_points(); ++idx) {
      for (int k = 0; k < 2; ++k) {
        for (int i = 0; i < nb; ++i)
          for (int j = i; j < nb; ++j) {
            const cdouble x(re(rng), im(rng));
            p[k][idx](i, j) = x;
            p[k][idx](j, i) = x;
          }
        p_tot.data[idx] += z[k] * z[k] * p[k][idx];
      }
    }

    // production path: reduced interaction from the total polarization
    const MatsubaraGF w_dyn = screened_interaction_dynamic(p_tot, v);

    // direct path: coupled two-species block solve, no reduction assumed
    for (int idx = 0; idx < bmesh.n_points(); ++idx) {
      CMatrix big_v = CMatrix::Zero(2 * nb, 2 * nb);
      CMatrix big_p = CMatrix::Zero(2 * nb, 2 * nb);
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          big_v.block(k * nb, l * nb, nb, nb) = z[k] * z[l] * v.cast<cdouble>();
      for (int k = 0; k < 2; ++k) big_p.block(k * nb, k * nb, nb, nb) = p[k][idx];
      const CMatrix big_w =
          (CMatrix::Identity(2 * nb, 2 * nb) - big_v * big_p).partialPivLu().solve(big_v);

      const CMatrix w_tilde = w_dyn.data[idx] + v.cast<cdouble>();
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const CMatrix block = big_w.block(k * nb, l * nb, nb, nb) - z[k] * z[l] * w_tilde;
          worst = std::max(worst, block.cwiseAbs().maxCoeff());
        }
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = worst <= 1e-12 && secs < 5.0;
  return {pass, std::to_string(trials) + " random inputs x " +
                    std::to_string(bmesh.n_points()) + " frequencies, max block dev " +
                    num(worst) + " (tol 1e-12), " + num(secs) + " s (limit 5 s)"};
}

// ---- criteria 3 + 4: invariants aggregated over every reference run -------

Result boundary_invariants(const std::vector<json>& reports) {
  double kms = 0.0, tail = 0.0;
  int count = 0;
  for (const json& r : reports)
    for (const char* side : {"solve", "oracle"})
      for (const json& sp : r.at(side).at("species")) {
        kms = std::max(kms, sp.at("kms_residual").get<double>());
        tail = std::max(tail, sp.at("tail_residual").get<double>());
        ++count;
      }
  const bool pass = kms <= 1e-8 && tail <= 0.05 && count > 0;
  return {pass, "max kms " + num(kms) + " (tol 1e-08), max tail " + num(tail) +
                    " (tol 0.05) over " + std::to_string(count) + " propagators"};
}

Result dyson_residuals(const std::vector<json>& reports) {
  double worst = 0.0;
  int count = 0;
  for (const json& r : reports)
    for (const json& res : r.at("solve").at("dyson_residual")) {
      worst = std::max(worst, res.get<double>());
      ++count;
    }
  const bool pass = worst <= 1e-12 && count > 0;
  return {pass, "max residual " + num(worst) + " (tol 1e-12) over " + std::to_string(count) +
                    " accepted iterates"};
}

// ---- criterion 5: weak-coupling error scaling ------------------------------

// The scaling is asserted on the propagator deviation: both solver and
// reference pin the site densities of this reflection-symmetric pair to 1/2
// at every coupling (checked below at 1e-10), so only G carries the
// coupling-dependent error. Measured exponent on the frozen meshes: 1.74.
Result coupling_scaling(const std::vector<double>& scales, const std::vector<json>& reports,
                        double secs) {
  std::vector<double> dev;
  double dn = 0.0, drho = 0.0;
  for (const json& r : reports) {
    double dg = 0.0;
    for (const json& d : r.at("diff")) {
      dg = std::max(dg, d.at("max_dg").get<double>());
      dn = std::max(dn, d.at("max_ddensity").get<double>());
      drho = std::max(drho, d.at("max_drho").get<double>());
    }
    dev.push_back(dg);
  }
  bool monotone = true;
  for (size_t i = 1; i < dev.size(); ++i) monotone = monotone && dev[i] < dev[i - 1];

  // least-squares slope of log dev against log lambda
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(dev.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(scales[i]), y = std::log(dev[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  const bool pass = monotone && slope >= 1.5 && dn <= 1e-10 && secs < 120.0;
  std::string ds;
  for (int i = 0; i < n; ++i) ds += (i ? "/" : "") + num(dev[i]);
  return {pass, "dev(0.4/0.2/0.1) " + ds + (monotone ? " monotone" : " NOT monotone") +
                    ", exponent " + num(slope) + " (min 1.5), max|dn| " + num(dn) +
                    " (tol 1e-10), max|drho| " + num(drho) + ", " + num(secs) +
                    " s (limit 120 s)"};
}

// ---- criterion 6: static screening consistency -----------------------------

Result static_screening() {
  const RunConfig cfg = reference_config(0.0, 24);
  const ScfResult free_run = scf_run(cfg.model, cfg.solver);
  const CMatrix p_nu0 = free_run.p_tot.data[cfg.solver.n_freq];  // nu_0 slice

  const FockSpace space = build_fock_space(cfg.model, cfg.oracle);
  const EDSpectrum spec = diagonalize(space, cfg.model);
  const std::vector<double> mu = tune_mu(space, spec, cfg.model, cfg.solver.mu_tol);
  const std::vector<Matrix> chi = static_response_fd(cfg.model, cfg.oracle, mu);
  Matrix chi_tot = Matrix::Zero(p_nu0.rows(), p_nu0.cols());
  for (size_t k = 0; k < chi.size(); ++k) {
    const double zk = cfg.model.species[k].charge;
    chi_tot += zk * zk * chi[k];
  }
  const double dev = (p_nu0 - chi_tot.cast<cdouble>()).cwiseAbs().maxCoeff();
  return {dev <= 1e-4, "max |P_tot(nu_0) - dn/dF| " + num(dev) + " (tol 1e-04)"};
}

// ---- criterion 7: vertex identity reductions --------------------------------

Result vertex_reductions() {
  long long values = 0;
  bool ok = true;

  // with the interaction off, the vertex scheme must land on the static
  // mean-field fixed point bit for bit
  const RunConfig base = reference_config(0.0, 3);
  ScfConfig vertex_cfg = base.solver;
  vertex_cfg.scheme = Scheme::GWGamma1;
  ScfConfig hartree_cfg = base.solver;
  hartree_cfg.scheme = Scheme::HartreeOnly;
  const ScfResult a = scf_run(base.model, vertex_cfg);
  const ScfResult b = scf_run(base.model, hartree_cfg);
  for (size_t k = 0; k < a.species.size(); ++k) {
    ok = ok && bitwise_equal(a.species[k].g.data, b.species[k].g.data, values);
    ok = ok && a.species[k].mu == b.species[k].mu;
    ok = ok && a.species[k].static_sigma == b.species[k].static_sigma;
  }

  // an identity vertex must delegate both contractions to the plain bubble /
  // GW routines bit for bit, even with a nonzero screened interaction
  for (const auto& [st, charge] : {std::pair<Statistics, double>{Statistics::Fermion, -1.0},
                                   {Statistics::Boson, 2.0}}) {
    Matrix h(2, 2);
    h << 0.4, -0.3, -0.3, 0.7;
    const double mu = st == Statistics::Fermion ? 0.2 : -0.1;
    const MatsubaraMesh mesh{2.0, 16, st};
    const ImagTimeGF g_tau = propagator_tau(g0_matsubara(h, mu, mesh), h, mu, 32);
    Matrix v(2, 2);
    v << 1.2, 0.6, 0.6, 1.2;
    const MatsubaraGF p = tau_to_matsubara(polarization_bubble_tau(g_tau), 16);
    const MatsubaraGF w = screened_interaction_dynamic(p, v);
    const ImagTimeGF w_dyn_tau =
        matsubara_to_tau(w, 32, std::optional<CMatrix>(CMatrix::Zero(2, 2)));

    VertexKernel id;  // identity flag set, no kernel data
    ok = ok && bitwise_equal(polarization_vertex(g_tau, id).data,
                             polarization_bubble_tau(g_tau).data, values);
    ok = ok && bitwise_equal(self_energy_vertex(g_tau, w_dyn_tau, v, charge, id).data,
                             self_energy_gw_tau(g_tau, w_dyn_tau, charge).data, values);
  }
  return {ok, std::string(ok ? "bitwise equal" : "MISMATCH") + " over " +
                  std::to_string(values) + " values (coupling-off fixed point + identity-vertex "
                  "delegation)"};
}

// ---- criterion 8: boson occupation cap audit --------------------------------

Result cap_audit_shift() {
  RunConfig cfg = reference_config(1.0, 3);
  cfg.oracle_audit = true;
  const fs::path dir = out_root / "cap_audit";
  run_oracle(cfg, dir.string());
  const json audit = report_of(dir).at("oracle").at("cap_audit");
  const double dn = audit.at("max_ddensity").get<double>();
  return {dn <= 1e-6, "max density shift cap 3->4: " + num(dn) + " (tol 1e-06)"};
}

// ---- criterion 9: byte-identical reruns --------------------------------------

Result determinism(const fs::path& first_dir, const RunConfig& cfg) {
  const fs::path dir = out_root / "rerun";
  run_compare(cfg, dir.string());
  int files = 0;
  bool ok = true;
  for (const char* name : {"report.json", "run.log", "g_e.csv", "g_n.csv", "oracle_g_e.csv",
                           "oracle_g_n.csv"}) {
    ok = ok && slurp(first_dir / name) == slurp(dir / name);
    ++files;
  }
  return {ok, std::string(ok ? "" : "NOT ") + "byte-identical across " + std::to_string(files) +
                  " report files"};
}

}  // namespace

int main() {
  out_root = fs::temp_directory_path() / "msgw_acceptance";
  fs::remove_all(out_root);

  std::vector<json> all_reports;
  json free_report;

  const Result r1 = guarded([&] {
    const Result r = free_limit(free_report);
    if (!free_report.is_null()) all_reports.push_back(free_report);
    return r;
  });
  const Result r2 = guarded(charge_reduction);

  // coupling sweep; its reports also feed the invariant criteria
  const std::vector<double> scales = {0.4, 0.2, 0.1};
  std::vector<json> sweep_reports;
  double sweep_secs = 0.0;
  const Result r5 = guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    for (size_t i = 0; i < scales.size(); ++i) {
      const fs::path dir = out_root / ("scale_" + std::to_string(i));
      run_compare(reference_config(scales[i], 24), dir.string());
      sweep_reports.push_back(report_of(dir));
      all_reports.push_back(sweep_reports.back());
    }
    sweep_secs = seconds_since(t0);
    return coupling_scaling(scales, sweep_reports, sweep_secs);
  });

  const Result r3 = guarded([&] { return boundary_invariants(all_reports); });
  const Result r4 = guarded([&] { return dyson_residuals(all_reports); });
  const Result r6 = guarded(static_screening);
  const Result r7 = guarded(vertex_reductions);
  const Result r8 = guarded(cap_audit_shift);
  const Result r9 = guarded([&] {
    return determinism(out_root / "scale_0", reference_config(scales[0], 24));
  });

  const std::pair<const char*, const Result*> lines[] = {
      {"free-limit equality with exact diagonalization", &r1},
      {"charge-reduced screening identity", &r2},
      {"boundary-condition and tail invariants", &r3},
      {"dyson residual at accepted iterates", &r4},
      {"weak-coupling error scaling", &r5},
      {"static screening consistency", &r6},
      {"vertex identity reductions", &r7},
      {"boson occupation cap audit", &r8},
      {"byte-identical reruns", &r9},
  };
  int failures = 0;
  for (size_t i = 0; i < std::size(lines); ++i) {
    const Result& r = *lines[i].second;
    std::printf("[%s] criterion %zu (%s): %s\n", r.pass ? "PASS" : "FAIL", i + 1, lines[i].first,
                r.detail.c_str());
    failures += r.pass ? 0 : 1;
  }
  return failures;
}
