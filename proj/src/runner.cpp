#include "msgw/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "msgw/hedin.hpp"
#include "msgw/oracle.hpp"

namespace msgw {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// One row per frequency index: idx, omega, then re/im per matrix entry.
std::string gf_csv(const MatsubaraGF& g) {
  const int nb = static_cast<int>(g.data.rows());
  std::ostringstream out;
  out << "idx,freq";
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) out << ",re_" << i << "_" << j << ",im_" << i << "_" << j;
  out << "\n";
  for (int idx = 0; idx < g.mesh.n_points(); ++idx) {
    out << idx - g.mesh.n_freq << "," << fmt17(g.mesh.freq(idx));
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) {
        const cdouble z = g.data.at(idx, i, j);
        out << "," << fmt17(z.real()) << "," << fmt17(z.imag());
      }
    out << "\n";
  }
  return out.str();
}

json to_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

double max_abs_diff(const MatsubaraGF& a, const MatsubaraGF& b) {
  if (!(a.mesh == b.mesh) || !a.data.same_shape(b.data))
    throw ConfigError("propagator comparison on mismatched meshes");
  double m = 0.0;
  const long long total = a.data.size() * a.data.rows() * a.data.cols();
  for (long long i = 0; i < total; ++i)
    m = std::max(m, std::abs(a.data.data()[i] - b.data.data()[i]));
  return m;
}

fs::path prepare_dir(const std::string& out_dir) {
  fs::path dir(out_dir);
  fs::create_directories(dir);
  return dir;
}

// Residual diagnostics of one converged species solution. The KMS check
// rebuilds G(tau) against the static-field reference Hamiltonian.
json species_report(const ModelSystem& model, int k, const SpeciesSolution& sol, int n_tau) {
  const Matrix h_eff = build_onebody(model, k) + sol.static_sigma;
  const Matrix h_ref =
      reference_hamiltonian(h_eff, sol.sigma_dyn, model.species[k].statistics);
  const ImagTimeGF g_tau = propagator_tau(sol.g, h_ref, sol.mu, n_tau);
  json s;
  s["name"] = model.species[k].name;
  s["mu"] = sol.mu;
  s["n_total"] = sol.density.sum();
  s["density"] = to_json(sol.density);
  s["rho"] = to_json(sol.rho);
  s["static_sigma"] = to_json(sol.static_sigma);
  s["kms_residual"] = kms_residual(g_tau, 1.0);
  s["tail_residual"] = tail_residual(sol.g);
  s["reality_residual"] = reality_residual(sol.g);
  return s;
}

json scf_report(const ModelSystem& model, const ScfConfig& scf, const ScfResult& res) {
  json r;
  r["scheme"] = to_string(scf.scheme);
  r["converged"] = res.converged;
  r["iterations"] = res.iterations;
  r["g_change"] = res.g_change;
  r["density_change"] = res.density_change;
  r["dyson_residual"] = res.dyson_residual;
  r["species"] = json::array();
  for (size_t k = 0; k < res.species.size(); ++k)
    r["species"].push_back(species_report(model, static_cast<int>(k), res.species[k], scf.n_tau));
  return r;
}

struct OracleRun {
  std::vector<double> mu;
  Observables obs;
  std::vector<LehmannGF> g;
  long long dim = 0;
};

OracleRun oracle_solve(const RunConfig& cfg, const OracleOptions& opts) {
  OracleRun run;
  const FockSpace space = build_fock_space(cfg.model, opts);
  const EDSpectrum spec = diagonalize(space, cfg.model);
  run.dim = space.dim;
  run.mu = tune_mu(space, spec, cfg.model, cfg.solver.mu_tol);
  run.obs = exact_observables(space, spec, cfg.model, run.mu);
  for (size_t k = 0; k < cfg.model.species.size(); ++k) {
    const MatsubaraMesh mesh{cfg.model.beta, cfg.solver.n_freq,
                             cfg.model.species[k].statistics};
    run.g.push_back(lehmann_green(space, spec, cfg.model, static_cast<int>(k), run.mu, mesh));
  }
  return run;
}

json oracle_report(const RunConfig& cfg, const OracleRun& run) {
  json r;
  r["fock_dimension"] = run.dim;
  r["energy"] = run.obs.energy;
  r["log_z"] = run.obs.log_z;
  r["species"] = json::array();
  for (size_t k = 0; k < cfg.model.species.size(); ++k) {
    const SpeciesSpec& sp = cfg.model.species[k];
    const double zeta_k = zeta(sp.statistics);
    const int nb = cfg.model.lattice.n_sites;
    const CMatrix kms = run.g[k].tau0 - zeta_k * run.g[k].taubeta + CMatrix::Identity(nb, nb);
    json s;
    s["name"] = sp.name;
    s["mu"] = run.mu[k];
    s["n_total"] = run.obs.n_total[k];
    s["density"] = to_json(run.obs.density[k]);
    s["rho"] = to_json(run.obs.rho[k]);
    s["kms_residual"] = kms.cwiseAbs().maxCoeff();
    s["tail_residual"] = tail_residual(run.g[k].g);
    s["reality_residual"] = reality_residual(run.g[k].g);
    r["species"].push_back(s);
  }
  return r;
}

// Convergence audit of the bosonic occupation cap: redo everything with
// cap+1 and report how much the observables move.
json cap_audit(const RunConfig& cfg) {
  OracleOptions bigger = cfg.oracle;
  bigger.boson_cap += 1;
  const OracleRun base = oracle_solve(cfg, cfg.oracle);
  const OracleRun next = oracle_solve(cfg, bigger);
  double dg = 0.0, dn = 0.0, dmu = 0.0;
  for (size_t k = 0; k < base.g.size(); ++k) {
    dg = std::max(dg, max_abs_diff(base.g[k].g, next.g[k].g));
    dn = std::max(dn, (base.obs.density[k] - next.obs.density[k]).cwiseAbs().maxCoeff());
    dmu = std::max(dmu, std::abs(base.mu[k] - next.mu[k]));
  }
  json a;
  a["boson_cap"] = cfg.oracle.boson_cap;
  a["boson_cap_next"] = bigger.boson_cap;
  a["max_dg"] = dg;
  a["max_ddensity"] = dn;
  a["max_dmu"] = dmu;
  return a;
}

std::string digest(const json& report) {
  std::ostringstream out;
  out << "command: " << report["command"].get<std::string>() << "\n";
  if (report.contains("solve")) {
    const json& s = report["solve"];
    out << "scheme " << s["scheme"].get<std::string>() << ", converged "
        << (s["converged"].get<bool>() ? "yes" : "no") << " in "
        << s["iterations"].get<int>() << " passes\n";
    for (const json& sp : s["species"])
      out << "  " << sp["name"].get<std::string>() << ": mu " << fmt17(sp["mu"].get<double>())
          << ", N " << fmt17(sp["n_total"].get<double>()) << "\n";
  }
  if (report.contains("oracle")) {
    const json& o = report["oracle"];
    out << "oracle dim " << o["fock_dimension"].get<long long>() << ", ln Z "
        << fmt17(o["log_z"].get<double>()) << "\n";
    for (const json& sp : o["species"])
      out << "  " << sp["name"].get<std::string>() << ": mu " << fmt17(sp["mu"].get<double>())
          << ", N " << fmt17(sp["n_total"].get<double>()) << "\n";
  }
  if (report.contains("diff")) {
    for (const json& d : report["diff"])
      out << "  diff " << d["name"].get<std::string>() << ": max|dG| "
          << fmt17(d["max_dg"].get<double>()) << ", max|dn| "
          << fmt17(d["max_ddensity"].get<double>()) << ", |dmu| "
          << fmt17(d["dmu"].get<double>()) << "\n";
  }
  if (report.contains("points")) {
    for (const json& p : report["points"]) {
      out << "  scale " << fmt17(p["scale"].get<double>()) << ":";
      for (const json& sp : p["species"])
        out << " " << sp["name"].get<std::string>() << " dcorr "
            << fmt17(sp["dynamic_correlation"].get<double>());
      out << "\n";
    }
  }
  return out.str();
}

// Every report embeds the canonical form of its input configuration.
void finish(const fs::path& dir, json& report, const RunConfig& cfg) {
  report["config"] = json::parse(render_config(cfg));
  write_text(dir / "report.json", report.dump(2) + "\n");
  write_text(dir / "run.log", digest(report));
}

}  // namespace

void run_solve(const RunConfig& cfg, const std::string& out_dir) {
  const fs::path dir = prepare_dir(out_dir);
  const ScfResult res = scf_run(cfg.model, cfg.solver);
  json report;
  report["command"] = "solve";
  report["solve"] = scf_report(cfg.model, cfg.solver, res);
  for (size_t k = 0; k < res.species.size(); ++k) {
    const std::string& name = cfg.model.species[k].name;
    write_text(dir / ("g_" + name + ".csv"), gf_csv(res.species[k].g));
    write_text(dir / ("sigma_dyn_" + name + ".csv"), gf_csv(res.species[k].sigma_dyn));
  }
  write_text(dir / "p_tot.csv", gf_csv(res.p_tot));
  write_text(dir / "w_tilde_dyn.csv", gf_csv(res.w_tilde_dyn));
  finish(dir, report, cfg);
}

void run_oracle(const RunConfig& cfg, const std::string& out_dir) {
  const fs::path dir = prepare_dir(out_dir);
  const OracleRun run = oracle_solve(cfg, cfg.oracle);
  json report;
  report["command"] = "oracle";
  report["oracle"] = oracle_report(cfg, run);
  if (cfg.oracle_audit) report["oracle"]["cap_audit"] = cap_audit(cfg);
  for (size_t k = 0; k < run.g.size(); ++k)
    write_text(dir / ("oracle_g_" + cfg.model.species[k].name + ".csv"), gf_csv(run.g[k].g));
  finish(dir, report, cfg);
}

void run_compare(const RunConfig& cfg, const std::string& out_dir) {
  const fs::path dir = prepare_dir(out_dir);
  const ScfResult res = scf_run(cfg.model, cfg.solver);
  const OracleRun run = oracle_solve(cfg, cfg.oracle);
  json report;
  report["command"] = "compare";
  report["solve"] = scf_report(cfg.model, cfg.solver, res);
  report["oracle"] = oracle_report(cfg, run);
  report["diff"] = json::array();
  for (size_t k = 0; k < res.species.size(); ++k) {
    const std::string& name = cfg.model.species[k].name;
    json d;
    d["name"] = name;
    d["max_dg"] = max_abs_diff(res.species[k].g, run.g[k].g);
    d["max_ddensity"] = (res.species[k].density - run.obs.density[k]).cwiseAbs().maxCoeff();
    d["max_drho"] = (res.species[k].rho - run.obs.rho[k]).cwiseAbs().maxCoeff();
    d["dmu"] = std::abs(res.species[k].mu - run.mu[k]);
    d["dn_total"] = std::abs(res.species[k].density.sum() - run.obs.n_total[k]);
    report["diff"].push_back(d);
    write_text(dir / ("g_" + name + ".csv"), gf_csv(res.species[k].g));
    write_text(dir / ("oracle_g_" + name + ".csv"), gf_csv(run.g[k].g));
  }
  finish(dir, report, cfg);
}

void run_sweep(const RunConfig& cfg, const std::string& out_dir) {
  const fs::path dir = prepare_dir(out_dir);
  if (cfg.sweep_scales.empty())
    throw ConfigError("sweep requires a non-empty sweep.coupling_scales list");
  json report;
  report["command"] = "sweep";
  report["scheme"] = to_string(cfg.solver.scheme);
  report["points"] = json::array();
  std::ostringstream csv;
  csv << "scale,converged,iterations";
  for (const SpeciesSpec& sp : cfg.model.species)
    csv << ",mu_" << sp.name << ",n_" << sp.name << ",dcorr_" << sp.name;
  csv << "\n";
  for (double scale : cfg.sweep_scales) {
    LatticeSpec lat = cfg.model.lattice;
    lat.coupling_scale = scale;
    const ModelSystem model = make_model(cfg.model.species, lat, cfg.model.beta, cfg.model.fields);
    const ScfResult res = scf_run(model, cfg.solver);
    ScfConfig mf = cfg.solver;
    mf.scheme = Scheme::HartreeOnly;
    const ScfResult ref = scf_run(model, mf);
    json point;
    point["scale"] = scale;
    point["converged"] = res.converged;
    point["iterations"] = res.iterations;
    point["species"] = json::array();
    csv << fmt17(scale) << "," << (res.converged ? 1 : 0) << "," << res.iterations;
    for (size_t k = 0; k < res.species.size(); ++k) {
      const double dcorr = max_abs_diff(res.species[k].g, ref.species[k].g);
      json s;
      s["name"] = model.species[k].name;
      s["mu"] = res.species[k].mu;
      s["n_total"] = res.species[k].density.sum();
      s["dynamic_correlation"] = dcorr;
      point["species"].push_back(s);
      csv << "," << fmt17(res.species[k].mu) << "," << fmt17(res.species[k].density.sum())
          << "," << fmt17(dcorr);
    }
    csv << "\n";
    report["points"].push_back(point);
  }
  write_text(dir / "sweep.csv", csv.str());
  finish(dir, report, cfg);
}

}  // namespace msgw
