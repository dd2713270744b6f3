#include "msgw/hedin.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "msgw/vertex.hpp"

namespace msgw {
namespace {

MatsubaraGF zero_gf(const MatsubaraMesh& mesh, int nb) {
  return MatsubaraGF{mesh, MatArray(mesh.n_points(), nb, nb)};
}

ImagTimeGF zero_tau(double beta, int n_tau, Statistics parity, int nb) {
  return ImagTimeGF{beta, n_tau, parity, MatArray(n_tau + 1, nb, nb)};
}

double diff_max(const MatArray& a, const MatArray& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return m;
}

// For this model class (real symmetric h0, interaction and fields) every
// imaginary-time function is exactly real and site-symmetric. The
// self-consistency loop amplifies roundoff in the orthogonal directions
// (an imaginary part of the bosonic Sigma(nu_0) detaches the spectral edge
// from the real axis and eventually breaks the mu search), so the tau-space
// inputs of each pass are projected back onto the physical manifold.
void project_real_symmetric(ImagTimeGF& g) {
  for (int j = 0; j <= g.n_tau; ++j) {
    auto m = g.data[j];
    const Matrix re = 0.5 * (Matrix(m.real()) + Matrix(m.real()).transpose());
    m = re.cast<cdouble>();
  }
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::HartreeOnly: return "hartree_only";
    case Scheme::GW0: return "gw0";
    case Scheme::SCGW: return "scgw";
    case Scheme::GWGamma1: return "gw_gamma1";
  }
  return "scgw";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "hartree_only") return Scheme::HartreeOnly;
  if (s == "gw0") return Scheme::GW0;
  if (s == "scgw") return Scheme::SCGW;
  if (s == "gw_gamma1") return Scheme::GWGamma1;
  throw ConfigError("unknown scheme '" + s + "' (hartree_only, gw0, scgw, gw_gamma1)");
}

std::vector<Vector> hartree_potential(const ModelSystem& model, const std::vector<Vector>& density) {
  const int nb = model.lattice.n_sites;
  Vector rho_c = Vector::Zero(nb);
  for (size_t k = 0; k < model.species.size(); ++k)
    rho_c += model.species[k].charge * density[k];
  const Vector v_rho = model.coulomb * rho_c;
  std::vector<Vector> vh(model.species.size());
  for (size_t k = 0; k < model.species.size(); ++k) vh[k] = model.species[k].charge * v_rho;
  return vh;
}

Matrix exchange_self_energy(const ModelSystem& model, int k, const Matrix& rho) {
  const SpeciesSpec& sp = model.species[k];
  const Matrix v_kk = scaled_interaction(model.coulomb, sp, sp);
  return zeta(sp.statistics) * v_kk.cwiseProduct(rho);
}

ImagTimeGF polarization_bubble_tau(const ImagTimeGF& g_tau) {
  const int nb = static_cast<int>(g_tau.data.rows());
  const int nt = g_tau.n_tau;
  ImagTimeGF p = zero_tau(g_tau.beta, nt, Statistics::Boson, nb);
  for (int j = 0; j <= nt; ++j) {
    auto g = g_tau.data[j];
    auto gr = g_tau.data[nt - j];
    auto out = p.data[j];
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b) out(a, b) = -g(a, b) * gr(b, a);
  }
  return p;
}

MatsubaraGF polarization_bubble(const MatsubaraGF& g, int n_tau, int n_freq_boson,
                                const FourierTable* g_table, const FourierTable* bose_table) {
  const ImagTimeGF g_tau = matsubara_to_tau(g, n_tau, std::nullopt, g_table);
  return tau_to_matsubara(polarization_bubble_tau(g_tau), n_freq_boson, bose_table);
}

MatsubaraGF inverse_dielectric(const MatsubaraGF& p_tot, const Matrix& v) {
  const int nb = static_cast<int>(p_tot.data.rows());
  const CMatrix vd = v.cast<cdouble>();
  const CMatrix id = CMatrix::Identity(nb, nb);
  MatsubaraGF eps_inv = zero_gf(p_tot.mesh, nb);
  for (int idx = 0; idx < p_tot.mesh.n_points(); ++idx) {
    Eigen::FullPivLU<CMatrix> lu(id - vd * p_tot.data[idx]);
    if (!lu.isInvertible())
      throw NumericalError("dielectric matrix is singular at frequency index " + std::to_string(idx));
    eps_inv.data[idx] = lu.inverse();
  }
  return eps_inv;
}

MatsubaraGF screened_interaction_dynamic(const MatsubaraGF& p_tot, const Matrix& v) {
  const MatsubaraGF eps_inv = inverse_dielectric(p_tot, v);
  const CMatrix vd = v.cast<cdouble>();
  MatsubaraGF w = zero_gf(p_tot.mesh, static_cast<int>(p_tot.data.rows()));
  for (int idx = 0; idx < p_tot.mesh.n_points(); ++idx)
    w.data[idx] = eps_inv.data[idx] * vd - vd;
  return w;
}

ImagTimeGF self_energy_gw_tau(const ImagTimeGF& g_tau, const ImagTimeGF& w_dyn_tau,
                              double charge) {
  if (g_tau.n_tau != w_dyn_tau.n_tau) throw ConfigError("tau grids of G and W do not match");
  const int nb = static_cast<int>(g_tau.data.rows());
  ImagTimeGF s = zero_tau(g_tau.beta, g_tau.n_tau, g_tau.parity, nb);
  const double z2 = charge * charge;
  for (int j = 0; j <= g_tau.n_tau; ++j)
    s.data[j] = -z2 * g_tau.data[j].cwiseProduct(w_dyn_tau.data[j]);
  return s;
}

MatsubaraGF self_energy_gw_dynamic(const MatsubaraGF& g, const MatsubaraGF& w_tilde_dyn,
                                   double charge, int n_tau,
                                   const FourierTable* g_table, const FourierTable* bose_table) {
  const int nb = static_cast<int>(g.data.rows());
  const ImagTimeGF g_tau = matsubara_to_tau(g, n_tau, std::nullopt, g_table);
  const ImagTimeGF w_tau = matsubara_to_tau(w_tilde_dyn, n_tau,
                                            std::optional<CMatrix>(CMatrix::Zero(nb, nb)), bose_table);
  return tau_to_matsubara(self_energy_gw_tau(g_tau, w_tau, charge), g.mesh.n_freq, g_table);
}

DysonResult dyson_solve(const Matrix& h_eff, double mu, const MatsubaraMesh& mesh,
                        const MatsubaraGF* sigma_dyn) {
  const int nb = static_cast<int>(h_eff.rows());
  if (sigma_dyn && !(sigma_dyn->mesh == mesh))
    throw ConfigError("self-energy mesh does not match the requested propagator mesh");
  DysonResult out{zero_gf(mesh, nb), 0.0};
  const CMatrix id = CMatrix::Identity(nb, nb);
  const CMatrix hd = h_eff.cast<cdouble>();
  for (int idx = 0; idx < mesh.n_points(); ++idx) {
    CMatrix a = (cdouble(mu, mesh.freq(idx))) * id - hd;
    if (sigma_dyn) a -= sigma_dyn->data[idx];
    const CMatrix g = a.partialPivLu().solve(id);
    out.g.data[idx] = g;
    out.residual = std::max(out.residual, (a * g - id).cwiseAbs().maxCoeff());
  }
  return out;
}

double chemical_potential_search(const std::function<double(double)>& n_of, double target,
                                 double lo, double hi, bool hi_fixed, double tol) {
  if (!(hi > lo)) throw ConfigError("chemical-potential bracket is empty");
  double nlo = n_of(lo);
  double width = std::max(1.0, hi - lo);
  for (int t = 0; t < 200 && nlo > target; ++t) {
    lo -= width;
    width *= 2.0;
    nlo = n_of(lo);
  }
  if (nlo > target) throw NumericalError("particle-number target cannot be bracketed from below");
  double nhi = n_of(hi);
  width = std::max(1.0, hi - lo);
  while (nhi < target) {
    if (hi_fixed)
      throw NumericalError("particle-number target " + std::to_string(target) +
                           " is not reachable below the spectral edge (n(" +
                           std::to_string(hi) + ") = " + std::to_string(nhi) + ")");
    hi += width;
    width *= 2.0;
    nhi = n_of(hi);
    if (width > 1e12) throw NumericalError("particle-number target cannot be bracketed from above");
  }
  double mid = 0.5 * (lo + hi);
  for (int t = 0; t < 200; ++t) {
    mid = 0.5 * (lo + hi);
    const double n = n_of(mid);
    if (std::abs(n - target) <= tol) return mid;
    if (n < target) lo = mid;
    else hi = mid;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

Matrix reference_hamiltonian(const Matrix& h_eff, const MatsubaraGF& sigma_dyn, Statistics st) {
  if (st == Statistics::Fermion) return h_eff;
  const Matrix s0 = sigma_dyn.data[sigma_dyn.mesh.n_freq].real();
  return h_eff + 0.5 * (s0 + s0.transpose());
}

ScfResult scf_run(const ModelSystem& model, const ScfConfig& cfg) {
  validate_model(model);
  if (cfg.n_freq < 1) throw ConfigError("n_freq must be positive");
  if (cfg.n_tau < 2 || 2 * cfg.n_freq > cfg.n_tau)
    throw ConfigError("the transforms require 2 n_freq <= n_tau");
  if (cfg.max_iter < 1) throw ConfigError("max_iter must be positive");
  if (!(cfg.mixing > 0.0 && cfg.mixing <= 1.0)) throw ConfigError("mixing must lie in (0, 1]");
  if (!(cfg.tol > 0.0) || !(cfg.mu_tol > 0.0)) throw ConfigError("tolerances must be positive");

  const int ns = static_cast<int>(model.species.size());
  const int nb = model.lattice.n_sites;
  const double beta = model.beta;
  const Matrix v = (model.coulomb.rows() == nb) ? model.coulomb : build_coulomb(model.lattice);
  for (int k = 0; k < ns; ++k) {
    const SpeciesSpec& sp = model.species[k];
    if (sp.statistics == Statistics::Fermion &&
        !(sp.particle_count > 0.0 && sp.particle_count < nb))
      throw ConfigError("fermionic filling must lie strictly between 0 and the site count");
    if (sp.statistics == Statistics::Boson && !(sp.particle_count > 0.0))
      throw ConfigError("bosonic particle count must be positive");
  }

  const MatsubaraMesh bmesh{beta, cfg.n_freq, Statistics::Boson};
  const FourierTable btab = make_fourier_table(bmesh, cfg.n_tau);
  FourierTable ftab;
  bool any_fermion = false;
  for (const SpeciesSpec& sp : model.species)
    any_fermion = any_fermion || sp.statistics == Statistics::Fermion;
  if (any_fermion)
    ftab = make_fourier_table(MatsubaraMesh{beta, cfg.n_freq, Statistics::Fermion}, cfg.n_tau);

  struct Work {
    Matrix h0;
    MatsubaraMesh mesh;
    const FourierTable* table = nullptr;
    Matrix h_eff;
    Matrix h_ref;  // reference of the assisted tau evaluations
    Matrix static_sigma;
    MatsubaraGF sigma;
    MatsubaraGF g;
    MatsubaraGF pol;
    double mu = 0.0;
    Vector density;
    Matrix rho;
  };
  std::vector<Work> wk(ns);

  // Monotone filling-vs-mu solve for one species at fixed self-energy. For
  // bosons mu is pinned below the spectral edge of h_ref = h_eff + Sigma(0),
  // where the assisted density evaluation diverges, so any filling brackets.
  auto find_mu = [&](const Work& w, Statistics st, double target) {
    auto n_of = [&](double m) {
      return density_from_gf(dyson_solve(w.h_eff, m, w.mesh, &w.sigma).g, w.h_ref, m).sum();
    };
    const EigenSystem es = diagonalize_symmetric(w.h_ref);
    if (st == Statistics::Fermion) {
      return chemical_potential_search(n_of, target, es.eval.minCoeff() - 1.0,
                                       es.eval.maxCoeff() + 1.0, false, cfg.mu_tol);
    }
    const double edge = es.eval.minCoeff();
    const double hi = edge - 1e-9 * std::max(1.0, std::abs(edge));
    return chemical_potential_search(n_of, target, hi - 1.0, hi, true, cfg.mu_tol);
  };

  for (int k = 0; k < ns; ++k) {
    Work& w = wk[k];
    const SpeciesSpec& sp = model.species[k];
    w.h0 = build_onebody(model, k);
    w.mesh = MatsubaraMesh{beta, cfg.n_freq, sp.statistics};
    w.table = (sp.statistics == Statistics::Fermion) ? &ftab : &btab;
    w.h_eff = w.h0;
    w.static_sigma = Matrix::Zero(nb, nb);
    w.sigma = zero_gf(w.mesh, nb);
    w.h_ref = reference_hamiltonian(w.h_eff, w.sigma, sp.statistics);
    w.pol = zero_gf(bmesh, nb);
    w.mu = find_mu(w, sp.statistics, sp.particle_count);
    w.g = dyson_solve(w.h_eff, w.mu, w.mesh, &w.sigma).g;
    w.density = density_from_gf(w.g, w.h_ref, w.mu);
    w.rho = density_matrix_from_gf(w.g, w.h_ref, w.mu);
  }

  ScfResult res;
  res.p_tot = zero_gf(bmesh, nb);
  res.w_tilde_dyn = zero_gf(bmesh, nb);
  ImagTimeGF w_dyn_tau = zero_tau(beta, cfg.n_tau, Statistics::Boson, nb);
  bool w_frozen = false;

  for (int pass = 1; pass <= cfg.max_iter; ++pass) {
    // Densities of the current propagators -> static fields.
    double density_change = 0.0;
    std::vector<Vector> density(ns);
    for (int k = 0; k < ns; ++k) {
      density[k] = density_from_gf(wk[k].g, wk[k].h_ref, wk[k].mu);
      density_change = std::max(density_change, (density[k] - wk[k].density).cwiseAbs().maxCoeff());
      wk[k].density = density[k];
      wk[k].rho = density_matrix_from_gf(wk[k].g, wk[k].h_ref, wk[k].mu);
    }
    const std::vector<Vector> vh = hartree_potential(model, density);
    std::vector<Matrix> static_new(ns);
    for (int k = 0; k < ns; ++k) {
      static_new[k] = Matrix(vh[k].asDiagonal());
      if (cfg.scheme != Scheme::HartreeOnly)
        static_new[k] += exchange_self_energy(model, k, wk[k].rho);
    }

    // Polarization, screening and dynamic self-energies.
    std::vector<MatsubaraGF> sigma_new(ns);
    if (cfg.scheme == Scheme::HartreeOnly) {
      for (int k = 0; k < ns; ++k) sigma_new[k] = zero_gf(wk[k].mesh, nb);
    } else {
      std::vector<ImagTimeGF> g_tau(ns);
      std::vector<VertexKernel> gamma(ns);
      MatsubaraGF p_tot = zero_gf(bmesh, nb);
      for (int k = 0; k < ns; ++k) {
        g_tau[k] = propagator_tau(wk[k].g, wk[k].h_ref, wk[k].mu, cfg.n_tau, wk[k].table);
        project_real_symmetric(g_tau[k]);
        ImagTimeGF p_tau;
        if (cfg.scheme == Scheme::GWGamma1) {
          gamma[k] = gamma_first_order(g_tau[k], w_dyn_tau, v, model.species[k].charge);
          p_tau = polarization_vertex(g_tau[k], gamma[k]);
        } else {
          p_tau = polarization_bubble_tau(g_tau[k]);
        }
        wk[k].pol = tau_to_matsubara(p_tau, cfg.n_freq, &btab);
        const double z2 = model.species[k].charge * model.species[k].charge;
        for (int idx = 0; idx < bmesh.n_points(); ++idx)
          p_tot.data[idx] += z2 * wk[k].pol.data[idx];
      }
      res.p_tot = p_tot;
      if (!(cfg.scheme == Scheme::GW0 && w_frozen)) {
        res.w_tilde_dyn = screened_interaction_dynamic(p_tot, v);
        w_dyn_tau = matsubara_to_tau(res.w_tilde_dyn, cfg.n_tau,
                                     std::optional<CMatrix>(CMatrix::Zero(nb, nb)), &btab);
        project_real_symmetric(w_dyn_tau);
        w_frozen = true;
      }
      for (int k = 0; k < ns; ++k) {
        const double charge = model.species[k].charge;
        ImagTimeGF s_tau;
        if (cfg.scheme == Scheme::GWGamma1) {
          s_tau = self_energy_vertex(g_tau[k], w_dyn_tau, v, charge, gamma[k]);
        } else {
          s_tau = self_energy_gw_tau(g_tau[k], w_dyn_tau, charge);
        }
        sigma_new[k] = tau_to_matsubara(s_tau, cfg.n_freq, wk[k].table);
      }
    }

    // Chemical potentials and new propagators.
    double g_change = 0.0, residual = 0.0;
    std::vector<MatsubaraGF> g_new(ns);
    for (int k = 0; k < ns; ++k) {
      wk[k].static_sigma = static_new[k];
      wk[k].h_eff = wk[k].h0 + static_new[k];
      wk[k].sigma = sigma_new[k];
      wk[k].h_ref =
          reference_hamiltonian(wk[k].h_eff, wk[k].sigma, model.species[k].statistics);
      wk[k].mu = find_mu(wk[k], model.species[k].statistics, model.species[k].particle_count);
      DysonResult d = dyson_solve(wk[k].h_eff, wk[k].mu, wk[k].mesh, &wk[k].sigma);
      residual = std::max(residual, d.residual);
      g_change = std::max(g_change, diff_max(d.g.data, wk[k].g.data));
      g_new[k] = std::move(d.g);
    }
    res.g_change.push_back(g_change);
    res.density_change.push_back(density_change);
    res.dyson_residual.push_back(residual);
    res.iterations = pass;
    if (!std::isfinite(g_change)) throw NumericalError("self-consistency loop diverged");

    if (g_change <= cfg.tol) {
      for (int k = 0; k < ns; ++k) wk[k].g = std::move(g_new[k]);
      res.converged = true;
      break;
    }
    for (int k = 0; k < ns; ++k) {
      for (int idx = 0; idx < wk[k].mesh.n_points(); ++idx)
        wk[k].g.data[idx] += cfg.mixing * (g_new[k].data[idx] - wk[k].g.data[idx]);
    }
  }

  res.species.resize(ns);
  for (int k = 0; k < ns; ++k) {
    Work& w = wk[k];
    res.species[k].density = density_from_gf(w.g, w.h_ref, w.mu);
    res.species[k].rho = density_matrix_from_gf(w.g, w.h_ref, w.mu);
    res.species[k].g = std::move(w.g);
    res.species[k].sigma_dyn = std::move(w.sigma);
    res.species[k].polarization = std::move(w.pol);
    res.species[k].static_sigma = std::move(w.static_sigma);
    res.species[k].mu = w.mu;
  }
  return res;
}

}  // namespace msgw
