#pragma once

// Self-consistent many-body solver on the imaginary axis. All species
// (fermionic and bosonic) are treated on the same footing: each gets its own
// propagator, chemical potential and self-energy, and they couple only
// through the total charge density (Hartree) and the charge-reduced screened
// interaction
//   (I - v P_tot) ~W = v,   P_tot = sum_k Z_k^2 P_k,   W_k = Z_k^2 ~W.
// The self-energy splits into the instantaneous exchange
// Sigma_x = zeta_k Z_k^2 v o rho_k and the dynamic part
// Sigma_dyn(tau) = -Z_k^2 G_k(tau) o ~W_dyn(tau) (o = elementwise in sites).

#include <functional>

#include "msgw/gf.hpp"
#include "msgw/model.hpp"

namespace msgw {

enum class Scheme {
  HartreeOnly,  // static mean field only (no exchange, no screening)
  GW0,          // screened interaction frozen after the first pass
  SCGW,         // fully self-consistent GW
  GWGamma1,     // GW plus first-order vertex corrections to P and Sigma
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

// Induced Hartree potential per species: V_H,k(i) = Z_k sum_j v(i,j) rho_c(j)
// with the total charge density rho_c(j) = sum_k' Z_k' n_k'(j). The external
// parts (Z phi + F) already live in the one-body Hamiltonian.
std::vector<Vector> hartree_potential(const ModelSystem& model, const std::vector<Vector>& density);

// Instantaneous exchange Sigma_x(i,j) = zeta_k Z_k^2 v(i,j) rho_k(i,j);
// for fermions this is the Fock term -v o rho.
Matrix exchange_self_energy(const ModelSystem& model, int k, const Matrix& rho);

// Bubble polarization of one species on the tau grid,
//   P(i,j;tau) = -G(i,j;tau) G(j,i;beta-tau),
// a bosonic kernel (no equal-time jump) regardless of the statistics of g.
ImagTimeGF polarization_bubble_tau(const ImagTimeGF& g_tau);

// Same bubble evaluated from the frequency data and returned on a bosonic
// mesh with n_freq_boson frequencies. g_table must match the parity of g.
MatsubaraGF polarization_bubble(const MatsubaraGF& g, int n_tau, int n_freq_boson,
                                const FourierTable* g_table = nullptr,
                                const FourierTable* bose_table = nullptr);

// Dynamic GW self-energy on the tau grid,
// Sigma_dyn(i,j;tau) = -charge^2 G(i,j;tau) ~W_dyn(i,j;tau).
ImagTimeGF self_energy_gw_tau(const ImagTimeGF& g_tau, const ImagTimeGF& w_dyn_tau,
                              double charge);

// eps^-1(i nu) = [I - v P_tot(i nu)]^-1; throws NumericalError when the
// screening matrix is singular (dielectric instability).
MatsubaraGF inverse_dielectric(const MatsubaraGF& p_tot, const Matrix& v);

// Dynamic part of the charge-reduced screened interaction,
// ~W_dyn = (I - v P_tot)^-1 v - v, frequency by frequency.
MatsubaraGF screened_interaction_dynamic(const MatsubaraGF& p_tot, const Matrix& v);

// Sigma_dyn(tau) = -charge^2 G(tau) o ~W_dyn(tau), transformed back to the
// parity mesh of g (2 n_freq <= n_tau is required by the transforms).
MatsubaraGF self_energy_gw_dynamic(const MatsubaraGF& g, const MatsubaraGF& w_tilde_dyn,
                                   double charge, int n_tau,
                                   const FourierTable* g_table = nullptr,
                                   const FourierTable* bose_table = nullptr);

// Reference Hamiltonian of the tau-side assisted evaluations (propagator_tau,
// density_from_gf). Fermions use h_eff as is. For bosons the nu_0 self-energy
// is folded in (real part, symmetrized), which moves the reference spectral
// edge onto the interacting one: the occupation divergence at the edge is
// then handled analytically and any filling stays reachable for mu below it.
Matrix reference_hamiltonian(const Matrix& h_eff, const MatsubaraGF& sigma_dyn, Statistics st);

struct DysonResult {
  MatsubaraGF g;
  double residual = 0.0;  // max-norm of [(i w + mu) I - h_eff - Sigma] G - I
};

// Frequency-by-frequency Dyson solve with the static field folded into
// h_eff; sigma_dyn may be null (free / Hartree case).
DysonResult dyson_solve(const Matrix& h_eff, double mu, const MatsubaraMesh& mesh,
                        const MatsubaraGF* sigma_dyn = nullptr);

// Monotone bisection for n_of(mu) = target. The bracket [lo, hi] expands
// downward/upward as needed unless hi_fixed pins the upper end (bosonic
// species: mu must stay below the lowest effective level). Throws
// NumericalError when the target cannot be bracketed.
double chemical_potential_search(const std::function<double(double)>& n_of, double target,
                                 double lo, double hi, bool hi_fixed, double tol);

struct ScfConfig {
  Scheme scheme = Scheme::SCGW;
  int n_freq = 128;        // per-species Matsubara cutoff (indices -n..n-1)
  int n_tau = 256;         // tau grid intervals; 2 n_freq <= n_tau
  int max_iter = 200;
  double tol = 1e-10;      // max-abs change of G between passes
  double mixing = 1.0;     // fraction of the new G accepted per pass
  double mu_tol = 1e-12;   // particle-number tolerance of the mu search
};

struct SpeciesSolution {
  MatsubaraGF g;
  MatsubaraGF sigma_dyn;    // dynamic self-energy on the same mesh
  MatsubaraGF polarization; // species bubble P_k (bosonic mesh)
  Matrix static_sigma;      // diag(V_H) + Sigma_x
  double mu = 0.0;
  Vector density;
  Matrix rho;               // <psi^+_j psi_i>
};

struct ScfResult {
  std::vector<SpeciesSolution> species;
  MatsubaraGF p_tot;        // charge-weighted total polarization
  MatsubaraGF w_tilde_dyn;  // dynamic part of the reduced screened interaction
  bool converged = false;
  int iterations = 0;       // update passes performed
  std::vector<double> g_change;        // per pass, max over species
  std::vector<double> density_change;  // per pass
  std::vector<double> dyson_residual;  // per pass
};

ScfResult scf_run(const ModelSystem& model, const ScfConfig& cfg);

}  // namespace msgw
